use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{collision_fiber_point, integrate, interior_passages, IntegrationOptions, Trajectory};
use crate::dynamics::{fix_component, FixComponent, Frame, Primary};
use crate::error::{Error, Result};
use crate::regularization::{birkhoff_map, collision_point, k_vector_field, rho1, KParams, RegState};
use crate::scalar::{c, Real};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShootingSeed<T> {
    pub primary: Primary,
    /// Angle of `w` on the collision circle.
    pub psi: T,
    pub t: T,
    pub params: KParams<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShootOptions<T> {
    pub tol: T,
    pub max_iter: usize,
    pub min_time: T,
    pub fd_step: T,
    /// Treat a hit on the other primary's half of `Fix rho1` as an error.
    pub require_own_component: bool,
    pub integration: IntegrationOptions<T>,
}

impl<T: Real> Default for ShootOptions<T> {
    fn default() -> Self {
        ShootOptions {
            tol: c(1e-10),
            max_iter: 40,
            min_time: c(1e-3),
            fd_step: c(1e-7),
            require_own_component: true,
            integration: IntegrationOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonSolution<T> {
    pub psi: T,
    pub t: T,
    pub residual: T,
    pub iterations: usize,
    /// 2-norm condition number of the final shooting Jacobian.
    pub condition: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricOrbit<T> {
    pub primary: Primary,
    pub params: KParams<T>,
    pub psi: T,
    /// Half duration; the full orbit runs over `[0, 2 tau]`.
    pub tau: T,
    pub start: RegState<T>,
    pub turn: RegState<T>,
    pub half: Trajectory<T>,
    pub hit: FixComponent,
    pub own_component: bool,
    pub residual: T,
    /// Distance between the directly integrated state at `2 tau` and
    /// `rho1(start)`.
    pub symmetry_error: T,
    /// `|z(2 tau) -+ 1/2|` from the direct integration.
    pub endpoint_error: T,
    pub iterations: usize,
    pub condition: T,
    /// Collision-circle passages strictly inside the full orbit.
    pub interior_collisions: usize,
}

impl<T: Real> SymmetricOrbit<T> {
    /// No collision between the two endpoints.
    pub fn is_consecutive(&self) -> bool {
        self.interior_collisions == 0
    }

    pub fn duration(&self) -> T {
        self.tau + self.tau
    }

    /// State of the full orbit, the second half obtained by reflection.
    pub fn state_at(&self, t: T) -> RegState<T> {
        if t <= self.tau {
            self.half.state_at(t)
        } else {
            rho1(self.half.state_at(self.duration() - t))
        }
    }

    /// Step-boundary samples of the full orbit, time increasing.
    pub fn full_samples(&self) -> Vec<(T, RegState<T>)> {
        let half = self.half.samples();
        let mut out = half.clone();
        for &(t, s) in half.iter().rev().skip(1) {
            out.push((self.duration() - t, rho1(s)));
        }
        out
    }

    pub fn summary(&self) -> OrbitSummary<T> {
        OrbitSummary {
            primary: self.primary,
            mu: self.params.mu,
            d: self.params.d,
            psi: self.psi,
            tau: self.tau,
            hit: self.hit,
            own_component: self.own_component,
            residual: self.residual,
            symmetry_error: self.symmetry_error,
            endpoint_error: self.endpoint_error,
            max_drift: self.half.max_drift,
            iterations: self.iterations,
            condition: self.condition,
            interior_collisions: self.interior_collisions,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitSummary<T> {
    pub primary: Primary,
    pub mu: T,
    pub d: T,
    pub psi: T,
    pub tau: T,
    pub hit: FixComponent,
    pub own_component: bool,
    pub residual: T,
    pub symmetry_error: T,
    pub endpoint_error: T,
    pub max_drift: T,
    pub iterations: usize,
    pub condition: T,
    pub interior_collisions: usize,
}

fn norm2<T: Real>(r: [T; 2]) -> T {
    r[0].hypot(r[1])
}

/// `R(psi, t) = (Im z(t), Re w(t))` together with the end state.
pub fn shooting_residual<T: Real>(
    primary: Primary,
    psi: T,
    t: T,
    params: KParams<T>,
    opts: &IntegrationOptions<T>,
) -> Result<([T; 2], RegState<T>)> {
    let x0 = collision_fiber_point(primary, psi, params);
    let end = integrate(x0, params, (T::zero(), t), opts)?.end();
    Ok(([end.z2, end.w1], end))
}

fn condition2<T: Real>(j: &[[T; 2]; 2]) -> T {
    let f2 = j.iter().flatten().fold(T::zero(), |a, &v| a + v * v);
    let det = (j[0][0] * j[1][1] - j[0][1] * j[1][0]).abs();
    if det == T::zero() {
        return T::infinity();
    }
    // sigma_max / sigma_min from the Frobenius norm and determinant.
    let disc = (f2 * f2 - c::<T>(4.0) * det * det).max(T::zero()).sqrt();
    let smax2 = c::<T>(0.5) * (f2 + disc);
    smax2 / det
}

/// Damped Newton on `R` with exact `t`-column and central differences in
/// `psi`.
pub fn shooting_newton<T: Real>(
    primary: Primary,
    params: KParams<T>,
    psi0: T,
    t0: T,
    opts: &ShootOptions<T>,
) -> Result<NewtonSolution<T>> {
    if t0 < opts.min_time {
        return Err(Error::TrivialChord { t: t0.value() });
    }
    let io = &opts.integration;
    let (mut psi, mut t) = (psi0, t0);
    let (mut r, mut end) = shooting_residual(primary, psi, t, params, io)?;
    for it in 0..=opts.max_iter {
        let f = k_vector_field(end, params)?;
        let h = opts.fd_step;
        let (rp, _) = shooting_residual(primary, psi + h, t, params, io)?;
        let (rm, _) = shooting_residual(primary, psi - h, t, params, io)?;
        let j = [[(rp[0] - rm[0]) / (h + h), f[1]], [(rp[1] - rm[1]) / (h + h), f[2]]];
        let condition = condition2(&j);
        if norm2(r) <= opts.tol {
            if t < opts.min_time {
                return Err(Error::TrivialChord { t: t.value() });
            }
            return Ok(NewtonSolution { psi, t, residual: norm2(r), iterations: it, condition });
        }
        if it == opts.max_iter {
            break;
        }
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == T::zero() || !det.is_finite() {
            break;
        }
        let mut dpsi = -(j[1][1] * r[0] - j[0][1] * r[1]) / det;
        let mut dt = -(-j[1][0] * r[0] + j[0][0] * r[1]) / det;
        let cap = (c::<T>(0.5) * t / dt.abs()).min(c::<T>(0.5) / dpsi.abs()).min(T::one());
        dpsi *= cap;
        dt *= cap;
        let mut lambda = T::one();
        let mut accepted = false;
        for _ in 0..12 {
            let (np, nt) = (psi + lambda * dpsi, t + lambda * dt);
            if let Ok((nr, ne)) = shooting_residual(primary, np, nt, params, io) {
                if norm2(nr) < norm2(r) * (T::one() - c::<T>(1e-4) * lambda) {
                    psi = np;
                    t = nt;
                    r = nr;
                    end = ne;
                    accepted = true;
                    break;
                }
            }
            lambda *= c(0.5);
        }
        if !accepted {
            break;
        }
        if t < opts.min_time {
            return Err(Error::TrivialChord { t: t.value() });
        }
    }
    Err(Error::NoConvergence { residual: norm2(r).value() })
}

/// Shoots from the collision circle to `Fix rho1` and assembles the
/// reflection-doubled orbit.
pub fn shoot<T: Real>(seed: &ShootingSeed<T>, opts: &ShootOptions<T>) -> Result<SymmetricOrbit<T>> {
    let sol = shooting_newton(seed.primary, seed.params, seed.psi, seed.t, opts)?;
    build_orbit(seed.primary, seed.params, sol, opts)
}

pub fn build_orbit<T: Real>(
    primary: Primary,
    params: KParams<T>,
    sol: NewtonSolution<T>,
    opts: &ShootOptions<T>,
) -> Result<SymmetricOrbit<T>> {
    let psi = sol.psi - (sol.psi / T::TAU()).floor() * T::TAU();
    let sol = NewtonSolution { psi, ..sol };
    let start = collision_fiber_point(primary, sol.psi, params);
    let half = integrate(start, params, (T::zero(), sol.t), &opts.integration)?;
    let turn = half.end();
    let own_component = match primary {
        Primary::Earth => turn.z1 > T::zero(),
        Primary::Moon => turn.z1 < T::zero(),
    };
    let hit = match birkhoff_map(turn) {
        Ok(ps) => fix_component(ps, params.mu, Frame::Centered, c(1e-8)),
        Err(_) => FixComponent::NotFixed,
    };
    let at_fiber = [Primary::Earth, Primary::Moon]
        .iter()
        .any(|&p| (turn.z1 - collision_point::<T>(p)).hypot(turn.z2) < c(1e-6));
    if at_fiber {
        // Turning point on the collision circle itself: the doubled orbit
        // has an interior collision.
        return Err(Error::WrongComponent { hit: "collision circle".into() });
    }
    if opts.require_own_component && !own_component {
        return Err(Error::WrongComponent { hit: hit.to_string() });
    }
    let direct = integrate(start, params, (T::zero(), sol.t + sol.t), &opts.integration)?.end();
    let target = rho1(start).to_array();
    let da = direct.to_array();
    let symmetry_error = (0..4).fold(T::zero(), |a, i| a + (da[i] - target[i]).powi(2)).sqrt();
    let endpoint_error = (direct.z1 - collision_point::<T>(primary)).hypot(direct.z2);
    let mut knots = vec![T::zero()];
    knots.extend(half.segments.iter().map(|s| s.t1()));
    let interior = interior_passages(|t| half.state_at(t), &knots, opts.min_time, sol.t - opts.min_time).len();
    Ok(SymmetricOrbit {
        primary,
        params,
        psi: sol.psi,
        tau: sol.t,
        start,
        turn,
        half,
        hit,
        own_component,
        residual: sol.residual,
        symmetry_error,
        endpoint_error,
        iterations: sol.iterations,
        condition: sol.condition,
        interior_collisions: 2 * interior,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSpec<T> {
    pub primary: Primary,
    pub params: KParams<T>,
    /// Uniform fiber angles in `[0, 2 pi)`.
    pub n_psi: usize,
    pub t_max: T,
    pub shoot: ShootOptions<T>,
}

#[derive(Clone, Debug)]
pub struct SearchReport<T> {
    pub seeds: Vec<ShootingSeed<T>>,
    pub orbits: Vec<SymmetricOrbit<T>>,
    /// `(seed index, error)` of seeds that did not yield an orbit.
    pub failures: Vec<(usize, Error)>,
}

/// Seeds from sign changes of `Re w` at matching axis crossings of
/// neighbouring fiber angles.
pub fn find_seeds<T: Real>(search: &SearchSpec<T>) -> Vec<ShootingSeed<T>> {
    let n = search.n_psi.max(2);
    let tau = T::TAU();
    let psis: Vec<T> = (0..n).map(|j| tau * T::from_f64(j as f64 / n as f64)).collect();
    let crossings: Vec<Vec<(T, T)>> = psis
        .par_iter()
        .map(|&psi| {
            let x0 = collision_fiber_point(search.primary, psi, search.params);
            match integrate(x0, search.params, (T::zero(), search.t_max), &search.shoot.integration) {
                Ok(tr) => tr
                    .events
                    .iter()
                    .filter(|e| e.t >= search.shoot.min_time)
                    .map(|e| (e.t, e.state.w1))
                    .collect(),
                Err(_) => Vec::new(),
            }
        })
        .collect();
    let mut seeds = Vec::new();
    for j in 0..n {
        let k = (j + 1) % n;
        let (a, b) = (&crossings[j], &crossings[k]);
        let psi_b = if k == 0 { psis[0] + tau } else { psis[k] };
        for (ea, eb) in a.iter().zip(b) {
            if (ea.1 > T::zero()) != (eb.1 > T::zero()) {
                let s = ea.1 / (ea.1 - eb.1);
                let psi = psis[j] + s * (psi_b - psis[j]);
                let t = ea.0 + s * (eb.0 - ea.0);
                seeds.push(ShootingSeed { primary: search.primary, psi, t, params: search.params });
            }
        }
    }
    seeds
}

/// Shoots every seed and keeps one orbit per `(folded psi, tau)` pair.
pub fn search_orbits<T: Real>(search: &SearchSpec<T>) -> SearchReport<T> {
    let seeds = find_seeds(search);
    let results: Vec<Result<SymmetricOrbit<T>>> = seeds.par_iter().map(|s| shoot(s, &search.shoot)).collect();
    let mut orbits: Vec<SymmetricOrbit<T>> = Vec::new();
    let mut failures = Vec::new();
    let q = c::<T>(1e-6);
    let key = |o: &SymmetricOrbit<T>| {
        let pi = T::PI();
        let a = o.psi - (o.psi / pi).floor() * pi;
        let folded = a.min(pi - a);
        ((folded / q).round().value() as i64, (o.tau / q).round().value() as i64)
    };
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) => {
                if !orbits.iter().any(|p| key(p) == key(&o)) {
                    orbits.push(o);
                }
            }
            Err(e) => failures.push((i, e)),
        }
    }
    orbits.sort_by(|a, b| a.tau.partial_cmp(&b.tau).expect("finite"));
    SearchReport { seeds, orbits, failures }
}
