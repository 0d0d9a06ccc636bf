//! Symmetric consecutive collision orbits of the Birkhoff-regularized flow:
//! integration of `X_K`, shooting from a collision fiber to `Fix rho1`,
//! continuation in the mass ratio, classification, and rotating-Kepler
//! periodicity.

mod classify;
mod continuation;
pub mod dop853;
mod kepler;
mod shooting;

pub use classify::*;
pub use continuation::*;
pub use kepler::*;
pub use shooting::*;

use serde::{Deserialize, Serialize};

use crate::dynamics::{first_critical_value, Primary};
use crate::error::{Error, Result};
use crate::regularization::{evaluate_k, k_value_and_gradient, k_vector_field, KParams, KVariant, RegState};
use crate::scalar::{c, Real};
use dop853::{dop853, DenseSegment, Dop853Options, StepControl};

/// Energy level, either absolute or relative to the first critical value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergySpec<T> {
    Absolute(T),
    OffsetAboveL1(T),
}

impl<T: Real> EnergySpec<T> {
    pub fn resolve(self, mu: T) -> Result<T> {
        match self {
            EnergySpec::Absolute(d) => Ok(d),
            EnergySpec::OffsetAboveL1(delta) => Ok(first_critical_value(mu)? + delta),
        }
    }

    pub fn params(self, mu: T) -> Result<KParams<T>> {
        Ok(KParams { mu, d: self.resolve(mu)? })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrationOptions<T> {
    pub rtol: T,
    pub atol: T,
    pub h_max: T,
    pub max_steps: usize,
    /// Bound on `|K|` at accepted steps.
    pub drift_tol: T,
    /// Project back to `K = 0` along `grad K` once `|K|` exceeds half of
    /// `drift_tol`.
    pub project: bool,
    /// Abort when `|z|` falls below this radius.
    pub singular_radius: T,
}

impl<T: Real> Default for IntegrationOptions<T> {
    fn default() -> Self {
        IntegrationOptions {
            rtol: c(1e-12),
            atol: c(1e-12),
            h_max: c(0.05),
            max_steps: 200_000,
            drift_tol: c(1e-8),
            project: false,
            singular_radius: c(1e-6),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    /// Sign change of `Im z`.
    AxisCrossing,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event<T> {
    pub kind: EventKind,
    pub t: T,
    pub state: RegState<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    pub params: KParams<T>,
    pub t_start: T,
    pub t_end: T,
    pub segments: Vec<DenseSegment<T, 4>>,
    pub events: Vec<Event<T>>,
    pub max_drift: T,
}

impl<T: Real> Trajectory<T> {
    pub fn start(&self) -> RegState<T> {
        RegState::from_array(self.segments[0].cont[0])
    }

    pub fn end(&self) -> RegState<T> {
        let s = self.segments.last().expect("nonempty trajectory");
        RegState::from_array(s.eval(s.t1()))
    }

    /// Dense-output state at `t` (clamped to the integrated interval).
    pub fn state_at(&self, t: T) -> RegState<T> {
        let forward = self.t_end >= self.t_start;
        let key = |s: &DenseSegment<T, 4>| if forward { s.t1() } else { -s.t1() };
        let target = if forward { t } else { -t };
        let i = self.segments.partition_point(|s| key(s) < target).min(self.segments.len() - 1);
        RegState::from_array(self.segments[i].eval(t))
    }

    /// `(t, state)` at the step boundaries.
    pub fn samples(&self) -> Vec<(T, RegState<T>)> {
        let mut out = vec![(self.t_start, self.start())];
        for s in &self.segments {
            out.push((s.t1(), RegState::from_array(s.eval(s.t1()))));
        }
        out
    }
}

fn vector_field<T: Real>(params: KParams<T>, radius: T) -> impl FnMut(T, &[T; 4]) -> Result<[T; 4]> {
    move |t, y| {
        if y[0].hypot(y[1]) < radius {
            return Err(Error::SingularityApproach { t: t.value() });
        }
        k_vector_field(RegState::from_array(*y), params).map_err(|e| match e {
            Error::BirkhoffSingularity { .. } => Error::SingularityApproach { t: t.value() },
            other => other,
        })
    }
}

fn project_to_level<T: Real>(y: [T; 4], params: KParams<T>) -> Result<[T; 4]> {
    let mut y = y;
    for _ in 0..3 {
        let (k, g) = k_value_and_gradient(RegState::from_array(y), params, KVariant::Pullback)?;
        let n2 = g.iter().fold(T::zero(), |a, &v| a + v * v);
        if n2 == T::zero() {
            break;
        }
        for i in 0..4 {
            y[i] -= k * g[i] / n2;
        }
    }
    Ok(y)
}

/// Locates a sign change of `Im z` inside `seg` by bisection on the dense
/// output.
fn locate_axis_crossing<T: Real>(seg: &DenseSegment<T, 4>) -> T {
    let (mut a, mut b) = (seg.t0, seg.t1());
    let sa = seg.eval(a)[1] > T::zero();
    let tol = c::<T>(1e-12);
    for _ in 0..200 {
        if (b - a).abs() <= tol * (T::one() + a.abs()) {
            break;
        }
        let m = c::<T>(0.5) * (a + b);
        if (seg.eval(m)[1] > T::zero()) == sa {
            a = m;
        } else {
            b = m;
        }
    }
    c::<T>(0.5) * (a + b)
}

/// Flow of `X_K` over `t_span`, logging `Im z` sign changes.
pub fn integrate<T: Real>(
    rs: RegState<T>,
    params: KParams<T>,
    t_span: (T, T),
    opts: &IntegrationOptions<T>,
) -> Result<Trajectory<T>> {
    let dopts = Dop853Options { rtol: opts.rtol, atol: opts.atol, h0: None, h_max: opts.h_max, max_steps: opts.max_steps };
    let mut events = Vec::new();
    let mut max_drift = evaluate_k(rs, params, KVariant::Pullback)?.abs();
    let segments = dop853(vector_field(params, opts.singular_radius), t_span.0, rs.to_array(), t_span.1, &dopts, |seg, t, y| {
        let prev = seg.cont[0][1];
        if prev != T::zero() && (prev > T::zero()) != (y[1] > T::zero()) && y[1] != T::zero() {
            let te = locate_axis_crossing(seg);
            events.push(Event { kind: EventKind::AxisCrossing, t: te, state: RegState::from_array(seg.eval(te)) });
        } else if y[1] == T::zero() {
            events.push(Event { kind: EventKind::AxisCrossing, t, state: RegState::from_array(*y) });
        }
        let k = evaluate_k(RegState::from_array(*y), params, KVariant::Pullback)
            .map_err(|_| Error::SingularityApproach { t: t.value() })?
            .abs();
        let mut control = StepControl::Continue;
        let mut k_after = k;
        if opts.project && k > opts.drift_tol * c(0.5) {
            let p = project_to_level(*y, params)?;
            k_after = evaluate_k(RegState::from_array(p), params, KVariant::Pullback)?.abs();
            control = StepControl::Replace(p);
        }
        max_drift = max_drift.max(k_after);
        if k_after > opts.drift_tol {
            return Err(Error::DriftExceeded { t: t.value(), drift: k_after.value() });
        }
        Ok(control)
    })?;
    if segments.is_empty() {
        return Err(Error::Precondition("empty time span".into()));
    }
    Ok(Trajectory { params, t_start: t_span.0, t_end: t_span.1, segments, events, max_drift })
}

/// Point of the collision circle over `primary` with fiber angle `psi`.
pub fn collision_fiber_point<T: Real>(primary: Primary, psi: T, params: KParams<T>) -> RegState<T> {
    let r = crate::regularization::collision_fiber_radius(primary, params.mu, KVariant::Pullback);
    RegState::new(crate::regularization::collision_point(primary), T::zero(), r * psi.cos(), r * psi.sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regularization::{deck, rho1};
    use rand::{Rng, SeedableRng};

    fn level_state(rng: &mut impl Rng, params: KParams<f64>) -> RegState<f64> {
        // Solve K = 0 for |w| along a random direction at a random z.
        loop {
            let z = num_complex::Complex::from_polar(rng.gen_range(0.3..1.2), rng.gen_range(0.0..std::f64::consts::TAU));
            let dir = num_complex::Complex::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
            let kf = |s: f64| evaluate_k(RegState::from_complex(z, dir * s), params, KVariant::Pullback).unwrap();
            let (mut a, mut b) = (0.0, 20.0);
            if kf(a) >= 0.0 || kf(b) <= 0.0 {
                continue;
            }
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if kf(m) < 0.0 {
                    a = m
                } else {
                    b = m
                }
            }
            return RegState::from_complex(z, dir * a);
        }
    }

    fn dist(a: RegState<f64>, b: RegState<f64>) -> f64 {
        let (a, b) = (a.to_array(), b.to_array());
        (0..4).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt()
    }

    #[test]
    fn reversibility_and_symmetries() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let params = KParams { mu: 0.3, d: -1.8 };
        let o = IntegrationOptions::default();
        for _ in 0..5 {
            let x = level_state(&mut rng, params);
            let fwd = integrate(x, params, (0.0, 1.0), &o).unwrap();
            let back = integrate(fwd.end(), params, (1.0, 0.0), &o).unwrap();
            assert!(dist(back.end(), x) < 1e-9);
            let r = integrate(rho1(x), params, (0.0, -1.0), &o).unwrap();
            assert!(dist(rho1(r.end()), fwd.end()) < 1e-8);
            let dk = integrate(deck(x).unwrap(), params, (0.0, 1.0), &o).unwrap();
            assert!(dist(dk.end(), deck(fwd.end()).unwrap()) < 1e-8);
            assert!(fwd.max_drift < 1e-10);
            let mid = fwd.state_at(0.5);
            let direct = integrate(x, params, (0.0, 0.5), &o).unwrap().end();
            assert!(dist(mid, direct) < 1e-9);
        }
    }

    #[test]
    fn projection_keeps_level() {
        let params = KParams { mu: 0.3, d: -1.8 };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let x = level_state(&mut rng, params);
        let o = IntegrationOptions { rtol: 1e-5, atol: 1e-5, h_max: 10.0, drift_tol: 1e-9, project: true, ..Default::default() };
        let t = integrate(x, params, (0.0, 2.0), &o).unwrap();
        assert!(t.max_drift <= 1e-9);
        let o = IntegrationOptions { project: false, ..o };
        let r = integrate(x, params, (0.0, 2.0), &o);
        assert!(matches!(r, Err(Error::DriftExceeded { .. })), "{:?}", r.map(|t| t.max_drift));
    }

    #[test]
    fn fiber_points_on_level() {
        for &mu in &[0.0, 0.01, 0.3, 0.5] {
            let params = EnergySpec::OffsetAboveL1(1e-3).params(mu).unwrap();
            for i in 0..16 {
                let psi = i as f64 * 0.4;
                for p in [Primary::Earth, Primary::Moon] {
                    let x = collision_fiber_point(p, psi, params);
                    assert!(evaluate_k(x, params, KVariant::Pullback).unwrap().abs() <= 1e-12);
                }
            }
        }
        let params = KParams { mu: 0.2, d: -1.7 };
        let e = collision_fiber_point(Primary::Earth, std::f64::consts::FRAC_PI_2, params);
        assert!(e.w1.abs() < 1e-15 && e.z2 == 0.0);
        assert_eq!(rho1(e).z1, e.z1);
    }

    #[test]
    fn axis_events_are_located() {
        let params = KParams { mu: 0.0f64, d: -1.499 };
        let x = collision_fiber_point(Primary::Moon, 0.3, params);
        let t = integrate(x, params, (0.0, 4.0), &IntegrationOptions::default()).unwrap();
        assert!(!t.events.is_empty());
        for e in &t.events {
            assert!(e.state.z2.abs() < 1e-10);
        }
    }
}
