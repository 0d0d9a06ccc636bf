use serde::{Deserialize, Serialize};

use super::{integrate, IntegrationOptions, SymmetricOrbit, Trajectory};
use crate::dynamics::Primary;
use crate::error::Result;
use crate::regularization::{collision_point, deck, RegState};
use crate::scalar::{c, Real};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions<T> {
    /// Quantization of folded fiber angles.
    pub quantum: T,
    /// Regularized time the orbit is extended by when testing periodicity.
    pub periodicity_horizon: T,
    pub periodicity_tol: T,
    pub integration: IntegrationOptions<T>,
}

impl<T: Real> Default for ClassifyOptions<T> {
    fn default() -> Self {
        ClassifyOptions {
            quantum: c(1e-6),
            periodicity_horizon: c(40.0),
            periodicity_tol: c(1e-8),
            integration: IntegrationOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberPassage<T> {
    pub primary: Primary,
    pub t: T,
    pub state: RegState<T>,
}

fn fiber_distance<T: Real>(s: &RegState<T>, p: Primary) -> T {
    (s.z1 - collision_point::<T>(p)).hypot(s.z2)
}

/// Passages through either collision fiber strictly inside `(t_lo, t_hi)`,
/// found from local minima of `|z -+ 1/2|` on the dense output.
pub fn interior_passages<T: Real>(
    f: impl Fn(T) -> RegState<T>,
    knots: &[T],
    t_lo: T,
    t_hi: T,
) -> Vec<FiberPassage<T>> {
    let mut ts = Vec::new();
    for w in knots.windows(2) {
        for i in 0..8 {
            ts.push(w[0] + (w[1] - w[0]) * T::from_f64(i as f64 / 8.0));
        }
    }
    if let Some(&l) = knots.last() {
        ts.push(l);
    }
    let mut out = Vec::new();
    for p in [Primary::Earth, Primary::Moon] {
        let d: Vec<T> = ts.iter().map(|&t| fiber_distance(&f(t), p)).collect();
        for i in 1..ts.len().saturating_sub(1) {
            if !(d[i] <= d[i - 1] && d[i] < d[i + 1] && d[i] < c(1e-2)) {
                continue;
            }
            let (mut a, mut b) = (ts[i - 1], ts[i + 1]);
            let g = c::<T>(0.5) * (c::<T>(5.0).sqrt() - T::one());
            let mut x1 = b - g * (b - a);
            let mut x2 = a + g * (b - a);
            let (mut f1, mut f2) = (fiber_distance(&f(x1), p), fiber_distance(&f(x2), p));
            for _ in 0..200 {
                if (b - a).abs() <= c::<T>(1e-14) * (T::one() + a.abs()) {
                    break;
                }
                if f1 < f2 {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - g * (b - a);
                    f1 = fiber_distance(&f(x1), p);
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + g * (b - a);
                    f2 = fiber_distance(&f(x2), p);
                }
            }
            let t = c::<T>(0.5) * (a + b);
            let s = f(t);
            if fiber_distance(&s, p) < c(1e-6) && t > t_lo && t < t_hi {
                out.push(FiberPassage { primary: p, t, state: s });
            }
        }
    }
    out.sort_by(|a, b| a.t.partial_cmp(&b.t).expect("finite"));
    out
}

/// All passages of the full orbit through a collision fiber, endpoints
/// included.
pub fn fiber_passages<T: Real>(orbit: &SymmetricOrbit<T>, min_gap: T) -> Vec<FiberPassage<T>> {
    let knots: Vec<T> = orbit.full_samples().into_iter().map(|(t, _)| t).collect();
    let end = orbit.duration();
    let mut out = vec![FiberPassage { primary: orbit.primary, t: T::zero(), state: orbit.start }];
    out.extend(interior_passages(|t| orbit.state_at(t), &knots, min_gap, end - min_gap));
    out.push(FiberPassage { primary: orbit.primary, t: end, state: orbit.state_at(end) });
    out
}

fn fold_angle<T: Real>(w: (T, T)) -> T {
    let pi = T::PI();
    let a = w.1.atan2(w.0);
    let a = a - (a / pi).floor() * pi;
    a.min(pi - a)
}

/// Sorted set of quantized folded fiber angles (`psi`, `psi + pi` and
/// `pi - psi` identified), tagged by primary, over the orbit's passages.
pub fn orbit_signature<T: Real>(orbit: &SymmetricOrbit<T>, quantum: T) -> Vec<(Primary, i64)> {
    signature_of(&fiber_passages(orbit, c(1e-3)), quantum)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicityInfo<T> {
    /// Time of return to the starting fiber point (or its deck image).
    pub period: T,
    pub collisions: usize,
}

fn distance<T: Real>(a: &RegState<T>, b: &RegState<T>) -> T {
    let (a, b) = (a.to_array(), b.to_array());
    (0..4).fold(T::zero(), |s, i| s + (a[i] - b[i]).powi(2)).sqrt()
}

/// Reports the first return of the orbit, extended forward by the horizon,
/// to its initial fiber point (or its deck image), with the passages over
/// one period.
pub fn detect_periodicity<T: Real>(
    orbit: &SymmetricOrbit<T>,
    opts: &ClassifyOptions<T>,
) -> Result<Option<(PeriodicityInfo<T>, Vec<FiberPassage<T>>)>> {
    let x0 = orbit.start;
    let x0d = deck(x0)?;
    let close = |p: &FiberPassage<T>| {
        p.primary == orbit.primary && distance(&p.state, &x0).min(distance(&p.state, &x0d)) <= opts.periodicity_tol
    };
    let mut all = fiber_passages(orbit, c(1e-3));
    let t0 = orbit.duration();
    let ext: Trajectory<T> =
        integrate(orbit.state_at(t0), orbit.params, (t0, t0 + opts.periodicity_horizon), &opts.integration)?;
    let mut knots = vec![t0];
    knots.extend(ext.segments.iter().map(|s| s.t1()));
    all.extend(interior_passages(|t| ext.state_at(t), &knots, t0 + c(1e-3), t0 + opts.periodicity_horizon));
    let Some(k) = all.iter().skip(1).position(|p| close(p)).map(|k| k + 1) else {
        return Ok(None);
    };
    let period = all[k].t;
    all.truncate(k);
    Ok(Some((PeriodicityInfo { period, collisions: all.len() }, all)))
}

fn signature_of<T: Real>(passages: &[FiberPassage<T>], quantum: T) -> Vec<(Primary, i64)> {
    let mut sig: Vec<(Primary, i64)> = passages
        .iter()
        .map(|p| (p.primary, (fold_angle((p.state.w1, p.state.w2)) / quantum).round().value() as i64))
        .collect();
    sig.sort_by_key(|&(p, a)| (p as u8, a));
    sig.dedup();
    sig
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitClass<T> {
    pub members: Vec<usize>,
    pub signature: Vec<(Primary, i64)>,
    /// Fiber passages of the representative's full orbit, both endpoints
    /// counted.
    pub collision_count: usize,
    pub periodic: Option<PeriodicityInfo<T>>,
    /// Parity of the collisions per period, for periodic classes.
    pub odd_collision_period: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification<T> {
    pub classes: Vec<OrbitClass<T>>,
    pub note: String,
}

pub fn classify_orbits<T: Real>(orbits: &[SymmetricOrbit<T>], opts: &ClassifyOptions<T>) -> Result<Classification<T>> {
    let mut classes: Vec<OrbitClass<T>> = Vec::new();
    for (i, o) in orbits.iter().enumerate() {
        // Periodic orbits are compared through all passages of one period,
        // so multiple traversals fall into the same class.
        let found = detect_periodicity(o, opts)?;
        let sig = match &found {
            Some((_, ps)) => signature_of(ps, opts.quantum),
            None => orbit_signature(o, opts.quantum),
        };
        let periodic = found.map(|(p, _)| p);
        if let Some(cl) = classes.iter_mut().find(|c| c.signature == sig) {
            cl.members.push(i);
            continue;
        }
        classes.push(OrbitClass {
            members: vec![i],
            signature: sig,
            collision_count: fiber_passages(o, c(1e-3)).len(),
            periodic,
            odd_collision_period: periodic.map(|p| p.collisions % 2 == 1),
        });
    }
    let odd = classes.iter().any(|c| c.odd_collision_period == Some(true));
    let note = if odd {
        "odd-collision periodic orbit found within the horizon".to_string()
    } else {
        "no odd-collision periodic orbit found up to the horizon".to_string()
    };
    Ok(Classification { classes, note })
}
