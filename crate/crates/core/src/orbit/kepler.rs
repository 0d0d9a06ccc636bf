use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{c, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Periodicity {
    Periodic { num: u64, den: u64 },
    NonPeriodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeplerPeriodicity<T> {
    pub period: T,
    /// `period / (2 pi)`.
    pub ratio: T,
    pub periodicity: Periodicity,
}

/// `T = sqrt(pi / (2 d^3))`, the period formula as stated for the rotating
/// Kepler problem.
pub fn kepler_period_displayed<T: Real>(d: T) -> Result<T> {
    let rad = T::PI() / (c::<T>(2.0) * d * d * d);
    if !(d > T::zero()) || !rad.is_finite() {
        return Err(Error::DomainError(format!("radicand pi/(2 d^3) not positive for d = {d}")));
    }
    Ok(rad.sqrt())
}

/// Period `2 pi (-2 d)^(-3/2)` of a collision ellipse of energy `d < 0`
/// around a unit mass.
pub fn kepler_collision_period<T: Real>(d: T) -> Result<T> {
    if !(d < T::zero()) {
        return Err(Error::DomainError(format!("bound Kepler orbits need d < 0, got {d}")));
    }
    Ok(T::TAU() * (-(d + d)).powf(c(-1.5)))
}

/// Best continued-fraction convergent `p/q` with `q <= max_den` and
/// `|x - p/q| <= tol`.
pub fn rational_approximation(x: f64, tol: f64, max_den: u64) -> Option<(u64, u64)> {
    if !(x.is_finite() && x >= 0.0) {
        return None;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a > u64::MAX as f64 / 4.0 {
            break;
        }
        let a = a as u64;
        let (p2, q2) = (a.checked_mul(p1)?.checked_add(p0)?, a.checked_mul(q1)?.checked_add(q0)?);
        if q2 > max_den {
            break;
        }
        if (x - p2 as f64 / q2 as f64).abs() <= tol {
            return Some((p2, q2));
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = r - a as f64;
        if frac <= 0.0 {
            break;
        }
        r = 1.0 / frac;
    }
    None
}

/// Rationality of `T / (2 pi)` at energy `d`.
pub fn kepler_periodicity<T: Real>(d: T, tol: f64, max_den: u64) -> Result<KeplerPeriodicity<T>> {
    let period = kepler_period_displayed(d)?;
    let ratio = period / T::TAU();
    let periodicity = match rational_approximation(ratio.to_f64(), tol, max_den) {
        Some((num, den)) => Periodicity::Periodic { num, den },
        None => Periodicity::NonPeriodic,
    };
    Ok(KeplerPeriodicity { period, ratio, periodicity })
}
