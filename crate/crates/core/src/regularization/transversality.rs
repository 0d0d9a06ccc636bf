//! Sampled checks that the Liouville field is transverse to regularized
//! energy hypersurfaces.
//!
//! In the Moser picture the Liouville field scales the cotangent fibre. Since
//! the fibre coordinate is the position measured from the primary, it is the
//! field `q' d/dq'` at fixed momentum, and along a ray `q' = s u` its pairing
//! with the defining function `F = s (H - c)` is `s dF/ds`.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{k_value_and_gradient, birkhoff_momentum_inverse, KParams, KVariant, RegState};
use crate::dynamics::{evaluate_h, gradient_h, lagrange_points, Frame, PhaseState, Primary};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Surface {
    /// Moser-regularized Earth component below the first critical value.
    MoserEarth { c: f64 },
    MoserMoon { c: f64 },
    /// Both components joined through the neck, `d` slightly above `H(L1)`.
    MoserConnected { d: f64 },
    /// The connected surface lifted to the Birkhoff double cover.
    BirkhoffLifted { d: f64 },
}

impl Surface {
    pub fn name(&self) -> &'static str {
        match self {
            Surface::MoserEarth { .. } => "MoserEarth",
            Surface::MoserMoon { .. } => "MoserMoon",
            Surface::MoserConnected { .. } => "MoserConnected",
            Surface::BirkhoffLifted { .. } => "BirkhoffLifted",
        }
    }

    pub fn level(&self) -> f64 {
        match *self {
            Surface::MoserEarth { c } | Surface::MoserMoon { c } => c,
            Surface::MoserConnected { d } | Surface::BirkhoffLifted { d } => d,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingSpec {
    /// Number of pairings to collect.
    pub n_samples: usize,
    pub seed: u64,
    /// Width of the above-critical window; `None` means `1e-3 (H(L2) - H(L1))`.
    pub delta: Option<f64>,
    /// Radius of the ball around L1 excluded in connected checks; `None`
    /// means `neck_fraction * |L1 - nearest primary|`.
    pub neck_radius: Option<f64>,
    pub neck_fraction: f64,
    pub ray_max: f64,
    pub ray_steps: usize,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        SamplingSpec {
            n_samples: 10_000,
            seed: 0,
            delta: None,
            neck_radius: None,
            neck_fraction: 0.1,
            ray_max: 4.0,
            ray_steps: 600,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransversalityReport {
    pub surface: String,
    pub mu: f64,
    pub d_or_c: f64,
    pub n_samples: usize,
    pub min_pairing: f64,
    pub max_pairing: f64,
    /// Count of pairings whose sign disagrees with the majority (or vanishes).
    pub sign_changes: usize,
    pub rays: usize,
    pub neck_radius: Option<f64>,
    /// Smallest distance to L1 among accepted samples.
    pub neck_margin: Option<f64>,
    pub excluded_near_neck: usize,
    /// Largest `|K|` at lifted samples (Birkhoff check only).
    pub max_lift_residual: Option<f64>,
}

struct Ray {
    primary: Primary,
    p: [f64; 2],
    u: [f64; 2],
}

fn sample_ray(seed: u64, index: u64, primary: Primary) -> Ray {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    // Uniform point on the sphere, stereographically projected to the
    // momentum plane (x = -p), plus a fibre direction.
    let (x1, x2, x3) = loop {
        let z: f64 = 2.0 * rng.gen::<f64>() - 1.0;
        let a: f64 = std::f64::consts::TAU * rng.gen::<f64>();
        if z < 1.0 - 1e-12 {
            let r = (1.0 - z * z).sqrt();
            break (r * a.cos(), r * a.sin(), z);
        }
    };
    let sp = [x1 / (1.0 - x3), x2 / (1.0 - x3)];
    let beta: f64 = std::f64::consts::TAU * rng.gen::<f64>();
    Ray { primary, p: [-sp[0], -sp[1]], u: [beta.cos(), beta.sin()] }
}

fn primary_q(primary: Primary) -> f64 {
    match primary {
        Primary::Earth => 0.5,
        Primary::Moon => -0.5,
    }
}

fn mass(primary: Primary, mu: f64) -> f64 {
    match primary {
        Primary::Earth => mu,
        Primary::Moon => 1.0 - mu,
    }
}

struct Geometry {
    mu: f64,
    level: f64,
    /// L1 position in the centred frame when the neck is open.
    neck: Option<([f64; 2], f64)>,
}

struct Root {
    s: f64,
    q: [f64; 2],
    pairing: f64,
}

fn state_on_ray(ray: &Ray, s: f64) -> PhaseState<f64> {
    PhaseState::new(primary_q(ray.primary) + s * ray.u[0], s * ray.u[1], ray.p[0], ray.p[1])
}

fn defining(ray: &Ray, s: f64, g: &Geometry) -> f64 {
    if s == 0.0 {
        return -mass(ray.primary, g.mu);
    }
    s * (evaluate_h(state_on_ray(ray, s), g.mu, Frame::Centered).unwrap_or(f64::INFINITY) - g.level)
}

fn outside_hill(q: [f64; 2], g: &Geometry) -> bool {
    let eq = PhaseState::new(q[0], q[1], -q[1], q[0] + 0.5 - g.mu);
    match evaluate_h(eq, g.mu, Frame::Centered) {
        Ok(u) => u > g.level,
        Err(_) => false,
    }
}

/// Roots of `F` along the ray up to the first exit from the Hill region.
fn ray_roots(ray: &Ray, g: &Geometry, sampling: &SamplingSpec, index: usize) -> Result<Vec<Root>> {
    let s_min: f64 = 1e-9;
    let n = sampling.ray_steps.max(16);
    let ratio = (sampling.ray_max / s_min).ln() / n as f64;
    let mut roots = Vec::new();
    let mut prev_s = 0.0;
    let mut prev_f = defining(ray, 0.0, g);
    for k in 0..=n {
        let s = s_min * (ratio * k as f64).exp();
        let f = defining(ray, s, g);
        if (prev_f < 0.0) != (f < 0.0) {
            let (mut lo, mut hi) = (prev_s, s);
            let flo_neg = prev_f < 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if (defining(ray, mid, g) < 0.0) == flo_neg {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let r = 0.5 * (lo + hi);
            let st = state_on_ray(ray, r);
            let grad = gradient_h(st, g.mu, Frame::Centered)?;
            let dhds = grad[0] * ray.u[0] + grad[1] * ray.u[1];
            roots.push(Root { s: r, q: [st.q1, st.q2], pairing: r * r * dhds });
        }
        let q = [primary_q(ray.primary) + s * ray.u[0], s * ray.u[1]];
        if outside_hill(q, g) {
            return Ok(roots);
        }
        prev_s = s;
        prev_f = f;
    }
    Err(Error::SamplingFailure(index))
}

/// Lifts `(q, p)` to both Birkhoff preimages and returns, for each,
/// `(K, s dK/ds)` along the lifted ray.
fn lifted_pairings(ray: &Ray, root: &Root, mu: f64, d: f64) -> Result<[(f64, f64); 2]> {
    let q = Complex::new(root.q[0], root.q[1]);
    let p = Complex::new(ray.p[0], ray.p[1]);
    let dq = Complex::new(ray.u[0], ray.u[1]);
    let disc = (q * q - 0.25).sqrt();
    let params = KParams { mu, d };
    let mut out = [(0.0, 0.0); 2];
    for (slot, z) in out.iter_mut().zip([q + disc, q - disc]) {
        let w = birkhoff_momentum_inverse(z, p);
        // z' from z^2 - 2 q z + 1/4 = 0; w' from w = p conj(b'(z)), b'' = 1/(4 z^3).
        let dz = dq * z / (z - q);
        let dw = p * (dz / (z * z * z * 4.0)).conj();
        let (k, g) = k_value_and_gradient(RegState::from_complex(z, w), params, KVariant::Pullback)?;
        let dk = g[0] * dz.re + g[1] * dz.im + g[2] * dw.re + g[3] * dw.im;
        *slot = (k, root.s * dk);
    }
    Ok(out)
}

pub fn contact_transversality_check(
    surface: Surface,
    mu: f64,
    sampling: &SamplingSpec,
) -> Result<TransversalityReport> {
    let ld = lagrange_points(mu, Frame::Centered)?;
    let (h1, h2) = (ld.values[0], ld.values[1]);
    let delta = sampling.delta.unwrap_or(1e-3 * (h2 - h1));
    let level = surface.level();
    let connected = matches!(surface, Surface::MoserConnected { .. } | Surface::BirkhoffLifted { .. });
    if connected {
        if !(level > h1 && level <= h1 + delta) {
            return Err(Error::Precondition(format!(
                "connected check needs H(L1) < d <= H(L1) + delta, got d = {level}, H(L1) = {h1}, delta = {delta}"
            )));
        }
    } else if !(level < h1) {
        return Err(Error::Precondition(format!("Moser check needs c < H(L1) = {h1}, got {level}")));
    }
    let l1 = [ld.points[0].q1, ld.points[0].q2];
    let neck = if connected {
        let nearest = (l1[0] - 0.5).abs().min((l1[0] + 0.5).abs());
        Some((l1, sampling.neck_radius.unwrap_or(sampling.neck_fraction * nearest)))
    } else {
        None
    };
    let g = Geometry { mu, level, neck };
    let primaries: Vec<Primary> = match surface {
        Surface::MoserEarth { .. } => vec![Primary::Earth],
        Surface::MoserMoon { .. } => vec![Primary::Moon],
        _ => vec![Primary::Earth, Primary::Moon],
    };
    let lifted = matches!(surface, Surface::BirkhoffLifted { .. });

    // Per-ray outcome: accepted pairings, excluded count, neck distances,
    // lift residuals.
    type RayOut = (Vec<f64>, usize, Vec<f64>, f64);
    let eval = |i: usize| -> Result<RayOut> {
        let primary = primaries[i % primaries.len()];
        let ray = sample_ray(sampling.seed, i as u64, primary);
        let roots = ray_roots(&ray, &g, sampling, i)?;
        let mut acc = Vec::new();
        let mut excluded = 0;
        let mut dists = Vec::new();
        let mut resid: f64 = 0.0;
        for r in roots {
            if let Some((c, rad)) = g.neck {
                let dist = ((r.q[0] - c[0]).powi(2) + (r.q[1] - c[1]).powi(2)).sqrt();
                let far_side = match primary {
                    Primary::Earth => r.q[0] < c[0],
                    Primary::Moon => r.q[0] > c[0],
                };
                if far_side || dist < rad {
                    excluded += 1;
                    continue;
                }
                dists.push(dist);
            }
            if lifted {
                for (k, pr) in lifted_pairings(&ray, &r, mu, level)? {
                    resid = resid.max(k.abs());
                    acc.push(pr);
                }
            } else {
                acc.push(r.pairing);
            }
        }
        Ok((acc, excluded, dists, resid))
    };

    let mut pairings: Vec<f64> = Vec::with_capacity(sampling.n_samples);
    let mut excluded = 0;
    let mut margin: Option<f64> = None;
    let mut resid: f64 = 0.0;
    let mut rays = 0;
    let mut next = 0usize;
    while pairings.len() < sampling.n_samples {
        let batch = (sampling.n_samples - pairings.len()).max(64);
        let outs: Vec<Result<RayOut>> = (next..next + batch).into_par_iter().map(eval).collect();
        next += batch;
        for o in outs {
            if pairings.len() >= sampling.n_samples {
                break;
            }
            let (acc, ex, dists, r) = o?;
            rays += 1;
            excluded += ex;
            resid = resid.max(r);
            for dd in dists {
                margin = Some(margin.map_or(dd, |m: f64| m.min(dd)));
            }
            for p in acc {
                if pairings.len() < sampling.n_samples {
                    pairings.push(p);
                }
            }
        }
        if next > 100 * sampling.n_samples.max(1) {
            return Err(Error::SamplingFailure(next));
        }
    }
    let min = pairings.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = pairings.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pos = pairings.iter().filter(|&&p| p > 0.0).count();
    let neg = pairings.iter().filter(|&&p| p < 0.0).count();
    let zero = pairings.len() - pos - neg;
    Ok(TransversalityReport {
        surface: surface.name().to_string(),
        mu,
        d_or_c: level,
        n_samples: pairings.len(),
        min_pairing: min,
        max_pairing: max,
        sign_changes: pos.min(neg) + zero,
        rays,
        neck_radius: neck.map(|n| n.1),
        neck_margin: margin,
        excluded_near_neck: excluded,
        max_lift_residual: if lifted { Some(resid) } else { None },
    })
}
