//! Moser regularization: swap position and momentum, then lift the inverse
//! stereographic projection to the cotangent bundle of the sphere.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::RegState;
use crate::dynamics::{primary_positions, Frame, PhaseState, Primary};
use crate::error::{Error, Result};
use crate::scalar::{c, Real};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoserState<T> {
    /// Point of the unit sphere.
    pub x: [T; 3],
    /// Cotangent vector in ambient coordinates, orthogonal to `x`.
    pub xi: [T; 3],
    /// The same covector in the `A_x` trivialization (first two components).
    pub fiber: Complex<T>,
}

pub const NORTH_POLE: [f64; 3] = [0.0, 0.0, 1.0];

pub fn inverse_stereographic<T: Real>(x: Complex<T>) -> [T; 3] {
    let n = x.norm_sqr();
    let den = T::one() + n;
    [c::<T>(2.0) * x.re / den, c::<T>(2.0) * x.im / den, (n - T::one()) / den]
}

/// Orthogonal frame change sending the image of `d phi_x` to the horizontal
/// plane; singular at the south pole `x = 0`.
pub fn a_matrix<T: Real>(x: Complex<T>) -> [[T; 3]; 3] {
    let (x1, x2) = (x.re, x.im);
    let n = x.norm_sqr();
    let n2 = n * n;
    let s = T::one() / (n2 + n);
    let two = c::<T>(2.0);
    [
        [(two * x2 * x2 + n2 - n) * s, -two * x1 * x2 * s, -two * n * x1 * s],
        [-two * x1 * x2 * s, (two * x1 * x1 + n2 - n) * s, -two * n * x2 * s],
        [two * n * x1 * s, two * n * x2 * s, (n2 - n) * s],
    ]
}

fn transpose_apply<T: Real>(a: &[[T; 3]; 3], v: [T; 3]) -> [T; 3] {
    let mut out = [T::zero(); 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i] += a[j][i] * v[j];
        }
    }
    out
}

/// `T*phi` in the `A_x` trivialization: `xi -> -((|x|^2+1)/(2|x|^2)) x^2 conj(xi)`.
pub fn cotangent_lift<T: Real>(x: Complex<T>, xi: Complex<T>) -> Result<MoserState<T>> {
    let n = x.norm_sqr();
    if n == T::zero() {
        return Err(Error::ChartSingularity);
    }
    let fiber = -(x * x * xi.conj()) * ((n + T::one()) / (c::<T>(2.0) * n));
    let a = a_matrix(x);
    let xi_amb = transpose_apply(&a, [fiber.re, fiber.im, T::zero()]);
    Ok(MoserState { x: inverse_stereographic(x), xi: xi_amb, fiber })
}

/// Moser map of a state whose position is measured from the colliding
/// primary: `x = -p`, `xi = q`.
pub fn moser_map<T: Real>(ps: PhaseState<T>) -> Result<MoserState<T>> {
    let x = Complex::new(-ps.p1, -ps.p2);
    let xi = Complex::new(ps.q1, ps.q2);
    cotangent_lift(x, xi)
}

/// [`moser_map`] after translating the chosen primary to the origin.
pub fn moser_map_at<T: Real>(
    ps: PhaseState<T>,
    mu: T,
    frame: Frame,
    primary: Primary,
) -> Result<MoserState<T>> {
    let (xe, xm) = primary_positions(mu, frame);
    let q0 = match primary {
        Primary::Earth => xe,
        Primary::Moon => xm,
    };
    moser_map(PhaseState { q1: ps.q1 - q0, ..ps })
}

/// Deck transformation expressed in the chart `z' = z - z_primary`.
pub fn deck_shifted<T: Real>(rs: RegState<T>, which: Primary) -> Result<RegState<T>> {
    let zp = rs.z();
    let half = c::<T>(0.5);
    let (z, nz) = match which {
        Primary::Moon => (zp - half, zp / (zp * c::<T>(2.0) - T::one())),
        Primary::Earth => (zp + half, -(zp / (zp * c::<T>(2.0) + T::one()))),
    };
    if z.norm_sqr() == T::zero() {
        return Err(Error::BirkhoffSingularity { z: (z.re.value(), z.im.value()) });
    }
    let nw = -(z.conj() * z.conj() * rs.w() * c::<T>(4.0));
    Ok(RegState::from_complex(nz, nw))
}

/// Moser map composed with the shifted Birkhoff map near a collision,
/// `rs.z()` being the shifted coordinate `z'`. Extends over `z' = 0` by
/// `(north pole, +w^2/8)` for the Moon chart and `(north pole, -w^2/8)` for
/// the Earth chart.
pub fn moser_birkhoff<T: Real>(rs: RegState<T>, which: Primary) -> Result<MoserState<T>> {
    let zp = rs.z();
    let w = rs.w();
    let eighth = c::<T>(0.125);
    if zp.norm_sqr() == T::zero() {
        let f = match which {
            Primary::Moon => w * w * eighth,
            Primary::Earth => -(w * w * eighth),
        };
        return Ok(MoserState {
            x: [T::zero(), T::zero(), T::one()],
            xi: [f.re, f.im, T::zero()],
            fiber: f,
        });
    }
    // Position relative to the primary and momentum, written so that no
    // cancellation occurs as z' -> 0.
    let two = c::<T>(2.0);
    let four = c::<T>(4.0);
    let zb = zp.conj();
    let (q, p) = match which {
        Primary::Moon => (
            zp * zp / (zp * two - T::one()),
            (zb * zb * four - zb * four + T::one()) * w / (zb * zb * two - zb * two),
        ),
        Primary::Earth => (
            zp * zp / (zp * two + T::one()),
            (zb * zb * four + zb * four + T::one()) * w / (zb * zb * two + zb * two),
        ),
    };
    cotangent_lift(-p, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regularization::{birkhoff_map, collision_fiber_radius, KVariant};
    use proptest::prelude::*;

    fn planar() -> impl Strategy<Value = Complex<f64>> {
        (0.05..5.0f64, 0.0..std::f64::consts::TAU).prop_map(|(r, a)| Complex::from_polar(r, a))
    }

    /// Conformal route: `zeta = d phi_x(xi) / lambda^2`, `lambda = 2/(1+|x|^2)`.
    fn conformal_lift(x: Complex<f64>, xi: Complex<f64>) -> [f64; 3] {
        let h = 1e-6;
        let f = |t: f64| inverse_stereographic(x + xi * t);
        let (a, b) = (f(h), f(-h));
        let lam = 2.0 / (1.0 + x.norm_sqr());
        [0, 1, 2].map(|i| (a[i] - b[i]) / (2.0 * h) / (lam * lam))
    }

    #[test]
    fn limit_values() {
        let w = Complex::new(2.0, 0.0);
        let m = moser_birkhoff(RegState::from_complex(Complex::new(0.0, 0.0), w), Primary::Moon).unwrap();
        assert_eq!(m.x, [0.0, 0.0, 1.0]);
        assert_eq!(m.fiber, Complex::new(0.5, 0.0));
        let e = moser_birkhoff(RegState::from_complex(Complex::new(0.0, 0.0), w), Primary::Earth).unwrap();
        assert_eq!(e.fiber, Complex::new(-0.5, 0.0));
    }

    #[test]
    fn radial_limit_by_extrapolation() {
        for which in [Primary::Moon, Primary::Earth] {
            let w = Complex::new(0.7, -1.9);
            let theta = 0.83;
            let vals: Vec<Complex<f64>> = (3..=6)
                .map(|k| {
                    let zp = Complex::from_polar(10f64.powi(-k), theta);
                    moser_birkhoff(RegState::from_complex(zp, w), which).unwrap().fiber
                })
                .collect();
            // Richardson with ratio 10 on an expansion in powers of h.
            let r1: Vec<_> = vals.windows(2).map(|p| (p[1] * 10.0 - p[0]) / 9.0).collect();
            let r2: Vec<_> = r1.windows(2).map(|p| (p[1] * 100.0 - p[0]) / 99.0).collect();
            let lim = moser_birkhoff(RegState::from_complex(Complex::new(0.0, 0.0), w), which).unwrap().fiber;
            assert!((r2[1] - lim).norm() < 1e-6, "{which:?}: {:?} vs {lim:?}", r2[1]);
        }
    }

    #[test]
    fn collision_fiber_is_double_covered() {
        let r = collision_fiber_radius(Primary::Moon, 0.2, KVariant::Pullback);
        for i in 0..16 {
            let w = Complex::from_polar(r, i as f64 * 0.4);
            let z0 = Complex::new(0.0, 0.0);
            let a = moser_birkhoff(RegState::from_complex(z0, w), Primary::Moon).unwrap();
            let b = moser_birkhoff(RegState::from_complex(z0, -w), Primary::Moon).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn composed_formula_agrees_with_direct_composition() {
        let w = Complex::new(0.4, 0.9);
        for which in [Primary::Moon, Primary::Earth] {
            let zp = Complex::new(0.13, -0.21);
            let shift: f64 = match which {
                Primary::Moon => -0.5,
                Primary::Earth => 0.5,
            };
            let ps = birkhoff_map(RegState::from_complex(zp + shift, w)).unwrap();
            let direct = moser_map(PhaseState { q1: ps.q1 - shift, ..ps }).unwrap();
            let m = moser_birkhoff(RegState::from_complex(zp, w), which).unwrap();
            assert!((m.fiber - direct.fiber).norm() < 1e-12);
            for i in 0..3 {
                assert!((m.x[i] - direct.x[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn south_pole_is_excluded() {
        let ps = PhaseState::new(0.3, 0.1, 0.0, 0.0);
        assert_eq!(moser_map(ps), Err(Error::ChartSingularity));
    }

    proptest! {
        #[test]
        fn sphere_and_orthogonality(x in planar()) {
            let p = inverse_stereographic(x);
            prop_assert!((p.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-14);
            let a = a_matrix(x);
            for i in 0..3 {
                for j in 0..3 {
                    let dot: f64 = (0..3).map(|k| a[k][i] * a[k][j]).sum();
                    let id = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((dot - id).abs() < 1e-13);
                }
            }
            let e3: Vec<f64> = (0..3).map(|i| (0..3).map(|k| a[i][k] * p[k]).sum()).collect();
            prop_assert!(e3[0].abs() < 1e-13 && e3[1].abs() < 1e-13 && (e3[2] - 1.0).abs() < 1e-13);
        }

        #[test]
        fn trivialized_lift_matches_conformal_route(x in planar(), xi in planar()) {
            let m = cotangent_lift(x, xi).unwrap();
            let z = conformal_lift(x, xi);
            let scale = 1.0 + z.iter().map(|v| v.abs()).fold(0.0, f64::max);
            for i in 0..3 {
                prop_assert!((m.xi[i] - z[i]).abs() < 1e-6 * scale);
            }
            let dot: f64 = (0..3).map(|i| m.x[i] * m.xi[i]).sum();
            prop_assert!(dot.abs() < 1e-12 * scale);
        }

        #[test]
        fn moser_map_is_symplectic(
            base in (-1.0..1.0f64, -1.0..1.0f64, 0.2..2.0f64, 0.0..6.28f64),
            u in prop::array::uniform4(-1.0..1.0f64),
            v in prop::array::uniform4(-1.0..1.0f64),
        ) {
            let (q1, q2, pr, pa) = base;
            let s = [q1, q2, pr * pa.cos(), pr * pa.sin()];
            let h = 1e-6;
            let image = |a: [f64; 4]| {
                let m = moser_map(PhaseState::from_array(a)).unwrap();
                [m.x[0], m.x[1], m.x[2], m.xi[0], m.xi[1], m.xi[2]]
            };
            let push = |t: [f64; 4]| {
                let up: [f64; 4] = [0, 1, 2, 3].map(|i| s[i] + h * t[i]);
                let dn: [f64; 4] = [0, 1, 2, 3].map(|i| s[i] - h * t[i]);
                let (a, b) = (image(up), image(dn));
                [0, 1, 2, 3, 4, 5].map(|i| (a[i] - b[i]) / (2.0 * h))
            };
            let (du, dv) = (push(u), push(v));
            // sum d zeta_i ^ d x_i on the ambient side, dp ^ dq on the plane.
            let amb: f64 = (0..3).map(|i| du[3 + i] * dv[i] - dv[3 + i] * du[i]).sum();
            let std: f64 = (0..2).map(|i| u[2 + i] * v[i] - v[2 + i] * u[i]).sum();
            prop_assert!((amb - std).abs() < 1e-6 * (1.0 + std.abs()), "{} vs {}", amb, std);
        }

        #[test]
        fn deck_equivariance_near_collision(
            r in 1e-4..0.2f64, a in 0.0..6.28f64, w1 in -2.0..2.0f64, w2 in -2.0..2.0f64,
        ) {
            for which in [Primary::Moon, Primary::Earth] {
                let rs = RegState::from_complex(Complex::from_polar(r, a), Complex::new(w1, w2));
                let m = moser_birkhoff(rs, which).unwrap();
                let md = moser_birkhoff(deck_shifted(rs, which).unwrap(), which).unwrap();
                let scale = 1.0 + m.fiber.norm();
                prop_assert!((m.fiber - md.fiber).norm() < 1e-9 * scale);
                for i in 0..3 {
                    prop_assert!((m.x[i] - md.x[i]).abs() < 1e-9);
                }
            }
        }
    }
}
