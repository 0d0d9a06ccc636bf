//! Birkhoff regularization of both primaries, the regularized Hamiltonian `K`,
//! its symmetries, and (in submodules) the Moser picture and the quaternionic
//! cover of the unit cotangent bundle of the sphere.

mod moser;
mod quaternion;
mod transversality;

pub use moser::*;
pub use quaternion::*;
pub use transversality::*;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::dual::Dual;
use crate::dynamics::{evaluate_h, Frame, PhaseState, Primary};
use crate::error::{Error, Result};
use crate::scalar::{c, Real, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegState<T> {
    pub z1: T,
    pub z2: T,
    pub w1: T,
    pub w2: T,
}

impl<T: Scalar> RegState<T> {
    pub fn new(z1: T, z2: T, w1: T, w2: T) -> Self {
        RegState { z1, z2, w1, w2 }
    }

    pub fn from_complex(z: Complex<T>, w: Complex<T>) -> Self {
        RegState { z1: z.re, z2: z.im, w1: w.re, w2: w.im }
    }

    pub fn z(&self) -> Complex<T> {
        Complex::new(self.z1, self.z2)
    }

    pub fn w(&self) -> Complex<T> {
        Complex::new(self.w1, self.w2)
    }

    pub fn to_array(self) -> [T; 4] {
        [self.z1, self.z2, self.w1, self.w2]
    }

    pub fn from_array(a: [T; 4]) -> Self {
        RegState { z1: a[0], z2: a[1], w1: a[2], w2: a[3] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KParams<T> {
    pub mu: T,
    pub d: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KVariant {
    /// `|q - 1/2| |q + 1/2| (H - d)` pulled back along the Birkhoff map.
    Pullback,
    /// The explicit closed formula as printed in the literature, whose
    /// potential terms pair the mass coefficients the other way round.
    Displayed,
}

fn singular<T: Scalar>(z: Complex<T>) -> Error {
    Error::BirkhoffSingularity { z: (z.re.value(), z.im.value()) }
}

fn check_z<T: Scalar>(z: Complex<T>) -> Result<()> {
    if z.re == T::zero() && z.im == T::zero() {
        return Err(singular(z));
    }
    if !(z.re.value().is_finite() && z.im.value().is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    Ok(())
}

/// `b(z) = (z^2 + 1/4) / (2 z)`, the branched double cover of the plane.
pub fn birkhoff_position<T: Scalar>(z: Complex<T>) -> Result<Complex<T>> {
    check_z(z)?;
    let quarter = c::<T>(0.25);
    Ok((z * z + quarter) / (z * c::<T>(2.0)))
}

/// Cotangent lift of `b`; the image is in the [`Frame::Centered`] frame.
pub fn birkhoff_map<T: Scalar>(rs: RegState<T>) -> Result<PhaseState<T>> {
    let z = rs.z();
    let q = birkhoff_position(z)?;
    let zb2 = z.conj() * z.conj();
    let den = zb2 - c::<T>(0.25);
    if den.re == T::zero() && den.im == T::zero() {
        return Err(singular(z));
    }
    let p = zb2 * rs.w() * c::<T>(2.0) / den;
    Ok(PhaseState { q1: q.re, q2: q.im, p1: p.re, p2: p.im })
}

/// Inverse cotangent lift on the branch selected by `z`: momentum `w` such
/// that `birkhoff_map(z, w)` has momentum `p`.
pub fn birkhoff_momentum_inverse<T: Scalar>(z: Complex<T>, p: Complex<T>) -> Complex<T> {
    // w = p * conj(b'(z)), b'(z) = (z^2 - 1/4) / (2 z^2)
    let bp = (z * z - c::<T>(0.25)) / (z * z * c::<T>(2.0));
    p * bp.conj()
}

fn k_generic<S: Scalar>(z: Complex<S>, w: Complex<S>, mu: S, d: S, variant: KVariant) -> S {
    let half = c::<S>(0.5);
    let quarter = c::<S>(0.25);
    let zz = z.norm_sqr();
    let r = zz.sqrt();
    let a = (z + half).norm_sqr();
    let b = (z - half).norm_sqr();
    let (near_earth_mass, near_moon_mass) = match variant {
        KVariant::Pullback => (mu, S::one() - mu),
        KVariant::Displayed => (S::one() - mu, mu),
    };
    // Poles of the momentum map at z = +-1/2 cancelled against |z -+ 1/2|.
    let rot = w.conj() * (z * z - quarter).conj() * z * (z * z + z * (S::one() - mu - mu) + quarter);
    half * zz * w.norm_sqr() - near_earth_mass * a / (r + r) - near_moon_mass * b / (r + r)
        + rot.im / (c::<S>(4.0) * zz)
        - d * a * b / (c::<S>(4.0) * zz)
}

pub fn evaluate_k<T: Real>(rs: RegState<T>, params: KParams<T>, variant: KVariant) -> Result<T> {
    check_z(rs.z())?;
    Ok(k_generic(rs.z(), rs.w(), params.mu, params.d, variant))
}

/// `|q - 1/2| |q + 1/2| (H(q, p) - d)` evaluated literally through
/// [`birkhoff_map`] and [`evaluate_h`]; undefined on the collision fibers.
pub fn k_composed<T: Real>(rs: RegState<T>, params: KParams<T>) -> Result<T> {
    let ps = birkhoff_map(rs)?;
    let h = evaluate_h(ps, params.mu, Frame::Centered)?;
    let q = Complex::new(ps.q1, ps.q2);
    let half = c::<T>(0.5);
    Ok((q - half).norm_sqr().sqrt() * (q + half).norm_sqr().sqrt() * (h - params.d))
}

/// `K` and `(dK/dz1, dK/dz2, dK/dw1, dK/dw2)` from one dual-number pass.
pub fn k_value_and_gradient<T: Real>(
    rs: RegState<T>,
    params: KParams<T>,
    variant: KVariant,
) -> Result<(T, [T; 4])> {
    check_z(rs.z())?;
    type D<T> = Dual<T, 4>;
    let z = Complex::new(D::variable(rs.z1, 0), D::variable(rs.z2, 1));
    let w = Complex::new(D::variable(rs.w1, 2), D::variable(rs.w2, 3));
    let k = k_generic(z, w, D::constant(params.mu), D::constant(params.d), variant);
    Ok((k.re, k.eps))
}

/// Symplectic gradient `(dK/dw, -dK/dz)` of the pullback `K`, ordered as
/// `(z1', z2', w1', w2')`.
pub fn k_vector_field<T: Real>(rs: RegState<T>, params: KParams<T>) -> Result<[T; 4]> {
    let (_, g) = k_value_and_gradient(rs, params, KVariant::Pullback)?;
    Ok([g[2], g[3], -g[0], -g[1]])
}

pub fn deck<T: Scalar>(rs: RegState<T>) -> Result<RegState<T>> {
    let z = rs.z();
    check_z(z)?;
    let nz = Complex::new(c::<T>(0.25), T::zero()) / z;
    let nw = -(z.conj() * z.conj() * rs.w() * c::<T>(4.0));
    Ok(RegState::from_complex(nz, nw))
}

pub fn rho1<T: Scalar>(rs: RegState<T>) -> RegState<T> {
    RegState { z1: rs.z1, z2: -rs.z2, w1: -rs.w1, w2: rs.w2 }
}

pub fn rho2<T: Scalar>(rs: RegState<T>) -> Result<RegState<T>> {
    let z = rs.z();
    check_z(z)?;
    let nz = Complex::new(c::<T>(0.25), T::zero()) / z.conj();
    let nw = z * z * rs.w().conj() * c::<T>(4.0);
    Ok(RegState::from_complex(nz, nw))
}

/// Collision point `z = +1/2` (Earth) or `z = -1/2` (Moon).
pub fn collision_point<T: Scalar>(primary: Primary) -> T {
    match primary {
        Primary::Earth => c(0.5),
        Primary::Moon => c(-0.5),
    }
}

/// Radius of the collision circle `{z = +-1/2, K = 0}`. On the fiber the
/// Hamiltonian reduces to `|w|^2 / 8 - m`, so the radius is `2 sqrt(2 m)` with
/// `m` the mass the variant attaches to that point.
pub fn collision_fiber_radius<T: Real>(primary: Primary, mu: T, variant: KVariant) -> T {
    let m = match (primary, variant) {
        (Primary::Earth, KVariant::Pullback) | (Primary::Moon, KVariant::Displayed) => mu,
        (Primary::Moon, KVariant::Pullback) | (Primary::Earth, KVariant::Displayed) => T::one() - mu,
    };
    c::<T>(2.0) * (c::<T>(2.0) * m).sqrt()
}
