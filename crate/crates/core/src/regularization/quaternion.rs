//! Unit quaternions as a double cover of the unit cotangent bundle of `S^2`,
//! identified with `SO(3)` by `Xi(p, v) = (v | p | v x p)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{c, Real};

/// `w + x i + y j + z k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quaternion<T> {
    pub w: T,
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Quaternion<T> {
    pub fn new(w: T, x: T, y: T, z: T) -> Self {
        Quaternion { w, x, y, z }
    }

    pub fn to_array(self) -> [T; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn from_array(a: [T; 4]) -> Self {
        Quaternion { w: a[0], x: a[1], y: a[2], z: a[3] }
    }

    pub fn norm(self) -> T {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn mul(self, o: Self) -> Self {
        Quaternion {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }

    pub fn conj(self) -> Self {
        Quaternion { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }
}

/// Point of the unit cotangent bundle: base `p` and unit covector `v`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitCovector<T> {
    pub p: [T; 3],
    pub v: [T; 3],
}

/// Matrix of `v -> q v q^{-1}` on the imaginary quaternions.
pub fn rotation_matrix<T: Real>(q: Quaternion<T>) -> [[T; 3]; 3] {
    let (w, x, y, z) = (q.w, q.x, q.y, q.z);
    let one = T::one();
    let two = c::<T>(2.0);
    [
        [one - two * (y * y + z * z), two * (x * y - w * z), two * (x * z + w * y)],
        [two * (x * y + w * z), one - two * (x * x + z * z), two * (y * z - w * x)],
        [two * (x * z - w * y), two * (y * z + w * x), one - two * (x * x + y * y)],
    ]
}

/// One of the two unit quaternions inducing the rotation `m` (Shepperd).
pub fn rotation_to_quaternion<T: Real>(m: &[[T; 3]; 3]) -> Quaternion<T> {
    let one = T::one();
    let quarter = c::<T>(0.25);
    let tr = m[0][0] + m[1][1] + m[2][2];
    let cand = [tr, m[0][0], m[1][1], m[2][2]];
    let mut k = 0;
    for i in 1..4 {
        if cand[i] > cand[k] {
            k = i;
        }
    }
    let q = match k {
        0 => {
            let s = (one + tr).sqrt() * c::<T>(2.0);
            [quarter * s, (m[2][1] - m[1][2]) / s, (m[0][2] - m[2][0]) / s, (m[1][0] - m[0][1]) / s]
        }
        1 => {
            let s = (one + m[0][0] - m[1][1] - m[2][2]).sqrt() * c::<T>(2.0);
            [(m[2][1] - m[1][2]) / s, quarter * s, (m[0][1] + m[1][0]) / s, (m[0][2] + m[2][0]) / s]
        }
        2 => {
            let s = (one + m[1][1] - m[0][0] - m[2][2]).sqrt() * c::<T>(2.0);
            [(m[0][2] - m[2][0]) / s, (m[0][1] + m[1][0]) / s, quarter * s, (m[1][2] + m[2][1]) / s]
        }
        _ => {
            let s = (one + m[2][2] - m[0][0] - m[1][1]).sqrt() * c::<T>(2.0);
            [(m[1][0] - m[0][1]) / s, (m[0][2] + m[2][0]) / s, (m[1][2] + m[2][1]) / s, quarter * s]
        }
    };
    Quaternion::from_array(q)
}

/// `A(a + b i + c j + d k) = a + b i + ((c - d)/sqrt 2) j + ((c + d)/sqrt 2) k`.
pub fn a_correction<T: Real>(q: Quaternion<T>) -> Quaternion<T> {
    let r = T::FRAC_1_SQRT_2();
    Quaternion { w: q.w, x: q.x, y: (q.y - q.z) * r, z: (q.y + q.z) * r }
}

pub fn a_correction_inverse<T: Real>(q: Quaternion<T>) -> Quaternion<T> {
    let r = T::FRAC_1_SQRT_2();
    Quaternion { w: q.w, x: q.x, y: (q.y + q.z) * r, z: (q.z - q.y) * r }
}

fn check_unit<T: Real>(q: Quaternion<T>) -> Result<()> {
    let n = q.norm();
    if (n - T::one()).abs() > c(1e-12) || !n.is_finite() {
        return Err(Error::NonUnitQuaternion(n.value()));
    }
    Ok(())
}

fn xi_inverse<T: Real>(m: &[[T; 3]; 3]) -> UnitCovector<T> {
    UnitCovector { v: [m[0][0], m[1][0], m[2][0]], p: [m[0][1], m[1][1], m[2][1]] }
}

/// `Xi(p, v)`: columns `v`, `p`, `v x p`.
pub fn xi_matrix<T: Real>(u: &UnitCovector<T>) -> [[T; 3]; 3] {
    let (p, v) = (u.p, u.v);
    let cr = [v[1] * p[2] - v[2] * p[1], v[2] * p[0] - v[0] * p[2], v[0] * p[1] - v[1] * p[0]];
    [[v[0], p[0], cr[0]], [v[1], p[1], cr[1]], [v[2], p[2], cr[2]]]
}

/// Cover without the `A` correction.
pub fn raw_quaternion_cover<T: Real>(q: Quaternion<T>) -> Result<UnitCovector<T>> {
    check_unit(q)?;
    Ok(xi_inverse(&rotation_matrix(q)))
}

/// `Xi^{-1}(R_{A q})`; `q` and `-q` have the same image.
pub fn quaternion_cover<T: Real>(q: Quaternion<T>) -> Result<UnitCovector<T>> {
    check_unit(q)?;
    Ok(xi_inverse(&rotation_matrix(a_correction(q))))
}

/// One of the two preimages under [`quaternion_cover`].
pub fn quaternion_lift<T: Real>(u: &UnitCovector<T>) -> Quaternion<T> {
    a_correction_inverse(rotation_to_quaternion(&xi_matrix(u)))
}
