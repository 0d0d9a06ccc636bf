//! Closed-form collision orbit of the rotating Kepler problem around the unit
//! mass at `z = -1/2`, in Birkhoff coordinates.

use num_complex::Complex64;
use r3bp_core::dynamics::{to_frame, Frame, PhaseState};

pub struct KeplerCollision {
    pub a: f64,
    /// Physical collision-to-collision period.
    pub period: f64,
    /// Inertial direction of the collision line.
    pub theta0: f64,
}

impl KeplerCollision {
    /// The symmetric orbit at energy `d` whose apocenter is on the axis left
    /// of the mass.
    pub fn symmetric(d: f64) -> Self {
        let a = -1.0 / (2.0 * d);
        let period = 2.0 * std::f64::consts::PI * a.powf(1.5);
        KeplerCollision { a, period, theta0: std::f64::consts::PI + period / 2.0 }
    }

    /// Centered-frame phase state at eccentric anomaly `e` in `(0, 2 pi)`.
    pub fn phase(&self, e: f64) -> PhaseState<f64> {
        let a = self.a;
        let t = a.powf(1.5) * (e - e.sin());
        let r = a * (1.0 - e.cos());
        let rdot = e.sin() / (a.sqrt() * (1.0 - e.cos()));
        let ang = self.theta0 - t;
        let (c, s) = (ang.cos(), ang.sin());
        to_frame(PhaseState::new(r * c, r * s, rdot * c, rdot * s), 0.0, Frame::Centered)
    }

    /// Regularized time from collision to eccentric anomaly `e`:
    /// `ds = sqrt(a) dE / |q - 1/2|` by composite Simpson.
    pub fn regularized_time(&self, e: f64) -> f64 {
        let n = 20_000;
        let h = e / n as f64;
        let f = |x: f64| {
            let p = self.phase(x.max(1e-300));
            self.a.sqrt() / ((p.q1 - 0.5).hypot(p.q2))
        };
        let f0 = {
            // Limit at collision: q = -1/2.
            self.a.sqrt()
        };
        let mut acc = f0 + f(e);
        for i in 1..n {
            acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    /// Both Birkhoff preimages `(z, w)` of the state at eccentric anomaly `e`.
    pub fn birkhoff(&self, e: f64) -> [(Complex64, Complex64); 2] {
        let p = self.phase(e);
        let q = Complex64::new(p.q1, p.q2);
        let pm = Complex64::new(p.p1, p.p2);
        let root = (q * q - 0.25).sqrt();
        [q + root, q - root].map(|z| {
            let bp = (z * z - 0.25) / (2.0 * z * z);
            (z, pm * bp.conj())
        })
    }
}
