//! Rotating-frame Hamiltonian of the planar circular restricted three-body
//! problem.
//!
//! Convention: `mu` is the Earth's mass. In the [`Frame::Original`] frame the
//! Earth sits at `(1 - mu, 0)` and the Moon at `(-mu, 0)`; the
//! [`Frame::Centered`] frame translates by `s = 1/2 - mu` so the Earth is at
//! `(1/2, 0)` and the Moon at `(-1/2, 0)`. This is the reverse of the labelling
//! common in the astrodynamics literature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{c, Real, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseState<T> {
    pub q1: T,
    pub q2: T,
    pub p1: T,
    pub p2: T,
}

impl<T: Scalar> PhaseState<T> {
    pub fn new(q1: T, q2: T, p1: T, p2: T) -> Self {
        PhaseState { q1, q2, p1, p2 }
    }

    pub fn to_array(self) -> [T; 4] {
        [self.q1, self.q2, self.p1, self.p2]
    }

    pub fn from_array(a: [T; 4]) -> Self {
        PhaseState { q1: a[0], q2: a[1], p1: a[2], p2: a[3] }
    }

    fn all_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.value().is_finite())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Frame {
    Original,
    Centered,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Primary {
    Earth,
    Moon,
}

/// Translation `s` with `q_original = q_centered + (s, 0)`.
#[inline]
pub fn frame_shift<T: Scalar>(mu: T) -> T {
    c::<T>(0.5) - mu
}

pub fn to_original<T: Scalar>(state: PhaseState<T>, mu: T, frame: Frame) -> PhaseState<T> {
    match frame {
        Frame::Original => state,
        Frame::Centered => PhaseState { q1: state.q1 + frame_shift(mu), ..state },
    }
}

pub fn to_frame<T: Scalar>(original: PhaseState<T>, mu: T, frame: Frame) -> PhaseState<T> {
    match frame {
        Frame::Original => original,
        Frame::Centered => PhaseState { q1: original.q1 - frame_shift(mu), ..original },
    }
}

/// Positions of the Earth and the Moon on the q1-axis.
pub fn primary_positions<T: Scalar>(mu: T, frame: Frame) -> (T, T) {
    match frame {
        Frame::Original => (T::one() - mu, -mu),
        Frame::Centered => (c(0.5), c(-0.5)),
    }
}

struct Distances<T> {
    de: [T; 2],
    dm: [T; 2],
    re: T,
    rm: T,
}

fn distances<T: Scalar>(o: &PhaseState<T>, mu: T) -> Result<Distances<T>> {
    let de = [o.q1 - (T::one() - mu), o.q2];
    let dm = [o.q1 + mu, o.q2];
    let re2 = de[0] * de[0] + de[1] * de[1];
    let rm2 = dm[0] * dm[0] + dm[1] * dm[1];
    if mu != T::zero() && re2 == T::zero() {
        return Err(Error::CollisionSingularity("Earth"));
    }
    if mu != T::one() && rm2 == T::zero() {
        return Err(Error::CollisionSingularity("Moon"));
    }
    Ok(Distances { de, dm, re: re2.sqrt(), rm: rm2.sqrt() })
}

/// `H = |p|^2/2 + p1 q2 - p2 q1 - mu/|q - qE| - (1 - mu)/|q - qM|`.
///
/// A primary with zero mass contributes nothing, so `mu = 0` and `mu = 1`
/// are evaluable everywhere except at the massive primary.
pub fn evaluate_h<T: Scalar>(state: PhaseState<T>, mu: T, frame: Frame) -> Result<T> {
    if !state.all_finite() || !mu.value().is_finite() {
        return Err(Error::NonFiniteInput);
    }
    let o = to_original(state, mu, frame);
    let d = distances(&o, mu)?;
    let mut h = c::<T>(0.5) * (o.p1 * o.p1 + o.p2 * o.p2) + o.p1 * o.q2 - o.p2 * o.q1;
    if mu != T::zero() {
        h -= mu / d.re;
    }
    let mm = T::one() - mu;
    if mm != T::zero() {
        h -= mm / d.rm;
    }
    Ok(h)
}

/// `(dH/dq1, dH/dq2, dH/dp1, dH/dp2)`; identical in both frames.
pub fn gradient_h<T: Scalar>(state: PhaseState<T>, mu: T, frame: Frame) -> Result<[T; 4]> {
    if !state.all_finite() {
        return Err(Error::NonFiniteInput);
    }
    let o = to_original(state, mu, frame);
    let d = distances(&o, mu)?;
    let mut g = [-o.p2, o.p1, o.p1 + o.q2, o.p2 - o.q1];
    if mu != T::zero() {
        let k = mu / (d.re * d.re * d.re);
        g[0] += k * d.de[0];
        g[1] += k * d.de[1];
    }
    let mm = T::one() - mu;
    if mm != T::zero() {
        let k = mm / (d.rm * d.rm * d.rm);
        g[0] += k * d.dm[0];
        g[1] += k * d.dm[1];
    }
    Ok(g)
}

/// `X_H = (dH/dp, -dH/dq)` ordered as `(q1', q2', p1', p2')`.
pub fn hamiltonian_vector_field<T: Scalar>(
    state: PhaseState<T>,
    mu: T,
    frame: Frame,
) -> Result<[T; 4]> {
    let g = gradient_h(state, mu, frame)?;
    Ok([g[2], g[3], -g[0], -g[1]])
}

pub fn rho<T: Scalar>(s: PhaseState<T>) -> PhaseState<T> {
    PhaseState { q1: s.q1, q2: -s.q2, p1: -s.p1, p2: s.p2 }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FixComponent {
    LeftOfMoon,
    Between,
    RightOfEarth,
    NotFixed,
}

impl std::fmt::Display for FixComponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Debug::fmt(self, f)
    }
}

/// Classifies a point of `Fix(rho) = {q2 = 0, p1 = 0}` by the side of the
/// primaries it lies on. `tol` loosens the fixed-locus test (0 for exact).
pub fn fix_component<T: Real>(state: PhaseState<T>, mu: T, frame: Frame, tol: T) -> FixComponent {
    if state.q2.abs() > tol || state.p1.abs() > tol {
        return FixComponent::NotFixed;
    }
    let (xe, xm) = primary_positions(mu, frame);
    if state.q1 > xe {
        FixComponent::RightOfEarth
    } else if state.q1 < xm {
        FixComponent::LeftOfMoon
    } else if state.q1 > xm && state.q1 < xe {
        FixComponent::Between
    } else {
        FixComponent::NotFixed
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagrangeData<T> {
    /// L1..L5 with equilibrium momenta.
    pub points: [PhaseState<T>; 5],
    pub values: [T; 5],
    /// Index pairs `(i, j)` whose critical values agree to 1e-12.
    pub ties: Vec<(usize, usize)>,
}

/// Force along the q1-axis: `dU/dq1` with `U = -|q|^2/2 - mu/rE - (1-mu)/rM`,
/// negated, in the Original frame with `q2 = 0`.
fn axis_force<T: Real>(x: T, mu: T) -> (T, T) {
    let (xe, xm) = (T::one() - mu, -mu);
    let (a, b) = (x - xe, x - xm);
    let (ra, rb) = (a.abs(), b.abs());
    let mm = T::one() - mu;
    let f = -x + mu * a / (ra * ra * ra) + mm * b / (rb * rb * rb);
    let df = -T::one() - c::<T>(2.0) * mu / (ra * ra * ra) - c::<T>(2.0) * mm / (rb * rb * rb);
    (f, df)
}

/// Safeguarded Newton on a decreasing function bracketed by `lo < hi`.
fn solve_bracketed<T: Real>(mut lo: T, mut hi: T, mu: T) -> Result<T> {
    let flo = axis_force(lo, mu).0;
    let fhi = axis_force(hi, mu).0;
    if !(flo > T::zero() && fhi < T::zero()) {
        return Err(Error::ConvergenceFailure("collinear bracket has no sign change".into()));
    }
    let mut x = c::<T>(0.5) * (lo + hi);
    for _ in 0..400 {
        let (f, df) = axis_force(x, mu);
        if f == T::zero() {
            return Ok(x);
        }
        if f > T::zero() {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - f / df;
        let next = if newton > lo && newton < hi { newton } else { c::<T>(0.5) * (lo + hi) };
        if (next - x).abs() <= c::<T>(4.0) * T::epsilon() * x.abs().max(T::one()) {
            let (fn_, _) = axis_force(next, mu);
            return Ok(if fn_.abs() < f.abs() { next } else { x });
        }
        x = next;
        if hi - lo <= c::<T>(2.0) * T::epsilon() * x.abs().max(T::one()) {
            return Ok(x);
        }
    }
    Err(Error::ConvergenceFailure("collinear Newton iteration budget exhausted".into()))
}

/// Shrinks `eps` until the bracket endpoint next to a primary has the sign of
/// the nearby pole.
fn near_pole<T: Real>(pole: T, side: T, mu: T, want_positive: bool) -> Result<T> {
    let mut eps = c::<T>(1e-2);
    for _ in 0..200 {
        let x = pole + side * eps;
        let f = axis_force(x, mu).0;
        if (f > T::zero()) == want_positive && f != T::zero() {
            return Ok(x);
        }
        eps *= c(0.5);
    }
    Err(Error::ConvergenceFailure("could not bracket collinear point".into()))
}

fn equilibrium<T: Real>(q1o: T, q2o: T, mu: T, frame: Frame) -> PhaseState<T> {
    to_frame(PhaseState { q1: q1o, q2: q2o, p1: -q2o, p2: q1o }, mu, frame)
}

/// Planar gradient of the effective potential (Original frame).
fn potential_gradient<T: Real>(x: T, y: T, mu: T) -> [T; 2] {
    let s = PhaseState { q1: x, q2: y, p1: -y, p2: x };
    let g = gradient_h(s, mu, Frame::Original).expect("equilateral point is regular");
    [g[0], g[1]]
}

fn refine_triangular<T: Real>(mut x: T, mut y: T, mu: T) -> Result<(T, T)> {
    let h = c::<T>(1e-6);
    for _ in 0..20 {
        let g = potential_gradient(x, y, mu);
        if g[0].abs().max(g[1].abs()) <= c::<T>(4.0) * T::epsilon() {
            break;
        }
        let gx = potential_gradient(x + h, y, mu);
        let gxm = potential_gradient(x - h, y, mu);
        let gy = potential_gradient(x, y + h, mu);
        let gym = potential_gradient(x, y - h, mu);
        let two_h = h + h;
        let j = [
            [(gx[0] - gxm[0]) / two_h, (gy[0] - gym[0]) / two_h],
            [(gx[1] - gxm[1]) / two_h, (gy[1] - gym[1]) / two_h],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == T::zero() {
            return Err(Error::ConvergenceFailure("singular Hessian at triangular point".into()));
        }
        let dx = (j[1][1] * g[0] - j[0][1] * g[1]) / det;
        let dy = (j[0][0] * g[1] - j[1][0] * g[0]) / det;
        let (nx, ny) = (x - dx, y - dy);
        let gn = potential_gradient(nx, ny, mu);
        if gn[0].abs().max(gn[1].abs()) >= g[0].abs().max(g[1].abs()) {
            break;
        }
        x = nx;
        y = ny;
    }
    Ok((x, y))
}

pub fn lagrange_points<T: Real>(mu: T, frame: Frame) -> Result<LagrangeData<T>> {
    if !(mu > T::zero() && mu < T::one()) {
        return Err(Error::Precondition("lagrange_points requires 0 < mu < 1".into()));
    }
    let (xe, xm) = (T::one() - mu, -mu);
    let two = c::<T>(2.0);
    let between = solve_bracketed(
        near_pole(xm, T::one(), mu, true)?,
        near_pole(xe, -T::one(), mu, false)?,
        mu,
    )?;
    let right = solve_bracketed(near_pole(xe, T::one(), mu, true)?, xe + two, mu)?;
    let left = solve_bracketed(xm - two, near_pole(xm, -T::one(), mu, false)?, mu)?;

    let mut collinear: Vec<(T, PhaseState<T>)> = [between, right, left]
        .iter()
        .map(|&x| {
            let p = equilibrium(x, T::zero(), mu, frame);
            (evaluate_h(p, mu, frame).expect("collinear point is regular"), p)
        })
        .collect();
    // Stable in the tie mu = 1/2: the Earth-side point comes first.
    collinear.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite critical values"));

    let half = c::<T>(0.5);
    let h3 = c::<T>(3.0).sqrt() * half;
    let (x4, y4) = refine_triangular(half - mu, h3, mu)?;
    let (x5, y5) = refine_triangular(half - mu, -h3, mu)?;
    let l4 = equilibrium(x4, y4, mu, frame);
    let l5 = equilibrium(x5, y5, mu, frame);

    let points = [collinear[0].1, collinear[1].1, collinear[2].1, l4, l5];
    let mut values = [T::zero(); 5];
    for (v, p) in values.iter_mut().zip(points.iter()) {
        *v = evaluate_h(*p, mu, frame)?;
    }
    let mut ties = Vec::new();
    for i in 0..5 {
        for j in (i + 1)..5 {
            if (values[i] - values[j]).abs() <= c(1e-12) {
                ties.push((i, j));
            }
        }
    }
    Ok(LagrangeData { points, values, ties })
}

/// `H(L1)`, extended continuously to `mu in {0, 1}` where the collinear point
/// merges with the massless primary and the critical value tends to `-3/2`.
pub fn first_critical_value<T: Real>(mu: T) -> Result<T> {
    if mu == T::zero() || mu == T::one() {
        return Ok(c(-1.5));
    }
    Ok(lagrange_points(mu, Frame::Original)?.values[0])
}
