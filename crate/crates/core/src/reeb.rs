//! Reeb dynamics of `alpha = cos(theta) d eta + sin^2(theta) d phi` on
//! `S^1 x S^2`, chords between meridians, and a crossing-form calculator for
//! the Robbin–Salamon index of paths of symplectic matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{c, Real};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct S1S2State<T> {
    pub eta: T,
    pub theta: T,
    pub phi: T,
}

fn wrap<T: Real>(a: T) -> T {
    let tau = T::TAU();
    let r = a - (a / tau).floor() * tau;
    if r >= tau {
        r - tau
    } else {
        r
    }
}

impl<T: Real> S1S2State<T> {
    /// Canonical ranges `eta, phi in [0, 2 pi)`, `theta in [0, pi]`, and
    /// `phi = 0` at the poles.
    pub fn normalized(self) -> Self {
        let mut theta = wrap(self.theta);
        let mut phi = self.phi;
        if theta > T::PI() {
            theta = T::TAU() - theta;
            phi += T::PI();
        }
        let phi = if theta == T::zero() || theta == T::PI() { T::zero() } else { wrap(phi) };
        S1S2State { eta: wrap(self.eta), theta, phi }
    }
}

/// Components `(d eta, d theta, d phi)` of the Reeb field.
pub fn reeb_field<T: Real>(s: S1S2State<T>) -> [T; 3] {
    let ct = s.theta.cos();
    let den = T::one() + ct * ct;
    [c::<T>(2.0) * ct / den, T::zero(), T::one() / den]
}

pub fn contact_form<T: Real>(s: S1S2State<T>, v: [T; 3]) -> T {
    let (ct, st) = (s.theta.cos(), s.theta.sin());
    ct * v[0] + st * st * v[2]
}

/// Closed-form flow; angles are left unreduced so the flow property holds
/// exactly.
pub fn reeb_flow<T: Real>(t: T, s: S1S2State<T>) -> S1S2State<T> {
    let r = reeb_field(s);
    S1S2State { eta: s.eta + r[0] * t, theta: s.theta, phi: s.phi + r[2] * t }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChordFamily {
    /// Equatorial chord starting at `phi = 0`.
    G1,
    /// Equatorial chord starting at `phi = pi`.
    G2,
    /// Chord at `cos(theta) = pi m / A`, nonzero eta-winding `m`.
    Tilted,
    NorthPole,
    SouthPole,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Homotopy {
    TrivialOnly,
    All,
}

/// Exact half-integer, stored as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfInteger(pub i64);

impl HalfInteger {
    pub fn twice(self) -> i64 {
        self.0
    }

    /// Reduced fraction `(num, den)` with `den` in `{1, 2}`.
    pub fn fraction(self) -> (i64, i64) {
        if self.0 % 2 == 0 {
            (self.0 / 2, 1)
        } else {
            (self.0, 2)
        }
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

impl std::fmt::Display for HalfInteger {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.fraction() {
            (n, 1) => write!(f, "{n}"),
            (n, d) => write!(f, "{n}/{d}"),
        }
    }
}

impl Serialize for HalfInteger {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let (num, den) = self.fraction();
        let mut st = s.serialize_struct("HalfInteger", 2)?;
        st.serialize_field("num", &num)?;
        st.serialize_field("den", &den)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for HalfInteger {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Frac {
            num: i64,
            den: i64,
        }
        let f = Frac::deserialize(d)?;
        match f.den {
            1 => Ok(HalfInteger(2 * f.num)),
            2 => Ok(HalfInteger(f.num)),
            _ => Err(serde::de::Error::custom("denominator must be 1 or 2")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chord<T> {
    pub family: ChordFamily,
    /// Position in the family ordered by duration, starting at 1.
    pub k: u32,
    pub duration: T,
    /// Winding of the eta-coordinate, zero for the trivial homotopy class.
    pub eta_winding: i64,
    pub start: S1S2State<T>,
    pub end: S1S2State<T>,
    /// Only computed for equatorial chords returning to the start meridian.
    pub index: Option<HalfInteger>,
}

/// Chords of the Reeb flow from the meridian `{eta = 0, phi in {0, pi}}` to
/// the meridian at azimuth `phi0`, with duration at most `action_bound`.
pub fn enumerate_chords<T: Real>(phi0: T, action_bound: T, homotopy: Homotopy) -> Result<Vec<Chord<T>>> {
    if !(action_bound > T::zero()) {
        return Err(Error::Precondition("action bound must be positive".into()));
    }
    if !(phi0 >= T::zero() && phi0 < T::PI()) {
        return Err(Error::Precondition("phi0 must lie in [0, pi)".into()));
    }
    let pi = T::PI();
    let half_pi = pi * c(0.5);
    let mut out = Vec::new();
    // Azimuth displacements of equatorial chords: phi0 + n pi > 0.
    let mut displacements = Vec::new();
    let mut n = if phi0 == T::zero() { 1 } else { 0 };
    loop {
        let a = phi0 + pi * T::from_f64(n as f64);
        if a > action_bound {
            break;
        }
        displacements.push(a);
        n += 1;
    }
    for (family, phi_s) in [(ChordFamily::G1, T::zero()), (ChordFamily::G2, pi)] {
        for (i, &t) in displacements.iter().enumerate() {
            let start = S1S2State { eta: T::zero(), theta: half_pi, phi: phi_s };
            let index = if phi0 == T::zero() {
                Some(robbin_salamon_index(&psi_path(t, family)?)?)
            } else {
                None
            };
            out.push(Chord {
                family,
                k: i as u32 + 1,
                duration: t,
                eta_winding: 0,
                start,
                end: reeb_flow(t, start).normalized(),
                index,
            });
        }
    }
    if homotopy == Homotopy::All {
        // Tilted chords: 2 c t / (1 + c^2) = 2 pi m and t / (1 + c^2) = A
        // give c = pi m / A and t = A (1 + c^2).
        for (phi_s, _) in [(T::zero(), 0), (pi, 1)] {
            let mut k = 0;
            let mut n = if phi0 == T::zero() { 1 } else { 0 };
            loop {
                let a = phi0 + pi * T::from_f64(n as f64);
                if a > action_bound {
                    break;
                }
                let mmax = (a / pi).floor().value() as i64;
                for m in (-mmax..=mmax).filter(|&m| m != 0) {
                    let cth = pi * T::from_f64(m as f64) / a;
                    if cth.abs() >= T::one() {
                        continue;
                    }
                    let t = a * (T::one() + cth * cth);
                    if t > action_bound {
                        continue;
                    }
                    k += 1;
                    let start = S1S2State { eta: T::zero(), theta: cth.acos(), phi: phi_s };
                    out.push(Chord {
                        family: ChordFamily::Tilted,
                        k,
                        duration: t,
                        eta_winding: m,
                        start,
                        end: reeb_flow(t, start).normalized(),
                        index: None,
                    });
                }
                n += 1;
            }
        }
        // The poles lie on every meridian; eta advances at unit speed there.
        for (family, theta, sign) in
            [(ChordFamily::NorthPole, T::zero(), 1i64), (ChordFamily::SouthPole, pi, -1i64)]
        {
            let mut m = 1;
            while T::TAU() * T::from_f64(m as f64) <= action_bound {
                let t = T::TAU() * T::from_f64(m as f64);
                let start = S1S2State { eta: T::zero(), theta, phi: T::zero() };
                out.push(Chord {
                    family,
                    k: m as u32,
                    duration: t,
                    eta_winding: sign * m,
                    start,
                    end: reeb_flow(t, start).normalized(),
                    index: None,
                });
                m += 1;
            }
        }
    }
    out.sort_by(|a, b| {
        a.duration
            .partial_cmp(&b.duration)
            .expect("finite durations")
            .then((a.family as u8).cmp(&(b.family as u8)))
            .then(a.eta_winding.cmp(&b.eta_winding))
    });
    Ok(out)
}

pub type Mat2<T> = [[T; 2]; 2];
pub type Mat4<T> = [[T; 4]; 4];

/// Linearized Reeb flow along an equatorial chord in the frame
/// `{d/dx, d/dz, d/dy, d/d eta}` at the chord's starting point.
pub fn linearized_flow<T: Real>(t: T, family: ChordFamily) -> Result<Mat4<T>> {
    let (ct, st) = (t.cos(), t.sin());
    let (o, l) = (T::zero(), T::one());
    let psi = [[ct, o, -st, o], [o, l, o, o], [st, o, ct, o], [o, c::<T>(2.0) * t, o, l]];
    match family {
        ChordFamily::G1 => Ok(psi),
        ChordFamily::G2 => {
            // Conjugate by the rotation by pi about the z-axis, which carries
            // the start of G1 to the start of G2.
            let r = [-l, l, -l, l];
            let mut m = psi;
            for i in 0..4 {
                for j in 0..4 {
                    m[i][j] = r[i] * psi[i][j] * r[j];
                }
            }
            Ok(m)
        }
        _ => Err(Error::UnsupportedChord),
    }
}

type PathFn<'a, T> = Box<dyn Fn(T) -> Mat4<T> + Send + Sync + 'a>;
type DerivFn<'a, T> = Box<dyn Fn(T) -> Mat2<T> + Send + Sync + 'a>;

/// A path of 4x4 matrices symplectic for `[[0, P], [-P, 0]]`, given as a
/// function of time so crossings can be located to high accuracy.
pub struct SymplecticPath<'a, T> {
    pub t0: T,
    pub t1: T,
    pub p: Mat2<T>,
    pub eval: PathFn<'a, T>,
    /// Closed-form derivative of the lower-left block, when available.
    pub c_dot: Option<DerivFn<'a, T>>,
    pub samples_per_pi: usize,
}

impl<'a, T: Real> SymplecticPath<'a, T> {
    pub fn new(t0: T, t1: T, p: Mat2<T>, eval: impl Fn(T) -> Mat4<T> + Send + Sync + 'a) -> Self {
        SymplecticPath { t0, t1, p, eval: Box::new(eval), c_dot: None, samples_per_pi: 256 }
    }

    pub fn with_c_dot(mut self, f: impl Fn(T) -> Mat2<T> + Send + Sync + 'a) -> Self {
        self.c_dot = Some(Box::new(f));
        self
    }

    pub fn sample_times(&self) -> Vec<T> {
        let span = self.t1 - self.t0;
        let n = ((span / T::PI()).value() * self.samples_per_pi as f64).ceil().max(16.0) as usize;
        (0..=n)
            .map(|i| if i == n { self.t1 } else { self.t0 + span * T::from_f64(i as f64 / n as f64) })
            .collect()
    }

    pub fn blocks(&self, t: T) -> [Mat2<T>; 4] {
        let m = (self.eval)(t);
        let blk = |r: usize, s: usize| [[m[r][s], m[r][s + 1]], [m[r + 1][s], m[r + 1][s + 1]]];
        [blk(0, 0), blk(0, 2), blk(2, 0), blk(2, 2)]
    }
}

/// `Psi` over `[0, t1]` with `P = diag(2, 1)` and its closed-form `C'`.
pub fn psi_path<'a, T: Real>(t1: T, family: ChordFamily) -> Result<SymplecticPath<'a, T>> {
    linearized_flow(T::zero(), family)?;
    let p = [[c::<T>(2.0), T::zero()], [T::zero(), T::one()]];
    Ok(SymplecticPath::new(T::zero(), t1, p, move |t| linearized_flow(t, family).expect("equatorial"))
        .with_c_dot(|t| [[t.cos(), T::zero()], [T::zero(), c::<T>(2.0)]]))
}

fn det2<T: Real>(m: &Mat2<T>) -> T {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn mul2<T: Real>(a: &Mat2<T>, b: &Mat2<T>) -> Mat2<T> {
    let mut r = [[T::zero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

fn transpose2<T: Real>(a: &Mat2<T>) -> Mat2<T> {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

/// Eigenvalues (ascending) and eigenvectors of a symmetric 2x2 matrix.
fn sym_eigen2<T: Real>(m: &Mat2<T>) -> ([T; 2], [[T; 2]; 2]) {
    let (a, b, d) = (m[0][0], c::<T>(0.5) * (m[0][1] + m[1][0]), m[1][1]);
    let mean = c::<T>(0.5) * (a + d);
    let rad = (c::<T>(0.5) * (a - d)).hypot(b);
    let (l0, l1) = (mean - rad, mean + rad);
    if b == T::zero() {
        return if a <= d {
            ([a, d], [[T::one(), T::zero()], [T::zero(), T::one()]])
        } else {
            ([d, a], [[T::zero(), T::one()], [T::one(), T::zero()]])
        };
    }
    let v0 = {
        // (A - l0) v = 0 using the better-conditioned row.
        let (x, y) = if (a - l0).abs() > (d - l0).abs() { (-b, a - l0) } else { (d - l0, -b) };
        let n = x.hypot(y);
        [x / n, y / n]
    };
    let v1 = [-v0[1], v0[0]];
    ([l0, l1], [v0, v1])
}

fn smallest_singular<T: Real>(m: &Mat2<T>) -> T {
    let (e, _) = sym_eigen2(&mul2(&transpose2(m), m));
    e[0].max(T::zero()).sqrt()
}

fn symplectic_defect<T: Real>(m: &Mat4<T>, p: &Mat2<T>) -> T {
    let mut j = [[T::zero(); 4]; 4];
    for i in 0..2 {
        for k in 0..2 {
            j[i][2 + k] = p[i][k];
            j[2 + i][k] = -p[i][k];
        }
    }
    let mut worst = T::zero();
    for r in 0..4 {
        for s in 0..4 {
            let mut acc = T::zero();
            for a in 0..4 {
                for b in 0..4 {
                    acc += m[a][r] * j[a][b] * m[b][s];
                }
            }
            worst = worst.max((acc - j[r][s]).abs());
        }
    }
    worst
}

fn c_derivative<T: Real>(path: &SymplecticPath<'_, T>, t: T) -> Mat2<T> {
    if let Some(f) = &path.c_dot {
        return f(t);
    }
    let h = c::<T>(1e-6) * (T::one() + t.abs());
    let cb = |s: T| path.blocks(s)[2];
    let (a, b, w) = if t - h < path.t0 {
        // Second-order one-sided difference.
        let (c0, c1, c2) = (cb(t), cb(t + h), cb(t + h + h));
        let mut r = [[T::zero(); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                r[i][j] = (-c::<T>(3.0) * c0[i][j] + c::<T>(4.0) * c1[i][j] - c2[i][j]) / (h + h);
            }
        }
        return r;
    } else if t + h > path.t1 {
        let (c0, c1, c2) = (cb(t), cb(t - h), cb(t - h - h));
        let mut r = [[T::zero(); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                r[i][j] = (c::<T>(3.0) * c0[i][j] - c::<T>(4.0) * c1[i][j] + c2[i][j]) / (h + h);
            }
        }
        return r;
    } else {
        (cb(t + h), cb(t - h), h + h)
    };
    let mut r = [[T::zero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = (a[i][j] - b[i][j]) / w;
        }
    }
    r
}

/// Signature of the crossing form `v -> <A v, P C' v>` on `ker C(t)`.
fn crossing_signature<T: Real>(path: &SymplecticPath<'_, T>, t: T, ker_tol: T) -> Result<i64> {
    let [a, _, cm, _] = path.blocks(t);
    let cd = c_derivative(path, t);
    let (ev, vecs) = sym_eigen2(&mul2(&transpose2(&cm), &cm));
    let basis: Vec<[T; 2]> = if ev[1].max(T::zero()).sqrt() <= ker_tol {
        vec![[T::one(), T::zero()], [T::zero(), T::one()]]
    } else {
        vec![vecs[0]]
    };
    let pc = mul2(&path.p, &cd);
    let apply = |m: &Mat2<T>, v: [T; 2]| [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]];
    let form = |u: [T; 2], v: [T; 2]| {
        let au = apply(&a, u);
        let pv = apply(&pc, v);
        au[0] * pv[0] + au[1] * pv[1]
    };
    let eigen: Vec<T> = if basis.len() == 1 {
        vec![form(basis[0], basis[0])]
    } else {
        let g = [
            [form(basis[0], basis[0]), c::<T>(0.5) * (form(basis[0], basis[1]) + form(basis[1], basis[0]))],
            [c::<T>(0.5) * (form(basis[0], basis[1]) + form(basis[1], basis[0])), form(basis[1], basis[1])],
        ];
        sym_eigen2(&g).0.to_vec()
    };
    let mut sig = 0;
    for e in eigen {
        if e.abs() < c(1e-9) {
            return Err(Error::DegenerateCrossing { t: t.value(), eigenvalue: e.value() });
        }
        sig += if e > T::zero() { 1 } else { -1 };
    }
    Ok(sig)
}

/// Robbin–Salamon index with respect to the vertical Lagrangian, endpoint
/// crossings weighted by one half.
pub fn robbin_salamon_index<T: Real>(path: &SymplecticPath<'_, T>) -> Result<HalfInteger> {
    let times = path.sample_times();
    let mut cs = Vec::with_capacity(times.len());
    let mut dets = Vec::with_capacity(times.len());
    let mut smin = Vec::with_capacity(times.len());
    let mut cmax = T::zero();
    let mut first: Option<Mat4<T>> = None;
    let mut constant = true;
    for &t in &times {
        let m = (path.eval)(t);
        let defect = symplectic_defect(&m, &path.p);
        let scale = m.iter().flatten().fold(T::one(), |a, &b| a.max(b.abs()));
        if defect > c::<T>(1e-10) * scale * scale {
            return Err(Error::IrregularPath { t: t.value(), defect: defect.value() });
        }
        match &first {
            None => first = Some(m),
            Some(f) => {
                if f.iter().flatten().zip(m.iter().flatten()).any(|(a, b)| (*a - *b).abs() > c(1e-14)) {
                    constant = false;
                }
            }
        }
        let cm = path.blocks(t)[2];
        cmax = cmax.max(cm.iter().flatten().fold(T::zero(), |a, &b| a.max(b.abs())));
        dets.push(det2(&cm));
        smin.push(smallest_singular(&cm));
        cs.push(cm);
    }
    if constant {
        // A constant path has a vanishing crossing form everywhere, hence
        // index zero.
        return Ok(HalfInteger(0));
    }
    let ker_tol = c::<T>(1e-9) * (T::one() + cmax);
    let n = times.len();
    let bisect_tol = c::<T>(1e-12);
    let det_at = |t: T| det2(&path.blocks(t)[2]);
    let smin_at = |t: T| smallest_singular(&path.blocks(t)[2]);

    let start_crossing = smin[0] <= ker_tol;
    let end_crossing = smin[n - 1] <= ker_tol;
    let mut interior: Vec<T> = Vec::new();
    let merge_tol = c::<T>(1e-9);
    let near_end = |t: T| {
        (start_crossing && (t - path.t0).abs() <= merge_tol * (T::one() + path.t0.abs()))
            || (end_crossing && (t - path.t1).abs() <= merge_tol * (T::one() + path.t1.abs()))
    };
    let push = |v: &mut Vec<T>, t: T| {
        if near_end(t) || t <= path.t0 || t >= path.t1 {
            return;
        }
        if v.iter().any(|&u| (u - t).abs() <= merge_tol * (T::one() + t.abs())) {
            return;
        }
        v.push(t);
    };

    for i in 0..n - 1 {
        let (d0, d1) = (dets[i], dets[i + 1]);
        if d0 == T::zero() || d1 == T::zero() || (d0 > T::zero()) != (d1 > T::zero()) {
            if (i == 0 && start_crossing && d1 != T::zero()) || (i + 1 == n - 1 && end_crossing && d0 != T::zero()) {
                // Sign change attributable to an endpoint crossing.
                if (i == 0 && smin[1] > ker_tol) || (i + 1 == n - 1 && smin[n - 2] > ker_tol) {
                    continue;
                }
            }
            if d0 == T::zero() && d1 == T::zero() {
                continue;
            }
            let (mut lo, mut hi) = (times[i], times[i + 1]);
            let lo_pos = d0 > T::zero();
            if d0 == T::zero() {
                push(&mut interior, lo);
                continue;
            }
            if d1 == T::zero() {
                push(&mut interior, hi);
                continue;
            }
            while hi - lo > bisect_tol * (T::one() + lo.abs()) {
                let mid = c::<T>(0.5) * (lo + hi);
                if (det_at(mid) > T::zero()) == lo_pos {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            push(&mut interior, c::<T>(0.5) * (lo + hi));
        }
    }
    // Even-order touchings: local minima of the smallest singular value.
    for i in 1..n - 1 {
        if smin[i] <= smin[i - 1] && smin[i] <= smin[i + 1] && smin[i] < c::<T>(1e-2) * (T::one() + cmax) {
            let (mut a, mut b) = (times[i - 1], times[i + 1]);
            let g = c::<T>(0.5) * (c::<T>(5.0).sqrt() - T::one());
            let mut x1 = b - g * (b - a);
            let mut x2 = a + g * (b - a);
            let (mut f1, mut f2) = (smin_at(x1), smin_at(x2));
            while b - a > bisect_tol * (T::one() + a.abs()) {
                if f1 < f2 {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - g * (b - a);
                    f1 = smin_at(x1);
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + g * (b - a);
                    f2 = smin_at(x2);
                }
            }
            let t = c::<T>(0.5) * (a + b);
            if smin_at(t) <= ker_tol {
                push(&mut interior, t);
            }
        }
    }
    let _ = cs;
    let mut twice = 0i64;
    if start_crossing {
        twice += crossing_signature(path, path.t0, ker_tol)?;
    }
    if end_crossing {
        twice += crossing_signature(path, path.t1, ker_tol)?;
    }
    for &t in &interior {
        twice += 2 * crossing_signature(path, t, ker_tol)?;
    }
    Ok(HalfInteger(twice))
}
