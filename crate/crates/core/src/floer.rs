//! Finite GF(2) chain complexes, the forced Rabinowitz Floer complex of the
//! unit-sphere bundle over the meridian Legendrian, its free involution and the
//! equivariant quotient.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense matrix over GF(2) with bit-packed rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct F2Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Vec<u64>>,
}

impl F2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        F2Matrix { rows, cols, data: vec![vec![0; cols.div_ceil(64)]; rows] }
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, true);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r][c / 64] >> (c % 64) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        let bit = 1u64 << (c % 64);
        if v {
            self.data[r][c / 64] |= bit;
        } else {
            self.data[r][c / 64] &= !bit;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().flatten().all(|&w| w == 0)
    }

    pub fn mul(&self, other: &F2Matrix) -> F2Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = F2Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                if self.get(r, k) {
                    for (o, x) in out.data[r].iter_mut().zip(&other.data[k]) {
                        *o ^= x;
                    }
                }
            }
        }
        out
    }

    pub fn rank(&self) -> usize {
        let mut rows = self.data.clone();
        let mut rank = 0;
        for c in 0..self.cols {
            let (w, b) = (c / 64, 1u64 << (c % 64));
            let Some(p) = (rank..rows.len()).find(|&r| rows[r][w] & b != 0) else { continue };
            rows.swap(rank, p);
            let pivot = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row[w] & b != 0 {
                    for (x, y) in row.iter_mut().zip(&pivot) {
                        *x ^= y;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    /// Column indices of the nonzero entries, row by row.
    pub fn sparse_rows(&self) -> Vec<Vec<usize>> {
        (0..self.rows).map(|r| (0..self.cols).filter(|&c| self.get(r, c)).collect()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeneratorKind {
    Chord,
    ConstMax,
    ConstMin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub label: String,
    pub degree: i32,
    pub action: f64,
    pub kind: GeneratorKind,
}

/// Complex truncated to a degree window. `boundary[i]` is the matrix of
/// `C_i -> C_{i-1}` with rows indexed by degree `i-1` generators.
#[derive(Clone, Debug, PartialEq)]
pub struct F2Complex {
    pub window: (i32, i32),
    pub generators: Vec<Generator>,
    pub boundary: BTreeMap<i32, F2Matrix>,
    /// Permutation of `generators`, preserving degree.
    pub involution: Option<Vec<usize>>,
}

impl F2Complex {
    /// Indices into `generators` of the given degree, in order.
    pub fn in_degree(&self, i: i32) -> Vec<usize> {
        (0..self.generators.len()).filter(|&g| self.generators[g].degree == i).collect()
    }

    pub fn dim(&self, i: i32) -> usize {
        self.generators.iter().filter(|g| g.degree == i).count()
    }

    fn boundary_or_zero(&self, i: i32) -> F2Matrix {
        self.boundary.get(&i).cloned().unwrap_or_else(|| F2Matrix::zeros(self.dim(i - 1), self.dim(i)))
    }

    /// Checks `d_{i-1} d_i = 0` throughout.
    pub fn check_boundary(&self) -> Result<()> {
        for i in self.window.0 + 1..=self.window.1 {
            let (hi, lo) = (self.boundary_or_zero(i), self.boundary_or_zero(i - 1));
            if !lo.mul(&hi).is_zero() {
                return Err(Error::BoundaryInconsistency(i));
            }
        }
        Ok(())
    }

    fn permutation_in_degree(&self, inv: &[usize], i: i32) -> F2Matrix {
        let idx = self.in_degree(i);
        let mut m = F2Matrix::zeros(idx.len(), idx.len());
        for (col, &g) in idx.iter().enumerate() {
            let row = idx.iter().position(|&h| h == inv[g]).expect("degree-preserving");
            m.set(row, col, true);
        }
        m
    }

    pub fn dump(&self) -> ComplexDump {
        ComplexDump {
            window: self.window,
            generators: self.generators.clone(),
            boundary: self
                .boundary
                .iter()
                .map(|(&degree, m)| BoundaryDump { degree, rows: m.sparse_rows() })
                .collect(),
            involution: self.involution.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryDump {
    pub degree: i32,
    pub rows: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexDump {
    pub window: (i32, i32),
    pub generators: Vec<Generator>,
    pub boundary: Vec<BoundaryDump>,
    pub involution: Option<Vec<usize>>,
}

/// Chain groups of the chord complex: two chords per degree outside
/// `{0, 1}`, two maxima in degree 1 and two minima in degree 0.
pub fn build_rfc(window: (i32, i32)) -> Result<F2Complex> {
    let (lo, hi) = window;
    if !(lo <= 0 && hi >= 1) {
        return Err(Error::InvalidWindow(lo, hi));
    }
    let pi = std::f64::consts::PI;
    let mut generators = Vec::new();
    let mut involution = Vec::new();
    for i in lo..=hi {
        let pair = match i {
            0 => [
                Generator { label: "const-1".into(), degree: 0, action: 0.0, kind: GeneratorKind::ConstMin },
                Generator { label: "const-2".into(), degree: 0, action: 0.0, kind: GeneratorKind::ConstMin },
            ],
            1 => [
                Generator { label: "const+1".into(), degree: 1, action: 0.0, kind: GeneratorKind::ConstMax },
                Generator { label: "const+2".into(), degree: 1, action: 0.0, kind: GeneratorKind::ConstMax },
            ],
            _ => {
                // Chord k sits in degree k + 1; negative chords mirror it.
                let k = if i >= 2 { i - 1 } else { i };
                let tag = if k > 0 { format!("k{k}") } else { format!("k-{}", -k) };
                let action = k as f64 * pi;
                [1, 2].map(|f| Generator {
                    label: format!("g{f}{tag}"),
                    degree: i,
                    action,
                    kind: GeneratorKind::Chord,
                })
            }
        };
        let base = generators.len();
        generators.extend(pair);
        involution.extend([base + 1, base]);
    }
    Ok(F2Complex { window, generators, boundary: BTreeMap::new(), involution: Some(involution) })
}

/// Fills in the boundary forced by acyclicity: each generator maps to the sum
/// of both generators one degree lower.
pub fn forced_boundary(mut complex: F2Complex) -> Result<F2Complex> {
    let (lo, hi) = complex.window;
    complex.boundary.clear();
    for i in lo + 1..=hi {
        let m = F2Matrix::ones(complex.dim(i - 1), complex.dim(i));
        complex.boundary.insert(i, m);
    }
    complex.check_boundary()?;
    Ok(complex)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeRank {
    pub degree: i32,
    pub rank: usize,
    /// False at the two window-boundary degrees, where truncation matters.
    pub reliable: bool,
}

pub fn homology(complex: &F2Complex) -> Vec<DegreeRank> {
    let (lo, hi) = complex.window;
    (lo..=hi)
        .map(|i| {
            let out_rank = complex.boundary.get(&i).map_or(0, F2Matrix::rank);
            let in_rank = complex.boundary.get(&(i + 1)).map_or(0, F2Matrix::rank);
            DegreeRank { degree: i, rank: complex.dim(i) - out_rank - in_rank, reliable: i != lo && i != hi }
        })
        .collect()
}

/// Quotient by a free involution commuting with the boundary; generators of
/// the quotient are the orbit representatives with smaller index.
pub fn equivariant_quotient(complex: &F2Complex) -> Result<F2Complex> {
    let inv = complex.involution.as_ref().ok_or_else(|| Error::NotFree("no involution".into()))?;
    for (g, &h) in inv.iter().enumerate() {
        if h == g {
            return Err(Error::NotFree(complex.generators[g].label.clone()));
        }
        if inv[h] != g || complex.generators[h].degree != complex.generators[g].degree {
            return Err(Error::NotFree(format!("{} is not paired", complex.generators[g].label)));
        }
    }
    let (lo, hi) = complex.window;
    for (&i, d) in &complex.boundary {
        let p_hi = complex.permutation_in_degree(inv, i);
        let p_lo = complex.permutation_in_degree(inv, i - 1);
        if p_lo.mul(d) != d.mul(&p_hi) {
            return Err(Error::NotEquivariant(i));
        }
    }
    let reps: Vec<usize> = (0..complex.generators.len()).filter(|&g| g < inv[g]).collect();
    let generators: Vec<Generator> = reps.iter().map(|&g| complex.generators[g].clone()).collect();
    let mut boundary = BTreeMap::new();
    for (&i, d) in &complex.boundary {
        let src = complex.in_degree(i);
        let dst = complex.in_degree(i - 1);
        let qsrc: Vec<usize> = reps.iter().copied().filter(|&g| complex.generators[g].degree == i).collect();
        let qdst: Vec<usize> = reps.iter().copied().filter(|&g| complex.generators[g].degree == i - 1).collect();
        let mut m = F2Matrix::zeros(qdst.len(), qsrc.len());
        for (c, &a) in qsrc.iter().enumerate() {
            let col = src.iter().position(|&x| x == a).expect("source generator");
            for (r, &b) in qdst.iter().enumerate() {
                let rb = dst.iter().position(|&x| x == b).expect("target generator");
                let rib = dst.iter().position(|&x| x == inv[b]).expect("target partner");
                m.set(r, c, d.get(rb, col) ^ d.get(rib, col));
            }
        }
        boundary.insert(i, m);
    }
    let q = F2Complex { window: (lo, hi), generators, boundary, involution: None };
    q.check_boundary()?;
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    /// Rank as log2 of the number of distinct vectors in the row span.
    fn span_rank(m: &F2Matrix) -> usize {
        let mut seen = HashSet::new();
        for mask in 0u32..(1 << m.rows()) {
            let v: Vec<bool> = (0..m.cols())
                .map(|c| (0..m.rows()).filter(|&r| mask >> r & 1 == 1).fold(false, |a, r| a ^ m.get(r, c)))
                .collect();
            seen.insert(v);
        }
        seen.len().trailing_zeros() as usize
    }

    fn from_bits(rows: usize, cols: usize, bits: &[bool]) -> F2Matrix {
        let mut m = F2Matrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, bits[r * cols + c]);
            }
        }
        m
    }

    #[test]
    fn generator_layout() {
        let c = build_rfc((-3, 4)).unwrap();
        assert_eq!(c.generators.len(), 16);
        for i in -3..=4 {
            assert_eq!(c.dim(i), 2);
        }
        assert!(c.in_degree(1).iter().all(|&g| c.generators[g].kind == GeneratorKind::ConstMax));
        assert!(c.in_degree(0).iter().all(|&g| c.generators[g].kind == GeneratorKind::ConstMin));
        let inv = c.involution.as_ref().unwrap();
        assert!(inv.iter().enumerate().all(|(g, &h)| g != h && inv[h] == g));
        let g = &c.generators[c.in_degree(4)[0]];
        assert_eq!((g.label.as_str(), g.action), ("g1k3", 3.0 * std::f64::consts::PI));
        let g = &c.generators[c.in_degree(-2)[1]];
        assert_eq!((g.label.as_str(), g.action), ("g2k-2", -2.0 * std::f64::consts::PI));
        assert_eq!(build_rfc((1, 4)), Err(Error::InvalidWindow(1, 4)));
        assert_eq!(build_rfc((-2, 0)), Err(Error::InvalidWindow(-2, 0)));
    }

    #[test]
    fn forced_complex_is_acyclic_and_quotient_is_not() {
        let c = forced_boundary(build_rfc((-5, 6)).unwrap()).unwrap();
        assert_eq!(c.boundary[&1].sparse_rows(), vec![vec![0, 1], vec![0, 1]]);
        assert!(c.boundary.values().all(|m| m.rank() == 1));
        for r in homology(&c).into_iter().filter(|r| r.reliable) {
            assert_eq!(r.rank, 0, "degree {}", r.degree);
        }
        let q = equivariant_quotient(&c).unwrap();
        assert!(q.boundary.values().all(F2Matrix::is_zero));
        for r in homology(&q).into_iter().filter(|r| r.reliable) {
            assert_eq!(r.rank, 1, "degree {}", r.degree);
        }
    }

    #[test]
    fn zero_boundary_homology_is_chain_group() {
        let c = build_rfc((-2, 3)).unwrap();
        assert!(homology(&c).iter().all(|r| r.rank == 2));
    }

    #[test]
    fn inconsistent_boundary_detected() {
        let mut c = build_rfc((-1, 2)).unwrap();
        let mut d = F2Matrix::zeros(2, 2);
        d.set(0, 0, true);
        c.boundary.insert(1, d.clone());
        c.boundary.insert(2, d);
        assert_eq!(c.check_boundary(), Err(Error::BoundaryInconsistency(2)));
    }

    #[test]
    fn quotient_errors() {
        let mut c = forced_boundary(build_rfc((-1, 2)).unwrap()).unwrap();
        c.involution = Some((0..c.generators.len()).collect());
        assert!(matches!(equivariant_quotient(&c), Err(Error::NotFree(_))));
        let mut c = build_rfc((-1, 2)).unwrap();
        let mut d = F2Matrix::zeros(2, 2);
        d.set(0, 0, true);
        c.boundary.insert(1, d);
        assert_eq!(equivariant_quotient(&c), Err(Error::NotEquivariant(1)));
    }

    #[test]
    fn window_sizes() {
        for lo in -6..=0 {
            for hi in 1..=7 {
                let c = forced_boundary(build_rfc((lo, hi)).unwrap()).unwrap();
                let q = equivariant_quotient(&c).unwrap();
                for (a, b) in homology(&c).iter().zip(homology(&q)) {
                    if a.reliable {
                        assert_eq!((a.rank, b.rank), (0, 1));
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn rank_matches_span_count(rows in 1usize..7, cols in 1usize..70, seed in any::<u64>()) {
            let bits: Vec<bool> = (0..rows * cols).map(|i| (seed.rotate_left((i % 64) as u32) ^ (i as u64 * 0x9e37_79b9)) & 4 != 0).collect();
            let m = from_bits(rows, cols, &bits);
            prop_assert_eq!(m.rank(), span_rank(&m));
        }

        #[test]
        fn homology_matches_enumeration(a_bits in proptest::collection::vec(any::<bool>(), 12), coeffs in proptest::collection::vec(any::<bool>(), 16)) {
            // C2 -> C1 -> C0 with dims 4, 4, 3; d2 has columns drawn from ker d1.
            let d1 = from_bits(3, 4, &a_bits);
            let vec_of = |mask: u32| (0..4).map(|i| mask >> i & 1 == 1).collect::<Vec<_>>();
            let kernel: Vec<u32> = (0..16u32).filter(|&m| (0..3).all(|r| (0..4).filter(|&c| m >> c & 1 == 1).fold(false, |a, c| a ^ d1.get(r, c)) == false)).collect();
            let mut d2 = F2Matrix::zeros(4, 4);
            for col in 0..4 {
                let mut acc = 0u32;
                for (j, &k) in kernel.iter().enumerate() {
                    if coeffs[(col * 4 + j) % 16] {
                        acc ^= k;
                    }
                }
                for (r, b) in vec_of(acc).into_iter().enumerate() {
                    d2.set(r, col, b);
                }
            }
            let mut gens = Vec::new();
            for (deg, n) in [(0, 3), (1, 4), (2, 4)] {
                for j in 0..n {
                    gens.push(Generator { label: format!("x{deg}{j}"), degree: deg, action: 0.0, kind: GeneratorKind::Chord });
                }
            }
            let c = F2Complex { window: (0, 2), generators: gens, boundary: BTreeMap::from([(1, d1.clone()), (2, d2.clone())]), involution: None };
            prop_assert!(c.check_boundary().is_ok());
            let h1 = homology(&c)[1].rank;
            let image: HashSet<u32> = (0..16u32).map(|m| {
                (0..4).fold(0u32, |acc, r| acc | (((0..4).filter(|&c| m >> c & 1 == 1).fold(false, |a, c| a ^ d2.get(r, c)) as u32) << r))
            }).collect();
            prop_assert_eq!(1usize << h1, kernel.len() / image.len());
        }

        #[test]
        fn forced_complex_is_equivariant(lo in -8i32..=0, hi in 1i32..=9) {
            let c = forced_boundary(build_rfc((lo, hi)).unwrap()).unwrap();
            prop_assert!(equivariant_quotient(&c).is_ok());
        }
    }
}
