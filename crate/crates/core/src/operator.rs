//! Hermitian sparse operators with labeled, weighted bases.
//!
//! An operator `T` that is self-adjoint for a weighted inner product
//! `⟨u, v⟩_W = Σ w_i u_i conj(v_i)` is stored as `S = W^{1/2} T W^{-1/2}`,
//! which is Hermitian in the flat inner product and has the same spectrum.
//! The weights travel with the matrix in its basis labels.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Result, SgError};

#[derive(Clone, Debug, PartialEq)]
pub enum BasisBlock {
    /// Vertex functions of a level graph with mass weights.
    Vertices { level: usize, weights: Vec<f64> },
    /// Edge forms of a level graph with a uniform conductance weight.
    Edges { level: usize, count: usize, weight: f64 },
}

impl BasisBlock {
    pub fn len(&self) -> usize {
        match self {
            BasisBlock::Vertices { weights, .. } => weights.len(),
            BasisBlock::Edges { count, .. } => *count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn weight(&self, i: usize) -> f64 {
        match self {
            BasisBlock::Vertices { weights, .. } => weights[i],
            BasisBlock::Edges { weight, .. } => *weight,
        }
    }

    fn describe(&self) -> String {
        match self {
            BasisBlock::Vertices { level, weights } => {
                format!("vertices(level {level}, {} weighted)", weights.len())
            }
            BasisBlock::Edges {
                level,
                count,
                weight,
            } => format!("edges(level {level}, {count}, weight {weight})"),
        }
    }
}

/// Ordered basis blocks; the vertex block comes first when both are present.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisLabels {
    pub blocks: Vec<BasisBlock>,
}

impl BasisLabels {
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(BasisBlock::len).sum()
    }

    /// Weight of the i-th basis element.
    pub fn weight(&self, mut i: usize) -> f64 {
        for b in &self.blocks {
            if i < b.len() {
                return b.weight(i);
            }
            i -= b.len();
        }
        panic!("basis index out of range")
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.weight(i)).collect()
    }

    pub fn describe(&self) -> String {
        self.blocks
            .iter()
            .map(BasisBlock::describe)
            .collect::<Vec<_>>()
            .join(" ⊕ ")
    }
}

/// Accumulates entries of a nominally Hermitian matrix.
#[derive(Debug)]
pub struct HermitianBuilder {
    dim: usize,
    entries: HashMap<(usize, usize), Complex64>,
}

impl HermitianBuilder {
    pub fn new(dim: usize) -> Self {
        HermitianBuilder {
            dim,
            entries: HashMap::new(),
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: Complex64) {
        debug_assert!(i < self.dim && j < self.dim);
        *self.entries.entry((i, j)).or_default() += v;
    }

    /// Freezes into CSR form. Each off-diagonal pair is replaced by the
    /// average of `A_ij` and `conj(A_ji)` and the diagonal by its real part,
    /// so the stored matrix is Hermitian bit for bit.
    pub fn finish(self, name: impl Into<String>, basis: BasisLabels) -> OperatorMatrix {
        assert_eq!(basis.dim(), self.dim, "basis labels do not match dimension");
        let mut upper: HashMap<(usize, usize), Complex64> = HashMap::new();
        for (&(i, j), &v) in &self.entries {
            if i == j {
                *upper.entry((i, i)).or_default() += Complex64::new(v.re, 0.0);
            } else if i < j {
                *upper.entry((i, j)).or_default() += v * 0.5;
            } else {
                *upper.entry((j, i)).or_default() += v.conj() * 0.5;
            }
        }
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); self.dim];
        for ((i, j), v) in upper {
            if v == Complex64::new(0.0, 0.0) {
                continue;
            }
            rows[i].push((j, v));
            if i != j {
                rows[j].push((i, v.conj()));
            }
        }
        let mut row_ptr = Vec::with_capacity(self.dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_by_key(|&(j, _)| j);
            for (j, v) in r {
                cols.push(j);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        OperatorMatrix {
            name: name.into(),
            basis,
            row_ptr,
            cols,
            vals,
        }
    }
}

/// Hermitian sparse matrix in CSR layout.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    name: String,
    basis: BasisLabels,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl OperatorMatrix {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn basis(&self) -> &BasisLabels {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.cols[a..b].binary_search(&j) {
            Ok(k) => self.vals[a + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// Triplets `(row, col, value)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim()).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    /// Flat product `S·x`.
    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.dim());
        (0..self.dim())
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// Applies the underlying weighted operator `T = W^{-1/2} S W^{1/2}`.
    pub fn apply_weighted(&self, x: &[Complex64]) -> Vec<Complex64> {
        let w = self.basis.weights();
        let scaled: Vec<Complex64> = x.iter().zip(&w).map(|(v, wi)| v * wi.sqrt()).collect();
        self.matvec(&scaled)
            .into_iter()
            .zip(&w)
            .map(|(v, wi)| v / wi.sqrt())
            .collect()
    }

    /// `max |S_ij − conj(S_ji)|`.
    pub fn hermiticity_residual(&self) -> f64 {
        self.triplets()
            .map(|(i, j, v)| (v - self.get(j, i).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Row-sum bound on the spectral radius.
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.row(i).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn combine(&self, other: &Self, sign: f64) -> Result<Self> {
        self.check_compatible(other)?;
        let mut b = HermitianBuilder::new(self.dim());
        for (i, j, v) in self.triplets() {
            b.add(i, j, v);
        }
        for (i, j, v) in other.triplets() {
            b.add(i, j, v * sign);
        }
        Ok(b.finish(format!("{}-{}", self.name, other.name), self.basis.clone()))
    }

    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.combine(other, -1.0)
    }

    pub fn sum(&self, other: &Self) -> Result<Self> {
        self.combine(other, 1.0)
    }

    /// `S + c·I`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut b = HermitianBuilder::new(self.dim());
        for (i, j, v) in self.triplets() {
            b.add(i, j, v);
        }
        for i in 0..self.dim() {
            b.add(i, i, Complex64::new(c, 0.0));
        }
        b.finish(self.name.clone(), self.basis.clone())
    }

    /// `D S D*` for a diagonal unitary `D = diag(phases)`.
    pub fn conjugate_by_phases(&self, phases: &[Complex64]) -> Self {
        assert_eq!(phases.len(), self.dim());
        let mut b = HermitianBuilder::new(self.dim());
        for (i, j, v) in self.triplets() {
            if i == j {
                // |phase|² = 1 exactly; skip the rounding.
                b.add(i, j, v);
            } else {
                b.add(i, j, v * (phases[i] * phases[j].conj()));
            }
        }
        b.finish(self.name.clone(), self.basis.clone())
    }

    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.basis != other.basis {
            return Err(SgError::BasisMismatch {
                left: self.basis.describe(),
                right: other.basis.describe(),
            });
        }
        Ok(())
    }

    /// Coordinate text format: a header line `dim nnz` followed by one
    /// `row col re im` line per stored entry.
    pub fn to_triplet_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {} [{}]", self.name, self.basis.describe());
        let _ = writeln!(s, "{} {}", self.dim(), self.nnz());
        for (i, j, v) in self.triplets() {
            let _ = writeln!(s, "{i} {j} {:.16e} {:.16e}", v.re, v.im);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> BasisLabels {
        BasisLabels {
            blocks: vec![BasisBlock::Vertices {
                level: 0,
                weights: vec![1.0; n],
            }],
        }
    }

    #[test]
    fn builder_enforces_exact_hermiticity() {
        let mut b = HermitianBuilder::new(3);
        b.add(0, 1, Complex64::new(1.0, 2.0));
        b.add(1, 0, Complex64::new(1.0 + 1e-15, -2.0));
        b.add(2, 2, Complex64::new(3.0, 1e-14));
        let m = b.finish("t", labels(3));
        assert_eq!(m.hermiticity_residual(), 0.0);
        assert_eq!(m.get(2, 2), Complex64::new(3.0, 0.0));
        assert_eq!(m.get(0, 1), m.get(1, 0).conj());
        assert_eq!(m.get(0, 2), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn basis_mismatch_is_reported() {
        let a = HermitianBuilder::new(2).finish("a", labels(2));
        let mut other = labels(2);
        other.blocks[0] = BasisBlock::Vertices {
            level: 0,
            weights: vec![1.0, 2.0],
        };
        let b = HermitianBuilder::new(2).finish("b", other);
        assert!(matches!(a.difference(&b), Err(SgError::BasisMismatch { .. })));
    }

    #[test]
    fn triplet_text_lists_every_entry() {
        let mut b = HermitianBuilder::new(2);
        b.add(0, 1, Complex64::new(0.0, 1.0));
        b.add(1, 0, Complex64::new(0.0, -1.0));
        let t = b.finish("x", labels(2)).to_triplet_text();
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[1], "2 2");
        assert_eq!(lines.len(), 4);
        assert!(lines[2].starts_with("0 1 0.0000000000000000e0 1.0000000000000000e0"));
    }

    #[test]
    fn weighted_application_undoes_symmetrization() {
        // T = diag(2, 3) is trivially weight-independent.
        let mut b = HermitianBuilder::new(2);
        b.add(0, 0, Complex64::new(2.0, 0.0));
        b.add(1, 1, Complex64::new(3.0, 0.0));
        let m = b.finish(
            "d",
            BasisLabels {
                blocks: vec![BasisBlock::Vertices {
                    level: 0,
                    weights: vec![0.5, 4.0],
                }],
            },
        );
        let y = m.apply_weighted(&[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]);
        assert!((y[0].re - 2.0).abs() < 1e-15 && (y[1].re - 3.0).abs() < 1e-15);
    }
}
