//! The Dirac operator on functions ⊕ 1-forms and the form Laplacian.
//!
//! With `B = C^{1/2} ∂ M^{-1/2}` (conductances `C` on edges, masses `M` on
//! vertices) the symmetrized Dirac matrix is `[[0, (−iB)†], [−iB, 0]]`, the
//! form Laplacian is `−B B†` and `D² = diag(B†B, BB†)`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::forms::{edge_basis, energy_laplacian, vertex_basis};
use crate::kusuoka::MassVector;
use crate::operator::{BasisLabels, HermitianBuilder, OperatorMatrix};
use crate::structure::LevelGraph;

/// Absolute tolerance of [`dirac_square_check`].
pub const DIRAC_SQUARE_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct DiracOperator {
    matrix: OperatorMatrix,
    level: usize,
    num_vertices: usize,
    num_edges: usize,
    laplacian: OperatorMatrix,
    form_laplacian: OperatorMatrix,
}

impl DiracOperator {
    pub fn matrix(&self) -> &OperatorMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> OperatorMatrix {
        self.matrix
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    /// Expected `dim ker D`: constants plus harmonic forms.
    pub fn expected_kernel_dimension(&self) -> usize {
        1 + self.num_edges + 1 - self.num_vertices
    }
}

/// Entries `B[e][v]` of the weighted derivation, by vertex.
fn weighted_incidence<'a>(g: &'a LevelGraph, m: &MassVector, v: usize) -> impl Iterator<Item = (usize, f64)> + 'a {
    let sc = g.conductance().sqrt();
    let sm = m.values()[v].sqrt();
    g.incidence(v).iter().map(move |inc| {
        let s = if inc.outgoing { -1.0 } else { 1.0 };
        (inc.edge, s * sc / sm)
    })
}

pub fn assemble_dirac(g: &LevelGraph, m: &MassVector) -> Result<DiracOperator> {
    m.check_on(g)?;
    let nv = g.num_vertices();
    let ne = g.num_edges();
    let mut b = HermitianBuilder::new(nv + ne);
    let minus_i = Complex64::new(0.0, -1.0);
    for v in 0..nv {
        for (e, w) in weighted_incidence(g, m, v) {
            let entry = minus_i * w;
            b.add(nv + e, v, entry);
            b.add(v, nv + e, entry.conj());
        }
    }
    let matrix = b.finish(
        "dirac",
        BasisLabels {
            blocks: vec![vertex_basis(g, m), edge_basis(g)],
        },
    );
    Ok(DiracOperator {
        matrix,
        level: g.level(),
        num_vertices: nv,
        num_edges: ne,
        laplacian: energy_laplacian(g, m)?,
        form_laplacian: form_laplacian(g, m)?,
    })
}

/// `∂∂*` on the edge space; negative semidefinite.
pub fn form_laplacian(g: &LevelGraph, m: &MassVector) -> Result<OperatorMatrix> {
    m.check_on(g)?;
    let mut b = HermitianBuilder::new(g.num_edges());
    for v in 0..g.num_vertices() {
        let col: Vec<(usize, f64)> = weighted_incidence(g, m, v).collect();
        for &(e, x) in &col {
            for &(f, y) in &col {
                b.add(e, f, Complex64::new(-x * y, 0.0));
            }
        }
    }
    Ok(b.finish(
        "form-laplacian",
        BasisLabels {
            blocks: vec![edge_basis(g)],
        },
    ))
}

#[derive(Clone, Debug, Serialize)]
pub struct DiracSquareReport {
    pub level: usize,
    pub vertex_block_deviation: f64,
    pub edge_block_deviation: f64,
    pub off_diagonal_max: f64,
    /// Largest absolute entry of `D²`.
    pub scale: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl DiracSquareReport {
    pub fn max_deviation(&self) -> f64 {
        self.vertex_block_deviation
            .max(self.edge_block_deviation)
            .max(self.off_diagonal_max)
    }
}

fn sparse_square(a: &OperatorMatrix) -> Vec<BTreeMap<usize, Complex64>> {
    (0..a.dim())
        .map(|i| {
            let mut row = BTreeMap::new();
            for (k, x) in a.row(i) {
                for (j, y) in a.row(k) {
                    *row.entry(j).or_insert(Complex64::new(0.0, 0.0)) += x * y;
                }
            }
            row
        })
        .collect()
}

/// Compares `D²` with `diag(−Δ, −Δ₁)` entrywise.
pub fn dirac_square_check(d: &DiracOperator) -> DiracSquareReport {
    let nv = d.num_vertices;
    let sq = sparse_square(&d.matrix);
    let mut vdev = 0.0f64;
    let mut edev = 0.0f64;
    let mut off = 0.0f64;
    let mut scale = 0.0f64;
    for (i, row) in sq.iter().enumerate() {
        for (&j, &x) in row {
            scale = scale.max(x.norm());
            match (i < nv, j < nv) {
                (true, true) => vdev = vdev.max((x + d.laplacian.get(i, j)).norm()),
                (false, false) => edev = edev.max((x + d.form_laplacian.get(i - nv, j - nv)).norm()),
                _ => off = off.max(x.norm()),
            }
        }
    }
    // Entries of the expected blocks that are absent from D².
    for (i, j, x) in d.laplacian.triplets() {
        if !sq[i].contains_key(&j) {
            vdev = vdev.max(x.norm());
        }
    }
    for (i, j, x) in d.form_laplacian.triplets() {
        if !sq[nv + i].contains_key(&(nv + j)) {
            edev = edev.max(x.norm());
        }
    }
    let tolerance = DIRAC_SQUARE_TOL;
    let passed = vdev <= tolerance && edev <= tolerance && off <= tolerance;
    DiracSquareReport {
        level: d.level,
        vertex_block_deviation: vdev,
        edge_block_deviation: edev,
        off_diagonal_max: off,
        scale,
        tolerance,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kusuoka::vertex_masses;
    use crate::spectral::{dense_hermitian_eigen, hermitian_eigen, EigenCount, EigenOptions};
    use nalgebra::DMatrix;

    fn setup(n: usize) -> (LevelGraph, MassVector) {
        let g = LevelGraph::build(n).unwrap();
        let m = vertex_masses(&g);
        (g, m)
    }

    fn spectrum(op: &OperatorMatrix) -> Vec<f64> {
        hermitian_eigen(op, EigenCount::All, &EigenOptions::default())
            .unwrap()
            .eigenvalues
    }

    #[test]
    fn level_zero_spectrum() {
        let (g, m) = setup(0);
        let d = assemble_dirac(&g, &m).unwrap();
        assert_eq!(d.matrix().dim(), 6);
        assert_eq!(d.matrix().hermiticity_residual(), 0.0);
        let s = 4.5f64.sqrt();
        let expect = [-s, -s, 0.0, 0.0, s, s];
        for (a, b) in spectrum(d.matrix()).iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_blocks_vanish() {
        let (g, m) = setup(2);
        let d = assemble_dirac(&g, &m).unwrap();
        let nv = d.num_vertices();
        for (i, j, _) in d.matrix().triplets() {
            assert!((i < nv) != (j < nv));
        }
    }

    /// Dense oracle: `∂` as an incidence matrix and the weighted adjoint.
    fn dense_blocks(g: &LevelGraph, m: &MassVector) -> (DMatrix<f64>, DMatrix<f64>) {
        let nv = g.num_vertices();
        let ne = g.num_edges();
        let c = g.conductance();
        let mut del = DMatrix::zeros(ne, nv);
        for (k, e) in g.edges().iter().enumerate() {
            del[(k, e.head)] += 1.0;
            del[(k, e.tail)] -= 1.0;
        }
        let minv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            nv,
            m.values().iter().map(|x| 1.0 / x),
        ));
        // ∂* = −M⁻¹ ∂ᵀ C
        let codiff = -(&minv * del.transpose() * c);
        (del, codiff)
    }

    #[test]
    fn square_is_block_diagonal_with_both_laplacians() {
        for n in 0..=4 {
            let (g, m) = setup(n);
            let d = assemble_dirac(&g, &m).unwrap();
            let r = dirac_square_check(&d);
            assert!(r.passed, "{r:?}");
            assert_eq!(r.off_diagonal_max, 0.0);
        }
        // Against the unsymmetrized dense products.
        let (g, m) = setup(2);
        let (del, codiff) = dense_blocks(&g, &m);
        let lap = &codiff * &del;
        let flap = &del * &codiff;
        let sm: Vec<f64> = m.values().iter().map(|x| x.sqrt()).collect();
        let sc = g.conductance().sqrt();
        let lo = energy_laplacian(&g, &m).unwrap();
        for i in 0..g.num_vertices() {
            for j in 0..g.num_vertices() {
                let want = lap[(i, j)] * sm[i] / sm[j];
                assert!((lo.get(i, j).re - want).abs() < 1e-12);
            }
        }
        let fo = form_laplacian(&g, &m).unwrap();
        for i in 0..g.num_edges() {
            for j in 0..g.num_edges() {
                let want = flap[(i, j)] * sc / sc;
                assert!((fo.get(i, j).re - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn chiral_symmetry_and_square_spectrum() {
        for n in 0..=3 {
            let (g, m) = setup(n);
            let d = assemble_dirac(&g, &m).unwrap();
            let s = spectrum(d.matrix());
            let k = s.len();
            for i in 0..k {
                assert!((s[i] + s[k - 1 - i]).abs() < 1e-9);
            }
            let (sq, _) = dense_hermitian_eigen(&(d.matrix().to_dense() * d.matrix().to_dense()));
            let mut squares: Vec<f64> = s.iter().map(|x| x * x).collect();
            squares.sort_by(f64::total_cmp);
            for (a, b) in sq.iter().zip(&squares) {
                assert!((a - b).abs() < 1e-9 * b.max(1.0));
            }
        }
    }

    #[test]
    fn kernel_dimension_counts_constants_and_harmonic_forms() {
        for n in 0..=4 {
            let (g, m) = setup(n);
            let d = assemble_dirac(&g, &m).unwrap();
            let s = spectrum(d.matrix());
            let tol = 1e-8 * d.matrix().norm_bound();
            let ker = s.iter().filter(|x| x.abs() <= tol).count();
            assert_eq!(ker, 1 + (3usize.pow(n as u32 + 1) - 1) / 2);
            assert_eq!(ker, d.expected_kernel_dimension());
        }
    }

    #[test]
    fn form_laplacian_properties() {
        let (g, m) = setup(0);
        let f = form_laplacian(&g, &m).unwrap();
        let s = spectrum(&f);
        assert_eq!(s.iter().filter(|x| x.abs() < 1e-12).count(), 1);
        assert!(s.iter().all(|&x| x <= 1e-12));
        for n in 1..=3 {
            let (g, m) = setup(n);
            let mut fs: Vec<f64> = spectrum(&form_laplacian(&g, &m).unwrap())
                .into_iter()
                .filter(|x| x.abs() > 1e-9)
                .collect();
            let mut ls: Vec<f64> = spectrum(&energy_laplacian(&g, &m).unwrap())
                .into_iter()
                .filter(|x| x.abs() > 1e-9)
                .collect();
            fs.sort_by(f64::total_cmp);
            ls.sort_by(f64::total_cmp);
            assert_eq!(fs.len(), ls.len());
            for (a, b) in fs.iter().zip(&ls) {
                assert!((a - b).abs() < 1e-9 * b.abs().max(1.0));
            }
        }
    }
}
