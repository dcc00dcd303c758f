//! Hermitian eigensolvers and operator-norm utilities.
//!
//! Small operators are diagonalized densely. Above `dense_limit` an explicitly
//! deflated Lanczos iteration with full reorthogonalization computes extremal
//! eigenpairs; deflation lets it recover repeated eigenvalues, which are
//! common on the gasket.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Result, SgError};
use crate::operator::OperatorMatrix;

pub const DEFAULT_DENSE_LIMIT: usize = 4000;
pub const DEFAULT_EIGEN_TOL: f64 = 1e-9;
pub const DEFAULT_GROUPING_TOL: f64 = 1e-7;
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigenCount {
    All,
    Smallest(usize),
    Largest(usize),
}

#[derive(Clone, Debug)]
pub struct EigenOptions {
    pub tol: f64,
    pub want_vectors: bool,
    pub seed: u64,
    pub dense_limit: usize,
    pub grouping_tol: f64,
    pub max_krylov: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: DEFAULT_EIGEN_TOL,
            want_vectors: false,
            seed: 0,
            dense_limit: DEFAULT_DENSE_LIMIT,
            grouping_tol: DEFAULT_GROUPING_TOL,
            max_krylov: 400,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    #[serde(skip)]
    pub eigenvectors: Option<Vec<Vec<Complex64>>>,
    /// Largest `‖Av − λv‖` over reported pairs (0 when not measured).
    pub residual: f64,
    pub grouping_tol: f64,
}

impl SpectrumReport {
    /// Eigenvalues grouped into `(value, multiplicity)` clusters.
    pub fn multiplicities(&self) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        let mut start = 0;
        for i in 1..=self.eigenvalues.len() {
            let split = i == self.eigenvalues.len()
                || self.eigenvalues[i] - self.eigenvalues[i - 1] > self.grouping_tol;
            if split && i > start {
                let group = &self.eigenvalues[start..i];
                out.push((group.iter().sum::<f64>() / group.len() as f64, group.len()));
                start = i;
            }
        }
        out
    }

    /// Number of eigenvalues with `|λ| ≤ tol`.
    pub fn kernel_dimension(&self, tol: f64) -> usize {
        self.eigenvalues.iter().filter(|l| l.abs() <= tol).count()
    }
}

pub fn hermitian_eigen(
    a: &OperatorMatrix,
    count: EigenCount,
    opts: &EigenOptions,
) -> Result<SpectrumReport> {
    let herm = a.hermiticity_residual();
    if herm > HERMITIAN_TOL {
        return Err(SgError::NotHermitian { residual: herm });
    }
    let n = a.dim();
    let k = match count {
        EigenCount::All => n,
        EigenCount::Smallest(k) | EigenCount::Largest(k) => k.min(n),
    };
    if n <= opts.dense_limit {
        return dense_eigen(&a.to_dense(), count, k, opts, Some(a));
    }
    match count {
        EigenCount::All => Err(SgError::ResourceLimit {
            level: n,
            max: opts.dense_limit,
        }),
        EigenCount::Smallest(_) => lanczos(a, k, 1.0, opts),
        EigenCount::Largest(_) => {
            let mut r = lanczos(a, k, -1.0, opts)?;
            r.eigenvalues.reverse();
            if let Some(v) = r.eigenvectors.as_mut() {
                v.reverse();
            }
            Ok(r)
        }
    }
}

/// Dense Hermitian eigendecomposition, ascending.
pub fn dense_hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

fn dense_eigen(
    m: &DMatrix<Complex64>,
    count: EigenCount,
    k: usize,
    opts: &EigenOptions,
    op: Option<&OperatorMatrix>,
) -> Result<SpectrumReport> {
    let (values, vectors) = dense_hermitian_eigen(m);
    let n = values.len();
    let range: Vec<usize> = match count {
        EigenCount::All | EigenCount::Smallest(_) => (0..k).collect(),
        EigenCount::Largest(_) => (n - k..n).collect(),
    };
    let eigenvalues = range.iter().map(|&i| values[i]).collect();
    let (eigenvectors, residual) = if opts.want_vectors {
        let vecs: Vec<Vec<Complex64>> = range
            .iter()
            .map(|&i| vectors.column(i).iter().copied().collect())
            .collect();
        let res = match op {
            Some(op) => vecs
                .iter()
                .zip(range.iter().map(|&i| values[i]))
                .map(|(v, l)| pair_residual(op, v, l))
                .fold(0.0, f64::max),
            None => 0.0,
        };
        (Some(vecs), res)
    } else {
        (None, 0.0)
    };
    Ok(SpectrumReport {
        eigenvalues,
        eigenvectors,
        residual,
        grouping_tol: opts.grouping_tol,
    })
}

fn pair_residual(op: &OperatorMatrix, v: &[Complex64], lambda: f64) -> f64 {
    op.matvec(v)
        .iter()
        .zip(v)
        .map(|(av, x)| (av - x * lambda).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn orthogonalize(w: &mut [Complex64], against: &[Vec<Complex64>]) {
    // Two passes of classical Gram–Schmidt.
    for _ in 0..2 {
        for q in against {
            let c = dot(q, w);
            for (x, y) in w.iter_mut().zip(q) {
                *x -= c * y;
            }
        }
    }
}

/// Smallest eigenpairs of `sign·A` by Lanczos with explicit deflation of
/// locked vectors; eigenvalues are returned for `A` itself.
fn lanczos(a: &OperatorMatrix, k: usize, sign: f64, opts: &EigenOptions) -> Result<SpectrumReport> {
    let n = a.dim();
    let scale = a.norm_bound().max(1.0);
    let tol = opts.tol * scale;
    let apply = |x: &[Complex64]| -> Vec<Complex64> {
        a.matvec(x).into_iter().map(|v| v * sign).collect()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked_vals: Vec<f64> = Vec::new();
    let mut locked_vecs: Vec<Vec<Complex64>> = Vec::new();
    let mut worst = 0.0f64;
    let mut verified = false;
    let max_runs = 4 * k + 8;

    for _run in 0..max_runs {
        if locked_vals.len() >= k && verified {
            break;
        }
        let avail = n - locked_vecs.len();
        if avail == 0 {
            break;
        }
        let m_max = opts.max_krylov.min(avail);
        let mut v: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        orthogonalize(&mut v, &locked_vecs);
        let nv = norm(&v);
        for x in v.iter_mut() {
            *x /= nv;
        }
        let mut basis: Vec<Vec<Complex64>> = vec![v];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let want = (k.saturating_sub(locked_vals.len())).max(1);
        let mut ritz: Option<(Vec<f64>, DMatrix<f64>)> = None;

        for j in 0..m_max {
            let mut w = apply(&basis[j]);
            let alpha = dot(&basis[j], &w).re;
            alphas.push(alpha);
            orthogonalize(&mut w, &basis);
            orthogonalize(&mut w, &locked_vecs);
            let beta = norm(&w);
            let size = j + 1;
            let check = size == m_max || beta < 1e-13 * scale || (size >= want && size % 5 == 0);
            if check {
                let t = tridiagonal(&alphas, &betas);
                let eig = SymmetricEigen::new(t);
                let mut order: Vec<usize> = (0..size).collect();
                order.sort_by(|&p, &q| eig.eigenvalues[p].total_cmp(&eig.eigenvalues[q]));
                let vals: Vec<f64> = order.iter().map(|&p| eig.eigenvalues[p]).collect();
                let vecs = DMatrix::from_fn(size, size, |r, c| eig.eigenvectors[(r, order[c])]);
                let converged = (0..want.min(size))
                    .all(|c| (beta * vecs[(size - 1, c)]).abs() <= tol);
                ritz = Some((vals, vecs));
                if converged || beta < 1e-13 * scale || size == m_max {
                    break;
                }
            }
            betas.push(beta);
            basis.push(w.into_iter().map(|x| x / beta).collect());
        }

        let (vals, vecs) = ritz.expect("at least one Ritz check per run");
        let size = vals.len();
        let mut new_any = false;
        for c in 0..size {
            let y: Vec<Complex64> = (0..n)
                .map(|r| (0..size).map(|p| basis[p][r] * vecs[(p, c)]).sum())
                .collect();
            let res = pair_residual(a, &y, sign * vals[c]);
            if res > tol {
                break;
            }
            let worst_locked = locked_vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if locked_vals.len() >= k && vals[c] >= worst_locked - opts.grouping_tol * scale {
                break;
            }
            worst = worst.max(res);
            locked_vals.push(vals[c]);
            locked_vecs.push(y);
            new_any = true;
            if c + 1 >= want && locked_vals.len() >= k {
                break;
            }
        }
        if locked_vals.len() >= k {
            // A run that finds nothing below the current k-th value confirms
            // that no repeated copy is missing.
            verified = !new_any;
            // Keep only the k smallest.
            let mut idx: Vec<usize> = (0..locked_vals.len()).collect();
            idx.sort_by(|&p, &q| locked_vals[p].total_cmp(&locked_vals[q]));
            idx.truncate(k);
            if idx.len() < locked_vals.len() {
                locked_vals = idx.iter().map(|&p| locked_vals[p]).collect();
                locked_vecs = idx.iter().map(|&p| locked_vecs[p].clone()).collect();
            }
        } else if !new_any {
            return Err(SgError::NoConvergence {
                what: "lanczos",
                residual: worst.max(tol * 10.0),
                tolerance: tol,
            });
        }
    }

    if locked_vals.len() < k {
        return Err(SgError::NoConvergence {
            what: "lanczos",
            residual: worst,
            tolerance: tol,
        });
    }
    let mut idx: Vec<usize> = (0..locked_vals.len()).collect();
    idx.sort_by(|&p, &q| locked_vals[p].total_cmp(&locked_vals[q]));
    let eigenvalues = idx.iter().map(|&p| sign * locked_vals[p]).collect();
    let eigenvectors = opts
        .want_vectors
        .then(|| idx.iter().map(|&p| locked_vecs[p].clone()).collect());
    Ok(SpectrumReport {
        eigenvalues,
        eigenvectors,
        residual: worst,
        grouping_tol: opts.grouping_tol,
    })
}

fn tridiagonal(alphas: &[f64], betas: &[f64]) -> DMatrix<f64> {
    let n = alphas.len();
    let mut t = DMatrix::zeros(n, n);
    for i in 0..n {
        t[(i, i)] = alphas[i];
        if i + 1 < n {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    t
}

/// Spectral norm of the Hermitian difference `A − B`.
pub fn operator_norm_diff(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<f64> {
    let d = a.difference(b)?;
    if d.nnz() == 0 {
        return Ok(0.0);
    }
    let opts = EigenOptions::default();
    if d.dim() <= opts.dense_limit {
        let (vals, _) = dense_hermitian_eigen(&d.to_dense());
        return Ok(vals.iter().map(|v| v.abs()).fold(0.0, f64::max));
    }
    let lo = hermitian_eigen(&d, EigenCount::Smallest(1), &opts)?;
    let hi = hermitian_eigen(&d, EigenCount::Largest(1), &opts)?;
    Ok(lo.eigenvalues[0].abs().max(hi.eigenvalues[0].abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{BasisBlock, BasisLabels, HermitianBuilder};

    fn path_laplacian(n: usize, twist: f64) -> OperatorMatrix {
        let mut b = HermitianBuilder::new(n);
        for i in 0..n {
            let j = (i + 1) % n;
            let phase = Complex64::from_polar(1.0, twist);
            b.add(i, i, Complex64::new(2.0, 0.0));
            b.add(i, j, -phase);
            b.add(j, i, -phase.conj());
        }
        b.finish(
            "ring",
            BasisLabels {
                blocks: vec![BasisBlock::Vertices {
                    level: 0,
                    weights: vec![1.0; n],
                }],
            },
        )
    }

    #[test]
    fn ring_spectrum_closed_form() {
        let n = 12;
        let twist = 0.3;
        let op = path_laplacian(n, twist);
        let r = hermitian_eigen(&op, EigenCount::All, &EigenOptions::default()).unwrap();
        let mut expect: Vec<f64> = (0..n)
            .map(|k| 2.0 - 2.0 * (std::f64::consts::TAU * k as f64 / n as f64 + twist).cos())
            .collect();
        expect.sort_by(f64::total_cmp);
        for (a, b) in r.eigenvalues.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn shift_moves_spectrum() {
        let op = path_laplacian(9, 0.0);
        let opts = EigenOptions::default();
        let a = hermitian_eigen(&op, EigenCount::All, &opts).unwrap();
        let b = hermitian_eigen(&op.shifted(2.5), EigenCount::All, &opts).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x + 2.5 - y).abs() < 1e-12);
        }
        assert!((operator_norm_diff(&op.shifted(2.5), &op).unwrap() - 2.5).abs() < 1e-12);
        assert_eq!(operator_norm_diff(&op, &op).unwrap(), 0.0);
    }

    #[test]
    fn lanczos_matches_dense_with_multiplicities() {
        // Untwisted ring: every nonzero eigenvalue is doubly degenerate.
        let op = path_laplacian(60, 0.0);
        let dense = hermitian_eigen(&op, EigenCount::All, &EigenOptions::default()).unwrap();
        let opts = EigenOptions {
            dense_limit: 10,
            want_vectors: true,
            seed: 7,
            ..EigenOptions::default()
        };
        let lo = hermitian_eigen(&op, EigenCount::Smallest(5), &opts).unwrap();
        for (a, b) in lo.eigenvalues.iter().zip(&dense.eigenvalues) {
            assert!((a - b).abs() < 1e-8, "{:?} vs {:?}", lo.eigenvalues, &dense.eigenvalues[..5]);
        }
        assert!(lo.residual <= 1e-9 * op.norm_bound());
        let hi = hermitian_eigen(&op, EigenCount::Largest(3), &opts).unwrap();
        for (a, b) in hi.eigenvalues.iter().zip(&dense.eigenvalues[57..]) {
            assert!((a - b).abs() < 1e-8);
        }
        let again = hermitian_eigen(&op, EigenCount::Smallest(5), &opts).unwrap();
        assert_eq!(lo.eigenvalues, again.eigenvalues);
    }

    #[test]
    fn all_eigenvalues_above_dense_limit_is_refused() {
        let op = path_laplacian(20, 0.0);
        let opts = EigenOptions {
            dense_limit: 10,
            ..EigenOptions::default()
        };
        assert!(matches!(
            hermitian_eigen(&op, EigenCount::All, &opts),
            Err(SgError::ResourceLimit { .. })
        ));
    }

    #[test]
    fn multiplicity_grouping() {
        let r = SpectrumReport {
            eigenvalues: vec![-1.0, -1.0 + 1e-9, 0.0, 2.0, 2.0, 2.0],
            eigenvectors: None,
            residual: 0.0,
            grouping_tol: DEFAULT_GROUPING_TOL,
        };
        let groups: Vec<usize> = r.multiplicities().iter().map(|g| g.1).collect();
        assert_eq!(groups, [2, 1, 3]);
        assert_eq!(r.kernel_dimension(1e-9), 1);
    }

    #[test]
    fn dense_vectors_have_small_residuals() {
        let op = path_laplacian(15, 0.7);
        let opts = EigenOptions {
            want_vectors: true,
            ..EigenOptions::default()
        };
        let r = hermitian_eigen(&op, EigenCount::Smallest(4), &opts).unwrap();
        assert_eq!(r.eigenvalues.len(), 4);
        assert!(r.residual < 1e-12);
    }
}
