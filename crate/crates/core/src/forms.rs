//! Discrete 1-forms on level graphs: the derivation `∂`, the codifferential
//! `∂*`, module actions, pairing densities, the energy Laplacian and the Hodge
//! splitting into exact and harmonic forms.
//!
//! Forms are stored on the canonical edge orientations; the value on a
//! reversed edge is the negative. The form inner product carries the
//! conductance `c_n = (5/3)^n`, so `‖∂u‖² = E_n(u)` holds identically.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::energy::VertexFunction;
use crate::error::{Result, SgError};
use crate::kusuoka::MassVector;
use crate::operator::{BasisBlock, BasisLabels, HermitianBuilder, OperatorMatrix};
use crate::structure::LevelGraph;

/// Unknown count up to which the Hodge solve factors densely.
pub const HODGE_DENSE_LIMIT: usize = 4000;
pub const HODGE_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeForm {
    level: usize,
    values: Vec<Complex64>,
}

impl EdgeForm {
    pub fn new(g: &LevelGraph, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != g.num_edges() {
            return Err(SgError::DimensionMismatch(format!(
                "{} edge values for a graph with {} edges",
                values.len(),
                g.num_edges()
            )));
        }
        Ok(EdgeForm {
            level: g.level(),
            values,
        })
    }

    pub fn from_real(g: &LevelGraph, values: &[f64]) -> Result<Self> {
        Self::new(g, values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zeros(g: &LevelGraph) -> Self {
        EdgeForm {
            level: g.level(),
            values: vec![ZERO; g.num_edges()],
        }
    }

    pub fn from_fn(g: &LevelGraph, f: impl FnMut(usize) -> Complex64) -> Self {
        EdgeForm {
            level: g.level(),
            values: (0..g.num_edges()).map(f).collect(),
        }
    }

    /// The form equal to 1 on the three edges of `cell` (consistently
    /// oriented) and 0 elsewhere.
    pub fn circulation(g: &LevelGraph, cell: usize) -> Self {
        let mut w = Self::zeros(g);
        for k in 0..3 {
            w.values[3 * cell + k] = Complex64::new(1.0, 0.0);
        }
        w
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value on edge `edge` traversed forwards or backwards.
    pub fn oriented(&self, edge: usize, reversed: bool) -> Complex64 {
        if reversed {
            -self.values[edge]
        } else {
            self.values[edge]
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        EdgeForm {
            level: self.level,
            values: self.values.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn lin_comb(&self, alpha: Complex64, other: &Self, beta: Complex64) -> Self {
        debug_assert_eq!(self.len(), other.len());
        EdgeForm {
            level: self.level,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
        }
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|z| z.im == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub(crate) fn check_on(&self, g: &LevelGraph) -> Result<()> {
        if self.level != g.level() {
            return Err(SgError::LevelMismatch {
                expected: g.level(),
                found: self.level,
            });
        }
        if self.values.len() != g.num_edges() {
            return Err(SgError::DimensionMismatch(format!(
                "edge form of length {} on a graph with {} edges",
                self.values.len(),
                g.num_edges()
            )));
        }
        Ok(())
    }
}

/// `(∂u)(x→y) = u(y) − u(x)`.
pub fn derivation(g: &LevelGraph, u: &VertexFunction) -> Result<EdgeForm> {
    u.check_on(g)?;
    let uv = u.values();
    Ok(EdgeForm {
        level: g.level(),
        values: g.edges().iter().map(|e| uv[e.head] - uv[e.tail]).collect(),
    })
}

/// `⟨ω, η⟩ = Σ_e c_n ω(e)·conj(η(e))`.
pub fn form_inner(g: &LevelGraph, omega: &EdgeForm, eta: &EdgeForm) -> Result<Complex64> {
    omega.check_on(g)?;
    eta.check_on(g)?;
    let s: Complex64 = omega
        .values
        .iter()
        .zip(&eta.values)
        .map(|(a, b)| a * b.conj())
        .sum();
    Ok(s * g.conductance())
}

pub fn form_norm_sq(g: &LevelGraph, omega: &EdgeForm) -> Result<f64> {
    form_inner(g, omega, omega).map(|z| z.re)
}

/// `⟨u, v⟩_m = Σ_x m(x) u(x)·conj(v(x))`.
pub fn mass_inner(m: &MassVector, u: &VertexFunction, v: &VertexFunction) -> Complex64 {
    m.values()
        .iter()
        .zip(u.values().iter().zip(v.values()))
        .map(|(w, (a, b))| a * b.conj() * *w)
        .sum()
}

/// `(f·ω)(x→y) = ½(f(x) + f(y))·ω(x→y)`.
pub fn pointwise_product(g: &LevelGraph, f: &VertexFunction, omega: &EdgeForm) -> Result<EdgeForm> {
    f.check_on(g)?;
    omega.check_on(g)?;
    let fv = f.values();
    Ok(EdgeForm {
        level: g.level(),
        values: g
            .edges()
            .iter()
            .zip(&omega.values)
            .map(|(e, w)| (fv[e.tail] + fv[e.head]) * 0.5 * w)
            .collect(),
    })
}

/// The vertex function with `⟨∂*ω, φ⟩_m = −⟨ω, ∂φ⟩` for all `φ`.
pub fn codifferential(g: &LevelGraph, m: &MassVector, omega: &EdgeForm) -> Result<VertexFunction> {
    m.check_on(g)?;
    omega.check_on(g)?;
    let c = g.conductance();
    let mut flux = vec![ZERO; g.num_vertices()];
    for (e, w) in g.edges().iter().zip(&omega.values) {
        flux[e.head] += w * c;
        flux[e.tail] -= w * c;
    }
    let values = flux
        .into_iter()
        .zip(m.values())
        .map(|(f, &mx)| -f / mx)
        .collect();
    Ok(VertexFunction::from_parts(g.level(), values))
}

/// `Γ_H(ω, η)(x) = (1/(2 m(x)))·Σ_{e ∋ x} c_n ω(e)·conj(η(e))`.
pub fn pairing_density(
    g: &LevelGraph,
    m: &MassVector,
    omega: &EdgeForm,
    eta: &EdgeForm,
) -> Result<VertexFunction> {
    m.check_on(g)?;
    omega.check_on(g)?;
    eta.check_on(g)?;
    let c = g.conductance();
    let mut acc = vec![ZERO; g.num_vertices()];
    for ((e, w), h) in g.edges().iter().zip(&omega.values).zip(&eta.values) {
        let p = w * h.conj() * c;
        acc[e.tail] += p;
        acc[e.head] += p;
    }
    let values = acc
        .into_iter()
        .zip(m.values())
        .map(|(a, &mx)| a / (2.0 * mx))
        .collect();
    Ok(VertexFunction::from_parts(g.level(), values))
}

pub(crate) fn vertex_basis(g: &LevelGraph, m: &MassVector) -> BasisBlock {
    BasisBlock::Vertices {
        level: g.level(),
        weights: m.values().to_vec(),
    }
}

pub(crate) fn edge_basis(g: &LevelGraph) -> BasisBlock {
    BasisBlock::Edges {
        level: g.level(),
        count: g.num_edges(),
        weight: g.conductance(),
    }
}

/// `Δ_ν = ∂*∂` on the m-weighted vertex space.
pub fn energy_laplacian(g: &LevelGraph, m: &MassVector) -> Result<OperatorMatrix> {
    m.check_on(g)?;
    let c = g.conductance();
    let mv = m.values();
    let mut b = HermitianBuilder::new(g.num_vertices());
    for e in g.edges() {
        let (t, h) = (e.tail, e.head);
        b.add(t, t, Complex64::new(-c / mv[t], 0.0));
        b.add(h, h, Complex64::new(-c / mv[h], 0.0));
        let off = Complex64::new(c / (mv[t] * mv[h]).sqrt(), 0.0);
        b.add(t, h, off);
        b.add(h, t, off);
    }
    Ok(b.finish(
        "laplacian",
        BasisLabels {
            blocks: vec![vertex_basis(g, m)],
        },
    ))
}

#[derive(Clone, Debug)]
pub struct HodgeDecomposition {
    pub exact: EdgeForm,
    pub harmonic: EdgeForm,
    /// Potential `f` with `exact = ∂f`, m-weighted mean zero.
    pub potential: VertexFunction,
    /// Relative residual of the normal equations.
    pub residual: f64,
}

/// Splits `ω = ∂f + w` with `∂*w = 0`.
pub fn hodge_decompose(g: &LevelGraph, m: &MassVector, omega: &EdgeForm) -> Result<HodgeDecomposition> {
    m.check_on(g)?;
    omega.check_on(g)?;
    let n = g.num_vertices();
    // Normal equations L f = ∂ᵀω with the unit graph Laplacian L; the
    // conductance and the masses cancel.
    let mut rhs_re = vec![0.0; n];
    let mut rhs_im = vec![0.0; n];
    for (e, w) in g.edges().iter().zip(omega.values()) {
        rhs_re[e.head] += w.re;
        rhs_re[e.tail] -= w.re;
        rhs_im[e.head] += w.im;
        rhs_im[e.tail] -= w.im;
    }
    let (f_re, f_im) = if n <= HODGE_DENSE_LIMIT {
        dense_laplace_solve(g, &rhs_re, &rhs_im)?
    } else {
        (cg_laplace_solve(g, &rhs_re)?, cg_laplace_solve(g, &rhs_im)?)
    };
    let mut f: Vec<Complex64> = f_re
        .iter()
        .zip(&f_im)
        .map(|(&a, &b)| Complex64::new(a, b))
        .collect();
    let total: f64 = m.total();
    let mean: Complex64 = f.iter().zip(m.values()).map(|(z, &w)| z * w).sum::<Complex64>() / total;
    for z in f.iter_mut() {
        *z -= mean;
    }
    let potential = VertexFunction::from_parts(g.level(), f);
    let exact = derivation(g, &potential)?;
    let harmonic = omega.lin_comb(Complex64::new(1.0, 0.0), &exact, Complex64::new(-1.0, 0.0));

    let mut div = vec![ZERO; n];
    for (e, w) in g.edges().iter().zip(harmonic.values()) {
        div[e.head] += w;
        div[e.tail] -= w;
    }
    let scale = rhs_re
        .iter()
        .zip(&rhs_im)
        .map(|(a, b)| a * a + b * b)
        .sum::<f64>()
        .sqrt()
        .max(omega.max_abs())
        .max(f64::MIN_POSITIVE);
    let residual = div.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() / scale;
    if residual > HODGE_TOL {
        return Err(SgError::NoConvergence {
            what: "hodge solve",
            residual,
            tolerance: HODGE_TOL,
        });
    }
    Ok(HodgeDecomposition {
        exact,
        harmonic,
        potential,
        residual,
    })
}

fn unit_laplacian_dense(g: &LevelGraph) -> DMatrix<f64> {
    let n = g.num_vertices();
    let mut l = DMatrix::zeros(n, n);
    for e in g.edges() {
        l[(e.tail, e.tail)] += 1.0;
        l[(e.head, e.head)] += 1.0;
        l[(e.tail, e.head)] -= 1.0;
        l[(e.head, e.tail)] -= 1.0;
    }
    l
}

fn dense_laplace_solve(g: &LevelGraph, re: &[f64], im: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = g.num_vertices();
    // L + 11ᵀ/n is positive definite and agrees with L on mean-zero vectors.
    let mut a = unit_laplacian_dense(g);
    a.add_scalar_mut(1.0 / n as f64);
    let chol = a.cholesky().ok_or(SgError::NoConvergence {
        what: "hodge cholesky",
        residual: f64::INFINITY,
        tolerance: HODGE_TOL,
    })?;
    let mut rhs = DMatrix::zeros(n, 2);
    rhs.set_column(0, &DVector::from_column_slice(re));
    rhs.set_column(1, &DVector::from_column_slice(im));
    let x = chol.solve(&rhs);
    Ok((x.column(0).iter().copied().collect(), x.column(1).iter().copied().collect()))
}

fn cg_laplace_solve(g: &LevelGraph, b: &[f64]) -> Result<Vec<f64>> {
    let n = g.num_vertices();
    let apply = |x: &[f64]| -> Vec<f64> {
        let mut y = vec![0.0; n];
        for e in g.edges() {
            let d = x[e.head] - x[e.tail];
            y[e.head] += d;
            y[e.tail] -= d;
        }
        y
    };
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    let target = (1e-2 * HODGE_TOL * bnorm).powi(2);
    for _ in 0..(10 * n) {
        if rr <= target {
            return Ok(x);
        }
        let ap = apply(&p);
        let alpha = rr / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    Err(SgError::NoConvergence {
        what: "hodge conjugate gradient",
        residual: rr.sqrt() / bnorm,
        tolerance: HODGE_TOL,
    })
}

/// `dim ker ∂* = |E| − rank ∂`, with the rank computed numerically.
pub fn harmonic_form_dimension(g: &LevelGraph) -> usize {
    let mut d = DMatrix::<f64>::zeros(g.num_edges(), g.num_vertices());
    for (i, e) in g.edges().iter().enumerate() {
        d[(i, e.head)] = 1.0;
        d[(i, e.tail)] = -1.0;
    }
    let rank = d.svd(false, false).rank(1e-9);
    g.num_edges() - rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{energy, HarmonicBasis};
    use crate::kusuoka::vertex_masses;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cx(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn rand_c(rng: &mut ChaCha8Rng) -> Complex64 {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    }

    fn random_vf(g: &LevelGraph, rng: &mut ChaCha8Rng) -> VertexFunction {
        VertexFunction::from_fn(g, |_| rand_c(rng))
    }

    fn random_form(g: &LevelGraph, rng: &mut ChaCha8Rng) -> EdgeForm {
        EdgeForm::from_fn(g, |_| rand_c(rng))
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn derivation_examples() {
        let g = LevelGraph::build(0).unwrap();
        let u = VertexFunction::from_real(&g, &[1.0, 0.0, 0.0]).unwrap();
        let du = derivation(&g, &u).unwrap();
        // Edges p1→p2, p2→p3, p3→p1.
        assert_eq!(du.values(), &[cx(-1.0), cx(0.0), cx(1.0)]);
        let k = VertexFunction::constant(&g, Complex64::new(2.0, 1.0));
        assert!(derivation(&g, &k).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn derivation_is_an_isometry_onto_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 0..=5 {
            let g = LevelGraph::build(n).unwrap();
            for _ in 0..5 {
                let u = random_vf(&g, &mut rng);
                let e = energy(&g, &u).unwrap();
                let d = form_norm_sq(&g, &derivation(&g, &u).unwrap()).unwrap();
                assert!((e - d).abs() <= 1e-14 * e);
            }
        }
    }

    #[test]
    fn harmonic_basis_derivatives_are_orthonormal_at_every_level() {
        let basis = HarmonicBasis::canonical();
        for n in 0..=5 {
            let g = LevelGraph::build(n).unwrap();
            let y = crate::energy::harmonic_coordinates(&g, &basis).unwrap();
            let h1 = VertexFunction::from_fn(&g, |v| cx(y[v][0]));
            let h2 = VertexFunction::from_fn(&g, |v| cx(y[v][1]));
            let d1 = derivation(&g, &h1).unwrap();
            let d2 = derivation(&g, &h2).unwrap();
            assert!((form_inner(&g, &d1, &d1).unwrap() - cx(1.0)).norm() < 1e-13);
            assert!(form_inner(&g, &d1, &d2).unwrap().norm() < 1e-13);
        }
    }

    #[test]
    fn inner_product_is_conjugate_symmetric_and_definite() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = LevelGraph::build(2).unwrap();
        let a = random_form(&g, &mut rng);
        let b = random_form(&g, &mut rng);
        let ab = form_inner(&g, &a, &b).unwrap();
        let ba = form_inner(&g, &b, &a).unwrap();
        assert!((ab - ba.conj()).norm() < 1e-13);
        assert!(form_norm_sq(&g, &a).unwrap() > 0.0);
        assert_eq!(form_norm_sq(&g, &EdgeForm::zeros(&g)).unwrap(), 0.0);
    }

    #[test]
    fn level_mismatch_rejected() {
        let g0 = LevelGraph::build(0).unwrap();
        let g1 = LevelGraph::build(1).unwrap();
        assert!(form_inner(&g1, &EdgeForm::zeros(&g0), &EdgeForm::zeros(&g1)).is_err());
    }

    #[test]
    fn module_action_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = LevelGraph::build(3).unwrap();
        let w = random_form(&g, &mut rng);
        let c = Complex64::new(0.5, -2.0);
        let cw = pointwise_product(&g, &VertexFunction::constant(&g, c), &w).unwrap();
        assert!(max_diff(cw.values(), w.map(|z| z * c).values()) < 1e-15);

        for _ in 0..10 {
            let f = random_vf(&g, &mut rng);
            let h = random_vf(&g, &mut rng);
            // ∂(fh) = f·∂h + h·∂f
            let lhs = derivation(&g, &f.mul(&h)).unwrap();
            let rhs = pointwise_product(&g, &f, &derivation(&g, &h).unwrap())
                .unwrap()
                .lin_comb(
                    cx(1.0),
                    &pointwise_product(&g, &h, &derivation(&g, &f).unwrap()).unwrap(),
                    cx(1.0),
                );
            assert!(max_diff(lhs.values(), rhs.values()) < 1e-14);

            let fw = pointwise_product(&g, &f, &w).unwrap();
            assert!(
                form_norm_sq(&g, &fw).unwrap().sqrt()
                    <= f.max_abs() * form_norm_sq(&g, &w).unwrap().sqrt() * (1.0 + 1e-14)
            );
        }
    }

    #[test]
    fn codifferential_is_negative_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 0..=4 {
            let g = LevelGraph::build(n).unwrap();
            let m = vertex_masses(&g);
            let w = random_form(&g, &mut rng);
            let dw = codifferential(&g, &m, &w).unwrap();
            for v in 0..g.num_vertices() {
                let mut phi = VertexFunction::zeros(&g);
                phi.values_mut()[v] = cx(1.0);
                let lhs = mass_inner(&m, &dw, &phi);
                let rhs = form_inner(&g, &w, &derivation(&g, &phi).unwrap()).unwrap();
                assert!((lhs + rhs).norm() < 1e-13 * (1.0 + rhs.norm()));
            }
        }
    }

    #[test]
    fn codifferential_examples() {
        let g = LevelGraph::build(0).unwrap();
        let m = vertex_masses(&g);
        let circ = EdgeForm::circulation(&g, 0);
        assert!(codifferential(&g, &m, &circ).unwrap().max_abs() < 1e-15);

        let u = VertexFunction::from_real(&g, &[1.0, -2.0, 0.5]).unwrap();
        let lap = codifferential(&g, &m, &derivation(&g, &u).unwrap()).unwrap();
        // (3/2)·(−L u) with L the triangle graph Laplacian.
        let uv = [1.0, -2.0, 0.5];
        for x in 0..3 {
            let lu: f64 = (0..3).filter(|&y| y != x).map(|y| uv[x] - uv[y]).sum();
            assert!((lap.values()[x].re + 1.5 * lu).abs() < 1e-14);
        }
    }

    #[test]
    fn pairing_density_examples() {
        let g = LevelGraph::build(2).unwrap();
        let m = vertex_masses(&g);
        let mut w = EdgeForm::zeros(&g);
        w.values_mut()[5] = cx(1.0);
        let e = g.edges()[5];
        let d = pairing_density(&g, &m, &w, &w).unwrap();
        let c = g.conductance();
        for x in 0..g.num_vertices() {
            let expect = if x == e.tail || x == e.head {
                c / (2.0 * m.values()[x])
            } else {
                0.0
            };
            assert!((d.values()[x].re - expect).abs() < 1e-14);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = random_form(&g, &mut rng);
        let gam = pairing_density(&g, &m, &w, &w).unwrap();
        let total: f64 = gam.values().iter().zip(m.values()).map(|(z, mx)| z.re * mx).sum();
        assert!((total - form_norm_sq(&g, &w).unwrap()).abs() < 1e-12 * total);
    }

    #[test]
    fn codifferential_product_rule() {
        // ∂*(f·a) = f·∂*a + Γ_H(a, conj ∂f)
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for n in 0..=4 {
            let g = LevelGraph::build(n).unwrap();
            let m = vertex_masses(&g);
            for _ in 0..5 {
                let f = random_vf(&g, &mut rng);
                let a = random_form(&g, &mut rng);
                let lhs = codifferential(&g, &m, &pointwise_product(&g, &f, &a).unwrap()).unwrap();
                let df_bar = derivation(&g, &f).unwrap().map(|z| z.conj());
                let rhs = f
                    .mul(&codifferential(&g, &m, &a).unwrap())
                    .lin_comb(cx(1.0), &pairing_density(&g, &m, &a, &df_bar).unwrap(), cx(1.0));
                let scale = lhs.max_abs().max(1.0);
                assert!(max_diff(lhs.values(), rhs.values()) <= 1e-13 * scale);
            }
        }
    }

    #[test]
    fn energy_laplacian_examples() {
        let g = LevelGraph::build(0).unwrap();
        let m = vertex_masses(&g);
        let lap = energy_laplacian(&g, &m).unwrap();
        assert_eq!(lap.hermiticity_residual(), 0.0);
        let (vals, _) = crate::spectral::dense_hermitian_eigen(&lap.to_dense());
        let expect = [-4.5, -4.5, 0.0];
        for (a, b) in vals.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 0..=4 {
            let g = LevelGraph::build(n).unwrap();
            let m = vertex_masses(&g);
            let lap = energy_laplacian(&g, &m).unwrap();
            let ones = vec![cx(1.0); g.num_vertices()];
            assert!(lap.apply_weighted(&ones).iter().all(|z| z.norm() < 1e-9));
            let u = random_vf(&g, &mut rng);
            let lu = VertexFunction::from_parts(n, lap.apply_weighted(u.values()));
            let e = energy(&g, &u).unwrap();
            assert!((mass_inner(&m, &lu, &u) + cx(e)).norm() <= 1e-12 * e);
            // Agrees with the composition ∂*∂.
            let comp = codifferential(&g, &m, &derivation(&g, &u).unwrap()).unwrap();
            assert!(max_diff(comp.values(), lu.values()) <= 1e-12 * comp.max_abs());
        }
    }

    #[test]
    fn hodge_decomposition_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in 0..=4 {
            let g = LevelGraph::build(n).unwrap();
            let m = vertex_masses(&g);
            let w = random_form(&g, &mut rng);
            let h = hodge_decompose(&g, &m, &w).unwrap();
            let ortho = form_inner(&g, &h.exact, &h.harmonic).unwrap().norm();
            assert!(ortho <= 1e-10 * form_norm_sq(&g, &w).unwrap());
            assert!(codifferential(&g, &m, &h.harmonic).unwrap().max_abs() <= 1e-10 * g.conductance());
            let back = h.exact.lin_comb(cx(1.0), &h.harmonic, cx(1.0));
            assert!(max_diff(back.values(), w.values()) < 1e-12);

            let u = random_vf(&g, &mut rng);
            let du = derivation(&g, &u).unwrap();
            assert!(hodge_decompose(&g, &m, &du).unwrap().harmonic.max_abs() < 1e-10);
        }
    }

    #[test]
    fn harmonic_form_dimension_matches_cycle_rank() {
        let g0 = LevelGraph::build(0).unwrap();
        assert_eq!(harmonic_form_dimension(&g0), 1);
        let m0 = vertex_masses(&g0);
        let circ = EdgeForm::circulation(&g0, 0);
        let h = hodge_decompose(&g0, &m0, &circ).unwrap();
        assert!(max_diff(h.harmonic.values(), circ.values()) < 1e-12);
        for n in 0..=4 {
            let g = LevelGraph::build(n).unwrap();
            assert_eq!(harmonic_form_dimension(&g), (3usize.pow(n as u32 + 1) - 1) / 2);
        }
    }

    #[test]
    fn conjugate_gradient_agrees_with_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = LevelGraph::build(4).unwrap();
        let mut b: Vec<f64> = (0..g.num_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mean = b.iter().sum::<f64>() / b.len() as f64;
        b.iter_mut().for_each(|x| *x -= mean);
        let zeros = vec![0.0; b.len()];
        let (dense, _) = dense_laplace_solve(&g, &b, &zeros).unwrap();
        let mut cg = cg_laplace_solve(&g, &b).unwrap();
        let shift = cg.iter().sum::<f64>() / cg.len() as f64;
        cg.iter_mut().for_each(|x| *x -= shift);
        for (a, c) in dense.iter().zip(&cg) {
            assert!((a - c).abs() < 1e-8);
        }
    }
}
