//! Magnetic Schrödinger operators.
//!
//! Two discretizations of `(−i∂ − a)†(−i∂ − a) + V` are provided. The linear
//! model uses `(−i∂ − a·)f(e) = −i(f(h) − f(t)) − a(e)·(f(t) + f(h))/2`; the
//! Peierls model puts the phase `e^{−iθ(x→y)}` on each hop, which makes
//! `H^{θ+∂λ} = U H^θ U†` with `U = diag(e^{iλ})` hold exactly.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::energy::{energy, VertexFunction};
use crate::error::{Result, SgError};
use crate::forms::{
    derivation, edge_basis, form_inner, form_norm_sq, hodge_decompose, mass_inner, pairing_density,
    pointwise_product, vertex_basis, EdgeForm,
};
use crate::kusuoka::MassVector;
use crate::operator::{BasisLabels, HermitianBuilder, OperatorMatrix};
use crate::spectral::operator_norm_diff;
use crate::structure::{LevelGraph, Word};

/// Magnetic potential `a` (real 1-form) and electric potential `V` (real).
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialPair {
    pub a: EdgeForm,
    pub v: VertexFunction,
}

impl PotentialPair {
    pub fn new(g: &LevelGraph, a: EdgeForm, v: VertexFunction) -> Result<Self> {
        a.check_on(g)?;
        v.check_on(g)?;
        if !a.is_real() {
            return Err(SgError::InvalidArgument("magnetic potential must be real".into()));
        }
        if v.values().iter().any(|x| x.im != 0.0) {
            return Err(SgError::InvalidArgument("electric potential must be real".into()));
        }
        Ok(PotentialPair { a, v })
    }

    pub fn zero(g: &LevelGraph) -> Self {
        PotentialPair {
            a: EdgeForm::zeros(g),
            v: VertexFunction::zeros(g),
        }
    }

    pub fn magnetic(g: &LevelGraph, a: EdgeForm) -> Result<Self> {
        Self::new(g, a, VertexFunction::zeros(g))
    }

    pub fn scaled(&self, t: f64) -> Self {
        PotentialPair {
            a: self.a.map(|x| x * t),
            v: self.v.clone(),
        }
    }
}

fn basis(g: &LevelGraph, m: &MassVector) -> BasisLabels {
    BasisLabels {
        blocks: vec![vertex_basis(g, m)],
    }
}

fn add_potential(b: &mut HermitianBuilder, v: &VertexFunction) {
    for (x, val) in v.values().iter().enumerate() {
        b.add(x, x, Complex64::new(val.re, 0.0));
    }
}

/// `(−i∂ − a·)f` as an edge form.
pub fn magnetic_derivative(g: &LevelGraph, a: &EdgeForm, f: &VertexFunction) -> Result<EdgeForm> {
    let df = derivation(g, f)?;
    let af = pointwise_product(g, f, a)?;
    Ok(df.lin_comb(Complex64::new(0.0, -1.0), &af, Complex64::new(-1.0, 0.0)))
}

/// `E^{a,V}(f, h) = ⟨(−i∂−a)f, (−i∂−a)h⟩ + ⟨Vf, h⟩_m`.
pub fn magnetic_form(
    g: &LevelGraph,
    m: &MassVector,
    p: &PotentialPair,
    f: &VertexFunction,
    h: &VertexFunction,
) -> Result<Complex64> {
    let df = magnetic_derivative(g, &p.a, f)?;
    let dh = magnetic_derivative(g, &p.a, h)?;
    Ok(form_inner(g, &df, &dh)? + mass_inner(m, &p.v.mul(f), h))
}

pub fn linear_hamiltonian(g: &LevelGraph, m: &MassVector, p: &PotentialPair) -> Result<OperatorMatrix> {
    m.check_on(g)?;
    p.a.check_on(g)?;
    p.v.check_on(g)?;
    let c = g.conductance();
    let mv = m.values();
    let mut b = HermitianBuilder::new(g.num_vertices());
    for (e, av) in g.edges().iter().zip(p.a.values()) {
        let half = av * 0.5;
        let ends = [
            (e.tail, Complex64::new(0.0, 1.0) - half),
            (e.head, Complex64::new(0.0, -1.0) - half),
        ];
        for &(x, dx) in &ends {
            for &(y, dy) in &ends {
                b.add(x, y, dx.conj() * dy * c / (mv[x] * mv[y]).sqrt());
            }
        }
    }
    add_potential(&mut b, &p.v);
    Ok(b.finish("magnetic-linear", basis(g, m)))
}

pub fn peierls_hamiltonian(
    g: &LevelGraph,
    m: &MassVector,
    theta: &EdgeForm,
    v: &VertexFunction,
) -> Result<OperatorMatrix> {
    m.check_on(g)?;
    theta.check_on(g)?;
    v.check_on(g)?;
    if !theta.is_real() {
        return Err(SgError::InvalidArgument("edge phases must be real".into()));
    }
    let c = g.conductance();
    let mv = m.values();
    let mut b = HermitianBuilder::new(g.num_vertices());
    for (e, th) in g.edges().iter().zip(theta.values()) {
        let (t, h) = (e.tail, e.head);
        b.add(t, t, Complex64::new(c / mv[t], 0.0));
        b.add(h, h, Complex64::new(c / mv[h], 0.0));
        let hop = -Complex64::from_polar(c / (mv[t] * mv[h]).sqrt(), -th.re);
        b.add(t, h, hop);
        b.add(h, t, hop.conj());
    }
    add_potential(&mut b, v);
    Ok(b.finish("magnetic-peierls", basis(g, m)))
}

/// `a + ∂λ`.
pub fn gauge_transform(g: &LevelGraph, a: &EdgeForm, lambda: &VertexFunction) -> Result<EdgeForm> {
    let dl = derivation(g, lambda)?;
    Ok(a.lin_comb(Complex64::new(1.0, 0.0), &dl, Complex64::new(1.0, 0.0)))
}

/// Diagonal of `U = diag(e^{iλ(x)})`.
pub fn gauge_phases(lambda: &VertexFunction) -> Vec<Complex64> {
    lambda
        .values()
        .iter()
        .map(|l| Complex64::from_polar(1.0, l.re))
        .collect()
}

/// Divergence-free part of `a`.
pub fn coulomb_project(g: &LevelGraph, m: &MassVector, a: &EdgeForm) -> Result<EdgeForm> {
    if !a.is_real() {
        return Err(SgError::InvalidArgument("coulomb_project needs a real form".into()));
    }
    let d = hodge_decompose(g, m, a)?;
    Ok(d.harmonic.map(|x| Complex64::new(x.re, 0.0)))
}

#[derive(Clone, Debug, Serialize)]
pub struct KlmnReport {
    pub epsilon: f64,
    /// `|M(f,f)|`.
    pub lhs: f64,
    /// `ε²E(f) + C‖f‖²_m`.
    pub rhs: f64,
    pub constant: f64,
    pub energy: f64,
    pub mass_norm_sq: f64,
    pub max_gamma: f64,
    pub pass: bool,
}

/// The form-boundedness inequality `|M(f,f)| ≤ ε²E(f) + C‖f‖²_m`.
pub fn klmn_check(
    g: &LevelGraph,
    m: &MassVector,
    p: &PotentialPair,
    f: &VertexFunction,
    epsilon: f64,
) -> Result<KlmnReport> {
    if !(epsilon > 0.0) {
        return Err(SgError::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    let df = derivation(g, f)?;
    let af = pointwise_product(g, f, &p.a)?;
    let cross = Complex64::new(0.0, 1.0) * form_inner(g, &df, &af)?;
    let mv = mass_inner(m, &p.v.mul(f), f).re;
    let big_m = 2.0 * cross.re + form_norm_sq(g, &af)? + mv;
    let gamma = pairing_density(g, m, &p.a, &p.a)?;
    let max_gamma = gamma.values().iter().map(|x| x.re).fold(0.0, f64::max);
    let max_v = p.v.max_abs();
    let constant = max_v + (1.0 + epsilon.powi(-2)) * max_gamma;
    let e = energy(g, f)?;
    let nf = mass_inner(m, f, f).re;
    let rhs = epsilon * epsilon * e + constant * nf;
    let lhs = big_m.abs();
    Ok(KlmnReport {
        epsilon,
        lhs,
        rhs,
        constant,
        energy: e,
        mass_norm_sq: nf,
        max_gamma,
        pass: lhs <= rhs * (1.0 + 1e-12),
    })
}

/// Oriented sum of `θ` around each cell, unreduced.
pub fn cycle_holonomies(g: &LevelGraph, theta: &EdgeForm) -> Result<Vec<(Word, f64)>> {
    theta.check_on(g)?;
    let tv = theta.values();
    Ok(g.cells()
        .iter()
        .enumerate()
        .map(|(k, cell)| (cell.word.clone(), (0..3).map(|j| tv[3 * k + j].re).sum()))
        .collect())
}

/// Representative of `x` mod 2π in `(−π, π]`.
pub fn reduce_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// `θ = Φ/3` on every edge, so every cell carries holonomy `Φ`.
pub fn uniform_flux(g: &LevelGraph, flux: f64) -> EdgeForm {
    EdgeForm::from_fn(g, |_| Complex64::new(flux / 3.0, 0.0))
}

/// `‖H^{t(a+∂λ)} − U_t H^{ta} U_t†‖` for the linear model, `U_t = diag(e^{itλ})`.
pub fn linear_gauge_residual(
    g: &LevelGraph,
    m: &MassVector,
    p: &PotentialPair,
    lambda: &VertexFunction,
    t: f64,
) -> Result<f64> {
    let shifted = PotentialPair {
        a: gauge_transform(g, &p.a, lambda)?.map(|x| x * t),
        v: p.v.clone(),
    };
    let lhs = linear_hamiltonian(g, m, &shifted)?;
    let base = linear_hamiltonian(g, m, &p.scaled(t))?;
    let rhs = base.conjugate_by_phases(&gauge_phases(&lambda.map(|x| x * t)));
    operator_norm_diff(&lhs, &rhs)
}

/// `‖H^{θ+∂λ} − U H^θ U†‖` for the Peierls model.
pub fn peierls_gauge_residual(
    g: &LevelGraph,
    m: &MassVector,
    theta: &EdgeForm,
    v: &VertexFunction,
    lambda: &VertexFunction,
) -> Result<f64> {
    let lhs = peierls_hamiltonian(g, m, &gauge_transform(g, theta, lambda)?, v)?;
    let rhs = peierls_hamiltonian(g, m, theta, v)?.conjugate_by_phases(&gauge_phases(lambda));
    operator_norm_diff(&lhs, &rhs)
}

/// `‖H_linear(t·a) − H_peierls(t·a)‖`.
pub fn model_gap(g: &LevelGraph, m: &MassVector, p: &PotentialPair, t: f64) -> Result<f64> {
    let scaled = p.scaled(t);
    let lin = linear_hamiltonian(g, m, &scaled)?;
    let pei = peierls_hamiltonian(g, m, &scaled.a, &scaled.v)?;
    operator_norm_diff(&lin, &pei)
}

/// Real 1-form with independent entries uniform in `[−amp, amp]`.
pub fn random_real_form(g: &LevelGraph, rng: &mut impl Rng, amp: f64) -> EdgeForm {
    EdgeForm::from_fn(g, |_| Complex64::new(rng.gen_range(-amp..=amp), 0.0))
}

pub fn random_real_function(g: &LevelGraph, rng: &mut impl Rng, amp: f64) -> VertexFunction {
    VertexFunction::from_fn(g, |_| Complex64::new(rng.gen_range(-amp..=amp), 0.0))
}

pub fn random_complex_function(g: &LevelGraph, rng: &mut impl Rng, amp: f64) -> VertexFunction {
    VertexFunction::from_fn(g, |_| {
        Complex64::new(rng.gen_range(-amp..=amp), rng.gen_range(-amp..=amp))
    })
}

/// Edge-space labels, for exporting potentials alongside operators.
pub fn potential_basis(g: &LevelGraph) -> BasisLabels {
    BasisLabels {
        blocks: vec![edge_basis(g)],
    }
}
