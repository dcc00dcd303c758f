//! Invariant suites behind the `verify` and `gauge-check` commands.
//!
//! Reports are deterministic for a given level and seed: no clocks, no
//! unordered iteration.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dirac::{assemble_dirac, dirac_square_check, DIRAC_SQUARE_TOL};
use crate::energy::{energy, harmonic_extend, HarmonicBasis, VertexFunction};
use crate::error::Result;
use crate::forms::{
    derivation, energy_laplacian, form_inner, form_norm_sq, harmonic_form_dimension, hodge_decompose,
};
use crate::kusuoka::{level_cell_table, vertex_masses, CellData, MassVector};
use crate::magnetic::{
    cycle_holonomies, gauge_transform, klmn_check, linear_gauge_residual, model_gap, peierls_gauge_residual,
    peierls_hamiltonian, random_complex_function, random_real_form, random_real_function, reduce_angle,
    uniform_flux, PotentialPair,
};
use crate::quadrature::{divergence_quadrature, kigami_quadrature, laplacian_quadrature, Linear, Quadratic};
use crate::spectral::{hermitian_eigen, EigenCount, EigenOptions};
use crate::structure::{LevelGraph, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub value: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub suite: &'static str,
    pub level: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    fn at_most(&mut self, name: &str, value: f64, tolerance: f64) {
        self.push(name, value, tolerance, value <= tolerance, String::new());
    }

    fn push(&mut self, name: &str, value: f64, tolerance: f64, ok: bool, detail: String) {
        self.checks.push(Check {
            name: name.to_string(),
            status: if ok { Status::Pass } else { Status::Fail },
            value,
            tolerance,
            detail,
        });
    }

    fn skip(&mut self, name: &str, detail: String) {
        self.checks.push(Check {
            name: name.to_string(),
            status: Status::Skip,
            value: 0.0,
            tolerance: 0.0,
            detail,
        });
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub trials: usize,
    pub eigen: EigenOptions,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            trials: 10,
            eigen: EigenOptions::default(),
        }
    }
}

struct Ctx {
    g: LevelGraph,
    m: MassVector,
    rng: ChaCha8Rng,
    opts: VerifyOptions,
}

impl Ctx {
    fn new(level: usize, seed: u64, opts: &VerifyOptions) -> Result<Self> {
        let g = LevelGraph::build(level)?;
        let m = vertex_masses(&g);
        Ok(Ctx {
            g,
            m,
            rng: ChaCha8Rng::seed_from_u64(seed),
            opts: opts.clone(),
        })
    }

    fn dense_ok(&self, dim: usize) -> bool {
        dim <= self.opts.eigen.dense_limit
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Full invariant suite at one level.
pub fn verify_suite(level: usize, seed: u64, opts: &VerifyOptions) -> Result<Report> {
    let mut ctx = Ctx::new(level, seed, opts)?;
    let mut r = Report {
        suite: "verify",
        level,
        seed,
        checks: Vec::new(),
    };
    energy_checks(&mut ctx, &mut r)?;
    kusuoka_checks(&ctx, &mut r)?;
    hodge_checks(&mut ctx, &mut r)?;
    dirac_checks(&ctx, &mut r)?;
    gauge_checks(&mut ctx, &mut r)?;
    klmn_checks(&mut ctx, &mut r)?;
    quadrature_checks(&ctx, &mut r)?;
    Ok(r)
}

/// Gauge covariance suite at one level.
pub fn gauge_suite(level: usize, seed: u64, opts: &VerifyOptions) -> Result<Report> {
    let mut ctx = Ctx::new(level, seed, opts)?;
    let mut r = Report {
        suite: "gauge-check",
        level,
        seed,
        checks: Vec::new(),
    };
    gauge_checks(&mut ctx, &mut r)?;
    Ok(r)
}

fn energy_checks(ctx: &mut Ctx, r: &mut Report) -> Result<()> {
    let fine = LevelGraph::build(ctx.g.level() + 1)?;
    let mut conservation = 0.0f64;
    let mut isometry = 0.0f64;
    for _ in 0..ctx.opts.trials {
        let u = random_complex_function(&ctx.g, &mut ctx.rng, 1.0);
        let e = energy(&ctx.g, &u)?;
        conservation = conservation.max(rel(energy(&fine, &harmonic_extend(&u, &fine)?)?, e));
        isometry = isometry.max(rel(form_norm_sq(&ctx.g, &derivation(&ctx.g, &u)?)?, e));
    }
    r.at_most("energy.extension_conserves_energy", conservation, 1e-12);
    r.at_most("energy.derivation_isometry", isometry, 1e-14);
    Ok(())
}

fn kusuoka_checks(ctx: &Ctx, r: &mut Report) -> Result<()> {
    let basis = HarmonicBasis::canonical();
    let n = ctx.g.level();
    let table = level_cell_table(n, &basis)?;
    let mut sum = [[0.0; 2]; 2];
    let mut trace = 0.0f64;
    let mut psd = 0.0f64;
    for c in &table {
        for i in 0..2 {
            for j in 0..2 {
                sum[i][j] += c.mass * c.z[i][j];
            }
        }
        trace = trace.max((c.z[0][0] + c.z[1][1] - 1.0).abs());
        psd = psd.max(-c.z_eigenvalues().0);
    }
    let identity = (sum[0][0] - 1.0)
        .abs()
        .max((sum[1][1] - 1.0).abs())
        .max(sum[0][1].abs())
        .max(sum[1][0].abs());
    r.at_most("kusuoka.mass_weighted_z_is_identity", identity, 1e-12);
    r.at_most("kusuoka.trace_z_is_one", trace, 1e-12);
    r.at_most("kusuoka.z_positive_semidefinite", psd.max(0.0), 1e-12);

    let children = level_cell_table(n + 1, &basis)?;
    let additivity = table
        .iter()
        .zip(children.chunks(3))
        .map(|(c, ch): (&CellData, &[CellData])| (c.mass - ch.iter().map(|x| x.mass).sum::<f64>()).abs())
        .fold(0.0, f64::max);
    r.at_most("kusuoka.mass_additivity", additivity, 1e-12);

    let corner = crate::kusuoka::cell_data(&Word::repeated(1, n)?, &basis);
    let want = 1.0 / (9f64.powi(n as i32) + 1.0);
    r.at_most("kusuoka.corner_lambda_min", (corner.z_eigenvalues().0 - want).abs(), 1e-10);
    Ok(())
}

fn hodge_checks(ctx: &mut Ctx, r: &mut Report) -> Result<()> {
    let g = &ctx.g;
    let mut orth = 0.0f64;
    for _ in 0..ctx.opts.trials.min(5) {
        let w = crate::forms::EdgeForm::from_fn(g, |_| {
            use rand::Rng;
            Complex64::new(ctx.rng.gen_range(-1.0..1.0), ctx.rng.gen_range(-1.0..1.0))
        });
        let d = hodge_decompose(g, &ctx.m, &w)?;
        let scale = form_norm_sq(g, &w)?;
        orth = orth.max(form_inner(g, &d.exact, &d.harmonic)?.norm() / scale);
    }
    r.at_most("hodge.orthogonality", orth, 1e-10);
    let dim = harmonic_form_dimension(g);
    let want = g.cycle_rank();
    r.push(
        "hodge.harmonic_dimension",
        dim as f64,
        want as f64,
        dim == want,
        format!("expected |E|-|V|+1 = {want}"),
    );
    Ok(())
}

fn dirac_checks(ctx: &Ctx, r: &mut Report) -> Result<()> {
    let d = assemble_dirac(&ctx.g, &ctx.m)?;
    r.at_most("dirac.hermiticity", d.matrix().hermiticity_residual(), 1e-15);
    let sq = dirac_square_check(&d);
    r.push(
        "dirac.square_block_diagonal",
        sq.max_deviation(),
        DIRAC_SQUARE_TOL,
        sq.passed,
        format!("largest entry {:e}", sq.scale),
    );
    if !ctx.dense_ok(d.matrix().dim()) {
        r.skip("dirac.chiral_symmetry", "above dense limit".into());
        r.skip("dirac.kernel_dimension", "above dense limit".into());
        return Ok(());
    }
    let s = hermitian_eigen(d.matrix(), EigenCount::All, &ctx.opts.eigen)?.eigenvalues;
    let k = s.len();
    let chiral = (0..k).map(|i| (s[i] + s[k - 1 - i]).abs()).fold(0.0, f64::max);
    r.at_most("dirac.chiral_symmetry", chiral, 1e-9);
    let tol = 1e-8 * d.matrix().norm_bound();
    let ker = s.iter().filter(|x| x.abs() <= tol).count();
    let want = d.expected_kernel_dimension();
    r.push(
        "dirac.kernel_dimension",
        ker as f64,
        want as f64,
        ker == want,
        format!("expected 1 + |E|-|V|+1 = {want}"),
    );
    Ok(())
}

fn gauge_checks(ctx: &mut Ctx, r: &mut Report) -> Result<()> {
    let (g, m) = (&ctx.g, &ctx.m);
    let mut worst = 0.0f64;
    let mut worst_rel = 0.0f64;
    for _ in 0..ctx.opts.trials {
        let theta = random_real_form(g, &mut ctx.rng, PI);
        let v = random_real_function(g, &mut ctx.rng, 1.0);
        let lambda = random_real_function(g, &mut ctx.rng, PI);
        let res = peierls_gauge_residual(g, m, &theta, &v, &lambda)?;
        let scale = peierls_hamiltonian(g, m, &theta, &v)?.norm_bound();
        worst = worst.max(res);
        worst_rel = worst_rel.max(res / scale);
    }
    r.push(
        "gauge.peierls_covariance",
        worst,
        1e-12,
        worst <= 1e-12,
        format!("relative to operator norm {worst_rel:e}"),
    );

    let mut hol = 0.0f64;
    let theta = random_real_form(g, &mut ctx.rng, PI);
    let lambda = random_real_function(g, &mut ctx.rng, 5.0);
    let moved = gauge_transform(g, &theta, &lambda)?;
    for ((_, a), (_, b)) in cycle_holonomies(g, &theta)?.iter().zip(&cycle_holonomies(g, &moved)?) {
        hol = hol.max(reduce_angle(a - b).abs());
    }
    r.at_most("gauge.holonomy_invariance", hol, 1e-12);

    if ctx.dense_ok(g.num_vertices()) {
        let v = random_real_function(g, &mut ctx.rng, 1.0);
        let a = hermitian_eigen(&peierls_hamiltonian(g, m, &theta, &v)?, EigenCount::All, &ctx.opts.eigen)?;
        let b = hermitian_eigen(&peierls_hamiltonian(g, m, &moved, &v)?, EigenCount::All, &ctx.opts.eigen)?;
        let diff = a
            .eigenvalues
            .iter()
            .zip(&b.eigenvalues)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        r.at_most("gauge.equal_holonomy_spectra", diff, 1e-9);
    } else {
        r.skip("gauge.equal_holonomy_spectra", "above dense limit".into());
    }

    let p = PotentialPair::magnetic(g, random_real_form(g, &mut ctx.rng, 1.0))?;
    let lambda = random_real_function(g, &mut ctx.rng, 1.0);
    let ratio = linear_gauge_residual(g, m, &p, &lambda, 1e-2)? / linear_gauge_residual(g, m, &p, &lambda, 5e-3)?;
    r.push(
        "gauge.linear_residual_halving_ratio",
        ratio,
        4.0,
        (3.5..=4.5).contains(&ratio),
        "r(t)/r(t/2) at t = 1e-2 within [3.5, 4.5]".into(),
    );
    let gap = model_gap(g, m, &p, 1e-2)? / model_gap(g, m, &p, 5e-3)?;
    r.push(
        "gauge.linear_vs_peierls_halving_ratio",
        gap,
        4.0,
        (3.5..=4.5).contains(&gap),
        "gap(t)/gap(t/2) at t = 1e-2 within [3.5, 4.5]".into(),
    );

    let g0 = LevelGraph::build(0)?;
    let m0 = vertex_masses(&g0);
    let s = hermitian_eigen(
        &peierls_hamiltonian(&g0, &m0, &uniform_flux(&g0, PI), &VertexFunction::zeros(&g0))?,
        EigenCount::All,
        &ctx.opts.eigen,
    )?;
    let dev = s
        .eigenvalues
        .iter()
        .zip([1.5, 1.5, 6.0])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    r.at_most("gauge.level0_flux_pi_spectrum", dev, 1e-10);
    Ok(())
}

fn klmn_checks(ctx: &mut Ctx, r: &mut Report) -> Result<()> {
    let (g, m) = (&ctx.g, &ctx.m);
    let mut failures = 0usize;
    let mut worst = 0.0f64;
    for _ in 0..ctx.opts.trials {
        let p = PotentialPair::new(
            g,
            random_real_form(g, &mut ctx.rng, 2.0),
            random_real_function(g, &mut ctx.rng, 1.0),
        )?;
        let f = random_complex_function(g, &mut ctx.rng, 1.0);
        for eps in [0.1, 1.0] {
            let k = klmn_check(g, m, &p, &f, eps)?;
            worst = worst.max(k.lhs / k.rhs);
            failures += usize::from(!k.pass);
        }
    }
    r.push(
        "klmn.inequality",
        worst,
        1.0,
        failures == 0,
        format!("{failures} failures; value is the largest lhs/rhs"),
    );
    Ok(())
}

fn quadrature_checks(ctx: &Ctx, r: &mut Report) -> Result<()> {
    let basis = HarmonicBasis::canonical();
    let n = ctx.g.level();
    let k = kigami_quadrature(&Linear { c: [1.0, 0.0], offset: 0.0 }, 1, &basis)?;
    r.at_most("quadrature.kigami_level1_linear", (k - 0.82).abs(), 1e-10);
    let c = Linear { c: [0.7, -0.2], offset: 0.1 };
    let d = Linear { c: [1.5, 2.0], offset: -4.0 };
    let one = Linear { c: [0.0, 0.0], offset: 1.0 };
    let dq = divergence_quadrature(&c, &one, &d, n, &basis)?;
    r.at_most("quadrature.divergence_linear", (dq + (0.7 * 1.5 - 0.2 * 2.0)).abs(), 1e-12);
    let worst = Word::all_of_length(n.min(6))
        .iter()
        .map(|w| (laplacian_quadrature(&Quadratic::norm_squared(), w, &basis) - 2.0).abs())
        .fold(0.0, f64::max);
    r.at_most("quadrature.laplacian_norm_squared", worst, 1e-12);

    let lap = energy_laplacian(&ctx.g, &ctx.m)?;
    r.at_most("laplacian.hermiticity", lap.hermiticity_residual(), 1e-15);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verify_passes_and_is_deterministic() {
        for n in 0..=3 {
            let a = verify_suite(n, 7, &VerifyOptions::default()).unwrap();
            let fails: Vec<_> = a.failures().collect();
            assert!(a.passed(), "level {n}: {fails:?}");
            assert!(a.checks.iter().all(|c| c.status == Status::Pass));
        }
        let a = verify_suite(2, 7, &VerifyOptions::default()).unwrap().to_json().unwrap();
        let b = verify_suite(2, 7, &VerifyOptions::default()).unwrap().to_json().unwrap();
        assert_eq!(a, b);
        let c = verify_suite(2, 8, &VerifyOptions::default()).unwrap().to_json().unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn gauge_suite_passes() {
        let r = gauge_suite(2, 1, &VerifyOptions::default()).unwrap();
        assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
        assert_eq!(r.suite, "gauge-check");
    }

    #[test]
    fn dense_limit_skips_spectral_checks() {
        let opts = VerifyOptions {
            trials: 2,
            eigen: EigenOptions {
                dense_limit: 10,
                ..EigenOptions::default()
            },
        };
        let r = verify_suite(1, 0, &opts).unwrap();
        assert!(r.passed());
        assert!(r.checks.iter().any(|c| c.status == Status::Skip));
    }
}
