use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use sgcalc::dirac::{assemble_dirac, form_laplacian};
use sgcalc::energy::HarmonicBasis;
use sgcalc::forms::{energy_laplacian, EdgeForm};
use sgcalc::io;
use sgcalc::kusuoka::{level_cell_table_with_limit, vertex_masses};
use sgcalc::magnetic::{linear_hamiltonian, peierls_hamiltonian, uniform_flux, PotentialPair};
use sgcalc::operator::OperatorMatrix;
use sgcalc::spectral::{hermitian_eigen, EigenCount, EigenOptions, DEFAULT_EIGEN_TOL};
use sgcalc::structure::{build_level_graph_with_limit, LevelGraph, DEFAULT_MAX_LEVEL};
use sgcalc::verify::{gauge_suite, verify_suite, Report, VerifyOptions};
use sgcalc::{Result, SgError};

/// Vector analysis, Dirac and magnetic operators on Sierpinski gasket graphs.
#[derive(Parser)]
#[command(name = "sgcalc", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Graph approximation level.
    #[arg(long, global = true, default_value_t = 2)]
    level: usize,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Eigensolver tolerance, relative to the operator norm bound.
    #[arg(long, global = true, default_value_t = DEFAULT_EIGEN_TOL)]
    tol: f64,
    /// Refuse levels above this.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_LEVEL)]
    max_level: usize,
    /// Write the artifact here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Vertices, oriented edges and cells as JSON.
    Graph,
    /// Per-cell Kusuoka mass and Z-matrix as CSV.
    Kusuoka {
        /// Rotate the harmonic basis by this angle.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        rotation: f64,
    },
    /// Eigenvalues of one operator as JSON.
    Spectrum {
        #[arg(long = "op", value_enum)]
        op: Op,
        #[command(flatten)]
        field: Field,
        /// Only this many eigenvalues (smallest unless --largest).
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, requires = "count")]
        largest: bool,
    },
    /// Peierls spectra over a uniform flux grid as CSV.
    FluxSweep {
        #[arg(long, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, allow_hyphen_values = true)]
        to: f64,
        #[arg(long)]
        steps: usize,
        /// Electric potential CSV (`id,value`).
        #[arg(long)]
        electric: Option<PathBuf>,
    },
    /// Gauge covariance suite; exit 0 iff every check passes.
    GaugeCheck {
        #[arg(long, default_value_t = 10)]
        trials: usize,
    },
    /// Full invariant suite; exit 0 iff every check passes.
    Verify {
        #[arg(long, default_value_t = 10)]
        trials: usize,
    },
}

#[derive(Args)]
struct Field {
    /// Holonomy carried by every level-n cell.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    flux: f64,
    /// Magnetic potential CSV (`tail,head,value`).
    #[arg(long)]
    magnetic: Option<PathBuf>,
    /// Electric potential CSV (`id,value`).
    #[arg(long)]
    electric: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Op {
    Laplacian,
    FormLaplacian,
    Dirac,
    MagneticLinear,
    MagneticPeierls,
}

impl Op {
    fn name(self) -> &'static str {
        match self {
            Op::Laplacian => "laplacian",
            Op::FormLaplacian => "form-laplacian",
            Op::Dirac => "dirac",
            Op::MagneticLinear => "magnetic-linear",
            Op::MagneticPeierls => "magnetic-peierls",
        }
    }
}

enum Outcome {
    Done,
    ChecksFailed(Report),
}

fn eigen_options(c: &Common) -> Result<EigenOptions> {
    if !(c.tol > 0.0) {
        return Err(SgError::InvalidArgument(format!("--tol must be positive, got {}", c.tol)));
    }
    Ok(EigenOptions {
        tol: c.tol,
        seed: c.seed,
        ..EigenOptions::default()
    })
}

fn potential(g: &LevelGraph, field: &Field) -> Result<PotentialPair> {
    let mut p = io::load_potential(g, field.magnetic.as_deref(), field.electric.as_deref())?;
    if field.flux != 0.0 {
        p.a = p.a.lin_comb(Complex64::new(1.0, 0.0), &uniform_flux(g, field.flux), Complex64::new(1.0, 0.0));
    }
    Ok(p)
}

fn operator(g: &LevelGraph, op: Op, field: &Field) -> Result<OperatorMatrix> {
    let m = vertex_masses(g);
    match op {
        Op::Laplacian => energy_laplacian(g, &m),
        Op::FormLaplacian => form_laplacian(g, &m),
        Op::Dirac => Ok(assemble_dirac(g, &m)?.into_matrix()),
        Op::MagneticLinear => linear_hamiltonian(g, &m, &potential(g, field)?),
        Op::MagneticPeierls => {
            let p = potential(g, field)?;
            peierls_hamiltonian(g, &m, &p.a, &p.v)
        }
    }
}

fn sweep_grid(from: f64, to: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 || !from.is_finite() || !to.is_finite() {
        return Err(SgError::InvalidArgument("flux sweep needs --steps >= 1 and finite bounds".into()));
    }
    if steps == 1 {
        return Ok(vec![from]);
    }
    Ok((0..steps)
        .map(|i| from + (to - from) * i as f64 / (steps - 1) as f64)
        .collect())
}

fn run(cli: &Cli) -> Result<Outcome> {
    let c = &cli.common;
    let out = c.output.as_deref();
    let g = || build_level_graph_with_limit(c.level, c.max_level);
    match &cli.command {
        Command::Graph => io::write_output(out, &io::graph_json(&g()?)?)?,
        Command::Kusuoka { rotation } => {
            let table = level_cell_table_with_limit(c.level, &HarmonicBasis::rotated(*rotation), c.max_level)?;
            io::write_output(out, &io::cell_table_csv(&table))?
        }
        Command::Spectrum {
            op,
            field,
            count,
            largest,
        } => {
            let g = g()?;
            let opts = eigen_options(c)?;
            let a = operator(&g, *op, field)?;
            let which = match (count, largest) {
                (None, _) => EigenCount::All,
                (Some(k), false) => EigenCount::Smallest(*k),
                (Some(k), true) => EigenCount::Largest(*k),
            };
            let r = hermitian_eigen(&a, which, &opts)?;
            io::write_output(out, &io::spectrum_json(c.level, op.name(), &r, opts.tol)?)?
        }
        Command::FluxSweep {
            from,
            to,
            steps,
            electric,
        } => {
            let g = g()?;
            let opts = eigen_options(c)?;
            let m = vertex_masses(&g);
            let v = io::load_potential(&g, None, electric.as_deref())?.v;
            let mut rows = Vec::with_capacity(*steps);
            for flux in sweep_grid(*from, *to, *steps)? {
                let theta: EdgeForm = uniform_flux(&g, flux);
                let h = peierls_hamiltonian(&g, &m, &theta, &v)?;
                rows.push((flux, hermitian_eigen(&h, EigenCount::All, &opts)?.eigenvalues));
            }
            io::write_output(out, &io::flux_sweep_csv(&rows))?
        }
        Command::GaugeCheck { trials } | Command::Verify { trials } => {
            if c.level > c.max_level {
                return Err(SgError::ResourceLimit {
                    level: c.level,
                    max: c.max_level,
                });
            }
            let opts = VerifyOptions {
                trials: *trials,
                eigen: eigen_options(c)?,
            };
            let report = if matches!(cli.command, Command::Verify { .. }) {
                verify_suite(c.level, c.seed, &opts)?
            } else {
                gauge_suite(c.level, c.seed, &opts)?
            };
            io::write_output(out, &report.to_json()?)?;
            if !report.passed() {
                return Ok(Outcome::ChecksFailed(report));
            }
        }
    }
    Ok(Outcome::Done)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::ChecksFailed(r)) => {
            for f in r.failures() {
                eprintln!("sgcalc: check failed: {} = {:e} (tolerance {:e}) {}", f.name, f.value, f.tolerance, f.detail);
            }
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("sgcalc: {e}");
            if e.is_numerical() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
