//! C ABI for `sgcalc`.
//!
//! Graphs and operators are opaque heap handles released with the matching
//! `*_free`. Every fallible call returns an [`SgStatus`]; the message of the
//! most recent failure on the calling thread is available from
//! [`sg_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sgcalc::dirac::{assemble_dirac, form_laplacian};
use sgcalc::forms::energy_laplacian;
use sgcalc::kusuoka::vertex_masses;
use sgcalc::magnetic::{linear_hamiltonian, peierls_hamiltonian, uniform_flux, PotentialPair};
use sgcalc::operator::OperatorMatrix;
use sgcalc::spectral::{hermitian_eigen, EigenCount, EigenOptions};
use sgcalc::structure::{build_level_graph_with_limit, LevelGraph};
use sgcalc::verify::{verify_suite, VerifyOptions};
use sgcalc::{energy::VertexFunction, SgError};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SgStatus {
    Ok = 0,
    InvalidArgument = 1,
    ResourceLimit = 2,
    Numerical = 3,
    Parse = 4,
    Io = 5,
    NullPointer = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SgOperatorKind {
    Laplacian = 0,
    FormLaplacian = 1,
    Dirac = 2,
    MagneticLinear = 3,
    MagneticPeierls = 4,
}

/// Opaque level-n graph.
pub struct SgGraph {
    graph: LevelGraph,
}

/// Opaque Hermitian operator matrix.
pub struct SgOperator {
    matrix: OperatorMatrix,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut e = e.borrow_mut();
        e.clear();
        e.extend(msg.bytes().filter(|&b| b != 0));
    });
}

fn status_of(err: &SgError) -> SgStatus {
    match err {
        SgError::ResourceLimit { .. } => SgStatus::ResourceLimit,
        SgError::NoConvergence { .. } | SgError::NotHermitian { .. } => SgStatus::Numerical,
        SgError::Parse { .. } | SgError::Json(_) | SgError::Csv(_) => SgStatus::Parse,
        SgError::Io { .. } => SgStatus::Io,
        _ => SgStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (SgStatus, String)>) -> SgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SgStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SgStatus::Panic
        }
    }
}

fn lift<T>(r: sgcalc::Result<T>) -> Result<T, (SgStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (SgStatus, String) {
    (SgStatus::NullPointer, format!("{what} is null"))
}

/// Copies the last error message into `buf` (NUL-terminated, truncated to
/// `len`) and returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn sg_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = e.len().min(len - 1);
            ptr::copy_nonoverlapping(e.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        e.len()
    })
}

/// Static NUL-terminated version string.
#[no_mangle]
pub extern "C" fn sg_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Builds the level-`level` graph, refusing levels above `max_level`.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn sg_graph_new(level: usize, max_level: usize, out: *mut *mut SgGraph) -> SgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let graph = lift(build_level_graph_with_limit(level, max_level))?;
        *out = Box::into_raw(Box::new(SgGraph { graph }));
        Ok(())
    })
}

/// # Safety
/// `g` must be null or a handle from [`sg_graph_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sg_graph_free(g: *mut SgGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live graph handle; outputs must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn sg_graph_counts(
    g: *const SgGraph,
    level: *mut usize,
    vertices: *mut usize,
    edges: *mut usize,
) -> SgStatus {
    guard(|| {
        let g = g.as_ref().ok_or_else(|| null("graph"))?;
        if let Some(l) = level.as_mut() {
            *l = g.graph.level();
        }
        if let Some(v) = vertices.as_mut() {
            *v = g.graph.num_vertices();
        }
        if let Some(e) = edges.as_mut() {
            *e = g.graph.num_edges();
        }
        Ok(())
    })
}

/// Assembles an operator on `g`. `flux` is the holonomy put on every cell
/// for the magnetic kinds and ignored otherwise.
///
/// # Safety
/// `g` must be a live graph handle and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn sg_operator_new(
    g: *const SgGraph,
    kind: SgOperatorKind,
    flux: f64,
    out: *mut *mut SgOperator,
) -> SgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let g = &g.as_ref().ok_or_else(|| null("graph"))?.graph;
        if !flux.is_finite() {
            return Err((SgStatus::InvalidArgument, "flux must be finite".into()));
        }
        let m = vertex_masses(g);
        let matrix = lift(match kind {
            SgOperatorKind::Laplacian => energy_laplacian(g, &m),
            SgOperatorKind::FormLaplacian => form_laplacian(g, &m),
            SgOperatorKind::Dirac => assemble_dirac(g, &m).map(|d| d.into_matrix()),
            SgOperatorKind::MagneticLinear => {
                let p = PotentialPair::magnetic(g, uniform_flux(g, flux));
                p.and_then(|p| linear_hamiltonian(g, &m, &p))
            }
            SgOperatorKind::MagneticPeierls => {
                peierls_hamiltonian(g, &m, &uniform_flux(g, flux), &VertexFunction::zeros(g))
            }
        })?;
        *out = Box::into_raw(Box::new(SgOperator { matrix }));
        Ok(())
    })
}

/// # Safety
/// `op` must be null or a handle from [`sg_operator_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sg_operator_free(op: *mut SgOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Matrix dimension, or 0 for a null handle.
///
/// # Safety
/// `op` must be null or a live operator handle.
#[no_mangle]
pub unsafe extern "C" fn sg_operator_dim(op: *const SgOperator) -> usize {
    op.as_ref().map_or(0, |o| o.matrix.dim())
}

/// Writes the `count` smallest eigenvalues (all when `count` is 0) in
/// ascending order into `values`. `written` receives the number required;
/// when `capacity` is smaller, nothing is written and the status is
/// `BufferTooSmall`.
///
/// # Safety
/// `op` must be a live operator handle, `values` valid for `capacity`
/// doubles, `written` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn sg_operator_eigenvalues(
    op: *const SgOperator,
    count: usize,
    tol: f64,
    values: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> SgStatus {
    guard(|| {
        let op = op.as_ref().ok_or_else(|| null("operator"))?;
        let written = written.as_mut().ok_or_else(|| null("written"))?;
        if !(tol > 0.0) {
            return Err((SgStatus::InvalidArgument, "tol must be positive".into()));
        }
        let dim = op.matrix.dim();
        let need = if count == 0 { dim } else { count.min(dim) };
        *written = need;
        if capacity < need {
            return Err((SgStatus::BufferTooSmall, format!("need room for {need} values")));
        }
        if values.is_null() && need > 0 {
            return Err(null("values"));
        }
        let which = if count == 0 {
            EigenCount::All
        } else {
            EigenCount::Smallest(need)
        };
        let opts = EigenOptions {
            tol,
            ..EigenOptions::default()
        };
        let r = lift(hermitian_eigen(&op.matrix, which, &opts))?;
        ptr::copy_nonoverlapping(r.eigenvalues.as_ptr(), values, need);
        Ok(())
    })
}

/// Runs the invariant suite; `passed` receives 1 if every check passed.
///
/// # Safety
/// `passed` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn sg_verify(level: usize, seed: u64, passed: *mut c_int) -> SgStatus {
    guard(|| {
        let passed = passed.as_mut().ok_or_else(|| null("passed"))?;
        let r = lift(verify_suite(level, seed, &VerifyOptions::default()))?;
        *passed = c_int::from(r.passed());
        if let Some(f) = r.failures().next() {
            set_error(&format!("{} = {:e} exceeds {:e}", f.name, f.value, f.tolerance));
        }
        Ok(())
    })
}
