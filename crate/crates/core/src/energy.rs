//! Renormalized graph energies, harmonic extension and harmonic coordinates.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Result, SgError};
use crate::exact::{self, RMat3, Rational};
use crate::structure::LevelGraph;

/// Complex values on the vertices of a level-n graph, indexed by vertex id.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexFunction {
    level: usize,
    values: Vec<Complex64>,
}

impl VertexFunction {
    pub fn new(g: &LevelGraph, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != g.num_vertices() {
            return Err(SgError::DimensionMismatch(format!(
                "{} vertex values for a graph with {} vertices",
                values.len(),
                g.num_vertices()
            )));
        }
        Ok(VertexFunction {
            level: g.level(),
            values,
        })
    }

    pub fn from_real(g: &LevelGraph, values: &[f64]) -> Result<Self> {
        Self::new(g, values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zeros(g: &LevelGraph) -> Self {
        Self::constant(g, Complex64::new(0.0, 0.0))
    }

    pub fn constant(g: &LevelGraph, c: Complex64) -> Self {
        VertexFunction {
            level: g.level(),
            values: vec![c; g.num_vertices()],
        }
    }

    /// Samples `f` at each vertex id.
    pub fn from_fn(g: &LevelGraph, f: impl FnMut(usize) -> Complex64) -> Self {
        VertexFunction {
            level: g.level(),
            values: (0..g.num_vertices()).map(f).collect(),
        }
    }

    pub(crate) fn from_parts(level: usize, values: Vec<Complex64>) -> Self {
        VertexFunction { level, values }
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

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        VertexFunction {
            level: self.level,
            values: self.values.iter().map(|&z| f(z)).collect(),
        }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.len(), other.len());
        VertexFunction {
            level: self.level,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        }
    }

    /// `alpha·self + beta·other`.
    pub fn lin_comb(&self, alpha: Complex64, other: &Self, beta: Complex64) -> Self {
        debug_assert_eq!(self.len(), other.len());
        VertexFunction {
            level: self.level,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
        }
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
        if self.values.len() != g.num_vertices() {
            return Err(SgError::DimensionMismatch(format!(
                "vertex function of length {} on a graph with {} vertices",
                self.values.len(),
                g.num_vertices()
            )));
        }
        Ok(())
    }
}

/// Values at p1, p2, p3.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryTriple(pub [Complex64; 3]);

impl BoundaryTriple {
    pub fn real(v: [f64; 3]) -> Self {
        BoundaryTriple(v.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn to_function(&self) -> Result<VertexFunction> {
        let g0 = LevelGraph::build(0)?;
        VertexFunction::new(&g0, self.0.to_vec())
    }
}

/// `(5/3)^n · Σ_e (u(y) − u(x))·conj(v(y) − v(x))`.
pub fn discrete_energy(g: &LevelGraph, u: &VertexFunction, v: &VertexFunction) -> Result<Complex64> {
    u.check_on(g)?;
    v.check_on(g)?;
    let (uv, vv) = (u.values(), v.values());
    let sum: Complex64 = g
        .edges()
        .iter()
        .map(|e| (uv[e.head] - uv[e.tail]) * (vv[e.head] - vv[e.tail]).conj())
        .sum();
    Ok(sum * g.conductance())
}

/// `E_n(u) = E_n(u, u)` as a real number.
pub fn energy(g: &LevelGraph, u: &VertexFunction) -> Result<f64> {
    discrete_energy(g, u, u).map(|z| z.re)
}

/// Exact energy matrix `Q` of the level-0 triangle: `E_0(u, v) = uᵀ Q v̄`.
pub fn level0_energy_matrix() -> RMat3 {
    let g0 = LevelGraph::build(0).expect("level 0 is always buildable");
    let mut q = exact::zero3();
    for e in g0.edges() {
        let (t, h) = (e.tail, e.head);
        q[t][t] += exact::int(1);
        q[h][h] += exact::int(1);
        q[t][h] -= exact::int(1);
        q[h][t] -= exact::int(1);
    }
    q
}

/// Exact operator sending a cell's boundary values `(u1, u2, u3)` to the
/// energy-minimizing values at its three edge midpoints, ordered
/// `(m12, m13, m23)`. Obtained by solving the interior normal equations of
/// the level-1 template graph.
pub fn local_extension_operator() -> &'static RMat3 {
    static OP: OnceLock<RMat3> = OnceLock::new();
    OP.get_or_init(|| {
        let g1 = LevelGraph::build(1).expect("level 1 is always buildable");
        let n = g1.num_vertices();
        let mut lap = vec![vec![Rational::from_integer(0); n]; n];
        for e in g1.edges() {
            let (t, h) = (e.tail, e.head);
            lap[t][t] += exact::int(1);
            lap[h][h] += exact::int(1);
            lap[t][h] -= exact::int(1);
            lap[h][t] -= exact::int(1);
        }
        // Interior ids 3, 4, 5 are m12, m13, m23 by construction order.
        let interior = [3usize, 4, 5];
        let a: Vec<Vec<Rational>> = interior
            .iter()
            .map(|&i| interior.iter().map(|&j| lap[i][j]).collect())
            .collect();
        let b: Vec<Vec<Rational>> = interior
            .iter()
            .map(|&i| (0..3).map(|j| -lap[i][j]).collect())
            .collect();
        let x = exact::solve(a, b).expect("interior Dirichlet problem is nonsingular");
        let mut r = exact::zero3();
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] = x[i][j];
            }
        }
        r
    })
}

fn local_extension_f64() -> &'static [[f64; 3]; 3] {
    static OP: OnceLock<[[f64; 3]; 3]> = OnceLock::new();
    OP.get_or_init(|| exact::to_f64_3(local_extension_operator()))
}

/// Harmonic extension of `u` (living on level `u.level()`) to the level of
/// `target`, one level at a time, by cell-local energy minimization.
pub fn harmonic_extend(u: &VertexFunction, target: &LevelGraph) -> Result<VertexFunction> {
    let n = u.level();
    let m = target.level();
    if m < n {
        return Err(SgError::InvalidArgument(format!(
            "cannot extend from level {n} down to level {m}"
        )));
    }
    if u.len() != LevelGraph::vertex_count_at(n) {
        return Err(SgError::DimensionMismatch(format!(
            "level-{n} function has {} values",
            u.len()
        )));
    }
    let r = local_extension_f64();
    let mut values = vec![Complex64::new(0.0, 0.0); target.num_vertices()];
    values[..u.len()].copy_from_slice(u.values());
    for k in n..m {
        let children = target.coarse_cell_vertices(k + 1);
        for ch in children.chunks_exact(3) {
            let boundary = [ch[0][0], ch[1][1], ch[2][2]];
            let mids = [ch[0][1], ch[0][2], ch[1][2]];
            let b = boundary.map(|v| values[v]);
            for (row, &mid) in mids.iter().enumerate() {
                values[mid] = r[row][0] * b[0] + r[row][1] * b[1] + r[row][2] * b[2];
            }
        }
    }
    Ok(VertexFunction::from_parts(m, values))
}

/// Energy-orthonormal pair of harmonic functions, given by boundary values.
///
/// The canonical pair is the antisymmetric/symmetric choice
/// `(0, 1, −1)/√6`, `(2, −1, −1)/√18`; `rotated` applies an orthogonal
/// rotation of the pair, which every basis-dependent output must respect.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HarmonicBasis {
    pub h1: [f64; 3],
    pub h2: [f64; 3],
    /// Rotation angle relative to the canonical pair.
    pub angle: f64,
}

impl HarmonicBasis {
    pub fn canonical() -> Self {
        let s6 = 6f64.sqrt();
        let s18 = 18f64.sqrt();
        HarmonicBasis {
            h1: [0.0, 1.0 / s6, -1.0 / s6],
            h2: [2.0 / s18, -1.0 / s18, -1.0 / s18],
            angle: 0.0,
        }
    }

    /// `(h1', h2') = O·(h1, h2)` with `O` the rotation by `angle`.
    pub fn rotated(angle: f64) -> Self {
        let c = Self::canonical();
        let (s, co) = angle.sin_cos();
        let mut h1 = [0.0; 3];
        let mut h2 = [0.0; 3];
        for k in 0..3 {
            h1[k] = co * c.h1[k] - s * c.h2[k];
            h2[k] = s * c.h1[k] + co * c.h2[k];
        }
        HarmonicBasis { h1, h2, angle }
    }

    /// The rotation matrix `O` taking canonical coordinates to this basis.
    pub fn rotation(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.angle.sin_cos();
        [[c, -s], [s, c]]
    }

    pub fn triples(&self) -> (BoundaryTriple, BoundaryTriple) {
        (BoundaryTriple::real(self.h1), BoundaryTriple::real(self.h2))
    }
}

impl Default for HarmonicBasis {
    fn default() -> Self {
        Self::canonical()
    }
}

pub fn harmonic_basis() -> (BoundaryTriple, BoundaryTriple) {
    HarmonicBasis::canonical().triples()
}

/// `y(x) = (h1(x), h2(x))` at every vertex of `g`.
pub fn harmonic_coordinates(g: &LevelGraph, basis: &HarmonicBasis) -> Result<Vec<[f64; 2]>> {
    let (t1, t2) = basis.triples();
    let y1 = harmonic_extend(&t1.to_function()?, g)?;
    let y2 = harmonic_extend(&t2.to_function()?, g)?;
    Ok(y1
        .values()
        .iter()
        .zip(y2.values())
        .map(|(a, b)| [a.re, b.re])
        .collect())
}
