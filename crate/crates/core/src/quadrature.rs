//! Cell quadratures in harmonic coordinates.
//!
//! A function `f = F∘h` is evaluated on cell `K_w` at the barycenter `y_w` of
//! the harmonic images of the cell's three vertices, weighted by the Kusuoka
//! mass of the cell and contracted with its Z-matrix.

use crate::energy::HarmonicBasis;
use crate::error::Result;
use crate::kusuoka::{level_cell_table, restriction_matrix, CellData};
use crate::structure::Word;

/// A twice differentiable function on the plane of harmonic coordinates.
pub trait SmoothField {
    fn value(&self, y: [f64; 2]) -> f64;
    fn gradient(&self, y: [f64; 2]) -> [f64; 2];
    fn hessian(&self, y: [f64; 2]) -> [[f64; 2]; 2];
}

/// `F(y) = c·y + offset`.
#[derive(Clone, Copy, Debug)]
pub struct Linear {
    pub c: [f64; 2],
    pub offset: f64,
}

impl SmoothField for Linear {
    fn value(&self, y: [f64; 2]) -> f64 {
        self.c[0] * y[0] + self.c[1] * y[1] + self.offset
    }
    fn gradient(&self, _: [f64; 2]) -> [f64; 2] {
        self.c
    }
    fn hessian(&self, _: [f64; 2]) -> [[f64; 2]; 2] {
        [[0.0; 2]; 2]
    }
}

/// `F(y) = yᵀ A y + b·y` with `A` symmetric.
#[derive(Clone, Copy, Debug)]
pub struct Quadratic {
    pub a: [[f64; 2]; 2],
    pub b: [f64; 2],
}

impl Quadratic {
    /// `|y|²`.
    pub fn norm_squared() -> Self {
        Quadratic {
            a: [[1.0, 0.0], [0.0, 1.0]],
            b: [0.0, 0.0],
        }
    }
}

impl SmoothField for Quadratic {
    fn value(&self, y: [f64; 2]) -> f64 {
        let a = &self.a;
        y[0] * (a[0][0] * y[0] + a[0][1] * y[1])
            + y[1] * (a[1][0] * y[0] + a[1][1] * y[1])
            + self.b[0] * y[0]
            + self.b[1] * y[1]
    }
    fn gradient(&self, y: [f64; 2]) -> [f64; 2] {
        let a = &self.a;
        [
            2.0 * (a[0][0] * y[0] + a[0][1] * y[1]) + self.b[0],
            2.0 * (a[1][0] * y[0] + a[1][1] * y[1]) + self.b[1],
        ]
    }
    fn hessian(&self, _: [f64; 2]) -> [[f64; 2]; 2] {
        let a = &self.a;
        [[2.0 * a[0][0], 2.0 * a[0][1]], [2.0 * a[1][0], 2.0 * a[1][1]]]
    }
}

/// `F(y) = sin(k·y + phase)`.
#[derive(Clone, Copy, Debug)]
pub struct Wave {
    pub k: [f64; 2],
    pub phase: f64,
}

impl SmoothField for Wave {
    fn value(&self, y: [f64; 2]) -> f64 {
        (self.k[0] * y[0] + self.k[1] * y[1] + self.phase).sin()
    }
    fn gradient(&self, y: [f64; 2]) -> [f64; 2] {
        let c = (self.k[0] * y[0] + self.k[1] * y[1] + self.phase).cos();
        [self.k[0] * c, self.k[1] * c]
    }
    fn hessian(&self, y: [f64; 2]) -> [[f64; 2]; 2] {
        let s = -self.value(y);
        let k = self.k;
        [[k[0] * k[0] * s, k[0] * k[1] * s], [k[1] * k[0] * s, k[1] * k[1] * s]]
    }
}

/// `F'(y) = F(Oᵀ y)` for a rotation `O`; pairs with a basis rotated by `O`.
pub struct Rotated<'a, F: ?Sized> {
    pub inner: &'a F,
    pub rotation: [[f64; 2]; 2],
}

impl<F: SmoothField + ?Sized> Rotated<'_, F> {
    fn pull(&self, y: [f64; 2]) -> [f64; 2] {
        let o = &self.rotation;
        [o[0][0] * y[0] + o[1][0] * y[1], o[0][1] * y[0] + o[1][1] * y[1]]
    }
}

impl<F: SmoothField + ?Sized> SmoothField for Rotated<'_, F> {
    fn value(&self, y: [f64; 2]) -> f64 {
        self.inner.value(self.pull(y))
    }
    fn gradient(&self, y: [f64; 2]) -> [f64; 2] {
        let g = self.inner.gradient(self.pull(y));
        let o = &self.rotation;
        [o[0][0] * g[0] + o[0][1] * g[1], o[1][0] * g[0] + o[1][1] * g[1]]
    }
    fn hessian(&self, y: [f64; 2]) -> [[f64; 2]; 2] {
        let h = self.inner.hessian(self.pull(y));
        let o = &self.rotation;
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        out[i][j] += o[i][k] * h[k][l] * o[j][l];
                    }
                }
            }
        }
        out
    }
}

/// Harmonic coordinates of the three vertices of `K_w`.
pub fn cell_harmonic_vertices(w: &Word, basis: &HarmonicBasis) -> [[f64; 2]; 3] {
    let a = restriction_matrix(w);
    let apply = |h: &[f64; 3], k: usize| (0..3).map(|j| a[k][j] * h[j]).sum::<f64>();
    [0, 1, 2].map(|k| [apply(&basis.h1, k), apply(&basis.h2, k)])
}

pub fn cell_barycenter(w: &Word, basis: &HarmonicBasis) -> [f64; 2] {
    let v = cell_harmonic_vertices(w, basis);
    [
        (v[0][0] + v[1][0] + v[2][0]) / 3.0,
        (v[0][1] + v[1][1] + v[2][1]) / 3.0,
    ]
}

fn mat_vec(z: &[[f64; 2]; 2], v: [f64; 2]) -> [f64; 2] {
    [z[0][0] * v[0] + z[0][1] * v[1], z[1][0] * v[0] + z[1][1] * v[1]]
}

fn cell_sum(
    level: usize,
    basis: &HarmonicBasis,
    mut term: impl FnMut(&CellData, [f64; 2]) -> f64,
) -> Result<f64> {
    let table = level_cell_table(level, basis)?;
    Ok(table
        .iter()
        .map(|c| c.mass * term(c, cell_barycenter(&c.word, basis)))
        .sum())
}

/// `Σ_{|w|=n} ν(K_w)·|z_w ∇F(y_w)|²`.
pub fn kigami_quadrature(f: &dyn SmoothField, level: usize, basis: &HarmonicBasis) -> Result<f64> {
    cell_sum(level, basis, |c, y| {
        let v = mat_vec(&c.z, f.gradient(y));
        v[0] * v[0] + v[1] * v[1]
    })
}

/// `trace(z_w · Hess F(y_w))`.
pub fn laplacian_quadrature(f: &dyn SmoothField, w: &Word, basis: &HarmonicBasis) -> f64 {
    let c = crate::kusuoka::cell_data(w, basis);
    let h = f.hessian(cell_barycenter(w, basis));
    (0..2)
        .map(|i| (0..2).map(|j| c.z[i][j] * h[j][i]).sum::<f64>())
        .sum()
}

/// `Σ_w ν(K_w)·(−Σ_ij z_w[i][j]·(G∇F)_j(y_w)·∂_i U(y_w))`.
pub fn divergence_quadrature(
    f: &dyn SmoothField,
    g: &dyn SmoothField,
    u: &dyn SmoothField,
    level: usize,
    basis: &HarmonicBasis,
) -> Result<f64> {
    cell_sum(level, basis, |c, y| {
        let gv = g.value(y);
        let df = f.gradient(y);
        let flux = [gv * df[0], gv * df[1]];
        let du = u.gradient(y);
        let zf = mat_vec(&c.z, flux);
        -(du[0] * zf[0] + du[1] * zf[1])
    })
}
