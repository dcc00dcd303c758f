//! Kusuoka measure of cells, energy-measure Gram matrices and Z-matrices.
//!
//! For a word `w = w1…wn` let `A_w = A_{wn}·…·A_{w1}` map the boundary
//! values of a harmonic function to the boundary values of its restriction to
//! the cell `K_w`. The energy that a harmonic pair deposits in `K_w` is then
//! `(5/3)^n · B(A_w u, A_w v)` with `B` the level-0 energy form. Summing the
//! diagonal over an orthonormal basis gives the Kusuoka mass of the cell.

use std::sync::OnceLock;

use crate::energy::{self, HarmonicBasis};
use crate::error::{Result, SgError};
use crate::exact::{self, RMat3, Rational};
use crate::structure::{LevelGraph, Word, DEFAULT_MAX_LEVEL};

/// Products `A_w` are carried in exact rationals up to this word length.
pub const EXACT_LEVEL_LIMIT: usize = 8;

/// Restriction maps of harmonic boundary data to the three first-level cells.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtensionMatrixSet {
    pub exact: [RMat3; 3],
    pub float: [[[f64; 3]; 3]; 3],
}

impl ExtensionMatrixSet {
    pub fn get(&self, letter: u8) -> &[[f64; 3]; 3] {
        &self.float[(letter - 1) as usize]
    }
}

pub fn extension_matrices() -> &'static ExtensionMatrixSet {
    static SET: OnceLock<ExtensionMatrixSet> = OnceLock::new();
    SET.get_or_init(|| {
        let r = energy::local_extension_operator();
        let one = Rational::from_integer(1);
        let zero = Rational::from_integer(0);
        let e = |i: usize| {
            let mut row = [zero; 3];
            row[i] = one;
            row
        };
        // Child vertex orders: (v1, m12, m13), (m12, v2, m23), (m13, m23, v3).
        let a1 = [e(0), r[0], r[1]];
        let a2 = [r[0], e(1), r[2]];
        let a3 = [r[1], r[2], e(2)];
        let exact = [a1, a2, a3];
        ExtensionMatrixSet {
            float: exact.map(|m| exact::to_f64_3(&m)),
            exact,
        }
    })
}

/// `(5/3)^n · A_wᵀ Q A_w`, the energy form of the cell pulled back to the
/// global boundary data.
#[derive(Clone, Debug)]
enum CellForm {
    Exact(RMat3),
    Float([[f64; 3]; 3]),
}

impl CellForm {
    fn to_f64(&self) -> [[f64; 3]; 3] {
        match self {
            CellForm::Exact(m) => exact::to_f64_3(m),
            CellForm::Float(m) => *m,
        }
    }
}

fn pulled_back_form_exact(a_w: &RMat3, level: usize) -> RMat3 {
    let q = energy::level0_energy_matrix();
    let mut p = exact::mul3(&exact::transpose3(a_w), &exact::mul3(&q, a_w));
    let scale = Rational::new(5i128.pow(level as u32), 3i128.pow(level as u32));
    for row in p.iter_mut() {
        for x in row.iter_mut() {
            *x *= scale;
        }
    }
    p
}

fn mul3f(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

fn pulled_back_form_float(a_w: &[[f64; 3]; 3], level: usize) -> [[f64; 3]; 3] {
    let q = exact::to_f64_3(&energy::level0_energy_matrix());
    let mut at = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            at[i][j] = a_w[j][i];
        }
    }
    let mut p = mul3f(&at, &mul3f(&q, a_w));
    let scale = (5.0f64 / 3.0).powi(level as i32);
    for row in p.iter_mut() {
        for x in row.iter_mut() {
            *x *= scale;
        }
    }
    p
}

/// Energy measures of the harmonic basis on one cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellData {
    pub word: Word,
    /// `gram[i][j] = ν_{h_i,h_j}(K_w)`.
    pub gram: [[f64; 2]; 2],
    /// `ν(K_w) = trace(gram)`.
    pub mass: f64,
    /// `gram / mass`.
    pub z: [[f64; 2]; 2],
    pub basis: HarmonicBasis,
}

impl CellData {
    fn from_form(word: Word, form: &[[f64; 3]; 3], basis: &HarmonicBasis) -> Self {
        let b = |u: &[f64; 3], v: &[f64; 3]| -> f64 {
            (0..3)
                .map(|i| (0..3).map(|j| u[i] * form[i][j] * v[j]).sum::<f64>())
                .sum()
        };
        let g11 = b(&basis.h1, &basis.h1);
        let g12 = b(&basis.h1, &basis.h2);
        let g22 = b(&basis.h2, &basis.h2);
        let gram = [[g11, g12], [g12, g22]];
        let mass = g11 + g22;
        let z = [[g11 / mass, g12 / mass], [g12 / mass, g22 / mass]];
        CellData {
            word,
            gram,
            mass,
            z,
            basis: *basis,
        }
    }

    /// Eigenvalues `(λ_min, λ_max)` of `z`.
    pub fn z_eigenvalues(&self) -> (f64, f64) {
        sym2_eigenvalues(&self.z)
    }

    /// `trace(z²)`.
    pub fn z_square_trace(&self) -> f64 {
        let z = &self.z;
        z[0][0] * z[0][0] + 2.0 * z[0][1] * z[1][0] + z[1][1] * z[1][1]
    }

    /// Scales the measure to total mass 1 (z is unchanged).
    pub fn to_probability(&self) -> Self {
        let mut c = self.clone();
        c.mass /= 2.0;
        for row in c.gram.iter_mut() {
            for x in row.iter_mut() {
                *x /= 2.0;
            }
        }
        c
    }
}

pub(crate) fn sym2_eigenvalues(m: &[[f64; 2]; 2]) -> (f64, f64) {
    let half_tr = 0.5 * (m[0][0] + m[1][1]);
    let half_diff = 0.5 * (m[0][0] - m[1][1]);
    let r = (half_diff * half_diff + m[0][1] * m[1][0]).sqrt();
    (half_tr - r, half_tr + r)
}

fn exact_product(word: &Word) -> RMat3 {
    let set = extension_matrices();
    word.letters().iter().fold(exact::identity3(), |acc, &l| {
        exact::mul3(&set.exact[(l - 1) as usize], &acc)
    })
}

fn float_product(word: &Word) -> [[f64; 3]; 3] {
    let set = extension_matrices();
    let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    word.letters()
        .iter()
        .fold(id, |acc, &l| mul3f(set.get(l), &acc))
}

fn cell_form(word: &Word) -> CellForm {
    let n = word.level();
    if n <= EXACT_LEVEL_LIMIT {
        CellForm::Exact(pulled_back_form_exact(&exact_product(word), n))
    } else {
        CellForm::Float(pulled_back_form_float(&float_product(word), n))
    }
}

/// `A_w` as floats (computed exactly where supported): row k gives the
/// value at `φ_w(p_k)` of the harmonic function with the given boundary data.
pub fn restriction_matrix(w: &Word) -> [[f64; 3]; 3] {
    if w.level() <= EXACT_LEVEL_LIMIT {
        exact::to_f64_3(&exact_product(w))
    } else {
        float_product(w)
    }
}

pub fn cell_data(w: &Word, basis: &HarmonicBasis) -> CellData {
    CellData::from_form(w.clone(), &cell_form(w).to_f64(), basis)
}

/// Cell data for all `3^n` words of length `n`, lexicographic order.
pub fn level_cell_table(level: usize, basis: &HarmonicBasis) -> Result<Vec<CellData>> {
    level_cell_table_with_limit(level, basis, DEFAULT_MAX_LEVEL)
}

pub fn level_cell_table_with_limit(
    level: usize,
    basis: &HarmonicBasis,
    max_level: usize,
) -> Result<Vec<CellData>> {
    if level > max_level {
        return Err(SgError::ResourceLimit {
            level,
            max: max_level,
        });
    }
    let mut out = Vec::with_capacity(3usize.pow(level as u32));
    if level <= EXACT_LEVEL_LIMIT {
        let set = extension_matrices();
        let mut stack = vec![(Word::empty(), exact::identity3())];
        // Depth-first with children pushed in reverse keeps lexicographic order.
        while let Some((w, a)) = stack.pop() {
            if w.level() == level {
                let form = pulled_back_form_exact(&a, level);
                out.push(CellData::from_form(w, &exact::to_f64_3(&form), basis));
                continue;
            }
            for l in (1..=3u8).rev() {
                stack.push((w.child(l), exact::mul3(&set.exact[(l - 1) as usize], &a)));
            }
        }
    } else {
        let set = extension_matrices();
        let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let mut stack = vec![(Word::empty(), id)];
        while let Some((w, a)) = stack.pop() {
            if w.level() == level {
                let form = pulled_back_form_float(&a, level);
                out.push(CellData::from_form(w, &form, basis));
                continue;
            }
            for l in (1..=3u8).rev() {
                stack.push((w.child(l), mul3f(set.get(l), &a)));
            }
        }
    }
    Ok(out)
}

/// Kusuoka mass attached to each vertex of a level graph.
#[derive(Clone, Debug, PartialEq)]
pub struct MassVector {
    level: usize,
    values: Vec<f64>,
}

impl MassVector {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Arbitrary positive weights, e.g. for tests of weight-independence.
    pub fn from_values(g: &LevelGraph, values: Vec<f64>) -> Result<Self> {
        if values.len() != g.num_vertices() {
            return Err(SgError::DimensionMismatch(format!(
                "{} masses for {} vertices",
                values.len(),
                g.num_vertices()
            )));
        }
        if let Some(bad) = values.iter().find(|&&m| !(m > 0.0 && m.is_finite())) {
            return Err(SgError::InvalidArgument(format!(
                "vertex mass {bad} is not positive"
            )));
        }
        Ok(MassVector {
            level: g.level(),
            values,
        })
    }

    pub fn to_probability(&self) -> Self {
        let t = self.total();
        MassVector {
            level: self.level,
            values: self.values.iter().map(|m| m / t).collect(),
        }
    }

    pub(crate) fn check_on(&self, g: &LevelGraph) -> Result<()> {
        if self.level != g.level() {
            return Err(SgError::LevelMismatch {
                expected: g.level(),
                found: self.level,
            });
        }
        Ok(())
    }
}

/// `m(x) = (1/3)·Σ_{cells w ∋ x} ν(K_w)`.
pub fn vertex_masses(g: &LevelGraph) -> MassVector {
    let cells = level_cell_table_with_limit(g.level(), &HarmonicBasis::canonical(), usize::MAX)
        .expect("graph level already validated");
    vertex_masses_from_cells(g, &cells)
}

pub fn vertex_masses_from_cells(g: &LevelGraph, cells: &[CellData]) -> MassVector {
    assert_eq!(cells.len(), g.cells().len());
    let mut values = vec![0.0; g.num_vertices()];
    for (cell, data) in g.cells().iter().zip(cells) {
        for &v in &cell.vertices {
            values[v] += data.mass / 3.0;
        }
    }
    MassVector {
        level: g.level(),
        values,
    }
}
