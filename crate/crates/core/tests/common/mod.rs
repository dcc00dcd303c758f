//! Hand-written reference computations shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use sgcalc::structure::LevelGraph;

/// Harmonic extension onto the three level-1 cells, written out by hand
/// from the 2/5-2/5-1/5 rule.
pub fn cell_map(letter: u8) -> [[f64; 3]; 3] {
    let (a, b) = (0.4, 0.2);
    match letter {
        1 => [[1.0, 0.0, 0.0], [a, a, b], [a, b, a]],
        2 => [[a, a, b], [0.0, 1.0, 0.0], [b, a, a]],
        3 => [[a, b, a], [b, a, a], [0.0, 0.0, 1.0]],
        _ => unreachable!(),
    }
}

fn mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

fn apply(a: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| (0..3).map(|j| a[i][j] * v[j]).sum())
}

fn triangle_energy(u: [f64; 3], w: [f64; 3]) -> f64 {
    (u[0] - u[1]) * (w[0] - w[1]) + (u[1] - u[2]) * (w[1] - w[2]) + (u[2] - u[0]) * (w[2] - w[0])
}

/// `(mass, z)` of the cell with the given word, canonical harmonic basis.
pub fn cell(word: &[u8]) -> (f64, [[f64; 2]; 2]) {
    let mut a = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for &l in word {
        a = mul(&cell_map(l), &a);
    }
    let s6 = 6f64.sqrt();
    let s18 = 18f64.sqrt();
    let h = [
        apply(&a, [0.0, 1.0 / s6, -1.0 / s6]),
        apply(&a, [2.0 / s18, -1.0 / s18, -1.0 / s18]),
    ];
    let r = (5.0f64 / 3.0).powi(word.len() as i32);
    let mut gram = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            gram[i][j] = r * triangle_energy(h[i], h[j]);
        }
    }
    let mass = gram[0][0] + gram[1][1];
    let z = [[gram[0][0] / mass, gram[0][1] / mass], [gram[1][0] / mass, gram[1][1] / mass]];
    (mass, z)
}

pub fn words(n: usize) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|w| (1..=3).map(move |l| [w.clone(), vec![l]].concat()))
            .collect();
    }
    out
}

/// `c_n Σ_edges |u(h) − u(t)|²` straight from the edge list.
pub fn edge_energy(g: &LevelGraph, u: &[Complex64]) -> f64 {
    g.edges().iter().map(|e| (u[e.head] - u[e.tail]).norm_sqr()).sum::<f64>() * g.conductance()
}

/// Eigenvalues of the magnetic Laplacian on a triangle with unit hops
/// scaled by `s`, total flux `phi`.
pub fn triangle_flux_spectrum(s: f64, phi: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..3)
        .map(|k| s * (2.0 - 2.0 * ((phi + std::f64::consts::TAU * k as f64) / 3.0).cos()))
        .collect();
    v.sort_by(f64::total_cmp);
    v
}
