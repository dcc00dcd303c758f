//! Small exact-rational linear algebra for the cell-local harmonic solves and
//! the extension-matrix recursion.

use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = Ratio<i128>;
pub type RMat3 = [[Rational; 3]; 3];

pub fn int(n: i128) -> Rational {
    Rational::from_integer(n)
}

pub fn identity3() -> RMat3 {
    let mut m = zero3();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Rational::one();
    }
    m
}

pub fn zero3() -> RMat3 {
    [[Rational::zero(); 3]; 3]
}

pub fn mul3(a: &RMat3, b: &RMat3) -> RMat3 {
    let mut c = zero3();
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).fold(Rational::zero(), |acc, k| acc + a[i][k] * b[k][j]);
        }
    }
    c
}

pub fn transpose3(a: &RMat3) -> RMat3 {
    let mut t = zero3();
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = a[j][i];
        }
    }
    t
}

pub fn to_f64_3(a: &RMat3) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = to_f64(a[i][j]);
        }
    }
    out
}

pub fn to_f64(r: Rational) -> f64 {
    // Numerator and denominator stay far below 2^53 at supported levels,
    // but go through the exact quotient anyway.
    r.to_f64().unwrap_or_else(|| *r.numer() as f64 / *r.denom() as f64)
}

/// Solves `a · x = b` for a square nonsingular `a` (columns of `b` are
/// independent right-hand sides) by Gauss–Jordan elimination.
pub fn solve(mut a: Vec<Vec<Rational>>, mut b: Vec<Vec<Rational>>) -> Option<Vec<Vec<Rational>>> {
    let n = a.len();
    let cols = b.first().map_or(0, Vec::len);
    for col in 0..n {
        let pivot = (col..n)
            .filter(|&r| !a[r][col].is_zero())
            .max_by(|&r, &s| a[r][col].abs().cmp(&a[s][col].abs()))?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col];
        for j in 0..n {
            a[col][j] /= p;
        }
        for j in 0..cols {
            b[col][j] /= p;
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col];
            for j in 0..n {
                let v = a[col][j];
                a[r][j] -= f * v;
            }
            for j in 0..cols {
                let v = b[col][j];
                b[r][j] -= f * v;
            }
        }
    }
    Some(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_small_system() {
        let a = vec![vec![int(2), int(1)], vec![int(1), int(3)]];
        let b = vec![vec![int(3)], vec![int(5)]];
        let x = solve(a, b).unwrap();
        assert_eq!(x[0][0], Rational::new(4, 5));
        assert_eq!(x[1][0], Rational::new(7, 5));
    }

    #[test]
    fn singular_system_is_rejected() {
        let a = vec![vec![int(1), int(1)], vec![int(2), int(2)]];
        let b = vec![vec![int(1)], vec![int(2)]];
        assert!(solve(a, b).is_none());
    }

    #[test]
    fn identity_is_neutral() {
        let m = [
            [int(1), int(2), int(3)],
            [int(0), Rational::new(1, 5), int(4)],
            [int(-1), int(0), int(2)],
        ];
        assert_eq!(mul3(&identity3(), &m), m);
        assert_eq!(transpose3(&transpose3(&m)), m);
    }
}
