//! Small dense rational linear algebra for square matrices.

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::arith::RationalMatrix;
use crate::error::{Error, Result};

fn require_square(a: &RationalMatrix) -> Result<usize> {
    if a.rows() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    Ok(a.rows())
}

pub fn identity(d: usize) -> RationalMatrix {
    let entries = (0..d * d)
        .map(|k| {
            if k / d == k % d {
                BigRational::one()
            } else {
                BigRational::zero()
            }
        })
        .collect();
    RationalMatrix::new(d, d, entries).expect("identity is well formed")
}

pub fn diagonal(values: &[BigRational]) -> RationalMatrix {
    let d = values.len();
    let entries = (0..d * d)
        .map(|k| {
            if k / d == k % d {
                values[k / d].clone()
            } else {
                BigRational::zero()
            }
        })
        .collect();
    RationalMatrix::new(d, d, entries).expect("diagonal is well formed")
}

pub fn scale(a: &RationalMatrix, s: &BigRational) -> RationalMatrix {
    let entries = a.entries().iter().map(|v| v * s).collect();
    RationalMatrix::new(a.rows(), a.cols(), entries).expect("same shape")
}

pub fn mat_mul(a: &RationalMatrix, b: &RationalMatrix) -> Result<RationalMatrix> {
    if a.cols() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let mut entries = Vec::with_capacity(a.rows() * b.cols());
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            let mut acc = BigRational::zero();
            for k in 0..a.cols() {
                acc += a.get(i, k) * b.get(k, j);
            }
            entries.push(acc);
        }
    }
    RationalMatrix::new(a.rows(), b.cols(), entries)
}

pub fn mat_vec(a: &RationalMatrix, v: &[BigRational]) -> Vec<BigRational> {
    assert_eq!(a.cols(), v.len(), "mat_vec dimension mismatch");
    (0..a.rows())
        .map(|i| {
            a.row(i)
                .iter()
                .zip(v)
                .fold(BigRational::zero(), |acc, (x, y)| acc + x * y)
        })
        .collect()
}

/// `ᵗA v` without materialising the transpose.
pub fn mat_t_vec(a: &RationalMatrix, v: &[BigRational]) -> Vec<BigRational> {
    assert_eq!(a.rows(), v.len(), "mat_t_vec dimension mismatch");
    (0..a.cols())
        .map(|j| (0..a.rows()).fold(BigRational::zero(), |acc, i| acc + a.get(i, j) * &v[i]))
        .collect()
}

fn to_grid(a: &RationalMatrix) -> Vec<Vec<BigRational>> {
    a.to_rows()
}

pub fn determinant(a: &RationalMatrix) -> Result<BigRational> {
    let d = require_square(a)?;
    let mut g = to_grid(a);
    let mut det = BigRational::one();
    for col in 0..d {
        let Some(pivot) = (col..d).find(|&r| !g[r][col].is_zero()) else {
            return Ok(BigRational::zero());
        };
        if pivot != col {
            g.swap(pivot, col);
            det = -det;
        }
        let p = g[col][col].clone();
        det *= &p;
        for r in col + 1..d {
            if g[r][col].is_zero() {
                continue;
            }
            let factor = &g[r][col] / &p;
            for c in col..d {
                let sub = &factor * &g[col][c];
                g[r][c] -= sub;
            }
        }
    }
    Ok(det)
}

pub fn inverse(a: &RationalMatrix) -> Result<RationalMatrix> {
    let d = require_square(a)?;
    let mut g = to_grid(a);
    let mut inv = to_grid(&identity(d));
    for col in 0..d {
        let pivot = (col..d)
            .find(|&r| !g[r][col].is_zero())
            .ok_or_else(|| Error::InvalidArgument("singular matrix".into()))?;
        g.swap(pivot, col);
        inv.swap(pivot, col);
        let p = g[col][col].clone();
        for c in 0..d {
            g[col][c] /= &p;
            inv[col][c] /= &p;
        }
        for r in 0..d {
            if r == col || g[r][col].is_zero() {
                continue;
            }
            let factor = g[r][col].clone();
            for c in 0..d {
                let s1 = &factor * &g[col][c];
                g[r][c] -= s1;
                let s2 = &factor * &inv[col][c];
                inv[r][c] -= s2;
            }
        }
    }
    RationalMatrix::from_rows(inv)
}

/// The cofactor matrix `A' = det(A) · ᵗ(A^{−1})`.
pub fn cofactor(a: &RationalMatrix) -> Result<RationalMatrix> {
    let det = determinant(a)?;
    let inv = inverse(a)?;
    Ok(scale(&inv.transpose(), &det))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, ratio};

    fn m(rows: &[&[&str]]) -> RationalMatrix {
        RationalMatrix::parse(rows).unwrap()
    }

    #[test]
    fn determinant_and_inverse() {
        let a = m(&[&["2", "1", "0"], &["0", "1", "3"], &["1", "0", "1"]]);
        assert_eq!(determinant(&a).unwrap(), int(5));
        let prod = mat_mul(&a, &inverse(&a).unwrap()).unwrap();
        assert_eq!(prod, identity(3));
        assert_eq!(determinant(&m(&[&["1", "2"], &["2", "4"]])).unwrap(), int(0));
        assert!(inverse(&m(&[&["1", "2"], &["2", "4"]])).is_err());
    }

    #[test]
    fn cofactor_of_diagonal_swaps_entries() {
        let a = diagonal(&[int(2), ratio(1, 2)]);
        assert_eq!(cofactor(&a).unwrap(), diagonal(&[ratio(1, 2), int(2)]));
    }

    #[test]
    fn cofactor_matches_minors() {
        let a = m(&[&["1", "2"], &["3", "4"]]);
        // C_ij = (−1)^{i+j} M_ij
        assert_eq!(cofactor(&a).unwrap(), m(&[&["4", "-3"], &["-2", "1"]]));
    }
}
