//! Exact rationals, the system matrix and the quality functionals.
//!
//! `Π(z) = (∏|z_i|)^{1/k}` and `Π'(z) = (∏ max(1,|z_i|))^{1/k}` are never
//! evaluated as roots. [`pi_power`] and [`pi_prime_power`] return the k-th
//! powers, which stay rational, and every comparison elsewhere in the crate
//! is arranged so that only such powers meet.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

pub fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// Parses `"p/q"`, an integer, or a plain decimal (`"-1.25"`), exactly.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty rational".into()));
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator in {s:?}")))?;
        let q: BigInt = q
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator in {s:?}")))?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let negative = whole.starts_with('-');
        let whole_digits = whole.trim_start_matches(['-', '+']);
        if !frac.chars().all(|c| c.is_ascii_digit())
            || !whole_digits.chars().all(|c| c.is_ascii_digit())
            || (whole_digits.is_empty() && frac.is_empty())
        {
            return Err(Error::Parse(format!("bad decimal {s:?}")));
        }
        let digits = format!("{whole_digits}{frac}");
        let mut numer: BigInt = if digits.is_empty() {
            BigInt::zero()
        } else {
            digits.parse().map_err(|_| Error::Parse(format!("bad decimal {s:?}")))?
        };
        if negative {
            numer = -numer;
        }
        let denom = num_traits::pow(BigInt::from(10), frac.len());
        return Ok(BigRational::new(numer, denom));
    }
    let p: BigInt = s
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational {s:?}")))?;
    Ok(BigRational::from_integer(p))
}

/// Always `"p/q"`, including integers (`"3/1"`).
pub fn format_rational(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

fn ln_bigint(v: &BigInt) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().map(f64::ln).unwrap_or(f64::INFINITY);
    }
    let shift = bits - 64;
    let top: BigInt = v >> shift;
    top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural logarithm of a positive rational, safe for values far outside the
/// `f64` range.
pub fn ln_rational(r: &BigRational) -> f64 {
    assert!(r.is_positive(), "ln of non-positive rational");
    ln_bigint(r.numer()) - ln_bigint(r.denom())
}

/// `floor(r^{1/k})` for `r ≥ 0`.
pub fn floor_root(r: &BigRational, k: u32) -> BigInt {
    assert!(k >= 1);
    let floor = r.floor().to_integer();
    if floor.is_negative() {
        return BigInt::zero();
    }
    floor.nth_root(k)
}

pub fn rational_pow(r: &BigRational, e: i32) -> BigRational {
    num_traits::Pow::pow(r, e)
}

/// The n×m system matrix `Θ`, stored row-major.
///
/// `precision` is the declared absolute error of every entry when the
/// matrix approximates an irrational one; `None` means the entries are exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigRational>,
    precision: Option<BigRational>,
}

impl RationalMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<BigRational>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries,
            precision: None,
        })
    }

    pub fn from_rows(rows: Vec<Vec<BigRational>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch("ragged matrix rows".into()));
        }
        Self::new(n, m, rows.into_iter().flatten().collect())
    }

    /// Parses a matrix from rows of `"p/q"` strings.
    pub fn parse(rows: &[&[&str]]) -> Result<Self> {
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(rows)
    }

    pub fn with_precision(mut self, precision: Option<BigRational>) -> Self {
        self.precision = precision;
        self
    }

    /// n, the number of equations.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// m, the number of unknowns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn d(&self) -> usize {
        self.rows + self.cols
    }

    pub fn precision(&self) -> Option<&BigRational> {
        self.precision.as_ref()
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.entries[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[BigRational] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[BigRational] {
        &self.entries
    }

    pub fn transpose(&self) -> Self {
        let mut entries = Vec::with_capacity(self.entries.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                entries.push(self.get(i, j).clone());
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            entries,
            precision: self.precision.clone(),
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<BigRational>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
}

impl fmt::Display for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(ToString::to_string).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// `∏ |z_i|`, the k-th power of `Π(z)`.
pub fn pi_power(z: &[BigRational]) -> BigRational {
    z.iter().fold(BigRational::one(), |acc, v| acc * v.abs())
}

/// `∏ max(1, |z_i|)`, the k-th power of `Π'(z)`.
pub fn pi_prime_power(z: &[BigRational]) -> BigRational {
    let one = BigRational::one();
    z.iter().fold(BigRational::one(), |acc, v| {
        let a = v.abs();
        if a > one {
            acc * a
        } else {
            acc
        }
    })
}

/// `∏ max(1, |z_i|)` for an integer vector.
pub fn pi_prime_power_int(z: &[i64]) -> BigInt {
    z.iter()
        .fold(BigInt::one(), |acc, &v| acc * BigInt::from(v.unsigned_abs().max(1)))
}

pub fn sup_norm(z: &[BigRational]) -> BigRational {
    z.iter()
        .map(Signed::abs)
        .max()
        .unwrap_or_else(BigRational::zero)
}

pub fn sup_norm_int(z: &[i64]) -> u64 {
    z.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0)
}

pub fn to_rational_vec(z: &[i64]) -> Vec<BigRational> {
    z.iter().map(|&v| int(v)).collect()
}

/// `Θx − y`, exactly.
pub fn residual(theta: &RationalMatrix, x: &[i64], y: &[i64]) -> Result<Vec<BigRational>> {
    if x.len() != theta.cols() || y.len() != theta.rows() {
        return Err(Error::DimensionMismatch(format!(
            "Θ is {}x{}, got |x| = {}, |y| = {}",
            theta.rows(),
            theta.cols(),
            x.len(),
            y.len()
        )));
    }
    Ok((0..theta.rows())
        .map(|i| {
            let dot = theta
                .row(i)
                .iter()
                .zip(x)
                .fold(BigRational::zero(), |acc, (t, &xj)| acc + t * int(xj));
            dot - int(y[i])
        })
        .collect())
}

/// `ᵗΘy − x`, exactly.
pub fn transpose_residual(
    theta: &RationalMatrix,
    y: &[i64],
    x: &[i64],
) -> Result<Vec<BigRational>> {
    if y.len() != theta.rows() || x.len() != theta.cols() {
        return Err(Error::DimensionMismatch(format!(
            "Θ is {}x{}, got |y| = {}, |x| = {}",
            theta.rows(),
            theta.cols(),
            y.len(),
            x.len()
        )));
    }
    Ok((0..theta.cols())
        .map(|j| {
            let dot = (0..theta.rows())
                .fold(BigRational::zero(), |acc, i| acc + theta.get(i, j) * int(y[i]));
            dot - int(x[j])
        })
        .collect())
}

/// Nearest integer to `num/den` (`den > 0`); exact halves round toward zero.
pub fn round_quotient(num: &BigInt, den: &BigInt) -> BigInt {
    let (q, r) = num.div_mod_floor(den);
    let twice: BigInt = &r << 1;
    match twice.cmp(den) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => {
            if q.is_negative() {
                q + 1
            } else {
                q
            }
        }
    }
}

pub fn nearest_integer(v: &BigRational) -> BigInt {
    round_quotient(v.numer(), v.denom())
}

/// Componentwise nearest integers, ties toward zero.
///
/// Each coordinate minimizes `|v_i − y_i|`, so the result simultaneously
/// minimizes the sup-norm and the product of the residual entries.
pub fn nearest_integer_vector(v: &[BigRational]) -> Vec<BigInt> {
    v.iter().map(nearest_integer).collect()
}

pub(crate) fn to_i64(v: &BigInt) -> Result<i64> {
    v.to_i64()
        .ok_or_else(|| Error::InvalidArgument(format!("integer {v} does not fit in 64 bits")))
}

/// An integer pair `(x, y)` with the cached residual `Θx − y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegerPair {
    pub x: Vec<i64>,
    pub y: Vec<i64>,
    pub residual: Vec<BigRational>,
}

impl IntegerPair {
    pub fn new(theta: &RationalMatrix, x: Vec<i64>, y: Vec<i64>) -> Result<Self> {
        let residual = residual(theta, &x, &y)?;
        Ok(Self { x, y, residual })
    }

    /// The pair with `y` chosen as the nearest integer vector to `Θx`.
    pub fn rounded(theta: &RationalMatrix, x: Vec<i64>) -> Result<Self> {
        let zero = vec![0; theta.rows()];
        let image = residual(theta, &x, &zero)?;
        let y = nearest_integer_vector(&image)
            .iter()
            .map(to_i64)
            .collect::<Result<Vec<_>>>()?;
        Self::new(theta, x, y)
    }

    pub fn t_pow(&self) -> BigInt {
        pi_prime_power_int(&self.x)
    }

    pub fn u_pow(&self) -> BigRational {
        pi_power(&self.residual)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(items: &[(i64, i64)]) -> Vec<BigRational> {
        items.iter().map(|&(p, q)| ratio(p, q)).collect()
    }

    #[test]
    fn pi_power_examples() {
        assert_eq!(pi_power(&v(&[(2, 1), (-3, 1)])), int(6));
        assert_eq!(pi_power(&v(&[(0, 1), (5, 1)])), int(0));
        assert_eq!(pi_power(&v(&[(1, 2), (-1, 3), (4, 1)])), ratio(2, 3));
    }

    #[test]
    fn pi_prime_power_examples() {
        assert_eq!(pi_prime_power(&v(&[(1, 2), (-3, 1)])), int(3));
        assert_eq!(pi_prime_power(&v(&[(0, 1), (0, 1)])), int(1));
        assert_eq!(pi_prime_power(&v(&[(-2, 1), (5, 1)])), int(10));
        assert_eq!(pi_prime_power_int(&[-2, 5]), BigInt::from(10));
    }

    #[test]
    fn residual_examples() {
        let t = RationalMatrix::parse(&[&["3/2"]]).unwrap();
        assert_eq!(residual(&t, &[2], &[3]).unwrap(), v(&[(0, 1)]));
        let t = RationalMatrix::parse(&[&["1/3"]]).unwrap();
        assert_eq!(residual(&t, &[1], &[0]).unwrap(), v(&[(1, 3)]));
        let t = RationalMatrix::parse(&[&["1/2"], &["1/3"]]).unwrap();
        assert_eq!(residual(&t, &[6], &[3, 2]).unwrap(), v(&[(0, 1), (0, 1)]));
    }

    #[test]
    fn transpose_residual_examples() {
        let t = RationalMatrix::parse(&[&["3/2"]]).unwrap();
        assert_eq!(transpose_residual(&t, &[2], &[3]).unwrap(), v(&[(0, 1)]));
        let t = RationalMatrix::parse(&[&["1/2"], &["1/3"]]).unwrap();
        assert_eq!(transpose_residual(&t, &[2, 3], &[2]).unwrap(), v(&[(0, 1)]));
        let t = RationalMatrix::parse(&[&["1/2", "1/3"]]).unwrap();
        assert_eq!(transpose_residual(&t, &[6], &[3, 2]).unwrap(), v(&[(0, 1), (0, 1)]));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let t = RationalMatrix::parse(&[&["1/2", "1/3"]]).unwrap();
        assert!(matches!(residual(&t, &[1], &[1]), Err(Error::DimensionMismatch(_))));
        assert!(matches!(
            transpose_residual(&t, &[1, 1], &[1, 1]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(RationalMatrix::new(2, 2, vec![int(1)]).is_err());
    }

    #[test]
    fn nearest_integer_examples() {
        let to = |xs: &[i64]| xs.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>();
        assert_eq!(nearest_integer_vector(&v(&[(7, 2)])), to(&[3]));
        assert_eq!(nearest_integer_vector(&v(&[(-7, 2)])), to(&[-3]));
        assert_eq!(nearest_integer_vector(&v(&[(-5, 3), (1, 4)])), to(&[-2, 0]));
        assert_eq!(nearest_integer_vector(&v(&[(0, 1)])), to(&[0]));
        assert_eq!(nearest_integer_vector(&v(&[(1, 2), (-1, 2)])), to(&[0, 0]));
    }

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_rational("3/6").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("-1.25").unwrap(), ratio(-5, 4));
        assert_eq!(parse_rational(".5").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("-0.5").unwrap(), ratio(-1, 2));
        assert_eq!(parse_rational("17").unwrap(), int(17));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1.2.3").is_err());
        assert_eq!(format_rational(&int(3)), "3/1");
        assert_eq!(format_rational(&ratio(-6, 4)), "-3/2");
    }

    #[test]
    fn floor_root_is_exact() {
        assert_eq!(floor_root(&ratio(4000, 3), 2), BigInt::from(36));
        assert_eq!(floor_root(&int(1369), 2), BigInt::from(37));
        assert_eq!(floor_root(&ratio(1, 2), 3), BigInt::from(0));
    }

    #[test]
    fn ln_rational_handles_huge_values() {
        let big = BigRational::from_integer(num_traits::pow(BigInt::from(10), 500));
        assert!((ln_rational(&big) - 500.0 * 10f64.ln()).abs() < 1e-9);
        assert!((ln_rational(&ratio(3, 4)) - 0.75f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn rounded_pair_uses_nearest_y() {
        let t = RationalMatrix::parse(&[&["1/2"], &["1/3"]]).unwrap();
        let p = IntegerPair::rounded(&t, vec![5]).unwrap();
        assert_eq!(p.y, vec![2, 2]);
        assert_eq!(p.residual, v(&[(1, 2), (-1, 3)]));
        assert_eq!(p.u_pow(), ratio(1, 6));
        assert_eq!(p.t_pow(), BigInt::from(5));
    }
}
