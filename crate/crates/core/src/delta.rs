//! The section constant `Δ_d`.
//!
//! `Δ_d` is `1/(2^{d−1}√d)` times the (d−1)-volume of the section of the cube
//! `[−1,1]^d` by the hyperplane `Σ x_i = 0`. The section volume equals
//! `2^d √d · p(0)`, where `p` is the density of a sum of `d` independent
//! uniforms on `[−1,1]`, so the surds cancel and
//!
//! ```text
//! Δ_d = 1/(2^{d−1}(d−1)!) · Σ_{k=0}^{⌊d/2⌋} (−1)^k C(d,k) (d−2k)^{d−1}
//! ```
//!
//! is rational.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{format_rational, int, to_f64};
use crate::error::{Error, Result};

pub const DEFAULT_D_MAX: usize = 64;

pub fn delta(d: usize) -> Result<BigRational> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("Δ_d needs d ≥ 2, got {d}")));
    }
    Ok(closed_form(d))
}

/// The closed form for any `d ≥ 1`; `d = 1` gives the point section, 1.
fn closed_form(d: usize) -> BigRational {
    let mut sum = BigInt::zero();
    let mut binom = BigInt::one();
    for k in 0..=d / 2 {
        let base = BigInt::from(d - 2 * k);
        let term = &binom * num_traits::pow(base, d - 1);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        binom = binom * BigInt::from(d - k) / BigInt::from(k + 1);
    }
    let factorial: BigInt = (1..d).map(BigInt::from).product();
    let denom = (BigInt::one() << (d - 1)) * factorial;
    BigRational::new(sum, denom)
}

/// `Δ_d` for every `2 ≤ d ≤ d_max`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeltaTable {
    values: BTreeMap<usize, BigRational>,
}

impl DeltaTable {
    pub fn new(d_max: usize) -> Result<Self> {
        if d_max < 2 {
            return Err(Error::InvalidArgument(format!("d_max must be ≥ 2, got {d_max}")));
        }
        let values = (2..=d_max)
            .into_par_iter()
            .map(|d| delta(d).map(|v| (d, v)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .collect();
        Ok(Self { values })
    }

    pub fn get(&self, d: usize) -> Option<&BigRational> {
        self.values.get(&d)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &BigRational)> {
        self.values.iter().map(|(&d, v)| (d, v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `d·Δ_d² ∈ [1, 2]`, the squared form of `√(d/2) ≤ Δ_d^{−1} ≤ √d`.
pub fn within_section_bounds(d: usize, delta: &BigRational) -> bool {
    let scaled = int(d as i64) * delta * delta;
    delta.is_positive() && scaled >= int(1) && scaled <= int(2)
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaRow {
    pub d: usize,
    #[serde(with = "crate::ratio_serde")]
    pub delta: BigRational,
    pub delta_float: f64,
    pub bounds_ok: bool,
    /// `Δ_d ≤ Δ_{d−1}`, with `Δ_1 = 1`.
    pub monotone_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaReport {
    pub rows: Vec<DeltaRow>,
}

impl DeltaReport {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| r.bounds_ok && r.monotone_ok)
    }

    pub fn monotone_comparisons(&self) -> usize {
        self.rows.len()
    }
}

pub fn delta_bounds_report(d_max: usize) -> Result<(DeltaTable, DeltaReport)> {
    let table = DeltaTable::new(d_max)?;
    let rows = table
        .iter()
        .map(|(d, v)| DeltaRow {
            d,
            delta: v.clone(),
            delta_float: to_f64(v),
            bounds_ok: within_section_bounds(d, v),
            monotone_ok: *v <= table.get(d - 1).cloned().unwrap_or_else(|| closed_form(d - 1)),
        })
        .collect();
    Ok((table, DeltaReport { rows }))
}

impl std::fmt::Display for DeltaRow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Δ_{} = {}", self.d, format_rational(&self.delta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::ratio;

    #[test]
    fn small_values() {
        assert_eq!(delta(2).unwrap(), int(1));
        assert_eq!(delta(3).unwrap(), ratio(3, 4));
        assert_eq!(delta(4).unwrap(), ratio(2, 3));
        assert_eq!(delta(5).unwrap(), ratio(115, 192));
    }

    #[test]
    fn rejects_small_dimension() {
        assert!(delta(1).is_err());
        assert!(delta(0).is_err());
        assert!(DeltaTable::new(1).is_err());
    }

    #[test]
    fn report_up_to_three() {
        let (table, report) = delta_bounds_report(3).unwrap();
        assert_eq!(table.len(), 2);
        assert_eq!(table.get(2), Some(&int(1)));
        assert_eq!(table.get(3), Some(&ratio(3, 4)));
        assert!(report.all_ok());
    }

    #[test]
    fn lower_bound_is_tight_in_dimension_two() {
        // 2·1² = 2 sits exactly on the upper end of d·Δ² ∈ [1, 2].
        assert!(within_section_bounds(2, &int(1)));
        assert!(!within_section_bounds(2, &ratio(11, 10)));
        assert!(!within_section_bounds(4, &ratio(1, 3)));
    }

    #[test]
    fn report_to_thirty() {
        let (_, report) = delta_bounds_report(30).unwrap();
        assert_eq!(report.rows.len(), 29);
        assert_eq!(report.monotone_comparisons(), 29);
        assert!(report.all_ok());
    }

    #[test]
    fn default_table_is_positive_and_bounded() {
        let (table, report) = delta_bounds_report(DEFAULT_D_MAX).unwrap();
        assert!(table.iter().all(|(_, v)| v.is_positive()));
        assert!(report.all_ok());
    }
}
