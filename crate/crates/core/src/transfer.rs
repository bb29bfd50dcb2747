//! Transference budgets, witness certificates and the `ψ ↦ φ` transfer.
//!
//! For a pair with `Π'(x) ≤ X`, `Π(Θx − y) ≤ U` the transposed system has a
//! nonzero `y'` with
//!
//! ```text
//! Π'(y') ≤ Y,   Π(ᵗΘy' − x') ≤ V,   |ᵗΘy' − x'|_∞ ≤ Δ_d V^m Y^n,
//! Y = Δ_d^{−1/(d−1)} (X^m U^{1−m})^{1/(d−1)},
//! V = Δ_d^{−1/(d−1)} (X^{1−n} U^n)^{1/(d−1)}.
//! ```
//!
//! Raising the three conclusions to the powers `n(d−1)`, `m(d−1)` and `d−1`
//! leaves only rational quantities:
//!
//! ```text
//! (∏ max(1,|y'_i|))^{d−1} ≤ Δ_d^{−n} Xpow^n Upow^{1−m}
//! (∏ |r'_j|)^{d−1}        ≤ Δ_d^{−m} Xpow^{1−n} Upow^m
//! (max |r'_j|)^{d−1}      ≤ Δ_d^{−1} Xpow Upow
//! ```
//!
//! with `Xpow = X^m`, `Upow = U^n`. Every check below is one of these
//! rational comparisons.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{
    floor_root, format_rational, int, ln_rational, pi_power, pi_prime_power, rational_pow, residual,
    sup_norm, to_rational_vec, RationalMatrix,
};
use crate::delta::delta;
use crate::error::{Error, Result};
use crate::exponents::dyson_map_f64;
use crate::search::{find_witness, guard, Witness, WitnessQuery, YBound};

/// Exact multiplicative transference budget.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QualityBudget {
    m: usize,
    n: usize,
    delta: BigRational,
    xpow: BigRational,
    upow: BigRational,
    ypow_cmp: Option<BigRational>,
    vpow_cmp: BigRational,
    suppow_cmp: BigRational,
}

impl QualityBudget {
    /// Budget from `Xpow = X^m ≥ 1` and `0 ≤ Upow = U^n < 1`.
    ///
    /// `Upow = 0` is the exact-solution case: the residual targets are 0 and,
    /// for `m ≥ 2`, `Y` is unbounded (`ypow_cmp` is `None`).
    pub fn from_powers(m: usize, n: usize, xpow: BigRational, upow: BigRational) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidArgument("m and n must be positive".into()));
        }
        if xpow < BigRational::one() {
            return Err(Error::HypothesisViolated(format!(
                "X^m = {} is below 1",
                format_rational(&xpow)
            )));
        }
        if upow.is_negative() || upow >= BigRational::one() {
            return Err(Error::HypothesisViolated(format!(
                "U^n = {} is not in [0, 1)",
                format_rational(&upow)
            )));
        }
        let delta = delta(m + n)?;
        let (mi, ni) = (m as i32, n as i32);
        let ypow_cmp = if upow.is_zero() && m >= 2 {
            None
        } else {
            let u_part = if m == 1 {
                BigRational::one()
            } else {
                rational_pow(&upow, 1 - mi)
            };
            Some(rational_pow(&delta, -ni) * rational_pow(&xpow, ni) * u_part)
        };
        let vpow_cmp = rational_pow(&delta, -mi) * rational_pow(&xpow, 1 - ni) * rational_pow(&upow, mi);
        let suppow_cmp = &xpow * &upow / &delta;
        Ok(Self {
            m,
            n,
            delta,
            xpow,
            upow,
            ypow_cmp,
            vpow_cmp,
            suppow_cmp,
        })
    }

    /// The budget whose transposed-side targets are `V^m = vm`, `Y^n = yn`:
    /// `Xpow = Δ^m vm^{m−1} yn^m`, `Upow = Δ^n vm^n yn^{n−1}`.
    pub fn from_transposed(m: usize, n: usize, vm: BigRational, yn: BigRational) -> Result<Self> {
        if !vm.is_positive() || !yn.is_positive() {
            return Err(Error::InvalidArgument("V^m and Y^n must be positive".into()));
        }
        let delta = delta(m + n)?;
        let (mi, ni) = (m as i32, n as i32);
        let xpow = rational_pow(&delta, mi) * rational_pow(&vm, mi - 1) * rational_pow(&yn, mi);
        let upow = rational_pow(&delta, ni) * rational_pow(&vm, ni) * rational_pow(&yn, ni - 1);
        Self::from_powers(m, n, xpow, upow)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.m + self.n
    }

    /// `d − 1`, the power every comparator is raised to.
    pub fn exponent(&self) -> u32 {
        (self.m + self.n - 1) as u32
    }

    pub fn delta(&self) -> &BigRational {
        &self.delta
    }

    pub fn xpow(&self) -> &BigRational {
        &self.xpow
    }

    pub fn upow(&self) -> &BigRational {
        &self.upow
    }

    /// `Y^{n(d−1)}`, or `None` when unbounded.
    pub fn ypow_cmp(&self) -> Option<&BigRational> {
        self.ypow_cmp.as_ref()
    }

    /// `V^{m(d−1)}`.
    pub fn vpow_cmp(&self) -> &BigRational {
        &self.vpow_cmp
    }

    /// `(Δ_d V^m Y^n)^{d−1}`.
    pub fn suppow_cmp(&self) -> &BigRational {
        &self.suppow_cmp
    }

    pub fn exact_solution(&self) -> bool {
        self.upow.is_zero()
    }

    /// `Y`, `V` and `Δ_d V^m Y^n` as floats, from their defining formulas.
    pub fn literal_bounds(&self) -> (f64, f64, f64) {
        let e = (self.d() - 1) as f64;
        let (m, n) = (self.m as f64, self.n as f64);
        let ln_delta = ln_rational(&self.delta);
        let ln_x = ln_rational(&self.xpow) / m;
        let ln_u = if self.upow.is_zero() {
            f64::NEG_INFINITY
        } else {
            ln_rational(&self.upow) / n
        };
        let ln_y = (-ln_delta + m * ln_x + (1.0 - m) * ln_u) / e;
        let ln_v = (-ln_delta + (1.0 - n) * ln_x + n * ln_u) / e;
        let sup = ln_delta + m * ln_v + n * ln_y;
        (ln_y.exp(), ln_v.exp(), sup.exp())
    }
}

/// Tight budget for the pair `(x, y)`: `Xpow = Π'(x)^m`, `Upow = Π(Θx − y)^n`.
pub fn make_budget(theta: &RationalMatrix, x: &[i64], y: &[i64]) -> Result<QualityBudget> {
    if x.iter().all(|&v| v == 0) {
        return Err(Error::InvalidArgument("x must be nonzero".into()));
    }
    let r = residual(theta, x, y)?;
    QualityBudget::from_powers(
        theta.cols(),
        theta.rows(),
        pi_prime_power(&to_rational_vec(x)),
        pi_power(&r),
    )
}

/// Smallest `L` such that some `y = L e_i` has `ᵗΘy` integral: the least
/// common denominator of the best row of `Θ`.
pub fn exact_transposed_bound(theta: &RationalMatrix) -> BigInt {
    (0..theta.rows())
        .map(|i| theta.row(i).iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom())))
        .min()
        .expect("Θ has rows")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    Multiplicative,
    Mahler,
}

/// The hypothesis and target quantities a certificate was checked against.
///
/// For [`CertificateKind::Multiplicative`] `x_bound = X^m`, `u_bound = U^n`,
/// `y_cmp = Y^{n(d−1)}`, `v_cmp = V^{m(d−1)}`, `sup_cmp = (Δ_d V^m Y^n)^{d−1}`.
/// For [`CertificateKind::Mahler`] `x_bound = X`, `u_bound = U` are sup-norm
/// bounds, `y_cmp = (d−1)^{d−1} X^m U^{1−m}` bounds `|y'|_∞^{d−1}`,
/// `sup_cmp = (d−1)^{d−1} X^{1−n} U^n` bounds `|ᵗΘy' − x'|_∞^{d−1}`, and
/// `v_cmp` is absent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetRecord {
    #[serde(with = "crate::ratio_serde")]
    pub x_bound: BigRational,
    #[serde(with = "crate::ratio_serde")]
    pub u_bound: BigRational,
    #[serde(with = "crate::ratio_serde::option")]
    pub y_cmp: Option<BigRational>,
    #[serde(with = "crate::ratio_serde::option")]
    pub v_cmp: Option<BigRational>,
    #[serde(with = "crate::ratio_serde")]
    pub sup_cmp: BigRational,
    pub exact_solution: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    #[serde(with = "crate::ratio_serde")]
    pub lhs: BigRational,
    /// `None` for an unbounded right side.
    #[serde(with = "crate::ratio_serde::option")]
    pub rhs: Option<BigRational>,
    pub holds: bool,
}

impl InequalityCheck {
    fn le(name: &str, lhs: BigRational, rhs: Option<BigRational>) -> Self {
        let holds = rhs.as_ref().is_none_or(|r| lhs <= *r);
        Self {
            name: name.into(),
            lhs,
            rhs,
            holds,
        }
    }

    fn lt(name: &str, lhs: BigRational, rhs: BigRational) -> Self {
        let holds = lhs < rhs;
        Self {
            name: name.into(),
            lhs,
            rhs: Some(rhs),
            holds,
        }
    }
}

/// A transference instance with its witness and every inequality re-checked.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub m: usize,
    pub n: usize,
    #[serde(with = "crate::ratio_serde::matrix")]
    pub theta: Vec<Vec<BigRational>>,
    #[serde(with = "crate::ratio_serde::option")]
    pub precision: Option<BigRational>,
    #[serde(with = "crate::ratio_serde")]
    pub delta: BigRational,
    pub x: Vec<i64>,
    pub y: Vec<i64>,
    /// Set when the budget was supplied rather than taken tight from `(x, y)`.
    pub explicit_budget: bool,
    pub budget: BudgetRecord,
    pub witness: Witness,
    pub checks: Vec<InequalityCheck>,
    pub all_hold: bool,
}

impl Certificate {
    pub fn theta_matrix(&self) -> Result<RationalMatrix> {
        Ok(RationalMatrix::from_rows(self.theta.clone())?.with_precision(self.precision.clone()))
    }
}

fn multiplicative_checks(
    theta: &RationalMatrix,
    x: &[i64],
    y: &[i64],
    budget: &QualityBudget,
    w: &Witness,
) -> Result<Vec<InequalityCheck>> {
    let e = budget.exponent() as i32;
    let r = residual(theta, x, y)?;
    let r_w = crate::arith::transpose_residual(theta, &w.y, &w.x)?;
    let y_w = to_rational_vec(&w.y);
    Ok(vec![
        InequalityCheck::le(
            "hypothesis: Π'(x)^m ≤ X^m",
            pi_prime_power(&to_rational_vec(x)),
            Some(budget.xpow().clone()),
        ),
        InequalityCheck::le("hypothesis: Π(Θx−y)^n ≤ U^n", pi_power(&r), Some(budget.upow().clone())),
        InequalityCheck::lt("hypothesis: U^n < 1", budget.upow().clone(), BigRational::one()),
        InequalityCheck::lt("witness: 0 < |y'|_∞", BigRational::zero(), sup_norm(&y_w)),
        InequalityCheck::le(
            "witness: Π'(y')^{n(d−1)} ≤ Y^{n(d−1)}",
            rational_pow(&pi_prime_power(&y_w), e),
            budget.ypow_cmp().cloned(),
        ),
        InequalityCheck::le(
            "witness: Π(ᵗΘy'−x')^{m(d−1)} ≤ V^{m(d−1)}",
            rational_pow(&pi_power(&r_w), e),
            Some(budget.vpow_cmp().clone()),
        ),
        InequalityCheck::le(
            "witness: |ᵗΘy'−x'|_∞^{d−1} ≤ (Δ_d V^m Y^n)^{d−1}",
            rational_pow(&sup_norm(&r_w), e),
            Some(budget.suppow_cmp().clone()),
        ),
    ])
}

fn budget_record(budget: &QualityBudget) -> BudgetRecord {
    BudgetRecord {
        x_bound: budget.xpow().clone(),
        u_bound: budget.upow().clone(),
        y_cmp: budget.ypow_cmp().cloned(),
        v_cmp: Some(budget.vpow_cmp().clone()),
        sup_cmp: budget.suppow_cmp().clone(),
        exact_solution: budget.exact_solution(),
    }
}

fn witness_guard(theta: &RationalMatrix, w: &Witness) -> Result<()> {
    let shell = w.y.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0);
    guard(theta, shell, &w.residual, &crate::arith::ratio(1, 1_000_000))
}

/// Options shared by the two verifiers.
#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    /// `(X^m, U^n)` (or `(X, U)` for Mahler) instead of the tight values.
    pub explicit_budget: Option<(BigRational, BigRational)>,
    pub time_limit: Option<std::time::Duration>,
}

/// Runs the witness search for the transposed system and certifies the result.
///
/// A missing witness is reported as [`Error::Falsified`].
pub fn verify_multitrans(
    theta: &RationalMatrix,
    x: &[i64],
    y: &[i64],
    options: &VerifyOptions,
) -> Result<Certificate> {
    let tight = make_budget(theta, x, y)?;
    let budget = match &options.explicit_budget {
        Some((xp, up)) => QualityBudget::from_powers(theta.cols(), theta.rows(), xp.clone(), up.clone())?,
        None => tight.clone(),
    };
    if tight.xpow() > budget.xpow() || tight.upow() > budget.upow() {
        return Err(Error::HypothesisViolated(
            "the pair does not satisfy the supplied budget".into(),
        ));
    }
    let e = budget.exponent();
    let y_bound = match budget.ypow_cmp() {
        Some(ypow) => floor_root(ypow, e),
        None => exact_transposed_bound(theta),
    };
    let query = WitnessQuery {
        y_bound: YBound::Product(y_bound),
        exponent: e,
        residual_product_cmp: Some(budget.vpow_cmp().clone()),
        residual_sup_cmp: budget.suppow_cmp().clone(),
        time_limit: options.time_limit,
    };
    let witness = find_witness(theta, &query)?.ok_or_else(|| {
        Error::Falsified(format!(
            "no transposed witness for x = {x:?}, y = {y:?} within Π'(y)^{{n}} ≤ {}",
            query_bound(&query)
        ))
    })?;
    witness_guard(theta, &witness)?;
    let checks = multiplicative_checks(theta, x, y, &budget, &witness)?;
    Ok(Certificate {
        kind: CertificateKind::Multiplicative,
        m: theta.cols(),
        n: theta.rows(),
        theta: theta.to_rows(),
        precision: theta.precision().cloned(),
        delta: budget.delta().clone(),
        x: x.to_vec(),
        y: y.to_vec(),
        explicit_budget: options.explicit_budget.is_some(),
        budget: budget_record(&budget),
        all_hold: checks.iter().all(|c| c.holds),
        witness,
        checks,
    })
}

fn query_bound(q: &WitnessQuery) -> String {
    match &q.y_bound {
        YBound::Product(p) | YBound::Sup(p) => p.to_string(),
    }
}

/// Sup-norm comparators `(d−1)^{d−1} X^m U^{1−m}` and `(d−1)^{d−1} X^{1−n} U^n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MahlerBudget {
    pub m: usize,
    pub n: usize,
    pub x_sup: BigRational,
    pub u_sup: BigRational,
    /// `None` when `U = 0` and `m ≥ 2`.
    pub ypow_cmp: Option<BigRational>,
    pub vpow_cmp: BigRational,
}

impl MahlerBudget {
    pub fn new(m: usize, n: usize, x_sup: BigRational, u_sup: BigRational) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidArgument("m and n must be positive".into()));
        }
        if x_sup < BigRational::one() || u_sup.is_negative() || u_sup >= BigRational::one() {
            return Err(Error::HypothesisViolated(format!(
                "need 0 ≤ U < 1 ≤ X, got X = {}, U = {}",
                format_rational(&x_sup),
                format_rational(&u_sup)
            )));
        }
        let d = m + n;
        let (mi, ni) = (m as i32, n as i32);
        let lead = rational_pow(&int(d as i64 - 1), d as i32 - 1);
        let ypow_cmp = if u_sup.is_zero() && m >= 2 {
            None
        } else {
            let u_part = if m == 1 {
                BigRational::one()
            } else {
                rational_pow(&u_sup, 1 - mi)
            };
            Some(&lead * rational_pow(&x_sup, mi) * u_part)
        };
        let vpow_cmp = &lead * rational_pow(&x_sup, 1 - ni) * rational_pow(&u_sup, ni);
        Ok(Self {
            m,
            n,
            x_sup,
            u_sup,
            ypow_cmp,
            vpow_cmp,
        })
    }

    pub fn exponent(&self) -> u32 {
        (self.m + self.n - 1) as u32
    }
}

/// Mahler's sup-norm transference, certified the same way.
pub fn verify_mahler(
    theta: &RationalMatrix,
    x: &[i64],
    y: &[i64],
    options: &VerifyOptions,
) -> Result<Certificate> {
    if x.iter().all(|&v| v == 0) {
        return Err(Error::InvalidArgument("x must be nonzero".into()));
    }
    let r = residual(theta, x, y)?;
    let x_tight = sup_norm(&to_rational_vec(x));
    let u_tight = sup_norm(&r);
    let (x_sup, u_sup) = options
        .explicit_budget
        .clone()
        .unwrap_or((x_tight.clone(), u_tight.clone()));
    if x_tight > x_sup || u_tight > u_sup {
        return Err(Error::HypothesisViolated(
            "the pair does not satisfy the supplied budget".into(),
        ));
    }
    let budget = MahlerBudget::new(theta.cols(), theta.rows(), x_sup, u_sup)?;
    let e = budget.exponent();
    let y_bound = match &budget.ypow_cmp {
        Some(c) => floor_root(c, e),
        None => exact_transposed_bound(theta),
    };
    let query = WitnessQuery {
        y_bound: YBound::Sup(y_bound),
        exponent: e,
        residual_product_cmp: None,
        residual_sup_cmp: budget.vpow_cmp.clone(),
        time_limit: options.time_limit,
    };
    let witness = find_witness(theta, &query)?.ok_or_else(|| {
        Error::Falsified(format!(
            "no sup-norm witness for x = {x:?}, y = {y:?} within |y|_∞ ≤ {}",
            query_bound(&query)
        ))
    })?;
    witness_guard(theta, &witness)?;
    let checks = mahler_checks(theta, x, y, &budget, &witness)?;
    Ok(Certificate {
        kind: CertificateKind::Mahler,
        m: theta.cols(),
        n: theta.rows(),
        theta: theta.to_rows(),
        precision: theta.precision().cloned(),
        delta: delta(theta.d())?,
        x: x.to_vec(),
        y: y.to_vec(),
        explicit_budget: options.explicit_budget.is_some(),
        budget: BudgetRecord {
            x_bound: budget.x_sup.clone(),
            u_bound: budget.u_sup.clone(),
            y_cmp: budget.ypow_cmp.clone(),
            v_cmp: None,
            sup_cmp: budget.vpow_cmp.clone(),
            exact_solution: budget.u_sup.is_zero(),
        },
        all_hold: checks.iter().all(|c| c.holds),
        witness,
        checks,
    })
}

fn mahler_checks(
    theta: &RationalMatrix,
    x: &[i64],
    y: &[i64],
    budget: &MahlerBudget,
    w: &Witness,
) -> Result<Vec<InequalityCheck>> {
    let e = budget.exponent() as i32;
    let r = residual(theta, x, y)?;
    let r_w = crate::arith::transpose_residual(theta, &w.y, &w.x)?;
    let y_w = to_rational_vec(&w.y);
    Ok(vec![
        InequalityCheck::le(
            "hypothesis: |x|_∞ ≤ X",
            sup_norm(&to_rational_vec(x)),
            Some(budget.x_sup.clone()),
        ),
        InequalityCheck::le("hypothesis: |Θx−y|_∞ ≤ U", sup_norm(&r), Some(budget.u_sup.clone())),
        InequalityCheck::lt("hypothesis: U < 1", budget.u_sup.clone(), BigRational::one()),
        InequalityCheck::lt("witness: 0 < |y'|_∞", BigRational::zero(), sup_norm(&y_w)),
        InequalityCheck::le(
            "witness: |y'|_∞^{d−1} ≤ (d−1)^{d−1} X^m U^{1−m}",
            rational_pow(&sup_norm(&y_w), e),
            budget.ypow_cmp.clone(),
        ),
        InequalityCheck::le(
            "witness: |ᵗΘy'−x'|_∞^{d−1} ≤ (d−1)^{d−1} X^{1−n} U^n",
            rational_pow(&sup_norm(&r_w), e),
            Some(budget.vpow_cmp.clone()),
        ),
    ])
}

/// Outcome of recomputing a stored certificate from its inputs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Revalidation {
    pub checks_agree: bool,
    pub budget_agrees: bool,
    pub all_hold: bool,
    pub mismatches: Vec<String>,
}

impl Revalidation {
    pub fn ok(&self) -> bool {
        self.checks_agree && self.budget_agrees && self.all_hold
    }
}

/// Recomputes every budget quantity and inequality of `cert` from its stored
/// `Θ`, input pair and witness, and compares with what was stored.
pub fn revalidate(cert: &Certificate) -> Result<Revalidation> {
    let theta = cert.theta_matrix()?;
    if theta.cols() != cert.m || theta.rows() != cert.n {
        return Err(Error::DimensionMismatch("stored m, n disagree with Θ".into()));
    }
    let witness = Witness::new(&theta, cert.witness.y.clone(), cert.witness.x.clone())?;
    let explicit = cert
        .explicit_budget
        .then(|| (cert.budget.x_bound.clone(), cert.budget.u_bound.clone()));
    let (record, checks) = match cert.kind {
        CertificateKind::Multiplicative => {
            let budget = match explicit {
                Some((xp, up)) => QualityBudget::from_powers(cert.m, cert.n, xp, up)?,
                None => make_budget(&theta, &cert.x, &cert.y)?,
            };
            let checks = multiplicative_checks(&theta, &cert.x, &cert.y, &budget, &witness)?;
            (budget_record(&budget), checks)
        }
        CertificateKind::Mahler => {
            let (xs, us) = match explicit {
                Some(b) => b,
                None => (
                    sup_norm(&to_rational_vec(&cert.x)),
                    sup_norm(&residual(&theta, &cert.x, &cert.y)?),
                ),
            };
            let budget = MahlerBudget::new(cert.m, cert.n, xs, us)?;
            let checks = mahler_checks(&theta, &cert.x, &cert.y, &budget, &witness)?;
            let record = BudgetRecord {
                x_bound: budget.x_sup.clone(),
                u_bound: budget.u_sup.clone(),
                y_cmp: budget.ypow_cmp.clone(),
                v_cmp: None,
                sup_cmp: budget.vpow_cmp.clone(),
                exact_solution: budget.u_sup.is_zero(),
            };
            (record, checks)
        }
    };
    let mut mismatches = Vec::new();
    if witness.residual != cert.witness.residual {
        mismatches.push("witness residual".to_string());
    }
    if record != cert.budget {
        mismatches.push("budget".to_string());
    }
    if cert.delta != delta(cert.m + cert.n)? {
        mismatches.push("Δ_d".to_string());
    }
    for (fresh, stored) in checks.iter().zip(&cert.checks) {
        if fresh != stored {
            mismatches.push(fresh.name.clone());
        }
    }
    if checks.len() != cert.checks.len() {
        mismatches.push("number of checks".to_string());
    }
    let all_hold = checks.iter().all(|c| c.holds) && cert.all_hold;
    Ok(Revalidation {
        checks_agree: checks == cert.checks,
        budget_agrees: record == cert.budget,
        all_hold,
        mismatches,
    })
}

/// Certifies many instances in parallel; output order follows input order.
pub fn verify_many(
    instances: &[(RationalMatrix, Vec<i64>, Vec<i64>)],
    kind: CertificateKind,
) -> Vec<Result<Certificate>> {
    let options = VerifyOptions::default();
    instances
        .par_iter()
        .map(|(theta, x, y)| match kind {
            CertificateKind::Multiplicative => verify_multitrans(theta, x, y, &options),
            CertificateKind::Mahler => verify_mahler(theta, x, y, &options),
        })
        .collect()
}

/// `Y^{d−1}` under both theorems for the same sup-norm `X`, `U`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct YBudgetComparison {
    #[serde(with = "crate::ratio_serde")]
    pub multiplicative: BigRational,
    #[serde(with = "crate::ratio_serde")]
    pub mahler: BigRational,
    pub strictly_tighter: bool,
}

/// `Δ_d^{−1} X^m U^{1−m}` against `(d−1)^{d−1} X^m U^{1−m}`; `U > 0`.
pub fn compare_y_budgets(m: usize, n: usize, x: &BigRational, u: &BigRational) -> Result<YBudgetComparison> {
    if !u.is_positive() {
        return Err(Error::InvalidArgument("U must be positive".into()));
    }
    let d = m + n;
    let core = rational_pow(x, m as i32) * rational_pow(u, 1 - m as i32);
    let multiplicative = &core / delta(d)?;
    let mahler = rational_pow(&int(d as i64 - 1), d as i32 - 1) * core;
    Ok(YBudgetComparison {
        strictly_tighter: multiplicative < mahler,
        multiplicative,
        mahler,
    })
}

/// An approximation function `ψ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionSpec {
    /// `ψ(t) = t^{−γ}`.
    Power { gamma: f64 },
    /// `ψ(t) = t^{−1/2} (log t)^{−1/2}`, for `m = 1, n = 2`.
    LogLittlewood1,
    /// `ψ(t) = 1/(t² log(1+t))`, for `m = 2, n = 1`.
    LogLittlewood2,
    /// Log-log linear interpolation through `(t, ψ(t))`, `t` strictly increasing.
    Tabulated { points: Vec<(f64, f64)> },
}

impl FunctionSpec {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Power { .. } => "power",
            Self::LogLittlewood1 => "log-littlewood-1",
            Self::LogLittlewood2 => "log-littlewood-2",
            Self::Tabulated { .. } => "tabulated",
        }
    }

    /// Domain in `u = ln t` (inclusive lower end, optional upper end).
    fn domain(&self) -> (f64, Option<f64>) {
        match self {
            Self::LogLittlewood1 => (1e-9, None),
            Self::Tabulated { points } => (points[0].0.ln(), Some(points[points.len() - 1].0.ln())),
            Self::Power { .. } | Self::LogLittlewood2 => (-700.0, None),
        }
    }

    /// `ln ψ(e^u)`.
    fn ln_psi(&self, u: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if u < lo || hi.is_some_and(|h| u > h) || !u.is_finite() {
            return Err(Error::Domain(format!("ln t = {u} is outside the domain of ψ")));
        }
        Ok(match self {
            Self::Power { gamma } => -gamma * u,
            Self::LogLittlewood1 => -0.5 * u - 0.5 * u.ln(),
            Self::LogLittlewood2 => -2.0 * u - ln_log1p_exp(u),
            Self::Tabulated { points } => {
                let k = points
                    .windows(2)
                    .position(|w| u <= w[1].0.ln())
                    .unwrap_or(points.len() - 2);
                let (t0, p0) = points[k];
                let (t1, p1) = points[k + 1];
                let (u0, u1) = (t0.ln(), t1.ln());
                let s = (u - u0) / (u1 - u0);
                p0.ln() + s * (p1.ln() - p0.ln())
            }
        })
    }

    fn validate(&self) -> Result<()> {
        match self {
            Self::Power { gamma } if !gamma.is_finite() || *gamma <= 0.0 => Err(Error::InvalidArgument(
                "power spec needs a finite γ > 0".into(),
            )),
            Self::Tabulated { points } => {
                if points.len() < 2 {
                    return Err(Error::InvalidArgument("a table needs at least two points".into()));
                }
                if points.iter().any(|(t, p)| !(t.is_finite() && p.is_finite() && *t > 0.0 && *p > 0.0)) {
                    return Err(Error::InvalidArgument("table entries must be positive and finite".into()));
                }
                if points.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::InvalidArgument("table t-values must increase strictly".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// `ln(log(1 + e^u))`, stable for large and small `u`.
fn ln_log1p_exp(u: f64) -> f64 {
    let l = if u > 30.0 { u + (-u).exp().ln_1p() } else { u.exp().ln_1p() };
    l.ln()
}

/// Growth conditions observed on the sampling grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhiReport {
    pub spec: String,
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub delta_float: f64,
    /// Grid points at which `f` was checked to increase strictly.
    pub monotone_points: usize,
    /// Smallest grid `t` from which `ψ(t) < 1` on the rest of the grid.
    pub psi_below_one_from: Option<f64>,
    /// `t^{(1−n)/n} ψ(t)` decreases strictly over the last quarter of the grid.
    pub tail_decreasing: bool,
    /// `t^{(1−n)/n} ψ(t)` at the last grid point.
    pub tail_value: f64,
}

/// `φ = g ∘ f^{−1}` (and, for `n = 1`, `χ = h ∘ f^{−1}`) for a fixed `ψ`.
///
/// All work happens in logarithms: with `u = ln t`,
/// `ln f = (−ln Δ_d + m u + (1−m) ln ψ)/(d−1)` and
/// `ln g = (−ln Δ_d + (1−n) u + n ln ψ)/(d−1)`.
#[derive(Clone, Debug)]
pub struct PhiTransfer {
    spec: FunctionSpec,
    m: usize,
    n: usize,
    ln_delta: f64,
}

const BISECTION_TOL: f64 = 1e-12;

impl PhiTransfer {
    fn ln_f(&self, u: f64) -> Result<f64> {
        let e = (self.m + self.n - 1) as f64;
        Ok((-self.ln_delta + self.m as f64 * u + (1.0 - self.m as f64) * self.spec.ln_psi(u)?) / e)
    }

    fn ln_g(&self, u: f64) -> Result<f64> {
        let e = (self.m + self.n - 1) as f64;
        Ok((-self.ln_delta + (1.0 - self.n as f64) * u + self.n as f64 * self.spec.ln_psi(u)?) / e)
    }

    /// `ln h = (−ln Δ_d + m u + n ln ψ)/(d−1)`, the sup-norm bound of the
    /// transposed residual.
    fn ln_h(&self, u: f64) -> Result<f64> {
        let e = (self.m + self.n - 1) as f64;
        Ok((-self.ln_delta + self.m as f64 * u + self.n as f64 * self.spec.ln_psi(u)?) / e)
    }

    /// `ln f^{−1}(e^{ln_s})`, by bisection in `u` to absolute tolerance 1e−12
    /// (relative tolerance on `t`).
    pub fn ln_f_inverse(&self, ln_s: f64) -> Result<f64> {
        let (lo_dom, hi_dom) = self.spec.domain();
        let mut lo = lo_dom;
        if self.ln_f(lo)? > ln_s {
            return Err(Error::Domain(format!(
                "s = e^{ln_s} lies below the range of f"
            )));
        }
        let mut span = 1.0;
        let mut hi = lo + span;
        loop {
            if let Some(h) = hi_dom {
                hi = hi.min(h);
            }
            if self.ln_f(hi)? >= ln_s {
                break;
            }
            if hi_dom.is_some_and(|h| hi >= h) || span > 1e6 {
                return Err(Error::Domain(format!(
                    "s = e^{ln_s} lies above the range of f"
                )));
            }
            lo = hi;
            span *= 2.0;
            hi = lo + span;
        }
        while hi - lo > BISECTION_TOL * hi.abs().max(1.0) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.ln_f(mid)? < ln_s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `ln φ(e^{ln_s})`.
    pub fn ln_phi(&self, ln_s: f64) -> Result<f64> {
        self.ln_g(self.ln_f_inverse(ln_s)?)
    }

    pub fn phi(&self, s: f64) -> Result<f64> {
        if s <= 0.0 || !s.is_finite() {
            return Err(Error::Domain(format!("φ needs finite s > 0, got {s}")));
        }
        Ok(self.ln_phi(s.ln())?.exp())
    }

    /// `χ(s) = h(f^{−1}(s))` with `h(t) = (Δ_d^{−1} t^m ψ(t)^n)^{1/(d−1)}`; `n = 1` only.
    pub fn chi(&self, s: f64) -> Result<f64> {
        if self.n != 1 {
            return Err(Error::InvalidArgument("χ is defined for n = 1".into()));
        }
        if s <= 0.0 || !s.is_finite() {
            return Err(Error::Domain(format!("χ needs finite s > 0, got {s}")));
        }
        Ok(self.ln_h(self.ln_f_inverse(s.ln())?)?.exp())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

const GRID: usize = 400;

/// Builds `φ` for `ψ`, checking on a grid that `f` increases strictly and
/// recording the growth conditions on `ψ`.
pub fn phi_from_psi(spec: &FunctionSpec, m: usize, n: usize) -> Result<(PhiTransfer, PhiReport)> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument("m and n must be positive".into()));
    }
    spec.validate()?;
    let d = m + n;
    let delta_d = delta(d)?;
    let transfer = PhiTransfer {
        spec: spec.clone(),
        m,
        n,
        ln_delta: ln_rational(&delta_d),
    };
    let (lo, hi) = spec.domain();
    let lo = lo.max(-50.0);
    let hi = hi.unwrap_or(lo + 200.0);
    let grid: Vec<f64> = (0..GRID)
        .map(|k| lo + (hi - lo) * k as f64 / (GRID - 1) as f64)
        .collect();
    let f_values = grid.iter().map(|&u| transfer.ln_f(u)).collect::<Result<Vec<_>>>()?;
    if let Some(k) = f_values.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::NotInvertible(format!(
            "f does not increase between t = {:.6e} and t = {:.6e}",
            grid[k].exp(),
            grid[k + 1].exp()
        )));
    }
    let psi = grid.iter().map(|&u| spec.ln_psi(u)).collect::<Result<Vec<_>>>()?;
    let psi_below_one_from = (0..GRID)
        .rev()
        .take_while(|&k| psi[k] < 0.0)
        .last()
        .map(|k| grid[k].exp());
    let tail: Vec<f64> = grid
        .iter()
        .zip(&psi)
        .map(|(u, p)| (1.0 - n as f64) / n as f64 * u + p)
        .collect();
    let quarter = &tail[GRID * 3 / 4..];
    let report = PhiReport {
        spec: spec.label().into(),
        m,
        n,
        d,
        delta_float: crate::arith::to_f64(&delta_d),
        monotone_points: GRID,
        psi_below_one_from,
        tail_decreasing: quarter.windows(2).all(|w| w[1] < w[0]),
        tail_value: tail[GRID - 1].exp(),
    };
    Ok((transfer, report))
}

/// `χ` for `n = 1`.
pub fn chi_from_psi(spec: &FunctionSpec, m: usize) -> Result<PhiTransfer> {
    Ok(phi_from_psi(spec, m, 1)?.0)
}

/// The closed form of `φ` for `ψ(t) = t^{−γ}`:
/// `s^{−γ'} Δ_d^{−(1+γ')/(d−1)}` with `γ'` the Dyson-like image of `γ`.
pub fn power_phi_closed_form(gamma: f64, m: usize, n: usize, s: f64) -> Result<f64> {
    let g = dyson_map_f64(gamma, m, n)?;
    let e = (m + n - 1) as f64;
    let ln_delta = ln_rational(&delta(m + n)?);
    Ok((-g * s.ln() - (1.0 + g) * ln_delta / e).exp())
}
