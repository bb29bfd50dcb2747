//! Pruned enumeration of integer points.
//!
//! Every search walks a region of `Z^k` of the form
//! `{z : ∏ max(1,|z_i|) ≤ P, |z|_∞ ≤ C}` restricted to canonical vectors
//! (first nonzero coordinate positive). Both `z` and `−z` give the same
//! quality, so nothing is lost. The walk fixes coordinates left to right and
//! divides the remaining product budget by each `max(1,|z_i|)`, which turns
//! the box into a product-bounded tree.
//!
//! Work is split into independent tasks and merged with total orders
//! (ties broken by shell, then lexicographically), so results never depend
//! on the number of threads.
//!
//! Rows of the matrix are stored over a common denominator, so `Θx` is an
//! integer dot product followed by one rounding division, and all predicates
//! compare integers.

use std::collections::BTreeMap;
use std::ops::Bound;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{int, pi_power, ratio, round_quotient, transpose_residual, IntegerPair, RationalMatrix};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchBudget {
    pub sup_bound: u64,
    pub time_limit: Option<Duration>,
    /// Factor `g` in the guard `d·B·ε < g · min_i |r_i|`.
    pub precision_guard: BigRational,
}

impl SearchBudget {
    pub fn new(sup_bound: u64) -> Result<Self> {
        if sup_bound < 1 {
            return Err(Error::InvalidArgument("sup_bound must be at least 1".into()));
        }
        Ok(Self {
            sup_bound,
            time_limit: None,
            precision_guard: ratio(1, 1_000_000),
        })
    }

    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.time_limit = Some(limit);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.sup_bound < 1 {
            return Err(Error::InvalidArgument("sup_bound must be at least 1".into()));
        }
        if !self.precision_guard.is_positive() {
            return Err(Error::InvalidArgument("precision guard must be positive".into()));
        }
        Ok(())
    }
}

/// One record of a best-approximation sequence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApproxRecord {
    pub x: Vec<i64>,
    pub y: Vec<i64>,
    /// `|x|_∞`.
    pub shell: u64,
    /// `Π'(x)^m = ∏ max(1,|x_j|)`.
    #[serde(with = "crate::ratio_serde")]
    pub t_pow: BigRational,
    /// `Π(Θx − y)^n = ∏ |(Θx − y)_i|`.
    #[serde(with = "crate::ratio_serde")]
    pub u_pow: BigRational,
    /// `Θx − y`.
    #[serde(with = "crate::ratio_serde::vec")]
    pub residual: Vec<BigRational>,
}

impl ApproxRecord {
    pub fn from_pair(pair: IntegerPair) -> Self {
        Self {
            shell: pair.x.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0),
            t_pow: BigRational::from_integer(pair.t_pow()),
            u_pow: pair.u_pow(),
            x: pair.x,
            y: pair.y,
            residual: pair.residual,
        }
    }

    pub fn pair(&self) -> IntegerPair {
        IntegerPair {
            x: self.x.clone(),
            y: self.y.clone(),
            residual: self.residual.clone(),
        }
    }
}

struct Deadline {
    until: Option<Instant>,
    hit: AtomicBool,
}

impl Deadline {
    fn new(limit: Option<Duration>) -> Self {
        Self {
            until: limit.map(|l| Instant::now() + l),
            hit: AtomicBool::new(false),
        }
    }

    fn expired(&self) -> bool {
        if self.hit.load(Ordering::Relaxed) {
            return true;
        }
        if self.until.is_some_and(|u| Instant::now() >= u) {
            self.hit.store(true, Ordering::Relaxed);
            return true;
        }
        false
    }

    fn check(&self, what: &str) -> Result<()> {
        if self.hit.load(Ordering::Relaxed) {
            return Err(Error::Inconclusive(format!("time limit reached during {what}")));
        }
        Ok(())
    }
}

/// `{z canonical : ∏ max(1,|z_i|) ≤ product_bound, lo ≤ |z|_∞ ≤ hi}`.
#[derive(Clone, Copy, Debug)]
struct Region {
    dim: usize,
    product_bound: u64,
    shell_lo: u64,
    shell_hi: u64,
}

struct Task {
    prefix: Vec<i64>,
    lo: i64,
    hi: i64,
    budget: u64,
    pending: bool,
}

const SPLIT_THRESHOLD: u64 = 4096;
const CHUNK: i64 = 1024;
const MAX_EXPANDED: u64 = 64;

impl Region {
    fn cap(&self, budget: u64) -> i64 {
        budget.min(self.shell_hi).min(i64::MAX as u64) as i64
    }

    fn push_chunks(&self, prefix: &[i64], lo: i64, hi: i64, budget: u64, pending: bool, out: &mut Vec<Task>) {
        let mut start = lo;
        while start <= hi {
            let end = hi.min(start.saturating_add(CHUNK - 1));
            out.push(Task {
                prefix: prefix.to_vec(),
                lo: start,
                hi: end,
                budget,
                pending,
            });
            if end == i64::MAX {
                break;
            }
            start = end + 1;
        }
    }

    fn expand(&self, prefix: &mut Vec<i64>, budget: u64, pending: bool, out: &mut Vec<Task>) {
        let j = prefix.len();
        let cap = self.cap(budget);
        let lo = if pending { 0 } else { -cap };
        if j + 1 < self.dim && budget >= SPLIT_THRESHOLD {
            let k = ((budget / SPLIT_THRESHOLD).min(MAX_EXPANDED) as i64).min(cap);
            let inner_lo = if pending { 0 } else { -k };
            for v in inner_lo..=k {
                prefix.push(v);
                self.expand(prefix, budget / v.unsigned_abs().max(1), pending && v == 0, out);
                prefix.pop();
            }
            if k < cap {
                self.push_chunks(prefix, k + 1, cap, budget, pending, out);
                if !pending {
                    self.push_chunks(prefix, -cap, -k - 1, budget, pending, out);
                }
            }
        } else {
            self.push_chunks(prefix, lo, cap, budget, pending, out);
        }
    }

    fn tasks(&self) -> Vec<Task> {
        let mut out = Vec::new();
        if self.product_bound >= 1 && self.shell_hi >= 1 && self.shell_lo <= self.shell_hi {
            self.expand(&mut Vec::new(), self.product_bound, true, &mut out);
        }
        out
    }

    fn walk(&self, x: &mut Vec<i64>, budget: u64, pending: bool, visit: &mut dyn FnMut(&[i64])) {
        if x.len() == self.dim {
            if pending {
                return;
            }
            let sup = x.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0);
            if sup >= self.shell_lo {
                visit(x);
            }
            return;
        }
        let cap = self.cap(budget);
        let lo = if pending { 0 } else { -cap };
        for v in lo..=cap {
            x.push(v);
            self.walk(x, budget / v.unsigned_abs().max(1), pending && v == 0, visit);
            x.pop();
        }
    }

    fn run_task(&self, task: &Task, visit: &mut dyn FnMut(&[i64])) {
        let mut x = task.prefix.clone();
        for v in task.lo..=task.hi {
            x.push(v);
            self.walk(
                &mut x,
                task.budget / v.unsigned_abs().max(1),
                task.pending && v == 0,
                visit,
            );
            x.pop();
        }
    }

    /// Parallel fold over the region.
    fn fold<T, I, V, M>(&self, deadline: &Deadline, identity: I, visit: V, merge: M) -> T
    where
        T: Send,
        I: Fn() -> T + Sync + Send,
        V: Fn(&mut T, &[i64]) + Sync + Send,
        M: Fn(T, T) -> T + Sync + Send,
    {
        self.tasks()
            .par_iter()
            .fold(&identity, |mut acc, task| {
                if !deadline.expired() {
                    self.run_task(task, &mut |x| visit(&mut acc, x));
                }
                acc
            })
            .reduce(&identity, &merge)
    }
}

fn round_quotient_i128(num: i128, den: i128) -> i128 {
    let q = num.div_euclid(den);
    let r = num.rem_euclid(den);
    match (2 * r).cmp(&den) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => {
            if q < 0 {
                q + 1
            } else {
                q
            }
        }
    }
}

/// Linear forms `L_i(z) = (Σ a_ij z_j) / D_i` with integer `a_ij` and `D_i > 0`.
struct ScaledRows {
    coeffs: Vec<Vec<BigInt>>,
    dens: Vec<BigInt>,
    small: Option<Vec<(Vec<i128>, i128)>>,
}

impl ScaledRows {
    /// `bound` caps `|z|_∞` for the fast path and overflow checks.
    fn new(rows: &[Vec<BigRational>], bound: u64) -> Result<Self> {
        let mut coeffs = Vec::with_capacity(rows.len());
        let mut dens = Vec::with_capacity(rows.len());
        for row in rows {
            let den = row.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
            let a: Vec<BigInt> = row.iter().map(|v| (v * &den).to_integer()).collect();
            let reach = row.iter().fold(BigRational::zero(), |acc, v| acc + v.abs())
                * BigRational::from_integer(BigInt::from(bound))
                + BigRational::one();
            if reach > BigRational::from_integer(BigInt::from(1u64 << 62)) {
                return Err(Error::InvalidArgument(format!(
                    "|Θz| can exceed 2^62 for |z|_∞ ≤ {bound}"
                )));
            }
            coeffs.push(a);
            dens.push(den);
        }
        let bound_bits = 64 - bound.leading_zeros() as u64;
        let fits = coeffs.iter().zip(&dens).all(|(a, den)| {
            let widest = a.iter().map(|v| v.bits()).max().unwrap_or(0);
            widest + bound_bits + 8 < 120 && den.bits() + 4 < 120
        });
        let small = fits.then(|| {
            coeffs
                .iter()
                .zip(&dens)
                .map(|(a, den)| {
                    (
                        a.iter().map(|v| v.to_i128().unwrap()).collect(),
                        den.to_i128().unwrap(),
                    )
                })
                .collect()
        });
        Ok(Self { coeffs, dens, small })
    }

    fn common_denominator(&self) -> BigInt {
        self.dens.iter().product()
    }

    /// Nearest integers `w_i` to `L_i(z)` and the residual numerators
    /// `D_i L_i(z) − D_i w_i`.
    fn eval(&self, z: &[i64]) -> (Vec<i64>, Vec<BigInt>) {
        if let Some(small) = &self.small {
            let mut w = Vec::with_capacity(small.len());
            let mut r = Vec::with_capacity(small.len());
            for (a, den) in small {
                let num: i128 = a.iter().zip(z).map(|(c, &v)| c * v as i128).sum();
                let q = round_quotient_i128(num, *den);
                w.push(q as i64);
                r.push(BigInt::from(num - q * den));
            }
            return (w, r);
        }
        let mut w = Vec::with_capacity(self.dens.len());
        let mut r = Vec::with_capacity(self.dens.len());
        for (a, den) in self.coeffs.iter().zip(&self.dens) {
            let num: BigInt = a.iter().zip(z).map(|(c, &v)| c * v).sum();
            let q = round_quotient(&num, den);
            r.push(&num - &q * den);
            w.push(q.to_i64().expect("checked at construction"));
        }
        (w, r)
    }
}

fn product_abs(v: &[BigInt]) -> BigInt {
    v.iter().fold(BigInt::one(), |acc, x| acc * x.abs())
}

fn prime_product(z: &[i64]) -> u64 {
    z.iter().fold(1u64, |acc, v| acc.saturating_mul(v.unsigned_abs().max(1)))
}

fn sup(z: &[i64]) -> u64 {
    z.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0)
}

/// Ordering key within a search: shell first, then lexicographic.
type Key = (u64, Vec<i64>);

fn key(z: &[i64]) -> Key {
    (sup(z), z.to_vec())
}

/// `d·B·ε < g·min_i |r_i|` for a matrix approximating an irrational one.
pub(crate) fn guard(theta: &RationalMatrix, shell: u64, residual: &[BigRational], factor: &BigRational) -> Result<()> {
    let Some(eps) = theta.precision() else {
        return Ok(());
    };
    let smallest = residual.iter().map(Signed::abs).min().unwrap_or_else(BigRational::zero);
    let lhs = int(theta.d() as i64) * BigRational::from_integer(BigInt::from(shell)) * eps;
    if lhs >= factor * &smallest {
        return Err(Error::PrecisionGuard {
            shell,
            detail: format!(
                "d·B·ε = {:.3e} is not below the guard times the smallest residual {:.3e}",
                crate::arith::to_f64(&lhs),
                crate::arith::to_f64(&smallest)
            ),
        });
    }
    Ok(())
}

#[derive(Clone)]
struct Candidate {
    u: BigInt,
    key: Key,
    image: Vec<i64>,
}

/// Pareto staircase over `(t, u)`: `t` strictly increasing, `u` strictly
/// decreasing. A point is dropped once some point with smaller `t` has `u`
/// no larger, or one with the same `t` is better by `(u, key)`.
#[derive(Default)]
struct Front {
    entries: BTreeMap<u64, Candidate>,
}

impl Front {
    fn insert(&mut self, t: u64, cand: Candidate) {
        if let Some((&tp, prev)) = self.entries.range(..=t).next_back() {
            if tp < t && prev.u <= cand.u {
                return;
            }
            if tp == t && (&prev.u, &prev.key) <= (&cand.u, &cand.key) {
                return;
            }
        }
        let doomed: Vec<u64> = self
            .entries
            .range((Bound::Excluded(t), Bound::Unbounded))
            .take_while(|(_, c)| c.u >= cand.u)
            .map(|(&k, _)| k)
            .collect();
        for k in doomed {
            self.entries.remove(&k);
        }
        self.entries.insert(t, cand);
    }

    fn merge(mut self, other: Self) -> Self {
        let (mut big, small) = if self.entries.len() >= other.entries.len() {
            (std::mem::take(&mut self), other)
        } else {
            (other, self)
        };
        for (t, c) in small.entries {
            big.insert(t, c);
        }
        big
    }
}

fn require_exact_dims(theta: &RationalMatrix) -> Result<()> {
    if theta.rows() == 0 || theta.cols() == 0 {
        return Err(Error::InvalidArgument("Θ must be nonempty".into()));
    }
    Ok(())
}

/// The record-breaking sequence of `u_pow` against `t_pow` over all nonzero
/// `x` with `t_pow ≤ sup_bound` (hence `|x|_∞ ≤ sup_bound`), with
/// `y = nearest_integer_vector(Θx)`. Stops at the first record with `u_pow = 0`.
pub fn best_approximations(theta: &RationalMatrix, budget: &SearchBudget) -> Result<Vec<ApproxRecord>> {
    budget.validate()?;
    require_exact_dims(theta)?;
    let rows = ScaledRows::new(&theta.to_rows(), budget.sup_bound)?;
    let region = Region {
        dim: theta.cols(),
        product_bound: budget.sup_bound,
        shell_lo: 1,
        shell_hi: budget.sup_bound,
    };
    let deadline = Deadline::new(budget.time_limit);
    let front = region.fold(
        &deadline,
        Front::default,
        |front, x| {
            let (y, r) = rows.eval(x);
            front.insert(
                prime_product(x),
                Candidate {
                    u: product_abs(&r),
                    key: key(x),
                    image: y,
                },
            );
        },
        Front::merge,
    );
    deadline.check("best_approximations")?;
    let mut records = Vec::with_capacity(front.entries.len());
    for (_, cand) in front.entries {
        let record = ApproxRecord::from_pair(IntegerPair::new(theta, cand.key.1, cand.image)?);
        guard(theta, record.shell, &record.residual, &budget.precision_guard)?;
        let done = record.u_pow.is_zero();
        records.push(record);
        if done {
            break;
        }
    }
    Ok(records)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Badness {
    /// `min t_pow · u_pow` over the region.
    #[serde(with = "crate::ratio_serde")]
    pub value: BigRational,
    pub x: Vec<i64>,
    pub y: Vec<i64>,
    #[serde(with = "crate::ratio_serde::vec")]
    pub residual: Vec<BigRational>,
}

/// Minimum of `Π'(x)^m Π(Θx − y)^n` over nonzero `x` with `t_pow ≤ sup_bound`.
pub fn badness_infimum(theta: &RationalMatrix, budget: &SearchBudget) -> Result<Badness> {
    budget.validate()?;
    require_exact_dims(theta)?;
    let rows = ScaledRows::new(&theta.to_rows(), budget.sup_bound)?;
    let region = Region {
        dim: theta.cols(),
        product_bound: budget.sup_bound,
        shell_lo: 1,
        shell_hi: budget.sup_bound,
    };
    let deadline = Deadline::new(budget.time_limit);
    type Best = Option<(BigInt, Key, Vec<i64>)>;
    let pick = |a: Best, b: Best| match (a, b) {
        (Some(a), Some(b)) => Some(if (&b.0, &b.1) < (&a.0, &a.1) { b } else { a }),
        (a, None) => a,
        (None, b) => b,
    };
    let best = region.fold(
        &deadline,
        || None,
        |best: &mut Best, x| {
            let (y, r) = rows.eval(x);
            let value = BigInt::from(prime_product(x)) * product_abs(&r);
            if best.as_ref().is_none_or(|b| (&value, &key(x)) < (&b.0, &b.1)) {
                *best = Some((value, key(x), y));
            }
        },
        pick,
    );
    deadline.check("badness_infimum")?;
    let (num, (shell, x), y) = best.expect("region contains x = (1, 0, …, 0)");
    let pair = IntegerPair::new(theta, x, y)?;
    guard(theta, shell, &pair.residual, &budget.precision_guard)?;
    Ok(Badness {
        value: BigRational::new(num, rows.common_denominator()),
        x: pair.x,
        y: pair.y,
        residual: pair.residual,
    })
}

/// Whether some nonzero `x` has `Π'(x) ≤ t` and `Π(Θx − y) ≤ t^{−γ}`, in the
/// power form `∏max(1,|x_j|) ≤ t^m` and `(∏|r_i|)^b ≤ t^{−a n}` for `γ = a/b`.
///
/// `floor(t^m)` must not exceed `sup_bound`; otherwise the region is too
/// large and the answer is reported as inconclusive.
pub fn uniform_feasible(
    theta: &RationalMatrix,
    t: &BigRational,
    gamma: &BigRational,
    budget: &SearchBudget,
) -> Result<bool> {
    budget.validate()?;
    require_exact_dims(theta)?;
    if *t <= BigRational::one() {
        return Err(Error::InvalidArgument("uniform feasibility needs t > 1".into()));
    }
    let (m, n) = (theta.cols(), theta.rows());
    let region_bound = crate::arith::rational_pow(t, m as i32).floor().to_integer();
    if region_bound > BigInt::from(budget.sup_bound) {
        return Err(Error::Inconclusive(format!(
            "region t^m = {region_bound} exceeds sup_bound {}",
            budget.sup_bound
        )));
    }
    let product_bound = region_bound.to_u64().expect("bounded by sup_bound");
    let rows = ScaledRows::new(&theta.to_rows(), product_bound)?;
    let b = gamma.denom().to_u32().ok_or_else(|| Error::InvalidArgument("γ denominator too large".into()))?;
    let a = gamma.numer().to_i64().ok_or_else(|| Error::InvalidArgument("γ numerator too large".into()))?;
    let an = (a.unsigned_abs() as usize) * n;
    let (t_up, t_down) = if a >= 0 {
        (num_traits::pow(t.numer().clone(), an), num_traits::pow(t.denom().clone(), an))
    } else {
        (num_traits::pow(t.denom().clone(), an), num_traits::pow(t.numer().clone(), an))
    };
    let rhs = num_traits::pow(rows.common_denominator(), b as usize) * t_down;
    let region = Region {
        dim: m,
        product_bound,
        shell_lo: 1,
        shell_hi: product_bound,
    };
    let deadline = Deadline::new(budget.time_limit);
    type Found = Option<(Key, Vec<i64>)>;
    let found = region.fold(
        &deadline,
        || None,
        |found: &mut Found, x| {
            if found.as_ref().is_some_and(|f| f.0 < key(x)) {
                return;
            }
            let (y, r) = rows.eval(x);
            if num_traits::pow(product_abs(&r), b as usize) * &t_up <= rhs {
                *found = Some((key(x), y));
            }
        },
        |a: Found, b: Found| match (a, b) {
            (Some(a), Some(b)) => Some(if b.0 < a.0 { b } else { a }),
            (a, None) => a,
            (None, b) => b,
        },
    );
    deadline.check("uniform_feasible")?;
    match found {
        Some(((shell, x), y)) => {
            let pair = IntegerPair::new(theta, x, y)?;
            guard(theta, shell, &pair.residual, &budget.precision_guard)?;
            Ok(true)
        }
        None => Ok(false),
    }
}

/// How `y` is bounded in a transposed witness search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum YBound {
    /// `∏ max(1,|y_i|) ≤ P`.
    Product(BigInt),
    /// `|y|_∞ ≤ C`.
    Sup(BigInt),
}

/// Predicates for a pair `(y, x)` with `r = ᵗΘy − x`, all raised to `exponent`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessQuery {
    pub y_bound: YBound,
    pub exponent: u32,
    /// `(∏|r_j|)^{exponent} ≤ this`, when present.
    pub residual_product_cmp: Option<BigRational>,
    /// `(max|r_j|)^{exponent} ≤ this`.
    pub residual_sup_cmp: BigRational,
    pub time_limit: Option<Duration>,
}

/// A transposed pair: `y ≠ 0` and `x` nearest to `ᵗΘy`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub y: Vec<i64>,
    pub x: Vec<i64>,
    /// `ᵗΘy − x`.
    #[serde(with = "crate::ratio_serde::vec")]
    pub residual: Vec<BigRational>,
}

impl Witness {
    pub fn new(theta: &RationalMatrix, y: Vec<i64>, x: Vec<i64>) -> Result<Self> {
        let residual = transpose_residual(theta, &y, &x)?;
        Ok(Self { y, x, residual })
    }
}

/// Largest number of `y`-points a witness search may walk.
pub const WITNESS_REGION_LIMIT: u64 = 1 << 40;

/// Comparator `(n/d)^e ≤ c` rewritten as `n^e · c_den ≤ c_num · d^e`.
struct PowerCmp {
    factor: BigInt,
    rhs: BigInt,
    e: usize,
}

impl PowerCmp {
    fn new(cmp: &BigRational, den: &BigInt, e: u32) -> Self {
        Self {
            factor: cmp.denom().clone(),
            rhs: cmp.numer() * num_traits::pow(den.clone(), e as usize),
            e: e as usize,
        }
    }

    fn holds(&self, num: &BigInt) -> bool {
        num_traits::pow(num.abs(), self.e) * &self.factor <= self.rhs
    }
}

/// First `y ≠ 0` (by shell, then lexicographic) in the query's region whose
/// rounded partner `x` passes every residual predicate.
///
/// Shells are searched in doubling batches, so a witness in a low shell is
/// found without walking the whole region.
pub fn find_witness(theta: &RationalMatrix, query: &WitnessQuery) -> Result<Option<Witness>> {
    require_exact_dims(theta)?;
    if query.exponent == 0 {
        return Err(Error::InvalidArgument("exponent must be positive".into()));
    }
    let too_big = |what: &str, v: &BigInt| {
        Error::Inconclusive(format!("{what} {v} exceeds the enumeration limit {WITNESS_REGION_LIMIT}"))
    };
    let (product_bound, coord_bound) = match &query.y_bound {
        YBound::Product(p) => {
            if p.is_negative() || p.is_zero() {
                return Ok(None);
            }
            let p = p
                .to_u64()
                .filter(|v| *v <= WITNESS_REGION_LIMIT)
                .ok_or_else(|| too_big("product bound", p))?;
            (p, p)
        }
        YBound::Sup(c) => {
            if c.is_negative() || c.is_zero() {
                return Ok(None);
            }
            let c64 = c
                .to_u64()
                .filter(|v| (2 * v + 1).checked_pow(theta.rows() as u32).is_some_and(|s| s <= 2 * WITNESS_REGION_LIMIT))
                .ok_or_else(|| too_big("sup bound", c))?;
            (u64::MAX, c64)
        }
    };
    let transposed = theta.transpose().to_rows();
    let rows = ScaledRows::new(&transposed, coord_bound)?;
    let sup_cmps: Vec<PowerCmp> = rows
        .dens
        .iter()
        .map(|den| PowerCmp::new(&query.residual_sup_cmp, den, query.exponent))
        .collect();
    let prod_cmp = query
        .residual_product_cmp
        .as_ref()
        .map(|c| PowerCmp::new(c, &rows.common_denominator(), query.exponent));
    let deadline = Deadline::new(query.time_limit);
    type Found = Option<(Key, Vec<i64>)>;
    let mut lo = 1u64;
    while lo <= coord_bound {
        let hi = lo.saturating_mul(2).saturating_sub(1).min(coord_bound);
        let region = Region {
            dim: theta.rows(),
            product_bound,
            shell_lo: lo,
            shell_hi: hi,
        };
        let found = region.fold(
            &deadline,
            || None,
            |found: &mut Found, y| {
                if found.as_ref().is_some_and(|f| f.0 < key(y)) {
                    return;
                }
                let (x, r) = rows.eval(y);
                let ok = r.iter().zip(&sup_cmps).all(|(ri, c)| c.holds(ri))
                    && prod_cmp.as_ref().is_none_or(|c| c.holds(&product_abs(&r)));
                if ok {
                    *found = Some((key(y), x));
                }
            },
            |a: Found, b: Found| match (a, b) {
                (Some(a), Some(b)) => Some(if b.0 < a.0 { b } else { a }),
                (a, None) => a,
                (None, b) => b,
            },
        );
        deadline.check("find_witness")?;
        if let Some(((_, y), x)) = found {
            return Ok(Some(Witness::new(theta, y, x)?));
        }
        if hi == coord_bound {
            break;
        }
        lo = hi + 1;
    }
    Ok(None)
}

/// One record of `q ‖qα‖ ‖qβ‖`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LittlewoodRecord {
    pub q: u64,
    #[serde(with = "crate::ratio_serde")]
    pub value: BigRational,
    #[serde(with = "crate::ratio_serde")]
    pub dist_alpha: BigRational,
    #[serde(with = "crate::ratio_serde")]
    pub dist_beta: BigRational,
}

/// `α = a/D` kept as `(a mod D, D)` so that `‖qα‖ = min(s, D − s)/D` with `s = qa mod D`.
struct Circle {
    a: BigInt,
    den: BigInt,
}

impl Circle {
    fn new(alpha: &BigRational) -> Self {
        Self {
            a: alpha.numer().mod_floor(alpha.denom()),
            den: alpha.denom().clone(),
        }
    }

    fn dist_num(&self, q: u64) -> BigInt {
        let s = (&self.a * q).mod_floor(&self.den);
        let t = &self.den - &s;
        s.min(t)
    }
}

fn littlewood_guard(q: u64, da: &BigRational, db: &BigRational, precision: Option<&BigRational>, factor: &BigRational) -> Result<()> {
    let Some(eps) = precision else {
        return Ok(());
    };
    let smallest = da.clone().min(db.clone());
    let lhs = int(3) * BigRational::from_integer(BigInt::from(q)) * eps;
    if lhs >= factor * &smallest {
        return Err(Error::PrecisionGuard {
            shell: q,
            detail: "approximation error of α or β is too large for ‖qα‖‖qβ‖".into(),
        });
    }
    Ok(())
}

const LITTLEWOOD_CHUNK: u64 = 1 << 14;

/// Strictly decreasing records of `q ‖qα‖ ‖qβ‖` for `q = 1..=qmax`.
///
/// `precision` is the absolute error of the approximants, if they stand for
/// irrationals.
pub fn littlewood_scan(
    alpha: &BigRational,
    beta: &BigRational,
    qmax: u64,
    precision: Option<&BigRational>,
) -> Result<Vec<LittlewoodRecord>> {
    if qmax < 1 {
        return Err(Error::InvalidArgument("qmax must be at least 1".into()));
    }
    let (ca, cb) = (Circle::new(alpha), Circle::new(beta));
    let chunks = qmax.div_ceil(LITTLEWOOD_CHUNK);
    let local: Vec<Vec<(u64, BigInt)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * LITTLEWOOD_CHUNK + 1;
            let end = ((c + 1) * LITTLEWOOD_CHUNK).min(qmax);
            let mut best: Option<BigInt> = None;
            let mut out = Vec::new();
            for q in start..=end {
                let v = ca.dist_num(q) * cb.dist_num(q) * q;
                if best.as_ref().is_none_or(|b| v < *b) {
                    best = Some(v.clone());
                    let zero = v.is_zero();
                    out.push((q, v));
                    if zero {
                        break;
                    }
                }
            }
            out
        })
        .collect();
    let den = &ca.den * &cb.den;
    let factor = ratio(1, 1_000_000);
    let mut records = Vec::new();
    let mut best: Option<BigInt> = None;
    for (q, v) in local.into_iter().flatten() {
        if best.as_ref().is_none_or(|b| v < *b) {
            best = Some(v.clone());
            let dist_alpha = BigRational::new(ca.dist_num(q), ca.den.clone());
            let dist_beta = BigRational::new(cb.dist_num(q), cb.den.clone());
            littlewood_guard(q, &dist_alpha, &dist_beta, precision, &factor)?;
            let zero = v.is_zero();
            records.push(LittlewoodRecord {
                q,
                value: BigRational::new(v, den.clone()),
                dist_alpha,
                dist_beta,
            });
            if zero {
                break;
            }
        }
    }
    Ok(records)
}

/// Smallest `q ≤ qmax` with `(q‖qα‖‖qβ‖)^4 ≤ value_cmp` and
/// `max(‖qα‖,‖qβ‖)^4 ≤ dist_cmp`.
pub fn littlewood_find(
    alpha: &BigRational,
    beta: &BigRational,
    qmax: u64,
    value_cmp: &BigRational,
    dist_cmp: &BigRational,
) -> Result<Option<LittlewoodRecord>> {
    if qmax < 1 {
        return Err(Error::InvalidArgument("qmax must be at least 1".into()));
    }
    let (ca, cb) = (Circle::new(alpha), Circle::new(beta));
    let den = &ca.den * &cb.den;
    let value = PowerCmp::new(value_cmp, &den, 4);
    let dist_a = PowerCmp::new(dist_cmp, &ca.den, 4);
    let dist_b = PowerCmp::new(dist_cmp, &cb.den, 4);
    let hit = (1..=qmax).into_par_iter().find_first(|&q| {
        let (a, b) = (ca.dist_num(q), cb.dist_num(q));
        dist_a.holds(&a) && dist_b.holds(&b) && value.holds(&(a * b * q))
    });
    Ok(hit.map(|q| {
        let (a, b) = (ca.dist_num(q), cb.dist_num(q));
        LittlewoodRecord {
            q,
            value: BigRational::new(&a * &b * q, den.clone()),
            dist_alpha: BigRational::new(a, ca.den.clone()),
            dist_beta: BigRational::new(b, cb.den.clone()),
        }
    }))
}

/// `pi_power` of a record's residual, re-derived from `x` and `y`.
pub fn recompute_u_pow(theta: &RationalMatrix, record: &ApproxRecord) -> Result<BigRational> {
    Ok(pi_power(&crate::arith::residual(theta, &record.x, &record.y)?))
}
