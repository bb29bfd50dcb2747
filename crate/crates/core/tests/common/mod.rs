#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use transference_core::arith::{floor_root, ratio, RationalMatrix};
use transference_core::search::{best_approximations, SearchBudget};
use transference_core::transfer::make_budget;

pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// `floor(√k · 10^digits) / 10^digits`, an approximant within `10^{−digits}`.
pub fn sqrt_approximant(k: u64, digits: u32) -> BigRational {
    let scale = num_traits::pow(BigInt::from(10), digits as usize);
    let root = (BigInt::from(k) * &scale * &scale).sqrt();
    BigRational::new(root, scale)
}

pub fn ten_to_minus(digits: u32) -> BigRational {
    BigRational::one() / BigRational::from_integer(num_traits::pow(BigInt::from(10), digits as usize))
}

pub fn fibonacci(k: usize) -> BigInt {
    let (mut a, mut b) = (BigInt::zero(), BigInt::one());
    for _ in 0..k {
        let next = &a + &b;
        a = b;
        b = next;
    }
    a
}

/// A random `n × m` matrix, `m, n ∈ 1..=3`, entries `p/q ∈ (0, 1)` with `q ≤ 50`.
pub fn random_theta(rng: &mut ChaCha8Rng) -> RationalMatrix {
    let m = rng.random_range(1..=3usize);
    let n = rng.random_range(1..=3usize);
    let entries = (0..m * n)
        .map(|_| {
            let q = rng.random_range(2..=50i64);
            ratio(rng.random_range(1..q), q)
        })
        .collect();
    RationalMatrix::new(n, m, entries).unwrap()
}

pub const RECORD_SHELL_BOUND: u64 = 2000;
pub const Y_PRODUCT_CAP: u64 = 1 << 24;

/// The latest best-approximation record with `0 < U < 1` whose transposed
/// search region `Π'(y) ≤ floor(Ypow^{1/(d−1)})` stays below [`Y_PRODUCT_CAP`].
pub fn hypothesis_pair(theta: &RationalMatrix) -> Option<(Vec<i64>, Vec<i64>)> {
    let records = best_approximations(theta, &SearchBudget::new(RECORD_SHELL_BOUND).unwrap()).unwrap();
    records
        .iter()
        .rev()
        .filter(|r| r.u_pow.is_positive() && r.u_pow < BigRational::one())
        .find(|r| {
            let budget = make_budget(theta, &r.x, &r.y).unwrap();
            let ypow = budget.ypow_cmp().expect("U > 0 bounds Y");
            floor_root(ypow, budget.exponent()) <= BigInt::from(Y_PRODUCT_CAP)
        })
        .map(|r| (r.x.clone(), r.y.clone()))
}

/// The first `count` random instances that have a hypothesis pair, and the
/// number of draws rejected along the way.
pub fn transference_instances(seed: u64, count: usize) -> (Vec<(RationalMatrix, Vec<i64>, Vec<i64>)>, usize) {
    let mut rng = rng(seed, 0);
    let mut out = Vec::with_capacity(count);
    let mut rejected = 0;
    while out.len() < count {
        let theta = random_theta(&mut rng);
        match hypothesis_pair(&theta) {
            Some((x, y)) => out.push((theta, x, y)),
            None => rejected += 1,
        }
    }
    (out, rejected)
}

/// Slab oracle for `Δ_d`: the section volume of `[−1,1]^d` by `Σx_i = 0`,
/// scaled by `1/(2^{d−1}√d)`, equals `P(|Σx_i| ≤ ε)/ε` as `ε → 0` for
/// uniform `x` in the cube. Returns the estimate and its standard error.
pub fn delta_slab_estimate(d: usize, samples: u64, eps: f64, seed: u64) -> (f64, f64) {
    let mut rng = rng(seed, d as u64);
    let hits = (0..samples)
        .filter(|_| (0..d).map(|_| rng.random_range(-1.0..1.0f64)).sum::<f64>().abs() <= eps)
        .count() as f64;
    let p = hits / samples as f64;
    (p / eps, (p * (1.0 - p) / samples as f64).sqrt() / eps)
}
