mod common;

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

use transference_core::arith::{int, ratio, to_f64, RationalMatrix};
use transference_core::delta::delta;
use transference_core::search::{best_approximations, littlewood_scan, SearchBudget};
use transference_core::secdual::{
    box_section_volume, box_section_volume_mc, parallelepiped_section_volume, AxisBox, Parallelepiped,
};

#[test]
fn delta_matches_the_slab_oracle() {
    for d in 2..=8 {
        let exact = to_f64(&delta(d).unwrap());
        let (est, se) = common::delta_slab_estimate(d, 1_000_000, 0.005, 7);
        assert!(
            (est - exact).abs() <= 3.0 * se,
            "d = {d}: exact {exact}, estimate {est} ± {se}"
        );
    }
}

fn random_box(rng: &mut rand_chacha::ChaCha8Rng, d: usize) -> AxisBox {
    AxisBox::new((0..d).map(|_| ratio(rng.random_range(1..=16), 8)).collect()).unwrap()
}

fn random_direction(rng: &mut rand_chacha::ChaCha8Rng, d: usize) -> Vec<i64> {
    loop {
        let e: Vec<i64> = (0..d).map(|_| rng.random_range(-5..=5)).collect();
        if e.iter().any(|&v| v != 0) {
            return e;
        }
    }
}

#[test]
fn box_sections_agree_with_monte_carlo() {
    let mut rng = common::rng(11, 0);
    let mut misses = Vec::new();
    for k in 0..100u64 {
        let d = rng.random_range(2..=6);
        let b = random_box(&mut rng, d);
        let e = random_direction(&mut rng, d);
        let exact = box_section_volume(&b, &e.iter().map(|&v| int(v)).collect::<Vec<_>>())
            .unwrap()
            .to_f64();
        let ef: Vec<f64> = e.iter().map(|&v| v as f64).collect();
        let mc = box_section_volume_mc(&b, &ef, 200_000, k).unwrap();
        if !mc.agrees_with(exact, 3.0) {
            misses.push(format!("box {k}: exact {exact}, mc {} ± {}", mc.value, mc.std_err));
        }
    }
    assert!(misses.is_empty(), "{misses:?}");
}

/// Unimodular 3×3 integer matrix as a product of elementary shears.
fn random_unimodular(rng: &mut rand_chacha::ChaCha8Rng) -> Vec<Vec<i64>> {
    let mut a = vec![vec![1i64, 0, 0], vec![0, 1, 0], vec![0, 0, 1]];
    for _ in 0..4 {
        let (i, j) = (rng.random_range(0..3), rng.random_range(0..3));
        if i == j {
            continue;
        }
        let f = rng.random_range(-2..=2);
        for col in 0..3 {
            a[i][col] += f * a[j][col];
        }
    }
    a
}

/// Slab estimate of `vol_e(M)` with `M = A·box`: the fraction of `M` within
/// distance `h` of the hyperplane `e^⊥`, times `vol(M)/(2h)`.
fn slab_section(a: &[Vec<i64>], c: &[f64], e: &[f64], h: f64, samples: u64, seed: u64) -> (f64, f64) {
    let mut rng = common::rng(seed, 1);
    let norm = e.iter().map(|v| v * v).sum::<f64>().sqrt();
    let hits = (0..samples)
        .filter(|_| {
            let z: Vec<f64> = c.iter().map(|ci| ci * rng.random_range(-1.0..1.0)).collect();
            let dot: f64 = (0..3)
                .map(|i| e[i] * (0..3).map(|j| a[i][j] as f64 * z[j]).sum::<f64>())
                .sum();
            dot.abs() / norm <= h
        })
        .count() as f64;
    let p = hits / samples as f64;
    let volume: f64 = c.iter().map(|ci| 2.0 * ci).product();
    let scale = volume / (2.0 * h);
    (scale * p, scale * (p * (1.0 - p) / samples as f64).sqrt())
}

#[test]
fn linear_image_identity_against_slab_oracle() {
    let mut rng = common::rng(12, 0);
    for k in 0..10 {
        let a = random_unimodular(&mut rng);
        let b = random_box(&mut rng, 3);
        let e = random_direction(&mut rng, 3);
        let basis = RationalMatrix::from_rows(a.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect()).unwrap();
        let m = Parallelepiped::new(b.clone(), basis).unwrap();
        assert!(m.det().abs().is_one());
        let exact = parallelepiped_section_volume(&m, &e.iter().map(|&v| int(v)).collect::<Vec<_>>())
            .unwrap()
            .to_f64();
        let c: Vec<f64> = b.half_sides().iter().map(to_f64).collect();
        let ef: Vec<f64> = e.iter().map(|&v| v as f64).collect();
        let (est, se) = slab_section(&a, &c, &ef, 0.002, 2_000_000, k);
        assert!((est - exact).abs() <= 3.0 * se, "instance {k}: exact {exact}, slab {est} ± {se}");
    }
}

fn nearest(v: &BigRational) -> BigInt {
    let fl = v.floor().to_integer();
    if v - BigRational::from_integer(fl.clone()) > ratio(1, 2) {
        fl + 1
    } else if v - BigRational::from_integer(fl.clone()) < ratio(1, 2) {
        fl
    } else if fl.is_negative() {
        fl + 1
    } else {
        fl
    }
}

/// Staircase of `(Π'(x), |Θx − y|)` over `x ∈ Z² \ {0}` with
/// `max(1,|x1|)·max(1,|x2|) ≤ bound`, built by a double loop.
fn brute_force_row_records(alpha: &BigRational, beta: &BigRational, bound: i64) -> Vec<(i64, BigRational)> {
    let mut best: BTreeMap<i64, BigRational> = BTreeMap::new();
    for x1 in -bound..=bound {
        let limit = bound / x1.abs().max(1);
        for x2 in -limit..=limit {
            if x1 == 0 && x2 == 0 {
                continue;
            }
            let v = alpha * int(x1) + beta * int(x2);
            let r = (&v - BigRational::from_integer(nearest(&v))).abs();
            let t = x1.abs().max(1) * x2.abs().max(1);
            let slot = best.entry(t).or_insert_with(|| r.clone());
            if r < *slot {
                *slot = r;
            }
        }
    }
    let mut records: Vec<(i64, BigRational)> = Vec::new();
    for (t, u) in best {
        if records.last().is_none_or(|(_, prev)| u < *prev) {
            let zero = u.is_zero();
            records.push((t, u));
            if zero {
                break;
            }
        }
    }
    records
}

#[test]
fn row_records_match_a_double_loop() {
    let alpha = common::sqrt_approximant(2, 40);
    let beta = common::sqrt_approximant(3, 40);
    let theta = RationalMatrix::from_rows(vec![vec![alpha.clone(), beta.clone()]])
        .unwrap()
        .with_precision(Some(common::ten_to_minus(40)));
    let records = best_approximations(&theta, &SearchBudget::new(1000).unwrap()).unwrap();
    let oracle = brute_force_row_records(&alpha, &beta, 1000);
    let got: Vec<(i64, BigRational)> = records
        .iter()
        .map(|r| (r.t_pow.to_integer().to_i64().unwrap(), r.u_pow.clone()))
        .collect();
    assert_eq!(got, oracle);
}

/// Denominators of the continued-fraction convergents of `p/q`.
fn convergent_denominators(mut p: BigInt, mut q: BigInt) -> Vec<BigInt> {
    let (mut prev, mut cur) = (BigInt::zero(), BigInt::one());
    let mut out = Vec::new();
    while !q.is_zero() {
        let a = &p / &q;
        let next = &a * &cur + &prev;
        prev = cur;
        cur = next;
        out.push(prev.clone());
        let r = &p - &a * &q;
        p = q;
        q = r;
    }
    out
}

#[test]
fn golden_records_are_convergent_denominators() {
    let (p, q) = (common::fibonacci(40), common::fibonacci(39));
    let theta = RationalMatrix::from_rows(vec![vec![BigRational::new(p.clone(), q.clone())]]).unwrap();
    let records = best_approximations(&theta, &SearchBudget::new(100).unwrap()).unwrap();
    let xs: Vec<BigInt> = records.iter().map(|r| BigInt::from(r.x[0].abs())).collect();
    let oracle: Vec<BigInt> = convergent_denominators(p, q)
        .into_iter()
        .skip(1)
        .take_while(|v| *v <= BigInt::from(100))
        .collect();
    assert_eq!(xs, oracle);
}

#[test]
fn littlewood_records_match_a_direct_scan() {
    let alpha = common::sqrt_approximant(2, 30);
    let beta = common::sqrt_approximant(3, 30);
    let records = littlewood_scan(&alpha, &beta, 5000, Some(&common::ten_to_minus(30))).unwrap();
    let dist = |v: &BigRational| (v - BigRational::from_integer(v.round().to_integer())).abs();
    let mut best: Option<BigRational> = None;
    let mut oracle = Vec::new();
    for q in 1..=5000u64 {
        let qr = int(q as i64);
        let value = &qr * dist(&(&qr * &alpha)) * dist(&(&qr * &beta));
        if best.as_ref().is_none_or(|b| value < *b) {
            best = Some(value.clone());
            oracle.push((q, value));
        }
    }
    let got: Vec<(u64, BigRational)> = records.into_iter().map(|r| (r.q, r.value)).collect();
    assert_eq!(got, oracle);
}
