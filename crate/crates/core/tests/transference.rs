mod common;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use transference_core::arith::{int, pi_power, ratio, rational_pow, transpose_residual, RationalMatrix};
use transference_core::error::Error;
use transference_core::secdual::{check_surface_bijection, check_tuple_inclusion, TupleSpec};
use transference_core::transfer::{
    compare_y_budgets, revalidate, verify_mahler, verify_multitrans, Certificate, QualityBudget, VerifyOptions,
};

#[test]
fn surface_bijection_two_by_one() {
    let theta = RationalMatrix::parse(&[&["7/10", "11/17"]]).unwrap();
    let budget = QualityBudget::from_transposed(2, 1, ratio(1, 100), int(20)).unwrap();
    assert_eq!(*budget.xpow(), ratio(9, 4));
    assert_eq!(*budget.upow(), ratio(3, 400));
    let t = TupleSpec::new(vec![ratio(1, 10), ratio(1, 10)], vec![int(20)]).unwrap();
    let report = check_surface_bijection(&theta, &t, &budget).unwrap();
    assert!(report.all_ok(), "{report:?}");
    assert_eq!(report.image.lambda, vec![ratio(3, 2), ratio(3, 2)]);
    assert_eq!(report.image.mu, vec![ratio(3, 400)]);
}

#[test]
fn surface_bijection_symmetric_case() {
    let theta = RationalMatrix::parse(&[&["2/7"]]).unwrap();
    let budget = QualityBudget::from_transposed(1, 1, ratio(1, 9), int(5)).unwrap();
    let t = TupleSpec::new(vec![ratio(1, 9)], vec![int(5)]).unwrap();
    let report = check_surface_bijection(&theta, &t, &budget).unwrap();
    assert!(report.all_ok());
    assert_eq!(report.image.lambda, vec![int(5)]);
    assert_eq!(report.image.mu, vec![ratio(1, 9)]);
}

#[test]
fn surface_bijection_random_two_by_two() {
    let mut rng = common::rng(21, 0);
    let mut checked = 0;
    while checked < 25 {
        let theta = common::random_theta(&mut rng);
        if theta.rows() != 2 || theta.cols() != 2 {
            continue;
        }
        let vm = ratio(1, rng.random_range(10..=400));
        let (b1, b2) = (rng.random_range(1..=40i64), rng.random_range(1..=40i64));
        let yn = int(b1 * b2);
        let a = ratio(1, rng.random_range(2..=30));
        let lambda = vec![a.clone(), &vm / &a];
        let Ok(budget) = QualityBudget::from_transposed(2, 2, vm.clone(), yn.clone()) else {
            continue;
        };
        let sup_bound = budget.delta() * &vm * &yn;
        if lambda.iter().any(|l| *l > sup_bound) {
            continue;
        }
        let t = TupleSpec::new(lambda, vec![int(b1), int(b2)]).unwrap();
        let report = check_surface_bijection(&theta, &t, &budget).unwrap();
        assert!(report.all_ok(), "{report:?}");
        assert!(check_tuple_inclusion(&theta, &t).unwrap());
        checked += 1;
    }
}

#[test]
fn off_surface_tuple_is_rejected() {
    let theta = RationalMatrix::parse(&[&["7/10", "11/17"]]).unwrap();
    let budget = QualityBudget::from_transposed(2, 1, ratio(1, 100), int(20)).unwrap();
    let t = TupleSpec::new(vec![ratio(1, 10), ratio(1, 5)], vec![int(20)]).unwrap();
    assert!(matches!(
        check_surface_bijection(&theta, &t, &budget),
        Err(Error::HypothesisViolated(_))
    ));
}

#[test]
fn certificates_survive_a_json_round_trip() {
    let (instances, _) = common::transference_instances(5, 12);
    for (theta, x, y) in &instances {
        for cert in [
            verify_multitrans(theta, x, y, &VerifyOptions::default()).unwrap(),
            verify_mahler(theta, x, y, &VerifyOptions::default()).unwrap(),
        ] {
            assert!(cert.all_hold);
            let text = serde_json::to_string(&cert).unwrap();
            let back: Certificate = serde_json::from_str(&text).unwrap();
            assert_eq!(back, cert);
            assert!(revalidate(&back).unwrap().ok());
            let w = &cert.witness;
            assert!(w.y.iter().any(|&v| v != 0));
            assert_eq!(w.residual, transpose_residual(theta, &w.y, &w.x).unwrap());
        }
    }
}

#[test]
fn tampered_budget_fails_revalidation() {
    let (instances, _) = common::transference_instances(6, 3);
    for (theta, x, y) in &instances {
        let mut cert = verify_multitrans(theta, x, y, &VerifyOptions::default()).unwrap();
        cert.budget.u_bound = &cert.budget.u_bound / int(2);
        assert!(!revalidate(&cert).unwrap().ok());
    }
}

#[test]
fn multiplicative_witness_meets_its_budget() {
    let (instances, _) = common::transference_instances(7, 20);
    for (theta, x, y) in &instances {
        let cert = verify_multitrans(theta, x, y, &VerifyOptions::default()).unwrap();
        let (m, n) = (theta.cols(), theta.rows());
        let e = (m + n - 1) as i32;
        let budget = QualityBudget::from_powers(m, n, cert.budget.x_bound.clone(), cert.budget.u_bound.clone()).unwrap();
        let w = &cert.witness;
        let y_prod = w.y.iter().fold(BigRational::one(), |acc, v| acc * int(v.abs().max(1)));
        assert!(rational_pow(&y_prod, e) <= *budget.ypow_cmp().unwrap());
        assert!(rational_pow(&pi_power(&w.residual), e) <= *budget.vpow_cmp());
        let sup = w.residual.iter().map(|r| r.abs()).max().unwrap();
        assert!(rational_pow(&sup, e) <= *budget.suppow_cmp());
    }
}

#[test]
fn explicit_budget_must_cover_the_pair() {
    let theta = RationalMatrix::parse(&[&["7/10", "11/17"]]).unwrap();
    let options = VerifyOptions {
        explicit_budget: Some((int(1), ratio(1, 1_000_000))),
        time_limit: None,
    };
    assert!(matches!(
        verify_multitrans(&theta, &[3, 1], &[3], &options),
        Err(Error::HypothesisViolated(_))
    ));
    let loose = VerifyOptions {
        explicit_budget: Some((int(100), ratio(1, 2))),
        time_limit: None,
    };
    let cert = verify_multitrans(&theta, &[3, 1], &[3], &loose).unwrap();
    assert!(cert.all_hold && cert.explicit_budget);
    assert!(revalidate(&cert).unwrap().ok());
}

#[test]
fn exact_solution_pair_transfers() {
    let theta = RationalMatrix::parse(&[&["1/3", "2/5"]]).unwrap();
    let cert = verify_multitrans(&theta, &[3, 5], &[3], &VerifyOptions::default()).unwrap();
    assert!(cert.budget.exact_solution);
    assert!(cert.witness.residual.iter().all(Zero::is_zero));
    assert!(revalidate(&cert).unwrap().ok());
}

#[test]
fn multiplicative_y_is_tighter_from_dimension_three() {
    for d in 3..=8usize {
        for m in 1..d {
            let cmp = compare_y_budgets(m, d - m, &int(50), &ratio(1, 20)).unwrap();
            assert!(cmp.strictly_tighter, "m = {m}, n = {}", d - m);
        }
    }
    let cmp = compare_y_budgets(1, 1, &int(50), &ratio(1, 20)).unwrap();
    assert_eq!(cmp.multiplicative, cmp.mahler);
}
