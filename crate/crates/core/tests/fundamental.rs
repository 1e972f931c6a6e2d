use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;

use twosided_ou::FundamentalSolution;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// `r(s) = sum_{l <= floor(s)} a^l (s - l)^l / l!`, exactly.
fn closed_form(a: &BigRational, s: &BigRational) -> BigRational {
    let mut total = BigRational::zero();
    let mut l = 0i64;
    let mut a_pow = BigRational::one();
    let mut fact = BigRational::one();
    while BigRational::from_integer(l.into()) <= *s {
        let x = s - BigRational::from_integer(l.into());
        let mut x_pow = BigRational::one();
        for _ in 0..l {
            x_pow *= &x;
        }
        total += &a_pow * x_pow / &fact;
        l += 1;
        a_pow *= a;
        fact *= BigRational::from_integer(l.into());
    }
    total
}

#[test]
fn matches_exact_rational_sum() {
    for (an, ad) in [(-1, 2), (-9, 10), (-1, 10), (-99, 100)] {
        let a = q(an, ad);
        let fs = FundamentalSolution::build(an as f64 / ad as f64, 40).unwrap();
        for (sn, sd) in [
            (0, 1),
            (1, 2),
            (1, 1),
            (7, 3),
            (15, 4),
            (41, 7),
            (99, 8),
            (201, 11),
            (30, 1),
        ] {
            let exact = closed_form(&a, &q(sn, sd)).to_f64().unwrap();
            let got = fs.eval(sn as f64 / sd as f64);
            assert!(
                (got - exact).abs() <= 1e-13 * exact.abs().max(1.0),
                "a = {an}/{ad}, s = {sn}/{sd}: {got} vs {exact}"
            );
        }
    }
}

#[test]
fn left_limit_differs_only_at_zero() {
    let fs = FundamentalSolution::build(-0.5, 40).unwrap();
    assert_eq!(fs.eval(0.0), 1.0);
    assert_eq!(fs.eval_left(0.0), 0.0);
    for s in [1.0, 2.0, 5.0, 17.0] {
        assert!((fs.eval(s) - fs.eval_left(s)).abs() < 1e-14, "s = {s}");
    }
}

#[test]
fn renewal_residual_is_second_order() {
    let fs = FundamentalSolution::build(-0.6, 40).unwrap();
    let coarse = fs.verify_renewal_residual(10.0, 1.0 / 100.0).unwrap();
    let fine = fs.verify_renewal_residual(10.0, 1.0 / 200.0).unwrap();
    let ratio = coarse / fine;
    assert!(
        (3.5..=4.5).contains(&ratio),
        "ratio {ratio} ({coarse:e}, {fine:e})"
    );
    assert!(fs.verify_renewal_residual(10.0, 1e-3).unwrap() < 1e-6);
}

/// Independent trapezoid integration of `r' = a r(s-1)` on a fine grid.
#[test]
fn agrees_with_direct_trapezoid_march() {
    let a = -0.8;
    let n = 2000usize;
    let h = 1.0 / n as f64;
    let steps = 8 * n;
    let mut r = vec![1.0; steps + 1];
    for i in n..steps {
        // cell [1, 1 + h] starts from the right limit r(0+) = 1
        r[i + 1] = r[i] + 0.5 * h * a * (r[i - n] + r[i + 1 - n]);
    }
    let fs = FundamentalSolution::build(a, 40).unwrap();
    let worst = (0..=steps)
        .map(|i| (fs.eval(i as f64 * h) - r[i]).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "worst {worst:e}");
}

#[test]
fn envelope_holds_beyond_its_fit_range() {
    for a in [-0.1, -0.5, -0.9, -0.99] {
        let fs = FundamentalSolution::build(a, 60).unwrap();
        let env = fs.estimate_decay(5.0, 25.0).unwrap();
        assert!(env.lambda > 0.0);
        for i in 0..=(35 * 64) {
            let s = 25.0 + i as f64 / 64.0;
            assert!(fs.eval(s).abs() <= 1.1 * env.at(s), "a = {a}, s = {s}");
        }
    }
}

#[test]
fn far_intervals_stay_finite_and_small() {
    for a in [-0.1, -0.99] {
        let fs = FundamentalSolution::build(a, 2000).unwrap();
        let env = fs.decay().unwrap();
        for k in [100usize, 500, 1000, 1999] {
            let c = fs.interval_coefficients(k).unwrap();
            assert!(c.iter().all(|x| x.is_finite()), "a = {a}, k = {k}");
            let v = fs.eval(k as f64 - 0.5);
            assert!(
                v.is_finite() && v.abs() <= 1.1 * env.at(k as f64 - 0.5),
                "a = {a}, k = {k}: {v}"
            );
        }
        assert!(fs.continuity_defect() < 1e-12);
    }
}

#[test]
fn rejects_coefficients_outside_the_range() {
    for a in [0.0, 0.3, -1.0, -1.5, f64::NAN] {
        assert!(FundamentalSolution::build(a, 40).is_err(), "a = {a}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivative_matches_lagged_value(a in -0.99f64..-0.01, s in 1.01f64..30.0) {
        let fs = FundamentalSolution::build(a, 40).unwrap();
        let h = 1e-5;
        let d = (fs.eval(s + h) - fs.eval(s - h)) / (2.0 * h);
        prop_assume!((s - s.round()).abs() > 2.0 * h);
        prop_assert!((d - a * fs.eval(s - 1.0)).abs() < 1e-7);
    }
}
