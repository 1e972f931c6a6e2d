use statrs::distribution::{Continuous, Normal};

use twosided_ou::assembly::{AssemblyParams, ProcessKind};
use twosided_ou::harness::window::{fundamental_for, plan_left_extent};
use twosided_ou::measure_change::{
    grad_x0_check, mc_batch, mc_negative_control, mc_shift_identity, paired_samples,
    rn_density_with_gradient, shift_density, Functional, FunctionalKind, McParams, ShiftQuery,
};
use twosided_ou::{sample_w, MeasureModel, SampleKind};

/// `E[g(Z)]`, `Z ~ N(mean, sd^2)`, by the trapezoid rule on ±12 sd.
fn gaussian_expectation(mean: f64, sd: f64, g: impl Fn(f64) -> f64) -> f64 {
    let normal = Normal::new(mean, sd).unwrap();
    let m = 24_000;
    let h = 24.0 * sd / m as f64;
    (0..=m)
        .map(|i| {
            let x = mean - 12.0 * sd + i as f64 * h;
            let w = if i == 0 || i == m { 0.5 } else { 1.0 };
            w * g(x) * normal.pdf(x)
        })
        .sum::<f64>()
        * h
}

#[test]
fn gaussian_density_ratio_matches_pdf_ratio() {
    let m = MeasureModel::gaussian(0.7, 1.3).unwrap();
    let normal = Normal::new(0.7, 1.3).unwrap();
    for (y1, y0) in [(0.0, 0.0), (1.0, -2.0), (-3.5, 4.0), (10.0, 0.7)] {
        let expect = normal.pdf(y1) / normal.pdf(y0);
        let got = shift_density(&m, y1, y0);
        assert!(
            (got - expect).abs() <= 1e-12 * expect.max(1.0),
            "{y1} {y0}: {got} vs {expect}"
        );
        assert_eq!(rn_density_with_gradient(&m, y1, y0, -1.0), got);
    }
}

/// Both sides of the identity against the law of `W_{s - t}` for Brownian
/// motion started from `N(mean, sd^2)`.
#[test]
fn brownian_identity_matches_closed_forms() {
    let (mean, sd) = (0.3, 0.8);
    let params = McParams::bm(1.0 / 64.0, MeasureModel::gaussian(mean, sd).unwrap());
    let n = 20_000;
    for (kind, t) in [
        (FunctionalKind::F1, 0.5),
        (FunctionalKind::F1, 1.5),
        (FunctionalKind::F3, 0.5),
    ] {
        let f = Functional::new(kind);
        let report = mc_shift_identity(SampleKind::Bm, f, t, n, 31, &params).unwrap();
        let exact = match kind {
            FunctionalKind::F1 => {
                let var = sd * sd + (f.s1 - t).abs();
                gaussian_expectation(mean, var.sqrt(), f64::tanh)
            }
            // increments independent of the start: E cos(N(0, s2 - s1))
            _ => (-(f.s2 - f.s1) / 2.0).exp(),
        };
        let z_lhs = (report.lhs_mean - exact) / report.lhs_se;
        let z_rhs = (report.rhs_mean - exact) / report.rhs_se;
        assert!(
            z_lhs.abs() < 4.0,
            "{kind:?} t={t}: lhs z {z_lhs} ({report:?}, exact {exact})"
        );
        assert!(
            z_rhs.abs() < 4.0,
            "{kind:?} t={t}: rhs z {z_rhs} ({report:?}, exact {exact})"
        );
        assert!(report.pass, "{report:?}");
    }
}

#[test]
fn uncorrected_estimator_is_rejected() {
    let params = McParams::bm(1.0 / 64.0, MeasureModel::gaussian(1.0, 0.5).unwrap());
    let report = mc_negative_control(
        SampleKind::Bm,
        Functional::new(FunctionalKind::F1),
        2.0,
        20_000,
        5,
        &params,
    )
    .unwrap();
    assert!(!report.corrected);
    assert!(report.z_score.abs() > 4.0, "{report:?}");
    assert!(!report.pass);
}

#[test]
fn constructed_processes_shift_one_for_one_with_the_level() {
    let a = -0.5;
    let tol = 1e-8;
    let fs = fundamental_for(a, tol, 4.0).unwrap();
    let extent = plan_left_extent(&fs, tol, 25, 4.0).unwrap();
    let w = sample_w(-extent, extent, 1.0 / 64.0, &MeasureModel::standard(), 8).unwrap();
    let params = AssemblyParams::new(-3.0, 3.0);
    for kind in [ProcessKind::Delay, ProcessKind::Anticipation] {
        for t in [0.0, 0.5, 2.0] {
            for eps in [1e-3, 1.0] {
                let g = grad_x0_check(kind, &w, &fs, &params, t, eps).unwrap();
                assert!((g - 1.0).abs() < 1e-9, "{kind:?} t={t} eps={eps}: {g}");
            }
        }
    }
    assert!(grad_x0_check(ProcessKind::Delay, &w, &fs, &params, 0.5, 0.0).is_err());
}

#[test]
fn batches_do_not_depend_on_the_worker_count() {
    let mut params = McParams::bm(1.0 / 32.0, MeasureModel::standard());
    params.bias_allowance = 5e-3;
    let queries = [
        ShiftQuery {
            functional: Functional::new(FunctionalKind::F2),
            t: 0.5,
            corrected: true,
        },
        ShiftQuery {
            functional: Functional::new(FunctionalKind::F1),
            t: 1.0,
            corrected: false,
        },
    ];
    for kind in [SampleKind::Bm, SampleKind::Delay, SampleKind::Anticipation] {
        let one = mc_batch(kind, &queries, 300, 9, &params).unwrap();
        let three = mc_batch(
            kind,
            &queries,
            300,
            9,
            &McParams {
                workers: 3,
                ..params.clone()
            },
        )
        .unwrap();
        assert_eq!(one, three, "{kind}");
        let pairs = paired_samples(kind, &queries, 300, 9, &params).unwrap();
        assert_eq!(pairs.len(), 300);
        let lhs: f64 = pairs.iter().map(|p| p[0].0).sum::<f64>() / 300.0;
        assert!((lhs - one[0].lhs_mean).abs() < 1e-12, "{kind}");
    }
}

#[test]
fn rejects_misaligned_queries() {
    let params = McParams::bm(1.0 / 4.0, MeasureModel::standard());
    let bad = ShiftQuery {
        functional: Functional::new(FunctionalKind::F1),
        t: 0.3,
        corrected: true,
    };
    assert!(mc_batch(SampleKind::Bm, &[bad], 10, 1, &params).is_err());
    assert!(mc_batch(SampleKind::Bm, &[], 0, 1, &params).is_err());
}
