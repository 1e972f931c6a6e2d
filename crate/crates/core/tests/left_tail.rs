use twosided_ou::harness::window::{fundamental_for, plan_left_extent};
use twosided_ou::left_tail::{series_sweep, series_terms};
use twosided_ou::residual::delay_residual_full;
use twosided_ou::{
    construct_left, sample_w, series_f, FundamentalSolution, GridPath, LeftTailParams,
    LeftTailResult, MeasureModel,
};

const A: f64 = -0.5;
const TOL: f64 = 1e-8;

fn setup(dt: f64, t_left: f64, seed: u64) -> (GridPath, FundamentalSolution) {
    let fs = fundamental_for(A, TOL, -t_left).unwrap();
    let extent = plan_left_extent(&fs, TOL, 25, -t_left).unwrap();
    let w = sample_w(-extent, 1.0, dt, &MeasureModel::standard(), seed).unwrap();
    (w, fs)
}

fn build(w: &GridPath, fs: &FundamentalSolution, t_left: f64) -> LeftTailResult {
    construct_left(w, fs, &LeftTailParams::new(TOL, t_left)).unwrap()
}

#[test]
fn solves_the_delay_equation_on_the_window() {
    for seed in 0..3 {
        let (w, fs) = setup(1.0 / 256.0, -8.0, seed);
        let left = build(&w, &fs, -8.0);
        let r = delay_residual_full(&left.x_left, &w, A, 0.0, -7.0, 0.0).unwrap();
        assert!(r.anchored < 1e-5 && r.pairwise < 1e-5, "seed {seed}: {r:?}");
        assert!(left.tail_bound < TOL);
    }
}

#[test]
fn residual_shrinks_with_the_step() {
    let (w, fs) = setup(1.0 / 512.0, -4.0, 8);
    let fine = build(&w, &fs, -4.0);
    let wc = w.coarsen(4).unwrap();
    let coarse = build(&wc, &fs, -4.0);
    let rf = delay_residual_full(&fine.x_left, &w, A, 0.0, -3.0, 0.0).unwrap();
    let rc = delay_residual_full(&coarse.x_left, &wc, A, 0.0, -3.0, 0.0).unwrap();
    assert!(rf.anchored < rc.anchored, "{rf:?} vs {rc:?}");
}

#[test]
fn depends_on_the_driver_only_through_increments() {
    let (w, fs) = setup(1.0 / 128.0, -5.0, 3);
    let base = build(&w, &fs, -5.0);
    let moved = build(&w.shift_constant(3.75), &fs, -5.0);
    assert_eq!(base.x_left, moved.x_left);
    assert_eq!(base.q, moved.q);
}

#[test]
fn more_q_terms_change_little() {
    let fs = FundamentalSolution::build(A, 80).unwrap();
    let extent = plan_left_extent(&fs, TOL, 25, 6.0).unwrap() + 10.0;
    let w = sample_w(-extent, 1.0, 1.0 / 128.0, &MeasureModel::standard(), 12).unwrap();
    let base = build(&w, &fs, -6.0);
    let more = construct_left(
        &w,
        &fs,
        &LeftTailParams {
            k_q: Some(base.k_q + 5),
            ..LeftTailParams::new(TOL, -6.0)
        },
    )
    .unwrap();
    let d = base.x_left.sup_distance(&more.x_left).unwrap();
    assert!(
        d <= base.tail_bound,
        "moved {d:e}, bound {:e}",
        base.tail_bound
    );
}

#[test]
fn segments_glue_continuously() {
    for seed in 0..20 {
        let (w, fs) = setup(1.0 / 512.0, -6.0, 1000 + seed);
        let left = build(&w, &fs, -6.0);
        assert!(
            left.diagnostics.glue_jump < 1e-10,
            "seed {seed}: {:e}",
            left.diagnostics.glue_jump
        );
    }
}

#[test]
fn iterated_integral_terms_obey_the_factorial_bound() {
    let (w, _) = setup(1.0 / 256.0, -2.0, 5);
    let k_f = 20;
    for k in [0usize, 3] {
        let terms = series_terms(&w, A, k, k_f).unwrap();
        let nested = series_f(&w, A, k, k_f).unwrap();
        let mut fact = 1.0;
        for (j, t) in terms.iter().enumerate() {
            if j > 0 {
                fact *= j as f64;
            }
            // sup over the driver segment feeding this term
            let lo = -((k + j) as f64) - 1.0;
            let seg = w.restrict(lo, lo + 1.0).unwrap();
            let h_sup = seg
                .values()
                .iter()
                .map(|v| (v - seg.values()[0]).abs())
                .fold(0.0, f64::max);
            let bound = A.abs().powi(j as i32) * h_sup / fact;
            assert!(
                t.sup_norm() <= bound * (1.0 + 1e-12) + 1e-300,
                "k {k}, j {j}"
            );
        }
        let summed: Vec<f64> = (0..nested.values().len())
            .map(|i| terms.iter().map(|t| t.values()[i]).sum())
            .collect();
        for (a, b) in summed.iter().zip(nested.values()) {
            assert!((a - b).abs() < 1e-12, "k {k}");
        }
    }
}

#[test]
fn sweep_matches_individual_series() {
    let (w, _) = setup(1.0 / 64.0, -2.0, 6);
    let k_top = 30;
    let sweep = series_sweep(&w, A, k_top).unwrap();
    for k in [0usize, 1, 7, 20] {
        assert_eq!(sweep[k], series_f(&w, A, k, k_top - k).unwrap(), "k {k}");
    }
}

/// Drivers agreeing on `[-depth, 1]` give nearly the same bounded solution:
/// the far past is forgotten.
#[test]
fn far_driver_perturbation_is_forgotten() {
    let (w, fs) = setup(1.0 / 128.0, -4.0, 21);
    let (other, _) = setup(1.0 / 128.0, -4.0, 22);
    let base = build(&w, &fs, -4.0);
    let n = w.steps_per_unit() as i64;
    for depth in [20i64, 30, 45] {
        let cut = -depth * n;
        // splice: other's increments left of the cut, w's to the right
        let values: Vec<f64> = (w.start_index()..=w.end_index())
            .map(|k| {
                if k >= cut {
                    w.at(k)
                } else {
                    w.at(cut) + other.diff(k, cut)
                }
            })
            .collect();
        let spliced = GridPath::from_indices(w.start_index(), w.steps_per_unit(), values).unwrap();
        let moved = build(&spliced, &fs, -4.0);
        let d = base.x_left.sup_distance(&moved.x_left).unwrap();
        let env = fs.decay().unwrap();
        assert!(
            d <= 10.0 * env.at((depth - 5) as f64),
            "depth {depth}: {d:e}"
        );
        if depth == 20 {
            assert!(d > 0.0);
        }
    }
}

#[test]
fn rejects_short_windows() {
    let fs = FundamentalSolution::build(A, 40).unwrap();
    let w = sample_w(-10.0, 1.0, 1.0 / 32.0, &MeasureModel::standard(), 1).unwrap();
    assert!(construct_left(&w, &fs, &LeftTailParams::new(TOL, -4.0)).is_err());
    assert!(construct_left(&w, &fs, &LeftTailParams::new(TOL, -0.5)).is_err());
}
