//! The acceptance suite: ten numbered criteria, each reporting what it
//! measured and whether it passed.
//!
//! Reports are deterministic functions of the seed and profile. Wall-clock
//! times are kept out of the serialized form so that two runs can be compared
//! byte for byte.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::assembly::{
    assemble, assemble_anticipation, assemble_delay, assemble_tilde, homogeneity_check,
    AssemblyParams, ProcessKind,
};
use crate::error::Result;
use crate::fundamental::{FundamentalSolution, DEFAULT_MAX_INTERVAL};
use crate::grid::GridPath;
use crate::harness::window::{fundamental_for, plan_left_extent};
use crate::left_tail::{construct_left, series_f, LeftTailParams, DEFAULT_K_F, DEFAULT_TOL};
use crate::measure_change::{
    grad_x0_check, mc_batch, paired_differences_by_step, rms_gap, Functional, FunctionalKind,
    McParams, SampleKind, ShiftQuery,
};
use crate::path_sampler::{derive_seed, sample_w, MeasureModel};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Sample sizes as specified.
    #[default]
    Full,
    /// Tenfold smaller Monte Carlo batches and fewer seeds.
    Quick,
}

impl std::str::FromStr for Profile {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Profile::Full),
            "quick" => Ok(Profile::Quick),
            other => Err(crate::error::Error::invalid(format!(
                "unknown profile '{other}'"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub seed: u64,
    pub workers: usize,
    /// Runs only criteria whose module tag or number matches.
    pub filter: Option<String>,
    pub profile: Profile,
    /// Replaces every density by 1 in the identity criteria.
    pub corrupt_density: bool,
}

impl SuiteOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            workers: 1,
            filter: None,
            profile: Profile::Full,
            corrupt_density: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: u32,
    pub module: String,
    pub title: String,
    pub pass: bool,
    pub measured: Map<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteReport {
    pub version: String,
    pub seed: u64,
    pub profile: Profile,
    pub corrupt_density: bool,
    pub criteria: Vec<CriterionReport>,
    pub all_pass: bool,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

struct Ctx<'a> {
    opts: &'a SuiteOptions,
    id: u32,
}

impl Ctx<'_> {
    fn seed(&self, j: u64) -> u64 {
        derive_seed(self.opts.seed, u64::from(self.id) * 1_000_003 + j)
    }

    fn quick(&self) -> bool {
        self.opts.profile == Profile::Quick
    }

    fn seeds(&self, full: usize) -> usize {
        if self.quick() {
            full.min(5)
        } else {
            full
        }
    }

    fn mc_n(&self) -> usize {
        if self.quick() {
            10_000
        } else {
            100_000
        }
    }
}

type Outcome = Result<(bool, Map<String, Value>)>;

struct Criterion {
    id: u32,
    module: &'static str,
    title: &'static str,
    run: fn(&Ctx) -> Outcome,
}

const CRITERIA: &[Criterion] = &[
    Criterion {
        id: 1,
        module: "fundamental",
        title: "renewal residual, continuity at integers, held-out decay envelope",
        run: fundamental_solution,
    },
    Criterion {
        id: 2,
        module: "left_tail",
        title: "ramp driver series against its closed form",
        run: ramp_series,
    },
    Criterion {
        id: 3,
        module: "left_tail",
        title: "left-tail equation residual on [-8, 0] and segment glue",
        run: left_tail_residual,
    },
    Criterion {
        id: 4,
        module: "assembly",
        title: "constant-shift invariances, X_0 = W_0, unit gradient",
        run: invariances,
    },
    Criterion {
        id: 5,
        module: "assembly",
        title: "temporal homogeneity under re-construction from W^v",
        run: homogeneity,
    },
    Criterion {
        id: 6,
        module: "assembly",
        title: "anticipating process residual and mirror identity",
        run: time_reversal,
    },
    Criterion {
        id: 7,
        module: "measure_change",
        title: "shift density of the driver, paired Monte Carlo",
        run: density_bm,
    },
    Criterion {
        id: 8,
        module: "measure_change",
        title: "shift density of the delay and anticipating processes",
        run: density_processes,
    },
    Criterion {
        id: 9,
        module: "measure_change",
        title: "negative control without the density must fail",
        run: negative_control,
    },
    Criterion {
        id: 10,
        module: "harness",
        title: "byte-identical reports across worker counts",
        run: determinism,
    },
];

fn selected(c: &Criterion, opts: &SuiteOptions) -> bool {
    if opts.profile == Profile::Quick && c.id == 10 {
        return false;
    }
    match &opts.filter {
        None => true,
        Some(f) => f.split(',').any(|f| {
            let f = f.trim();
            f == c.module || f == c.id.to_string()
        }),
    }
}

/// Runs every selected criterion in order. Failures are reported, not raised.
pub fn run_acceptance_suite(opts: &SuiteOptions) -> SuiteReport {
    run_with(opts, |_| {})
}

/// As [`run_acceptance_suite`], calling `on_done` after each criterion.
pub fn run_with(opts: &SuiteOptions, mut on_done: impl FnMut(&CriterionReport)) -> SuiteReport {
    let mut criteria = Vec::new();
    for c in CRITERIA.iter().filter(|c| selected(c, opts)) {
        let ctx = Ctx { opts, id: c.id };
        let start = Instant::now();
        let (pass, measured, error) = match (c.run)(&ctx) {
            Ok((pass, measured)) => (pass, measured, None),
            Err(e) => (false, Map::new(), Some(e.to_string())),
        };
        let report = CriterionReport {
            id: c.id,
            module: c.module.to_string(),
            title: c.title.to_string(),
            pass,
            measured,
            error,
            elapsed: start.elapsed(),
        };
        on_done(&report);
        criteria.push(report);
    }
    let all_pass = criteria.iter().all(|c| c.pass);
    SuiteReport {
        version: crate::VERSION.to_string(),
        seed: opts.seed,
        profile: opts.profile,
        corrupt_density: opts.corrupt_density,
        criteria,
        all_pass,
    }
}

fn map(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("criteria report objects"),
    }
}

fn fundamental_solution(_: &Ctx) -> Outcome {
    let mut pass = true;
    let mut rows = Vec::new();
    for a in [-0.1, -0.5, -0.9] {
        let fs = FundamentalSolution::build(a, DEFAULT_MAX_INTERVAL)?;
        let residual = fs.verify_renewal_residual(10.0, 1e-3)?;
        let jump = fs.continuity_defect();
        let env = fs.estimate_decay(5.0, 15.0)?;
        // held-out window [15, 25] on the 1/256 grid
        let held_out = (15 * 256..=25 * 256)
            .map(|i| {
                let s = i as f64 / 256.0;
                fs.eval(s).abs() / (1.1 * env.at(s))
            })
            .fold(0.0, f64::max);
        let ok = residual <= 1e-5 && jump <= 1e-12 && env.lambda > 0.0 && held_out <= 1.0;
        pass &= ok;
        rows.push(json!({
            "a": a,
            "renewal_residual": residual,
            "continuity_jump": jump,
            "lambda": env.lambda,
            "c": env.c,
            "held_out_ratio": held_out,
            "pass": ok,
        }));
    }
    Ok((pass, map(json!({ "per_a": rows }))))
}

fn ramp(n: u32, t_left: i64, t_right: i64) -> Result<GridPath> {
    let lo = t_left * n as i64;
    let hi = t_right * n as i64;
    GridPath::from_indices(lo, n, (lo..=hi).map(|k| k as f64 / n as f64).collect())
}

fn ramp_series(_: &Ctx) -> Outcome {
    let n = 512;
    let w = ramp(n, -40, 1)?;
    let mut pass = true;
    let mut rows = Vec::new();
    for a in [-0.1_f64, -0.5, -0.9] {
        let expect = (a.exp() - 1.0) / a;
        let f0 = series_f(&w, a, 0, DEFAULT_K_F)?.values()[n as usize];
        let g5 = series_f(&w, a, 5, DEFAULT_K_F)?.values()[n as usize];
        let err = (f0 - expect).abs();
        let shifted_err = (g5 - expect).abs();
        let ok = err <= 1e-10 && shifted_err <= 1e-10;
        pass &= ok;
        rows.push(json!({
            "a": a,
            "f0": f0,
            "closed_form": expect,
            "error": err,
            "shifted_offset_error": shifted_err,
            "pass": ok,
        }));
    }
    Ok((
        pass,
        map(json!({ "dt": 1.0 / n as f64, "k_f": DEFAULT_K_F, "per_a": rows })),
    ))
}

const A: f64 = -0.5;
const DT: f64 = 1.0 / 256.0;

fn left_tail_residual(ctx: &Ctx) -> Outcome {
    let t_left = -9.0;
    let fs = fundamental_for(A, DEFAULT_TOL, -t_left)?;
    let extent = plan_left_extent(&fs, DEFAULT_TOL, DEFAULT_K_F, -t_left)?;
    let m = MeasureModel::standard();
    let seeds = ctx.seeds(20);
    let (mut worst_res, mut worst_glue, mut worst_tail) = (0.0_f64, 0.0_f64, 0.0_f64);
    for j in 0..seeds {
        let w = sample_w(-extent, 1.0, DT, &m, ctx.seed(j as u64))?;
        let left = construct_left(&w, &fs, &LeftTailParams::new(DEFAULT_TOL, t_left))?;
        let r = crate::residual::delay_residual_full(&left.x_left, &w, A, 0.0, -8.0, 0.0)?;
        worst_res = worst_res.max(r.anchored).max(r.pairwise);
        worst_glue = worst_glue.max(left.diagnostics.glue_jump);
        worst_tail = worst_tail.max(left.tail_bound);
    }
    let pass = worst_res <= 1e-3 && worst_glue <= 1e-6 && worst_tail < DEFAULT_TOL;
    Ok((
        pass,
        map(json!({
            "seeds": seeds,
            "max_residual": worst_res,
            "max_glue_jump": worst_glue,
            "max_tail_bound": worst_tail,
        })),
    ))
}

fn delay_window(
    extra_left: f64,
    t_left: f64,
    t_right: f64,
) -> Result<(FundamentalSolution, f64, f64)> {
    let fs = fundamental_for(A, DEFAULT_TOL, -t_left + extra_left)?;
    let extent =
        plan_left_extent(&fs, DEFAULT_TOL, DEFAULT_K_F, -t_left + extra_left)? + extra_left;
    Ok((fs, -extent, t_right + extra_left + 1.0))
}

fn invariances(ctx: &Ctx) -> Outcome {
    let (fs, lo, hi) = delay_window(0.0, -6.0, 6.0)?;
    let params = AssemblyParams::new(-6.0, 6.0);
    let m = MeasureModel::standard();
    let seeds = ctx.seeds(20);
    let mut tilde_bitwise = true;
    let (mut shift_err, mut x0_err, mut grad_err) = (0.0_f64, 0.0_f64, 0.0_f64);
    for j in 0..seeds {
        let w = sample_w(lo, hi, DT, &m, ctx.seed(j as u64))?;
        let (tilde, _) = assemble_tilde(&w, &fs, &params)?;
        let (tilde_shifted, _) = assemble_tilde(&w.shift_constant(-2.5), &fs, &params)?;
        tilde_bitwise &= tilde.values() == tilde_shifted.values();

        let pr = assemble_delay(&w, &fs, &params)?;
        let x = 0.7;
        let shifted = assemble_delay(&w.shift_constant(x), &fs, &params)?;
        let dev =
            pr.x.values()
                .iter()
                .zip(shifted.x.values())
                .map(|(a, b)| (b - a - x).abs())
                .fold(0.0, f64::max);
        shift_err = shift_err.max(dev);
        x0_err = x0_err.max((pr.x.value(0.0)? - w.value(0.0)?).abs());
        for eps in [1e-3, 1.0] {
            for t in [0.0, 0.5, 2.0] {
                let g = grad_x0_check(ProcessKind::Delay, &w, &fs, &params, t, eps)?;
                grad_err = grad_err.max((g - 1.0).abs());
            }
        }
    }
    let pass = tilde_bitwise && shift_err <= 1e-10 && x0_err <= 1e-10 && grad_err <= 1e-9;
    Ok((
        pass,
        map(json!({
            "seeds": seeds,
            "x_tilde_bitwise_invariant": tilde_bitwise,
            "max_shift_equivariance_error": shift_err,
            "max_abs_x0_minus_w0": x0_err,
            "max_abs_gradient_minus_one": grad_err,
        })),
    ))
}

fn homogeneity(ctx: &Ctx) -> Outcome {
    let shifts = [-2.0, -1.0, 1.0, 2.0];
    let (fs, lo, hi) = delay_window(2.0, -6.0, 6.0)?;
    let params = AssemblyParams::new(-6.0, 6.0);
    let m = MeasureModel::standard();
    let seeds = ctx.seeds(5);
    let (mut dev_256, mut dev_512, mut b0_shift) = (0.0_f64, 0.0_f64, 0.0_f64);
    for j in 0..seeds {
        let fine = sample_w(lo, hi, DT / 2.0, &m, ctx.seed(j as u64))?;
        for (path, worst) in [(fine.coarsen(2)?, &mut dev_256), (fine, &mut dev_512)] {
            let pr = assemble_delay(&path, &fs, &params)?;
            for v in shifts {
                let h = homogeneity_check(&pr, v, &fs, DEFAULT_TOL, DEFAULT_K_F)?;
                *worst = worst.max(h.deviation);
                if path.steps_per_unit() == 256 {
                    b0_shift = b0_shift.max(h.b0_shift);
                }
            }
        }
    }
    let pass = dev_256 <= 2e-3 && b0_shift <= 2e-3 && dev_512 < dev_256;
    Ok((
        pass,
        map(json!({
            "seeds": seeds,
            "shifts": shifts,
            "max_deviation_dt_1_256": dev_256,
            "max_deviation_dt_1_512": dev_512,
            "max_b0_shift": b0_shift,
        })),
    ))
}

fn time_reversal(ctx: &Ctx) -> Outcome {
    // the advanced residual on [-6, 6] reads X up to 7
    let (fs, lo, hi) = delay_window(0.0, -7.0, 7.0)?;
    let params = AssemblyParams::new(-7.0, 7.0);
    let m = MeasureModel::standard();
    let seeds = ctx.seeds(20);
    let mut worst = 0.0_f64;
    let mut mirror_exact = true;
    for j in 0..seeds {
        // sampled on the mirrored window, so the anticipating side has its tail
        let w = sample_w(-hi, -lo, DT, &m, ctx.seed(j as u64))?;
        let an = assemble_anticipation(&w, &fs, &params)?;
        let r = an.residual(-6.0, 6.0)?;
        worst = worst.max(r.anchored).max(r.pairwise);
        let mirrored = assemble(ProcessKind::Delay, &w.reverse_time(), &fs, &params)?;
        mirror_exact &= an.x.reverse_time().values() == mirrored.x.values()
            && an.b0 == mirrored.b0
            && an.x.start_index() == -mirrored.x.end_index();
    }
    let pass = worst <= 1e-3 && mirror_exact;
    Ok((
        pass,
        map(json!({
            "seeds": seeds,
            "max_residual": worst,
            "mirror_identity_exact": mirror_exact,
        })),
    ))
}

fn all_functionals(ts: &[f64], corrected: bool) -> Vec<ShiftQuery> {
    let mut qs = Vec::new();
    for &t in ts {
        for k in [FunctionalKind::F1, FunctionalKind::F2, FunctionalKind::F3] {
            qs.push(ShiftQuery {
                functional: Functional::new(k),
                t,
                corrected,
            });
        }
    }
    qs
}

fn density_bm(ctx: &Ctx) -> Outcome {
    let params = McParams {
        workers: ctx.opts.workers,
        ..McParams::bm(DT, MeasureModel::standard())
    };
    let qs = all_functionals(&[0.25, 0.5, 1.0, 2.0], !ctx.opts.corrupt_density);
    let reports = mc_batch(SampleKind::Bm, &qs, ctx.mc_n(), ctx.seed(0), &params)?;
    let pass = reports.iter().all(|r| r.pass);
    Ok((pass, map(json!({ "reports": reports }))))
}

fn density_processes(ctx: &Ctx) -> Outcome {
    let params = McParams {
        workers: ctx.opts.workers,
        bias_allowance: 5e-3,
        ..McParams::bm(DT, MeasureModel::standard())
    };
    let qs = all_functionals(&[0.5, 1.0], !ctx.opts.corrupt_density);
    let mut reports = Vec::new();
    for (j, kind) in [SampleKind::Delay, SampleKind::Anticipation]
        .into_iter()
        .enumerate()
    {
        reports.extend(mc_batch(
            kind,
            &qs,
            ctx.mc_n(),
            ctx.seed(j as u64),
            &params,
        )?);
    }
    let identities = reports.iter().all(|r| r.pass);

    // construction bias: pathwise gap of D = lhs - rhs against the 1/512 level
    let ladder_n = if ctx.quick() { 2_000 } else { 20_000 };
    let probe = ShiftQuery {
        functional: Functional::new(FunctionalKind::F1),
        t: 0.5,
        corrected: true,
    };
    let mut ladder = Vec::new();
    let mut shrinks = true;
    for (j, kind) in [ProcessKind::Delay, ProcessKind::Anticipation]
        .into_iter()
        .enumerate()
    {
        let d = paired_differences_by_step(
            kind,
            &probe,
            &[128, 256, 512],
            ladder_n,
            ctx.seed(10 + j as u64),
            &params,
        )?;
        let gap_128 = rms_gap(&d[0], &d[2]);
        let gap_256 = rms_gap(&d[1], &d[2]);
        shrinks &= gap_256 < gap_128;
        ladder.push(json!({
            "kind": kind,
            "samples": ladder_n,
            "rms_gap_dt_1_128": gap_128,
            "rms_gap_dt_1_256": gap_256,
        }));
    }
    Ok((
        identities && shrinks,
        map(json!({ "reports": reports, "bias_ladder": ladder })),
    ))
}

fn negative_control(ctx: &Ctx) -> Outcome {
    // a non-centred W_0 law: with a symmetric one, tanh has the same mean
    // before and after the shift and the control would have no power
    let params = McParams {
        workers: ctx.opts.workers,
        bias_allowance: 5e-3,
        ..McParams::bm(DT, MeasureModel::gaussian(1.0, 0.5)?)
    };
    let q = ShiftQuery {
        functional: Functional::new(FunctionalKind::F1),
        t: 2.0,
        corrected: false,
    };
    let mut reports = Vec::new();
    for (j, kind) in [SampleKind::Bm, SampleKind::Delay].into_iter().enumerate() {
        reports.extend(mc_batch(
            kind,
            &[q],
            ctx.mc_n(),
            ctx.seed(j as u64),
            &params,
        )?);
    }
    let pass = reports.iter().all(|r| !r.pass && r.z_score.abs() > 4.0);
    Ok((pass, map(json!({ "reports": reports }))))
}

fn determinism(ctx: &Ctx) -> Outcome {
    let run = |workers: usize| {
        run_acceptance_suite(&SuiteOptions {
            seed: ctx.opts.seed,
            workers,
            filter: None,
            profile: Profile::Quick,
            corrupt_density: ctx.opts.corrupt_density,
        })
        .to_json()
    };
    let one = run(1);
    let three = run(3);
    let identical = one == three;
    Ok((
        identical,
        map(json!({
            "profile": Profile::Quick,
            "worker_counts": [1, 3],
            "report_bytes": one.len(),
            "byte_identical": identical,
        })),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_by_module_and_number() {
        let mut opts = SuiteOptions::new(1);
        opts.filter = Some("fundamental".into());
        let ids: Vec<u32> = CRITERIA
            .iter()
            .filter(|c| selected(c, &opts))
            .map(|c| c.id)
            .collect();
        assert_eq!(ids, vec![1]);
        opts.filter = Some("2,assembly".into());
        let ids: Vec<u32> = CRITERIA
            .iter()
            .filter(|c| selected(c, &opts))
            .map(|c| c.id)
            .collect();
        assert_eq!(ids, vec![2, 4, 5, 6]);
    }

    #[test]
    fn elapsed_time_is_not_serialized() {
        let mut opts = SuiteOptions::new(3);
        opts.filter = Some("2".into());
        let report = run_acceptance_suite(&opts);
        assert!(report.all_pass);
        assert!(!report.to_json().contains("elapsed"));
    }
}
