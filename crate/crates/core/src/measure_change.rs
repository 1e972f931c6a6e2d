//! Densities of path laws under time shift, and their Monte Carlo check.
//!
//! For the driver and for the constructed processes the density of the law
//! of `Y_{. - t}` against the law of `Y` is `m(Y_{-t}) / m(Y_0)`. The check
//! evaluates `E[F(Y_{. - t})]` and `E[F(Y) m(Y_{-t}) / m(Y_0)]` on the same
//! drivers and tests the paired difference.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble, AssemblyParams, ProcessKind, ProcessRealization};
use crate::error::{Error, Result};
use crate::fundamental::FundamentalSolution;
use crate::grid::{align, steps_per_unit, GridPath};
use crate::harness::window::{fundamental_for, plan_left_extent};
use crate::path_sampler::{derive_seed, sample_w, InitialDensity, MeasureModel};
use crate::stats::{pairwise_sum, MeanSe};

pub const Z_CRIT: f64 = 4.0;

/// `m(W_{-t}) / m(W_0)`, evaluated in the log domain.
pub fn rn_density_bm(w: &GridPath, t: f64, m: &MeasureModel) -> Result<f64> {
    Ok(shift_density(m, w.value(-t)?, w.value(0.0)?))
}

/// `m(X_{-t}) / m(X_0)` for a constructed process.
pub fn rn_density_x(pr: &ProcessRealization, t: f64, m: &MeasureModel) -> Result<f64> {
    Ok(shift_density(m, pr.x.value(-t)?, pr.x.value(0.0)?))
}

pub fn shift_density(m: &MeasureModel, y_minus_t: f64, y0: f64) -> f64 {
    (m.log_density(y_minus_t) - m.log_density(y0)).exp()
}

/// The general form `m(X_{-t}) / m(X_0) · |∇_{X_0} X_{-t}|`.
pub fn rn_density_with_gradient(m: &MeasureModel, y_minus_t: f64, y0: f64, gradient: f64) -> f64 {
    shift_density(m, y_minus_t, y0) * gradient.abs()
}

/// `(X_{-t}(W + eps·1) - X_{-t}(W)) / eps`.
pub fn grad_x0_check(
    kind: ProcessKind,
    w: &GridPath,
    fs: &FundamentalSolution,
    params: &AssemblyParams,
    t: f64,
    eps: f64,
) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("eps must be > 0, got {eps}")));
    }
    let base = assemble(kind, w, fs, params)?;
    let bumped = assemble(kind, &w.shift_constant(eps), fs, params)?;
    Ok((bumped.x.value(-t)? - base.x.value(-t)?) / eps)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionalKind {
    F1,
    F2,
    F3,
}

impl std::str::FromStr for FunctionalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f1" => Ok(FunctionalKind::F1),
            "f2" => Ok(FunctionalKind::F2),
            "f3" => Ok(FunctionalKind::F3),
            other => Err(Error::invalid(format!("unknown functional '{other}'"))),
        }
    }
}

/// Bounded path functionals evaluated at two fixed grid times.
///
/// * `F1(Y) = tanh(Y_{s1})`
/// * `F2(Y) = tanh(Y_{s1}) exp(-Y_{s2}^2)`
/// * `F3(Y) = cos(Y_{s1} - Y_{s2})`
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Functional {
    pub kind: FunctionalKind,
    pub s1: f64,
    pub s2: f64,
}

pub const DEFAULT_S1: f64 = -0.25;
pub const DEFAULT_S2: f64 = 0.25;

impl Functional {
    pub fn new(kind: FunctionalKind) -> Self {
        Self {
            kind,
            s1: DEFAULT_S1,
            s2: DEFAULT_S2,
        }
    }

    pub fn apply(&self, y1: f64, y2: f64) -> f64 {
        match self.kind {
            FunctionalKind::F1 => y1.tanh(),
            FunctionalKind::F2 => y1.tanh() * (-y2 * y2).exp(),
            FunctionalKind::F3 => (y1 - y2).cos(),
        }
    }

    /// `F(Y_{. - t})`.
    pub fn on_shifted(&self, y: &GridPath, t: f64) -> Result<f64> {
        Ok(self.apply(y.value(self.s1 - t)?, y.value(self.s2 - t)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleKind {
    Bm,
    Delay,
    Anticipation,
}

impl std::str::FromStr for SampleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bm" => Ok(SampleKind::Bm),
            "delay" => Ok(SampleKind::Delay),
            "anticipation" => Ok(SampleKind::Anticipation),
            other => Err(Error::invalid(format!("unknown sample kind '{other}'"))),
        }
    }
}

impl std::fmt::Display for SampleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SampleKind::Bm => "bm",
            SampleKind::Delay => "delay",
            SampleKind::Anticipation => "anticipation",
        })
    }
}

/// Everything a Monte Carlo batch needs besides the queries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McParams {
    pub a: f64,
    pub dt: f64,
    pub tol: f64,
    pub k_f: usize,
    pub measure: MeasureModel,
    /// Allowance for deterministic construction bias; zero for plain BM.
    pub bias_allowance: f64,
    pub workers: usize,
}

impl McParams {
    pub fn bm(dt: f64, measure: MeasureModel) -> Self {
        Self {
            a: -0.5,
            dt,
            tol: crate::left_tail::DEFAULT_TOL,
            k_f: crate::left_tail::DEFAULT_K_F,
            measure,
            bias_allowance: 0.0,
            workers: 1,
        }
    }
}

/// One identity to test: functional, shift, and whether the density is used.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftQuery {
    pub functional: Functional,
    pub t: f64,
    /// `false` replaces the density with 1 (negative control).
    pub corrected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub kind: SampleKind,
    pub t: f64,
    pub functional: FunctionalKind,
    pub corrected: bool,
    pub n_samples: usize,
    pub lhs_mean: f64,
    pub rhs_mean: f64,
    pub lhs_se: f64,
    pub rhs_se: f64,
    pub paired_se: f64,
    pub z_score: f64,
    pub bias_allowance: f64,
    pub pass: bool,
}

impl DensityReport {
    fn from_pairs(kind: SampleKind, q: &ShiftQuery, lhs: &[f64], rhs: &[f64], bias: f64) -> Self {
        let diff: Vec<f64> = lhs.iter().zip(rhs).map(|(l, r)| l - r).collect();
        let l = MeanSe::of(lhs);
        let r = MeanSe::of(rhs);
        let d = MeanSe::of(&diff);
        let gap = l.mean - r.mean;
        let z = if d.se > 0.0 {
            gap / d.se
        } else if gap == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(gap)
        };
        DensityReport {
            kind,
            t: q.t,
            functional: q.functional.kind,
            corrected: q.corrected,
            n_samples: lhs.len(),
            lhs_mean: l.mean,
            rhs_mean: r.mean,
            lhs_se: l.se,
            rhs_se: r.se,
            paired_se: d.se,
            z_score: z,
            bias_allowance: bias,
            pass: gap.abs() <= Z_CRIT * d.se + bias,
        }
    }
}

/// Grid window `[lo, hi]` of the path values a batch of queries reads.
fn evaluation_window(queries: &[ShiftQuery]) -> (f64, f64) {
    let mut lo: f64 = 0.0;
    let mut hi: f64 = 0.0;
    for q in queries {
        let f = &q.functional;
        for s in [f.s1, f.s2, f.s1 - q.t, f.s2 - q.t, -q.t] {
            lo = lo.min(s);
            hi = hi.max(s);
        }
    }
    (lo, hi)
}

/// Units the construction must reach on its far side.
fn far_units(lo: f64) -> f64 {
    (-lo).max(1.0)
}

/// Driver window required to construct `kind` on `[lo, hi]`.
pub fn driver_window(
    kind: SampleKind,
    fs: Option<&FundamentalSolution>,
    params: &McParams,
    lo: f64,
    hi: f64,
) -> Result<(f64, f64)> {
    let n = steps_per_unit(params.dt)?;
    let pad = 1.0 / n as f64;
    match kind {
        SampleKind::Bm => Ok(((lo - pad).min(-pad), (hi + pad).max(pad))),
        SampleKind::Delay | SampleKind::Anticipation => {
            let fs = fs.ok_or(Error::EnvelopeUnavailable)?;
            let (near, far) = match kind {
                SampleKind::Delay => (hi, -lo),
                _ => (-lo, hi),
            };
            let far_units = far.max(1.0).ceil();
            let plan = plan_left_extent(fs, params.tol, params.k_f, far_units)?;
            let near = (near.max(0.0) * n as f64).ceil() / n as f64 + pad;
            Ok(match kind {
                SampleKind::Delay => (-plan, near),
                _ => (-near, plan),
            })
        }
    }
}

fn assembly_window(kind: SampleKind, lo: f64, hi: f64, n: u32) -> (f64, f64) {
    let up = |x: f64| (x * n as f64).ceil() / n as f64;
    let down = |x: f64| (x * n as f64).floor() / n as f64;
    match kind {
        SampleKind::Delay => (down(lo).min(-1.0), up(hi).max(0.0)),
        _ => (down(lo).min(0.0), up(hi).max(1.0)),
    }
}

/// Paired samples for every query on each of `n` drivers.
///
/// Drivers are keyed by `(base_seed, i)`, samples are collected in index
/// order and reduced by pairwise summation, so the reports do not depend on
/// the number of workers.
pub fn mc_batch(
    kind: SampleKind,
    queries: &[ShiftQuery],
    n: usize,
    base_seed: u64,
    params: &McParams,
) -> Result<Vec<DensityReport>> {
    let samples = paired_samples(kind, queries, n, base_seed, params)?;
    let bias = match kind {
        SampleKind::Bm => 0.0,
        _ => params.bias_allowance,
    };
    Ok(queries
        .iter()
        .enumerate()
        .map(|(j, q)| {
            let lhs: Vec<f64> = samples.iter().map(|s| s[j].0).collect();
            let rhs: Vec<f64> = samples.iter().map(|s| s[j].1).collect();
            DensityReport::from_pairs(kind, q, &lhs, &rhs, bias)
        })
        .collect())
}

/// `(lhs_i, rhs_i)` for every sample `i` (outer) and query (inner).
pub fn paired_samples(
    kind: SampleKind,
    queries: &[ShiftQuery],
    n: usize,
    base_seed: u64,
    params: &McParams,
) -> Result<Vec<Vec<(f64, f64)>>> {
    if n == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    if queries.is_empty() {
        return Ok(vec![Vec::new(); n]);
    }
    let steps = steps_per_unit(params.dt)?;
    let (lo, hi) = evaluation_window(queries);
    for q in queries {
        align(q.t, steps)?;
        align(q.functional.s1, steps)?;
        align(q.functional.s2, steps)?;
    }
    let fs = match kind {
        SampleKind::Bm => None,
        _ => Some(fundamental_for(
            params.a,
            params.tol,
            far_units(lo).max(hi),
        )?),
    };
    let (w_lo, w_hi) = driver_window(kind, fs.as_ref(), params, lo, hi)?;
    let (a_lo, a_hi) = assembly_window(kind, lo, hi, steps);
    let assembly = AssemblyParams {
        tol: params.tol,
        k_f: params.k_f,
        t_left: a_lo,
        t_right: a_hi,
    };

    let one = |i: usize| -> Result<Vec<(f64, f64)>> {
        let w = sample_w(
            w_lo,
            w_hi,
            params.dt,
            &params.measure,
            derive_seed(base_seed, i as u64),
        )?;
        let y = match (kind, fs.as_ref()) {
            (SampleKind::Bm, _) => w,
            (SampleKind::Delay, Some(fs)) => assemble(ProcessKind::Delay, &w, fs, &assembly)?.x,
            (SampleKind::Anticipation, Some(fs)) => {
                assemble(ProcessKind::Anticipation, &w, fs, &assembly)?.x
            }
            _ => unreachable!("fundamental solution built for constructed kinds"),
        };
        queries
            .iter()
            .map(|q| {
                let f = &q.functional;
                let lhs = f.on_shifted(&y, q.t)?;
                let base = f.on_shifted(&y, 0.0)?;
                let density = if q.corrected {
                    shift_density(&params.measure, y.value(-q.t)?, y.value(0.0)?)
                } else {
                    1.0
                };
                Ok((lhs, base * density))
            })
            .collect()
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(params.workers.max(1))
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    pool.install(|| (0..n).into_par_iter().map(one).collect())
}

pub fn mc_shift_identity(
    kind: SampleKind,
    functional: Functional,
    t: f64,
    n: usize,
    base_seed: u64,
    params: &McParams,
) -> Result<DensityReport> {
    let q = ShiftQuery {
        functional,
        t,
        corrected: true,
    };
    Ok(mc_batch(kind, &[q], n, base_seed, params)?.remove(0))
}

/// The same estimator with the density replaced by 1. For `|t| >= 1` and a
/// non-centred `W_0` law this is expected to fail.
pub fn mc_negative_control(
    kind: SampleKind,
    functional: Functional,
    t: f64,
    n: usize,
    base_seed: u64,
    params: &McParams,
) -> Result<DensityReport> {
    let q = ShiftQuery {
        functional,
        t,
        corrected: false,
    };
    Ok(mc_batch(kind, &[q], n, base_seed, params)?.remove(0))
}

/// Differences `D_i(dt) = lhs_i - rhs_i` on the same drivers at several grid
/// steps, all coarsened from one fine sample.
pub fn paired_differences_by_step(
    kind: ProcessKind,
    query: &ShiftQuery,
    steps: &[u32],
    n: usize,
    base_seed: u64,
    params: &McParams,
) -> Result<Vec<Vec<f64>>> {
    let finest = *steps
        .iter()
        .max()
        .ok_or_else(|| Error::invalid("no grid steps"))?;
    if steps.iter().any(|s| finest % s != 0) {
        return Err(Error::invalid("grid steps must divide the finest one"));
    }
    let (lo, hi) = evaluation_window(std::slice::from_ref(query));
    let fs = fundamental_for(params.a, params.tol, far_units(lo).max(hi))?;
    let fine_params = McParams {
        dt: 1.0 / finest as f64,
        ..params.clone()
    };
    let sk = match kind {
        ProcessKind::Delay => SampleKind::Delay,
        ProcessKind::Anticipation => SampleKind::Anticipation,
    };
    let (w_lo, w_hi) = driver_window(sk, Some(&fs), &fine_params, lo, hi)?;
    // align the driver window to the coarsest grid so every level sees the same span
    let coarsest = *steps.iter().min().expect("non-empty");
    let w_lo = (w_lo * coarsest as f64).floor() / coarsest as f64;
    let w_hi = (w_hi * coarsest as f64).ceil() / coarsest as f64;
    let one = |i: usize| -> Result<Vec<f64>> {
        let fine = sample_w(
            w_lo,
            w_hi,
            fine_params.dt,
            &params.measure,
            derive_seed(base_seed, i as u64),
        )?;
        steps
            .iter()
            .map(|&s| {
                let w = fine.coarsen(finest / s)?;
                let (a_lo, a_hi) = assembly_window(sk, lo, hi, s);
                let y = assemble(
                    kind,
                    &w,
                    &fs,
                    &AssemblyParams {
                        tol: params.tol,
                        k_f: params.k_f,
                        t_left: a_lo,
                        t_right: a_hi,
                    },
                )?
                .x;
                let f = &query.functional;
                let density = if query.corrected {
                    shift_density(&params.measure, y.value(-query.t)?, y.value(0.0)?)
                } else {
                    1.0
                };
                Ok(f.on_shifted(&y, query.t)? - f.on_shifted(&y, 0.0)? * density)
            })
            .collect()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(params.workers.max(1))
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    let per_sample: Vec<Vec<f64>> =
        pool.install(|| (0..n).into_par_iter().map(one).collect::<Result<_>>())?;
    Ok((0..steps.len())
        .map(|j| per_sample.iter().map(|s| s[j]).collect())
        .collect())
}

/// Root mean square of `a_i - b_i`, a bound on the bias gap between two levels.
pub fn rms_gap(a: &[f64], b: &[f64]) -> f64 {
    let sq: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).collect();
    (pairwise_sum(&sq) / sq.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_at_zero_shift_is_one() {
        let m = MeasureModel::standard();
        let w = sample_w(-1.0, 1.0, 0.125, &m, 3).unwrap();
        assert_eq!(rn_density_bm(&w, 0.0, &m).unwrap(), 1.0);
    }

    #[test]
    fn gaussian_ratio() {
        let m = MeasureModel::standard();
        let w = GridPath::new(-1.0, 0.5, vec![1.0, 0.5, 0.0, 0.2, 0.1]).unwrap();
        let d = rn_density_bm(&w, 1.0, &m).unwrap();
        assert!((d - 0.606_530_659_712_633_4).abs() < 1e-15);
    }

    #[test]
    fn functional_values() {
        let f = Functional::new(FunctionalKind::F3);
        assert_eq!(f.apply(0.3, 0.3), 1.0);
        let f2 = Functional::new(FunctionalKind::F2);
        assert!((f2.apply(1.0, 0.0) - 1f64.tanh()).abs() < 1e-16);
    }

    #[test]
    fn zero_shift_pairs_agree_exactly() {
        let m = MeasureModel::standard();
        let p = McParams::bm(1.0 / 64.0, m);
        for k in [FunctionalKind::F1, FunctionalKind::F2, FunctionalKind::F3] {
            let r = mc_shift_identity(SampleKind::Bm, Functional::new(k), 0.0, 500, 1, &p).unwrap();
            assert_eq!(r.lhs_mean, r.rhs_mean);
            assert_eq!(r.z_score, 0.0);
            assert!(r.pass);
        }
    }
}
