//! Driver windows for constructions on finite grids.
//!
//! The left-bounded solution needs the driver far to the left of its output
//! window: `k_q` segments for the `q` series plus `k_f` levels of the deepest
//! `g_k` series. `k_q` depends on the realized `|g_k(0)|`, so the budget uses
//! a prior bound for them and keeps a few spare units.

use serde::{Deserialize, Serialize};

use crate::assembly::ProcessKind;
use crate::error::{Error, Result};
use crate::fundamental::{FundamentalSolution, DEFAULT_MAX_INTERVAL};
use crate::grid::{align, steps_per_unit};
use crate::harness::config::RunConfig;
use crate::left_tail::q_tail_bound;

/// Assumed bound on `max_k |g_k(0)|` when budgeting.
pub const PRIOR_G0: f64 = 6.0;
/// Spare units beyond the budgeted `k_q`.
pub const SPARE_UNITS: usize = 4;
/// Largest driver window, in grid points, the resolver accepts.
pub const MAX_WINDOW_POINTS: u64 = 1 << 25;
const K_Q_SEARCH: usize = 100_000;

/// Number of unit segments needed to cover `far` units to the left.
pub fn segments(far: f64) -> usize {
    (far.max(1.0) - 1e-9).ceil() as usize
}

/// Budgeted `k_q` for an output window reaching `segs` units to the left.
pub fn budget_k_q(fs: &FundamentalSolution, tol: f64, segs: usize) -> Result<usize> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tol must be > 0, got {tol}")));
    }
    let t_left = -(segs as f64);
    let mut best = f64::INFINITY;
    for k in segs..segs + K_Q_SEARCH {
        let bound = q_tail_bound(fs, PRIOR_G0, k, t_left)?;
        if bound < tol {
            return Ok(k);
        }
        best = best.min(bound);
    }
    Err(Error::TolUnreachable { tol, best })
}

/// Left driver extent, in whole units, for an output window reaching `far`
/// units to the left.
pub fn plan_left_extent(fs: &FundamentalSolution, tol: f64, k_f: usize, far: f64) -> Result<f64> {
    let k_q = budget_k_q(fs, tol, segments(far))?;
    Ok((k_q + SPARE_UNITS + k_f + 1) as f64)
}

/// A fundamental solution tabulated far enough for every `q` series that a
/// window planned by [`plan_left_extent`] can select.
pub fn fundamental_for(a: f64, tol: f64, far: f64) -> Result<FundamentalSolution> {
    let fs = FundamentalSolution::build(a, DEFAULT_MAX_INTERVAL)?;
    let need = budget_k_q(&fs, tol, segments(far))? + SPARE_UNITS + 2;
    if need <= DEFAULT_MAX_INTERVAL {
        return Ok(fs);
    }
    FundamentalSolution::build(a, need)
}

/// Driver window and truncation levels for one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub kind: ProcessKind,
    pub t_left_required: f64,
    pub t_right_required: f64,
    pub k_f: usize,
    /// Budgeted number of `q` terms; the realized value is at most `k_q + SPARE_UNITS`.
    pub k_q: usize,
    pub max_interval: usize,
    pub points: u64,
}

/// Window for a delay construction on `[lo, hi]` that must also be rebuilt
/// from the shifted drivers `W^v`.
fn delay_window(
    fs: &FundamentalSolution,
    tol: f64,
    k_f: usize,
    lo: f64,
    hi: f64,
    shifts: &[f64],
) -> Result<(f64, f64, usize)> {
    let mut left = 0.0_f64;
    let mut right = hi.max(0.0);
    let mut k_q = 0;
    for &v in std::iter::once(&0.0).chain(shifts) {
        let far = -(lo - v).min(-1.0);
        let segs = segments(far);
        let kq = budget_k_q(fs, tol, segs)?;
        let extent = (kq + SPARE_UNITS + k_f + 1) as f64;
        // W^v keeps W's left end for v >= 0 and loses |v| units for v < 0
        left = left.max(extent + (-v).max(0.0));
        right = right.max(hi - v.min(0.0));
        if v == 0.0 {
            k_q = kq;
        }
    }
    Ok((-left, right, k_q))
}

/// The minimal driver window for `cfg` and `kind`.
///
/// The output window is `[cfg.t_left, cfg.t_end]`; `cfg.shifts` lists the
/// homogeneity shifts the same driver must support. The anticipating kind
/// uses the mirrored window.
pub fn resolve_window(cfg: &RunConfig, kind: ProcessKind) -> Result<WindowPlan> {
    cfg.validate()?;
    let n = steps_per_unit(cfg.dt)?;
    let (lo, hi) = (cfg.t_left, cfg.t_end);
    let mirrored: Vec<f64> = cfg.shifts.iter().map(|v| -v).collect();
    let (far_lo, far_hi, shifts) = match kind {
        ProcessKind::Delay => (lo, hi, cfg.shifts.as_slice()),
        ProcessKind::Anticipation => (-hi, -lo, mirrored.as_slice()),
    };
    let worst_far = std::iter::once(0.0)
        .chain(shifts.iter().copied())
        .map(|v| -(far_lo - v).min(-1.0))
        .fold(1.0, f64::max);
    let fs = fundamental_for(cfg.a, cfg.tol, worst_far)?;
    let (l, r, k_q) = delay_window(&fs, cfg.tol, cfg.k_f, far_lo, far_hi, shifts)?;
    let pad = 1.0 / n as f64;
    let r = (align_up(r, n) + pad).max(pad);
    let (t_left, t_right) = match kind {
        ProcessKind::Delay => (l, r),
        ProcessKind::Anticipation => (-r, -l),
    };
    let points = ((t_right - t_left) * n as f64).round() as u64 + 1;
    if points > MAX_WINDOW_POINTS {
        return Err(Error::InfeasibleBudget {
            points,
            cap: MAX_WINDOW_POINTS,
        });
    }
    align(t_left, n)?;
    align(t_right, n)?;
    Ok(WindowPlan {
        kind,
        t_left_required: t_left,
        t_right_required: t_right,
        k_f: cfg.k_f,
        k_q,
        max_interval: fs.max_interval(),
        points,
    })
}

fn align_up(t: f64, n: u32) -> f64 {
    (t * n as f64 - 1e-9).ceil() / n as f64
}
