//! Two-sided processes on the whole axis.
//!
//! `X~` glues the bounded left solution to the forward solve started from its
//! last unit segment. The delay process is `X = X~ - b0` with
//! `b0 = f(0) + q(0-) - W_0`, which makes `X_0 = W_0`. The anticipating
//! process is the delay construction applied to the time-reversed driver and
//! then reversed back.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{solve_forward, SegmentFunction};
use crate::fundamental::FundamentalSolution;
use crate::grid::{align, GridPath};
use crate::left_tail::{
    construct_left, series_f, LeftTailParams, LeftTailResult, DEFAULT_K_F, DEFAULT_TOL,
};
use crate::residual::{anticipation_residual_full, delay_residual_full, Residual};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProcessKind {
    Delay,
    Anticipation,
}

impl std::fmt::Display for ProcessKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProcessKind::Delay => "delay",
            ProcessKind::Anticipation => "anticipation",
        })
    }
}

impl std::str::FromStr for ProcessKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delay" => Ok(ProcessKind::Delay),
            "anticipation" => Ok(ProcessKind::Anticipation),
            other => Err(Error::invalid(format!("unknown process kind '{other}'"))),
        }
    }
}

/// Output window and truncation settings, in the process's own time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssemblyParams {
    pub tol: f64,
    pub k_f: usize,
    pub t_left: f64,
    pub t_right: f64,
}

impl AssemblyParams {
    pub fn new(t_left: f64, t_right: f64) -> Self {
        Self {
            tol: DEFAULT_TOL,
            k_f: DEFAULT_K_F,
            t_left,
            t_right,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn mirrored(&self) -> Self {
        Self {
            t_left: -self.t_right,
            t_right: -self.t_left,
            ..*self
        }
    }

    fn left_params(&self) -> LeftTailParams {
        LeftTailParams {
            tol: self.tol,
            k_f: self.k_f,
            t_left: self.t_left,
            k_q: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RealizationDiagnostics {
    pub k_f: usize,
    pub k_q: usize,
    pub k_top: usize,
    pub tail_bound: f64,
    pub glue_jump: f64,
    pub max_g0: f64,
    pub max_g_sup: f64,
    /// `|b0 - (X~_0 - W_0)|`.
    pub b0_crosscheck: f64,
}

#[derive(Clone, Debug)]
pub struct ProcessRealization {
    pub kind: ProcessKind,
    pub w: GridPath,
    pub x_tilde: GridPath,
    pub b0: f64,
    pub x: GridPath,
    /// `A = X - W`.
    pub a_path: GridPath,
    pub a: f64,
    pub diagnostics: RealizationDiagnostics,
}

impl ProcessRealization {
    /// Integrated-equation residual of the process's own equation on `[t0, t1]`.
    pub fn residual(&self, t0: f64, t1: f64) -> Result<Residual> {
        match self.kind {
            ProcessKind::Delay => delay_residual_full(&self.x, &self.w, self.a, self.b0, t0, t1),
            ProcessKind::Anticipation => {
                anticipation_residual_full(&self.x, &self.w, self.a, self.b0, t0, t1)
            }
        }
    }

    /// Mirrors every path in time; the kind flips.
    pub fn reversed(&self) -> ProcessRealization {
        ProcessRealization {
            kind: match self.kind {
                ProcessKind::Delay => ProcessKind::Anticipation,
                ProcessKind::Anticipation => ProcessKind::Delay,
            },
            w: self.w.reverse_time(),
            x_tilde: self.x_tilde.reverse_time(),
            b0: self.b0,
            x: self.x.reverse_time(),
            a_path: self.a_path.reverse_time(),
            a: self.a,
            diagnostics: self.diagnostics.clone(),
        }
    }
}

/// `X~` on `[params.t_left, params.t_right]`, with the left-tail data it came from.
pub fn assemble_tilde(
    w: &GridPath,
    fs: &FundamentalSolution,
    params: &AssemblyParams,
) -> Result<(GridPath, LeftTailResult)> {
    let n = w.steps_per_unit();
    let end = align(params.t_right, n)?;
    if end < 0 {
        return Err(Error::invalid(format!(
            "right window end {} must be >= 0",
            params.t_right
        )));
    }
    let left = construct_left(w, fs, &params.left_params())?;
    if end == 0 {
        return Ok((left.x_left.clone(), left));
    }
    let phi = SegmentFunction::from_path(&left.x_left, 0.0)?;
    let fwd = solve_forward(&phi, w, fs.a(), params.t_right)?;
    let mut values = left.x_left.values();
    values.extend((1..=end).map(|k| fwd.at(k)));
    let tilde = GridPath::from_indices(left.x_left.start_index(), n, values)?;
    Ok((tilde, left))
}

/// `b0 = f(0) + q(0-) - W_0`, with `f(0)` re-evaluated from its own series and
/// `q(0-)` summed from direct evaluations of `r`.
pub fn compute_b0(left: &LeftTailResult, w: &GridPath, fs: &FundamentalSolution) -> Result<f64> {
    let n = w.steps_per_unit() as usize;
    let f0 = series_f(w, fs.a(), 0, left.diagnostics.k_top)?.values()[n];
    let q0: f64 = left
        .g
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, g)| g.values()[n] * fs.eval(k as f64))
        .sum();
    Ok(f0 + q0 - w.value(0.0)?)
}

const B0_CROSSCHECK_LIMIT: f64 = 1e-8;

pub fn assemble_delay(
    w: &GridPath,
    fs: &FundamentalSolution,
    params: &AssemblyParams,
) -> Result<ProcessRealization> {
    let (x_tilde, left) = assemble_tilde(w, fs, params)?;
    let b0 = compute_b0(&left, w, fs)?;
    let crosscheck = (b0 - (x_tilde.value(0.0)? - w.value(0.0)?)).abs();
    if !(crosscheck <= B0_CROSSCHECK_LIMIT) {
        return Err(Error::Internal(format!(
            "b0 = {b0} disagrees with X~_0 - W_0 by {crosscheck:e}"
        )));
    }
    let x_vals: Vec<f64> = x_tilde.values().into_iter().map(|v| v - b0).collect();
    let x = GridPath::from_indices(x_tilde.start_index(), x_tilde.steps_per_unit(), x_vals)?;
    let a_path = x.sub(w)?;
    Ok(ProcessRealization {
        kind: ProcessKind::Delay,
        w: w.clone(),
        x_tilde,
        b0,
        x,
        a_path,
        a: fs.a(),
        diagnostics: RealizationDiagnostics {
            k_f: left.k_f,
            k_q: left.k_q,
            k_top: left.diagnostics.k_top,
            tail_bound: left.tail_bound,
            glue_jump: left.diagnostics.glue_jump,
            max_g0: left.diagnostics.max_g0,
            max_g_sup: left.diagnostics.max_g_sup,
            b0_crosscheck: crosscheck,
        },
    })
}

/// The solution of `dX = -a (X_{s+1} + b0) ds + dW` bounded as `s -> +inf`,
/// on `[params.t_left, params.t_right]`.
pub fn assemble_anticipation(
    w: &GridPath,
    fs: &FundamentalSolution,
    params: &AssemblyParams,
) -> Result<ProcessRealization> {
    let mirrored = assemble_delay(&w.reverse_time(), fs, &params.mirrored())?;
    let mut out = mirrored.reversed();
    out.w = w.clone();
    Ok(out)
}

pub fn assemble(
    kind: ProcessKind,
    w: &GridPath,
    fs: &FundamentalSolution,
    params: &AssemblyParams,
) -> Result<ProcessRealization> {
    match kind {
        ProcessKind::Delay => assemble_delay(w, fs, params),
        ProcessKind::Anticipation => assemble_anticipation(w, fs, params),
    }
}

/// `W^u = W_{. + u} + A_u(W)·1`.
pub fn shifted_driver(w: &GridPath, u: f64, a_path: &GridPath) -> Result<GridPath> {
    let a_u = a_path.value(u)?;
    Ok(w.shift_time(-u)?.shift_constant(a_u))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityReport {
    pub v: f64,
    /// `sup |X_{.+v}(W) - X(W^v)|` over the common window.
    pub deviation: f64,
    /// `|b0(W^v) - b0(W)|`.
    pub b0_shift: f64,
    pub window: (f64, f64),
}

/// Rebuilds the process from `W^v` and compares it with `X_{. + v}(W)`.
pub fn homogeneity_check(
    pr: &ProcessRealization,
    v: f64,
    fs: &FundamentalSolution,
    tol: f64,
    k_f: usize,
) -> Result<HomogeneityReport> {
    let n = pr.x.steps_per_unit();
    let kv = align(v, n)?;
    let driver = shifted_driver(&pr.w, v, &pr.a_path)?;
    // the reconstruction lives on X's window moved by -v
    let lo = pr.x.start_index() - kv;
    let hi = pr.x.end_index() - kv;
    let unit = n as i64;
    let (lo, hi) = match pr.kind {
        ProcessKind::Delay => (lo.min(-unit), hi.max(0)),
        ProcessKind::Anticipation => (lo.min(0), hi.max(unit)),
    };
    let params = AssemblyParams {
        tol,
        k_f,
        t_left: lo as f64 / n as f64,
        t_right: hi as f64 / n as f64,
    };
    let rebuilt = assemble(pr.kind, &driver, fs, &params)?;
    let shifted = pr.x.shift_time(-v)?;
    let deviation = shifted.sup_distance(&rebuilt.x)?;
    let common_lo = shifted.start_index().max(rebuilt.x.start_index());
    let common_hi = shifted.end_index().min(rebuilt.x.end_index());
    Ok(HomogeneityReport {
        v,
        deviation,
        b0_shift: (rebuilt.b0 - pr.b0).abs(),
        window: (common_lo as f64 / n as f64, common_hi as f64 / n as f64),
    })
}
