//! One delay or anticipating realization on a configured output window.

use serde::Serialize;

use crate::assembly::{assemble, AssemblyParams, ProcessKind, RealizationDiagnostics};
use crate::error::Result;
use crate::grid::GridPath;
use crate::harness::config::RunConfig;
use crate::harness::window::{fundamental_for, resolve_window, WindowPlan};
use crate::path_sampler::sample_w;
use crate::residual::Residual;

#[derive(Clone, Debug, Serialize)]
pub struct Simulation {
    pub kind: ProcessKind,
    pub window: WindowPlan,
    pub b0: f64,
    pub diagnostics: RealizationDiagnostics,
    /// Residual of the process equation where it is fully inside the output window.
    pub residual: Option<Residual>,
    pub residual_window: [f64; 2],
    #[serde(skip)]
    pub w: GridPath,
    #[serde(skip)]
    pub x: GridPath,
}

impl Simulation {
    pub fn times(&self) -> Vec<f64> {
        self.x.times().collect()
    }

    /// `A = X - W` on the output window.
    pub fn a_values(&self) -> Vec<f64> {
        self.x
            .values()
            .iter()
            .zip(self.w.values())
            .map(|(x, w)| x - w)
            .collect()
    }
}

/// Samples the driver on the planned window and assembles the process of
/// `cfg.kind`, restricted to `[cfg.t_left, cfg.t_end]`.
pub fn simulate(cfg: &RunConfig) -> Result<Simulation> {
    cfg.validate()?;
    let kind = cfg.process_kind()?;
    let plan = resolve_window(cfg, kind)?;
    let fs = fundamental_for(cfg.a, cfg.tol, cfg.t_end.max(-cfg.t_left).max(1.0))?;
    let w = sample_w(
        plan.t_left_required,
        plan.t_right_required,
        cfg.dt,
        &cfg.measure()?,
        cfg.seed,
    )?;
    let (lo, hi) = match kind {
        ProcessKind::Delay => (cfg.t_left.min(-1.0), cfg.t_end),
        ProcessKind::Anticipation => (cfg.t_left, cfg.t_end.max(1.0)),
    };
    let params = AssemblyParams {
        tol: cfg.tol,
        k_f: cfg.k_f,
        t_left: lo,
        t_right: hi,
    };
    let pr = assemble(kind, &w, &fs, &params)?;
    // the residual reads one unit behind (delay) or ahead (anticipation)
    let (r0, r1) = match kind {
        ProcessKind::Delay => (cfg.t_left + 1.0, cfg.t_end),
        ProcessKind::Anticipation => (cfg.t_left, cfg.t_end - 1.0),
    };
    let residual = if r1 > r0 {
        Some(pr.residual(r0, r1)?)
    } else {
        None
    };
    Ok(Simulation {
        kind,
        window: plan,
        b0: pr.b0,
        diagnostics: pr.diagnostics.clone(),
        residual,
        residual_window: [r0, r1],
        w: pr.w.restrict(cfg.t_left, cfg.t_end)?,
        x: pr.x.restrict(cfg.t_left, cfg.t_end)?,
    })
}
