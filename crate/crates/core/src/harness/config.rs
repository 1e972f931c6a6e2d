//! Run configuration: defaults, JSON config files and command-line overrides.
//!
//! Precedence is flags > config file > defaults. Every field of the JSON
//! file is optional and named as in [`RunConfig`]:
//!
//! ```json
//! { "a": -0.5, "dt": 0.00390625, "tol": 1e-8, "k_f": 25,
//!   "t_left": -6.0, "t_end": 6.0, "seed": 1, "n": 100000,
//!   "mean": 0.0, "stddev": 1.0, "kind": "delay", "t": 0.5,
//!   "functional": "f1", "workers": 4, "emit": "csv", "shifts": [1.0] }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assembly::ProcessKind;
use crate::error::{Error, Result};
use crate::fundamental::check_coefficient;
use crate::grid::{align, steps_per_unit};
use crate::left_tail::{DEFAULT_K_F, DEFAULT_TOL};
use crate::measure_change::{FunctionalKind, SampleKind};
use crate::path_sampler::MeasureModel;

pub const WORKERS_ENV: &str = "TWOSIDED_OU_WORKERS";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Emit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Emit::Csv),
            "json" => Ok(Emit::Json),
            other => Err(Error::invalid(format!("unknown output format '{other}'"))),
        }
    }
}

/// Fully resolved settings of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub a: f64,
    pub dt: f64,
    pub tol: f64,
    pub k_f: usize,
    pub t_left: f64,
    pub t_end: f64,
    pub seed: u64,
    pub n: usize,
    pub mean: f64,
    pub stddev: f64,
    pub kind: SampleKind,
    /// Time shift for density runs.
    pub t: f64,
    pub functional: FunctionalKind,
    pub workers: usize,
    pub emit: Emit,
    /// Homogeneity shifts the driver window must also support.
    pub shifts: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            a: -0.5,
            dt: 1.0 / 256.0,
            tol: DEFAULT_TOL,
            k_f: DEFAULT_K_F,
            t_left: -6.0,
            t_end: 6.0,
            seed: 1,
            n: 100_000,
            mean: 0.0,
            stddev: 1.0,
            kind: SampleKind::Delay,
            t: 0.5,
            functional: FunctionalKind::F1,
            workers: default_workers(),
            emit: Emit::Csv,
            shifts: Vec::new(),
        }
    }
}

/// Worker count from the environment, or 1.
pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&w: &usize| w > 0)
        .unwrap_or(1)
}

/// A set of overrides; `None` keeps the lower-precedence value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub a: Option<f64>,
    pub dt: Option<f64>,
    pub tol: Option<f64>,
    pub k_f: Option<usize>,
    pub t_left: Option<f64>,
    pub t_end: Option<f64>,
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub mean: Option<f64>,
    pub stddev: Option<f64>,
    pub kind: Option<SampleKind>,
    pub t: Option<f64>,
    pub functional: Option<FunctionalKind>,
    pub workers: Option<usize>,
    pub emit: Option<Emit>,
    pub shifts: Option<Vec<f64>>,
}

impl ConfigOverrides {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
    }
}

macro_rules! overlay {
    ($cfg:ident, $o:ident, $($f:ident),*) => {
        $(if let Some(v) = $o.$f.clone() { $cfg.$f = v; })*
    };
}

impl RunConfig {
    /// `defaults <- file <- flags`, then validation.
    pub fn resolve(file: Option<&ConfigOverrides>, flags: &ConfigOverrides) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(f) = file {
            cfg.apply(f);
        }
        cfg.apply(flags);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &ConfigOverrides) {
        overlay!(
            self, o, a, dt, tol, k_f, t_left, t_end, seed, n, mean, stddev, kind, t, functional,
            workers, emit, shifts
        );
    }

    pub fn validate(&self) -> Result<()> {
        check_coefficient(self.a)?;
        let n = steps_per_unit(self.dt)?;
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::invalid(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.k_f == 0 {
            return Err(Error::invalid("k_f must be >= 1"));
        }
        for (name, t) in [
            ("t_left", self.t_left),
            ("t_end", self.t_end),
            ("t", self.t),
        ] {
            align(t, n).map_err(|_| Error::invalid(format!("{name} = {t} is not on the grid")))?;
        }
        for v in &self.shifts {
            align(*v, n).map_err(|_| Error::invalid(format!("shift {v} is not on the grid")))?;
        }
        if self.t_left >= 0.0 || self.t_end <= 0.0 {
            return Err(Error::invalid(format!(
                "window [{}, {}] must straddle 0",
                self.t_left, self.t_end
            )));
        }
        if self.n == 0 {
            return Err(Error::invalid("n must be >= 1"));
        }
        if self.workers == 0 {
            return Err(Error::invalid("workers must be >= 1"));
        }
        self.measure().map(|_| ())
    }

    pub fn measure(&self) -> Result<MeasureModel> {
        MeasureModel::gaussian(self.mean, self.stddev)
    }

    pub fn process_kind(&self) -> Result<ProcessKind> {
        match self.kind {
            SampleKind::Delay => Ok(ProcessKind::Delay),
            SampleKind::Anticipation => Ok(ProcessKind::Anticipation),
            SampleKind::Bm => Err(Error::invalid("a constructed process kind is required")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beat_defaults() {
        let file: ConfigOverrides = serde_json::from_str(r#"{"a": -0.9, "seed": 5}"#).unwrap();
        let flags = ConfigOverrides {
            seed: Some(9),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(Some(&file), &flags).unwrap();
        assert_eq!(cfg.a, -0.9);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.dt, 1.0 / 256.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<ConfigOverrides>(r#"{"alpha": 1}"#).is_err());
    }

    #[test]
    fn misaligned_times_are_rejected() {
        let flags = ConfigOverrides {
            t_end: Some(1.0 / 3.0),
            ..Default::default()
        };
        assert!(RunConfig::resolve(None, &flags).is_err());
    }
}
