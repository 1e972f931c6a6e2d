//! Integrated-equation residuals used as quadrature oracles.
//!
//! For a delay path, `R(t) = X_t - X_{t0} - a·Trap(∫_{t0}^t (X_{v-1} + b) dv) - (W_t - W_{t0})`.
//! The anchored residual is `max |R(t)|`; the residual over all grid pairs
//! `(s, t)` is `max R - min R`, since `R(t) - R(s)` is the residual of the
//! equation integrated over `[s, t]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{align, GridPath};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub anchored: f64,
    pub pairwise: f64,
}

fn residual_with_lag(
    x: &GridPath,
    w: &GridPath,
    drift: f64,
    lag_units: i64,
    b: f64,
    t0: f64,
    t1: f64,
) -> Result<Residual> {
    let n = x.steps_per_unit();
    if w.steps_per_unit() != n {
        return Err(Error::GridMismatch(n, w.steps_per_unit()));
    }
    let k0 = align(t0, n)?;
    let k1 = align(t1, n)?;
    if k1 <= k0 {
        return Err(Error::invalid(format!(
            "empty residual window [{t0}, {t1}]"
        )));
    }
    let lag = lag_units * n as i64;
    let (lo, hi) = (k0.min(k0 + lag), k1.max(k1 + lag));
    if !x.contains_index(lo) || !x.contains_index(hi) {
        return Err(x.exhausted(lo as f64 / n as f64, hi as f64 / n as f64));
    }
    w.require(t0, t1)?;
    let half = 0.5 / n as f64;
    let x0 = x.at(k0);
    let mut integral = 0.0;
    let (mut lo_r, mut hi_r, mut worst) = (0.0_f64, 0.0_f64, 0.0_f64);
    for k in k0..k1 {
        integral += half * (x.at(k + lag) + x.at(k + 1 + lag) + 2.0 * b);
        let r = x.at(k + 1) - x0 - drift * integral - w.diff(k + 1, k0);
        worst = worst.max(r.abs());
        lo_r = lo_r.min(r);
        hi_r = hi_r.max(r);
    }
    Ok(Residual {
        anchored: worst,
        pairwise: hi_r - lo_r,
    })
}

/// Residual of `dX = a (X_{s-1} + b) ds + dW` on `[t0, t1]`; returns the anchored value.
pub fn delay_residual(x: &GridPath, w: &GridPath, a: f64, b: f64, t0: f64, t1: f64) -> Result<f64> {
    Ok(residual_with_lag(x, w, a, -1, b, t0, t1)?.anchored)
}

pub fn delay_residual_full(
    x: &GridPath,
    w: &GridPath,
    a: f64,
    b: f64,
    t0: f64,
    t1: f64,
) -> Result<Residual> {
    residual_with_lag(x, w, a, -1, b, t0, t1)
}

/// Residual of `dX = -a (X_{s+1} + b) ds + dW` on `[t0, t1]`.
pub fn anticipation_residual_full(
    x: &GridPath,
    w: &GridPath,
    a: f64,
    b: f64,
    t0: f64,
    t1: f64,
) -> Result<Residual> {
    residual_with_lag(x, w, -a, 1, b, t0, t1)
}
