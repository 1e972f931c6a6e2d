//! Method of steps for `dX_s = a X_{s-1} ds + dW_s`, `s >= 0`, started from a
//! segment on `[-1, 0]`, together with the semigroup `T_s` and the stochastic
//! convolution `I(s, W)` that express the same solution as
//! `X_{s+u} = (T_s f)(u) + (I(s, W))(u)`.

use crate::error::{Error, Result};
use crate::fundamental::FundamentalSolution;
use crate::grid::{align, time_of, GridPath};

/// A function on `[-1, 0]` sampled at `steps_per_unit + 1` grid points.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentFunction {
    steps_per_unit: u32,
    values: Vec<f64>,
}

impl SegmentFunction {
    pub fn new(steps_per_unit: u32, values: Vec<f64>) -> Result<Self> {
        if steps_per_unit == 0 || values.len() != steps_per_unit as usize + 1 {
            return Err(Error::invalid(format!(
                "segment on 1/{steps_per_unit} grid needs {} values, got {}",
                steps_per_unit as usize + 1,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("segment values must be finite"));
        }
        Ok(Self {
            steps_per_unit,
            values,
        })
    }

    pub fn from_fn(steps_per_unit: u32, f: impl Fn(f64) -> f64) -> Result<Self> {
        let n = steps_per_unit as i64;
        Self::new(
            steps_per_unit,
            (-n..=0).map(|k| f(time_of(k, steps_per_unit))).collect(),
        )
    }

    pub fn constant(steps_per_unit: u32, c: f64) -> Result<Self> {
        Self::from_fn(steps_per_unit, |_| c)
    }

    pub fn zero(steps_per_unit: u32) -> Result<Self> {
        Self::constant(steps_per_unit, 0.0)
    }

    /// The part of `path` on `[t0 - 1, t0]`, as a segment.
    pub fn from_path(path: &GridPath, t0: f64) -> Result<Self> {
        let n = path.steps_per_unit();
        let k1 = path.index_of(t0)?;
        let k0 = k1 - n as i64;
        if !path.contains_index(k0) {
            return Err(path.exhausted(t0 - 1.0, t0));
        }
        Self::new(n, (k0..=k1).map(|k| path.at(k)).collect())
    }

    pub fn steps_per_unit(&self) -> u32 {
        self.steps_per_unit
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at `u ∈ [-1, 0]`.
    pub fn at(&self, u: f64) -> Result<f64> {
        let k = align(u, self.steps_per_unit)?;
        let i = k + self.steps_per_unit as i64;
        if !(0..=self.steps_per_unit as i64).contains(&i) {
            return Err(Error::invalid(format!("{u} lies outside [-1, 0]")));
        }
        Ok(self.values[i as usize])
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn add(&self, other: &SegmentFunction) -> Result<SegmentFunction> {
        if self.steps_per_unit != other.steps_per_unit {
            return Err(Error::GridMismatch(
                self.steps_per_unit,
                other.steps_per_unit,
            ));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x + y)
            .collect();
        Self::new(self.steps_per_unit, values)
    }
}

/// The trapezoid recursion shared by the stochastic and deterministic solves.
/// `noise(i)` is the driver increment over `[i dt, (i+1) dt]`.
fn step_through(
    f: &SegmentFunction,
    a: f64,
    steps: usize,
    noise: impl Fn(usize) -> f64,
) -> Vec<f64> {
    let n = f.steps_per_unit as usize;
    let half = 0.5 / n as f64;
    let mut x = Vec::with_capacity(n + steps + 1);
    x.extend_from_slice(&f.values);
    for i in 0..steps {
        let idx = n + i;
        let drift = a * half * (x[idx - n] + x[idx + 1 - n]);
        x.push(x[idx] + drift + noise(i));
    }
    x
}

/// Solves the initial-segment problem on `[-1, t_end]`.
pub fn solve_forward(f: &SegmentFunction, w: &GridPath, a: f64, t_end: f64) -> Result<GridPath> {
    let n = f.steps_per_unit;
    if w.steps_per_unit() != n {
        return Err(Error::GridMismatch(n, w.steps_per_unit()));
    }
    let end = align(t_end, n)?;
    if end < 0 {
        return Err(Error::invalid(format!("t_end = {t_end} must be >= 0")));
    }
    w.require(0.0, t_end)?;
    let x = step_through(f, a, end as usize, |i| w.diff(i as i64 + 1, i as i64));
    GridPath::from_indices(-(n as i64), n, x)
}

/// The deterministic solve of `g' = a g(. - 1)` from `f`, on `[-1, t_end]`.
pub fn solve_deterministic(f: &SegmentFunction, a: f64, t_end: f64) -> Result<GridPath> {
    let n = f.steps_per_unit;
    let end = align(t_end, n)?;
    if end < 0 {
        return Err(Error::invalid(format!("t_end = {t_end} must be >= 0")));
    }
    let x = step_through(f, a, end as usize, |_| 0.0);
    GridPath::from_indices(-(n as i64), n, x)
}

/// `u ↦ (T_s f)(u) = g(s + u)`.
pub fn semigroup_apply(f: &SegmentFunction, s: f64, a: f64) -> Result<SegmentFunction> {
    let n = f.steps_per_unit;
    let ks = align(s, n)?;
    if ks < 0 {
        return Err(Error::invalid(format!("semigroup time {s} must be >= 0")));
    }
    if ks == 0 {
        return Ok(f.clone());
    }
    let g = solve_deterministic(f, a, s)?;
    SegmentFunction::from_path(&g, s)
}

/// Left-point Itô sum for `∫_0^{s+u} r(s + u - v) dW_v`; zero when `s + u <= 0`.
pub fn stochastic_convolution(
    w: &GridPath,
    fs: &FundamentalSolution,
    s: f64,
    u: f64,
) -> Result<f64> {
    let n = w.steps_per_unit();
    let m = align(s, n)? + align(u, n)?;
    if m <= 0 {
        return Ok(0.0);
    }
    w.require(0.0, time_of(m, n))?;
    let table = fs.grid_values(n);
    let r = |j: i64| -> f64 {
        table
            .get(j as usize)
            .copied()
            .unwrap_or_else(|| fs.eval(time_of(j, n)))
    };
    Ok((0..m).map(|i| r(m - i) * w.diff(i + 1, i)).sum())
}

/// Maximum over grid `(s, u)`, `s ∈ [0, t_end]`, `u ∈ [-1, 0]`, of
/// `|X_{s+u} - (T_s f)(u) - (I(s, W))(u)|`.
pub fn verify_variation_of_constants(
    f: &SegmentFunction,
    w: &GridPath,
    fs: &FundamentalSolution,
    t_end: f64,
) -> Result<f64> {
    let a = fs.a();
    let n = f.steps_per_unit;
    let x = solve_forward(f, w, a, t_end)?;
    let end = align(t_end, n)?;
    let mut worst = 0.0_f64;
    for ks in 0..=end {
        let s = time_of(ks, n);
        let ts = semigroup_apply(f, s, a)?;
        for (j, tsu) in ts.values.iter().enumerate() {
            let ku = j as i64 - n as i64;
            let conv = stochastic_convolution(w, fs, s, time_of(ku, n))?;
            let dev = (x.at(ks + ku) - tsu - conv).abs();
            worst = worst.max(dev);
        }
    }
    Ok(worst)
}

/// `max_t |X_t - X_0 - a·Trap(∫_0^t X_{v-1} dv) - (W_t - W_0)|` over `[0, t_end]`.
pub fn integrated_residual(x: &GridPath, w: &GridPath, a: f64, t_end: f64) -> Result<f64> {
    crate::residual::delay_residual(x, w, a, 0.0, 0.0, t_end)
}
