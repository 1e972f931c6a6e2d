//! Uniform time grids whose step divides the unit delay.
//!
//! Times are stored as integer grid indices (`t = index / steps_per_unit`),
//! so a delay of one unit is always an exact shift of `steps_per_unit`
//! indices. A path keeps a scalar `level` apart from its values: the value
//! at index `k` is `rel[k] + level`. Adding a constant to a path only touches
//! the level, which makes every increment of the path bit-for-bit invariant
//! under constant shifts.

use crate::error::{Error, Result};

const ALIGN_EPS: f64 = 1e-9;

/// Validates `dt = 1/n` and returns `n`.
pub fn steps_per_unit(dt: f64) -> Result<u32> {
    if !(dt.is_finite() && dt > 0.0 && dt <= 1.0) {
        return Err(Error::InvalidStep(dt));
    }
    let inv = 1.0 / dt;
    let n = inv.round();
    if (inv - n).abs() > ALIGN_EPS * n.max(1.0) || n < 1.0 || n > u32::MAX as f64 {
        return Err(Error::InvalidStep(dt));
    }
    Ok(n as u32)
}

/// Grid index of `t`, rejecting times that are not on the grid.
pub fn align(t: f64, steps_per_unit: u32) -> Result<i64> {
    let scaled = t * steps_per_unit as f64;
    let k = scaled.round();
    if !t.is_finite() || (scaled - k).abs() > ALIGN_EPS * k.abs().max(1.0) {
        return Err(Error::NotGridAligned {
            time: t,
            steps_per_unit,
        });
    }
    Ok(k as i64)
}

#[inline]
pub fn time_of(index: i64, steps_per_unit: u32) -> f64 {
    index as f64 / steps_per_unit as f64
}

/// A real function sampled on a uniform grid over `[t_left, t_right]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPath {
    start: i64,
    steps_per_unit: u32,
    level: f64,
    rel: Vec<f64>,
}

impl GridPath {
    pub fn new(t_left: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        let n = steps_per_unit(dt)?;
        let start = align(t_left, n)?;
        Self::from_indices(start, n, values)
    }

    pub fn from_indices(start: i64, steps_per_unit: u32, values: Vec<f64>) -> Result<Self> {
        Self::from_parts(start, steps_per_unit, 0.0, values)
    }

    pub(crate) fn from_parts(
        start: i64,
        steps_per_unit: u32,
        level: f64,
        rel: Vec<f64>,
    ) -> Result<Self> {
        if rel.len() < 2 {
            return Err(Error::invalid("a grid path needs at least two points"));
        }
        if steps_per_unit == 0 {
            return Err(Error::InvalidStep(f64::INFINITY));
        }
        Ok(Self {
            start,
            steps_per_unit,
            level,
            rel,
        })
    }

    pub fn steps_per_unit(&self) -> u32 {
        self.steps_per_unit
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.steps_per_unit as f64
    }

    pub fn len(&self) -> usize {
        self.rel.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rel.is_empty()
    }

    /// Grid index of the left endpoint.
    pub fn start_index(&self) -> i64 {
        self.start
    }

    /// Grid index of the right endpoint.
    pub fn end_index(&self) -> i64 {
        self.start + self.rel.len() as i64 - 1
    }

    pub fn t_left(&self) -> f64 {
        time_of(self.start, self.steps_per_unit)
    }

    pub fn t_right(&self) -> f64 {
        time_of(self.end_index(), self.steps_per_unit)
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn contains_index(&self, k: i64) -> bool {
        k >= self.start && k <= self.end_index()
    }

    pub fn index_of(&self, t: f64) -> Result<i64> {
        let k = align(t, self.steps_per_unit)?;
        if !self.contains_index(k) {
            return Err(self.exhausted(t, t));
        }
        Ok(k)
    }

    /// Checks that `[t0, t1]` lies inside the window.
    pub fn require(&self, t0: f64, t1: f64) -> Result<()> {
        let n = self.steps_per_unit as f64;
        if (t0 * n).round() < self.start as f64 - 0.5
            || (t1 * n).round() > self.end_index() as f64 + 0.5
        {
            return Err(self.exhausted(t0, t1));
        }
        Ok(())
    }

    pub(crate) fn exhausted(&self, t0: f64, t1: f64) -> Error {
        Error::WindowExhausted {
            need_left: t0,
            need_right: t1,
            have_left: self.t_left(),
            have_right: self.t_right(),
        }
    }

    /// Value at a global grid index. Panics outside the window.
    #[inline]
    pub fn at(&self, k: i64) -> f64 {
        self.rel[(k - self.start) as usize] + self.level
    }

    pub fn get(&self, k: i64) -> Option<f64> {
        self.contains_index(k).then(|| self.at(k))
    }

    /// `value(k1) - value(k0)` computed without the level, so it is unchanged
    /// bit for bit by [`GridPath::shift_constant`].
    #[inline]
    pub fn diff(&self, k1: i64, k0: i64) -> f64 {
        self.rel[(k1 - self.start) as usize] - self.rel[(k0 - self.start) as usize]
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        Ok(self.at(self.index_of(t)?))
    }

    pub fn values(&self) -> Vec<f64> {
        self.rel.iter().map(|v| v + self.level).collect()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (self.start..=self.end_index()).map(move |k| time_of(k, self.steps_per_unit))
    }

    /// Linear interpolation between grid values, for reporting only.
    pub fn interpolate(&self, t: f64) -> Option<f64> {
        let x = t * self.steps_per_unit as f64 - self.start as f64;
        if !(0.0..=(self.rel.len() - 1) as f64).contains(&x) {
            return None;
        }
        let i = (x.floor() as usize).min(self.rel.len() - 2);
        let frac = x - i as f64;
        Some(self.rel[i] + frac * (self.rel[i + 1] - self.rel[i]) + self.level)
    }

    /// `W + x·1`.
    pub fn shift_constant(&self, x: f64) -> GridPath {
        GridPath {
            level: self.level + x,
            ..self.clone()
        }
    }

    /// `v ↦ W(v - t)`, restricted to the part of the original window where
    /// the shifted path is defined.
    pub fn shift_time(&self, t: f64) -> Result<GridPath> {
        let shift = align(t, self.steps_per_unit)?;
        let lo = self.start.max(self.start + shift);
        let hi = self.end_index().min(self.end_index() + shift);
        if hi - lo + 1 < 2 {
            return Err(Error::WindowExhausted {
                need_left: self.t_left() + t,
                need_right: self.t_right() + t,
                have_left: self.t_left(),
                have_right: self.t_right(),
            });
        }
        let rel = (lo..=hi)
            .map(|k| self.rel[(k - shift - self.start) as usize])
            .collect();
        GridPath::from_parts(lo, self.steps_per_unit, self.level, rel)
    }

    /// `v ↦ W(-v)`.
    pub fn reverse_time(&self) -> GridPath {
        let mut rel = self.rel.clone();
        rel.reverse();
        GridPath {
            start: -self.end_index(),
            steps_per_unit: self.steps_per_unit,
            level: self.level,
            rel,
        }
    }

    pub fn restrict(&self, t0: f64, t1: f64) -> Result<GridPath> {
        let k0 = self.index_of(t0)?;
        let k1 = self.index_of(t1)?;
        if k1 - k0 < 1 {
            return Err(Error::invalid("restriction must keep at least two points"));
        }
        let rel = self.rel[(k0 - self.start) as usize..=(k1 - self.start) as usize].to_vec();
        GridPath::from_parts(k0, self.steps_per_unit, self.level, rel)
    }

    /// Keeps every `factor`-th grid point, giving the same path on the grid
    /// of step `factor·dt`. The window shrinks to the coarse-aligned part.
    pub fn coarsen(&self, factor: u32) -> Result<GridPath> {
        if factor == 0 || !self.steps_per_unit.is_multiple_of(factor) {
            return Err(Error::invalid(format!(
                "cannot coarsen 1/{} by {factor}",
                self.steps_per_unit
            )));
        }
        let f = factor as i64;
        let lo = self.start.div_euclid(f) + i64::from(self.start.rem_euclid(f) != 0);
        let hi = self.end_index().div_euclid(f);
        let rel: Vec<f64> = (lo..=hi)
            .map(|k| self.rel[(k * f - self.start) as usize])
            .collect();
        GridPath::from_parts(lo, self.steps_per_unit / factor, self.level, rel)
    }

    /// Pointwise `self - other` on the common window; the result has level 0.
    pub fn sub(&self, other: &GridPath) -> Result<GridPath> {
        self.zip_with(other, |x, y| x - y)
    }

    pub(crate) fn zip_with(
        &self,
        other: &GridPath,
        op: impl Fn(f64, f64) -> f64,
    ) -> Result<GridPath> {
        if self.steps_per_unit != other.steps_per_unit {
            return Err(Error::GridMismatch(
                self.steps_per_unit,
                other.steps_per_unit,
            ));
        }
        let lo = self.start.max(other.start);
        let hi = self.end_index().min(other.end_index());
        if hi - lo < 1 {
            return Err(Error::invalid("paths do not overlap"));
        }
        let values = (lo..=hi).map(|k| op(self.at(k), other.at(k))).collect();
        GridPath::from_indices(lo, self.steps_per_unit, values)
    }

    /// Maximum of `|self - other|` over the common window.
    pub fn sup_distance(&self, other: &GridPath) -> Result<f64> {
        let d = self.sub(other)?;
        Ok(d.rel.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
    }
}
