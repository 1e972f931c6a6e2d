//! The fundamental solution `r(s; a)` of the scalar delay equation
//! `r'(s) = a r(s - 1)`, with `r = 0` on `(-inf, 0)` and `r = 1` on `[0, 1)`.
//!
//! On `[k-1, k)` the solution is the polynomial `sum_{l<k} a^l/l! (s-l)^l`.
//! Expanding that sum directly cancels badly for large `s`, so each interval
//! stores its polynomial in the local variable `x = s - (k-1) ∈ [0, 1)`.
//! The local coefficients follow from integrating the previous interval:
//! `c_{k+1}[0] = r(k)` and `c_{k+1}[j+1] = a c_k[j] / (j+1)`. No factorial is
//! ever formed, so nothing overflows for large `k`.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};

pub const DEFAULT_MAX_INTERVAL: usize = 40;
const MAX_INTERVAL_CAP: usize = 200_000;
/// Samples per unit window when searching for the window maximum of |r|.
const WINDOW_SAMPLES: usize = 128;
const DEFAULT_FIT: (f64, f64) = (5.0, 25.0);

/// `|r(s)| <= c·exp(-lambda·s)`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DecayEnvelope {
    pub c: f64,
    pub lambda: f64,
}

impl DecayEnvelope {
    pub fn at(&self, s: f64) -> f64 {
        self.c * (-self.lambda * s).exp()
    }

    /// `sum_{j>=0} envelope(s0 + j)`.
    pub fn tail_sum(&self, s0: f64) -> f64 {
        self.at(s0) / (1.0 - (-self.lambda).exp())
    }
}

#[derive(Debug)]
pub struct FundamentalSolution {
    a: f64,
    /// `coeffs[k-1]` holds the local polynomial on `[k-1, k)`.
    coeffs: Vec<Vec<f64>>,
    decay: Option<DecayEnvelope>,
    grid_cache: RwLock<HashMap<u32, Arc<[f64]>>>,
}

impl Clone for FundamentalSolution {
    fn clone(&self) -> Self {
        Self {
            a: self.a,
            coeffs: self.coeffs.clone(),
            decay: self.decay,
            grid_cache: RwLock::new(HashMap::new()),
        }
    }
}

pub fn check_coefficient(a: f64) -> Result<()> {
    if a.is_finite() && a > -1.0 && a < 0.0 {
        Ok(())
    } else {
        Err(Error::CoefficientOutOfRange(a))
    }
}

impl FundamentalSolution {
    /// Builds the coefficient table for `max_interval` unit intervals and, when
    /// the table is long enough, fits the decay envelope.
    pub fn build(a: f64, max_interval: usize) -> Result<Self> {
        check_coefficient(a)?;
        if max_interval == 0 || max_interval > MAX_INTERVAL_CAP {
            return Err(Error::invalid(format!(
                "max_interval must be in 1..={MAX_INTERVAL_CAP}, got {max_interval}"
            )));
        }
        let mut coeffs: Vec<Vec<f64>> = Vec::with_capacity(max_interval);
        coeffs.push(vec![1.0]);
        for _ in 1..max_interval {
            let prev = coeffs.last().expect("non-empty");
            let mut next = Vec::with_capacity(prev.len() + 1);
            next.push(prev.iter().sum::<f64>());
            for (j, c) in prev.iter().enumerate() {
                next.push(a * c / (j + 1) as f64);
            }
            // drop coefficients that have decayed below the normal range
            while next.len() > 1 && next.last().is_some_and(|c| c.abs() < f64::MIN_POSITIVE) {
                next.pop();
            }
            coeffs.push(next);
        }
        let mut fs = Self {
            a,
            coeffs,
            decay: None,
            grid_cache: RwLock::new(HashMap::new()),
        };
        let hi = DEFAULT_FIT.1.min(max_interval as f64);
        if hi - DEFAULT_FIT.0 >= 5.0 {
            let fitted = fs.estimate_decay(DEFAULT_FIT.0, hi)?;
            // widen c so the envelope covers every tabulated window s >= 1
            let c = fs.envelope_constant(fitted.lambda, 1.0, max_interval as f64);
            fs.decay = Some(DecayEnvelope {
                c: c.max(fitted.c),
                lambda: fitted.lambda,
            });
        }
        Ok(fs)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn max_interval(&self) -> usize {
        self.coeffs.len()
    }

    pub fn decay(&self) -> Option<DecayEnvelope> {
        self.decay
    }

    pub fn with_decay(mut self, decay: DecayEnvelope) -> Self {
        self.decay = Some(decay);
        self
    }

    /// Local coefficients on `[k-1, k)`, `k >= 1`.
    pub fn interval_coefficients(&self, k: usize) -> Option<&[f64]> {
        self.coeffs.get(k.checked_sub(1)?).map(Vec::as_slice)
    }

    #[inline]
    fn horner(c: &[f64], x: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
    }

    /// `r(s)`; zero for `s < 0` and beyond the tabulated range.
    pub fn eval(&self, s: f64) -> f64 {
        if !(s >= 0.0) {
            return 0.0;
        }
        let k = s.floor();
        match self.coeffs.get(k as usize) {
            Some(c) => Self::horner(c, s - k),
            None => 0.0,
        }
    }

    /// Left limit `r(s-)`. Differs from [`eval`](Self::eval) only at `s = 0`.
    pub fn eval_left(&self, s: f64) -> f64 {
        if !(s > 0.0) {
            return 0.0;
        }
        let k = s.ceil();
        match self.coeffs.get(k as usize - 1) {
            Some(c) => Self::horner(c, s - (k - 1.0)),
            None => 0.0,
        }
    }

    /// Upper bound on `|r(s)|` beyond the tabulated range, from the envelope.
    pub fn tail_magnitude(&self, s: f64) -> Option<f64> {
        self.decay.map(|d| d.at(s))
    }

    /// `r(i / n)` for `i = 0..=max_interval·n`, cached per grid.
    pub fn grid_values(&self, steps_per_unit: u32) -> Arc<[f64]> {
        if let Some(t) = self
            .grid_cache
            .read()
            .expect("cache poisoned")
            .get(&steps_per_unit)
        {
            return Arc::clone(t);
        }
        let n = steps_per_unit as usize;
        let mut table = Vec::with_capacity(self.coeffs.len() * n + 1);
        for c in &self.coeffs {
            for i in 0..n {
                table.push(Self::horner(c, i as f64 / n as f64));
            }
        }
        table.push(self.eval(self.coeffs.len() as f64));
        let table: Arc<[f64]> = table.into();
        self.grid_cache
            .write()
            .expect("cache poisoned")
            .insert(steps_per_unit, Arc::clone(&table));
        table
    }

    /// Maximum of `|r(k-) - r(k+)|` relative to `max(1, |r(k)|)` over the
    /// interior integers `k = 1..max_interval-1`.
    pub fn continuity_defect(&self) -> f64 {
        self.coeffs
            .windows(2)
            .map(|w| {
                let left = Self::horner(&w[0], 1.0);
                let right = w[1][0];
                (left - right).abs() / right.abs().max(1.0)
            })
            .fold(0.0, f64::max)
    }

    /// Maximum over the grid `s ∈ [0, s_max]` of
    /// `|r(s) - 1 - a·Trap(∫_0^s r(u-1) 1{u>=1} du)|`.
    ///
    /// The integrand jumps at `u = 1`; each trapezoid cell uses one-sided
    /// limits so the rule stays second order.
    pub fn verify_renewal_residual(&self, s_max: f64, dt: f64) -> Result<f64> {
        let n = crate::grid::steps_per_unit(dt)?;
        if n < 2 {
            return Err(Error::InvalidStep(dt));
        }
        let steps = (s_max * n as f64).floor() as i64;
        let h = 1.0 / n as f64;
        let mut integral = 0.0;
        let mut worst: f64 = (self.eval(0.0) - 1.0).abs();
        for i in 0..steps {
            let u0 = i as f64 * h;
            let u1 = (i + 1) as f64 * h;
            // integrand at the cell's left end, limit from the right
            let f0 = if u0 >= 1.0 { self.eval(u0 - 1.0) } else { 0.0 };
            // at the right end, limit from the left
            let f1 = if u1 > 1.0 {
                self.eval_left(u1 - 1.0)
            } else {
                0.0
            };
            integral += 0.5 * h * (f0 + f1);
            let residual = (self.eval(u1) - 1.0 - self.a * integral).abs();
            worst = worst.max(residual);
        }
        Ok(worst)
    }

    /// Maxima of `|r|` over consecutive unit windows `[s_min + i, s_min + i + 1]`.
    fn window_maxima(&self, s_min: f64, s_max: f64) -> Vec<(f64, f64)> {
        let count = (s_max - s_min).floor() as usize;
        (0..count)
            .map(|i| {
                let lo = s_min + i as f64;
                let m = (0..=WINDOW_SAMPLES)
                    .map(|j| self.eval(lo + j as f64 / WINDOW_SAMPLES as f64).abs())
                    .fold(0.0, f64::max);
                (lo + 1.0, m)
            })
            .collect()
    }

    fn envelope_constant(&self, lambda: f64, s_min: f64, s_max: f64) -> f64 {
        self.window_maxima(s_min, s_max)
            .into_iter()
            .map(|(right, m)| m * (lambda * right).exp())
            .fold(0.0, f64::max)
    }

    /// Fits `|r(s)| <= C e^{-lambda s}` on `[s_min, s_max]`.
    ///
    /// `lambda` is the least-squares slope of the log of the running (suffix)
    /// maximum of the unit-window maxima; `C` is then the smallest constant
    /// that bounds every window of the fit range with that slope.
    pub fn estimate_decay(&self, s_min: f64, s_max: f64) -> Result<DecayEnvelope> {
        if !(s_max - s_min >= 5.0) || s_min < 0.0 {
            return Err(Error::DecayFit(format!(
                "fit window [{s_min}, {s_max}] must have length >= 5 and start at s >= 0"
            )));
        }
        if s_max > self.max_interval() as f64 {
            return Err(Error::DecayFit(format!(
                "fit window ends at {s_max} beyond the tabulated range {}",
                self.max_interval()
            )));
        }
        let maxima = self.window_maxima(s_min, s_max);
        let mut running = 0.0_f64;
        let mut points: Vec<(f64, f64)> = maxima
            .iter()
            .rev()
            .map(|&(s, m)| {
                running = running.max(m);
                (s, running)
            })
            .filter(|&(_, m)| m > 0.0)
            .map(|(s, m)| (s, m.ln()))
            .collect();
        points.reverse();
        if points.len() < 2 {
            return Err(Error::DecayFit("|r| underflows on the fit window".into()));
        }
        let k = points.len() as f64;
        let mean_s = points.iter().map(|p| p.0).sum::<f64>() / k;
        let mean_y = points.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = points.iter().map(|p| (p.0 - mean_s) * (p.1 - mean_y)).sum();
        let sxx: f64 = points.iter().map(|p| (p.0 - mean_s).powi(2)).sum();
        let lambda = -sxy / sxx;
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::DecayFit(format!("non-positive decay rate {lambda}")));
        }
        let c = self.envelope_constant(lambda, s_min, s_max);
        Ok(DecayEnvelope { c, lambda })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_inputs() {
        assert!(FundamentalSolution::build(0.0, 10).is_err());
        assert!(FundamentalSolution::build(-1.0, 10).is_err());
        assert!(FundamentalSolution::build(0.3, 10).is_err());
        assert!(FundamentalSolution::build(f64::NAN, 10).is_err());
        assert!(FundamentalSolution::build(-0.5, 0).is_err());
    }

    #[test]
    fn point_values() {
        let fs = FundamentalSolution::build(-0.5, DEFAULT_MAX_INTERVAL).unwrap();
        assert_eq!(fs.eval(-1.0), 0.0);
        assert_eq!(fs.eval(-3.2), 0.0);
        assert_eq!(fs.eval(0.5), 1.0);
        assert_eq!(fs.eval(0.999), 1.0);
        assert!((fs.eval(1.5) - 0.75).abs() < 1e-15);
        assert!((fs.eval(2.0) - 0.5).abs() < 1e-15);
        assert!((fs.eval(2.5) - 0.28125).abs() < 1e-15);
        // left limit of the k = 2 polynomial at s = 2
        assert!((fs.eval_left(2.0) - 0.5).abs() < 1e-15);
        assert_eq!(fs.eval_left(0.0), 0.0);
        assert_eq!(fs.eval(0.0), 1.0);
    }

    #[test]
    fn short_renewal_window_is_exact() {
        let fs = FundamentalSolution::build(-0.5, 5).unwrap();
        assert_eq!(fs.verify_renewal_residual(0.9, 1e-3).unwrap(), 0.0);
        assert!(fs.decay().is_none());
    }

    #[test]
    fn large_tables_stay_finite() {
        let fs = FundamentalSolution::build(-0.99, 600).unwrap();
        assert!(fs.continuity_defect() < 1e-12);
        for s in [100.5, 250.25, 599.9] {
            assert!(fs.eval(s).is_finite());
        }
        assert_eq!(fs.eval(700.0), 0.0);
    }

    #[test]
    fn grid_table_matches_eval() {
        let fs = FundamentalSolution::build(-0.9, 12).unwrap();
        let t = fs.grid_values(16);
        assert_eq!(t.len(), 12 * 16 + 1);
        for (i, v) in t.iter().enumerate().step_by(7) {
            assert_eq!(*v, fs.eval(i as f64 / 16.0));
        }
        assert!(Arc::ptr_eq(&t, &fs.grid_values(16)));
    }

    #[test]
    fn underflowing_window_fails_fit() {
        let fs = FundamentalSolution::build(-0.5, 6).unwrap();
        assert!(matches!(
            fs.estimate_decay(0.0, 3.0),
            Err(Error::DecayFit(_))
        ));
        assert!(matches!(
            fs.estimate_decay(0.0, 10.0),
            Err(Error::DecayFit(_))
        ));
    }
}
