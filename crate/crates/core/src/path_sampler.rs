//! Two-sided Brownian motion with a random value at time zero.
//!
//! Random numbers are keyed, never sequenced: the increments on the unit
//! block `[j, j+1)` to the right of zero come from their own ChaCha stream,
//! and so do the blocks to the left and the initial value. A path sampled on
//! a larger window therefore agrees with one sampled on a smaller window
//! wherever both are defined, and sampling in parallel cannot change a path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{align, steps_per_unit, GridPath};

/// A strictly positive, continuously differentiable probability density on
/// the real line, used as the law of `W_0`.
pub trait InitialDensity: Send + Sync {
    fn log_density(&self, x: f64) -> f64;

    fn density(&self, x: f64) -> f64 {
        self.log_density(x).exp()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64
    where
        Self: Sized;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MeasureFamily {
    #[default]
    Gaussian,
}

/// The law of `W_0`. Only the Gaussian family is provided.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureModel {
    pub family: MeasureFamily,
    pub mean: f64,
    pub stddev: f64,
}

impl MeasureModel {
    pub fn gaussian(mean: f64, stddev: f64) -> Result<Self> {
        if !(mean.is_finite() && stddev.is_finite() && stddev > 0.0) {
            return Err(Error::invalid(format!(
                "gaussian measure needs finite mean and stddev > 0, got ({mean}, {stddev})"
            )));
        }
        Ok(Self {
            family: MeasureFamily::Gaussian,
            mean,
            stddev,
        })
    }

    pub fn standard() -> Self {
        Self::gaussian(0.0, 1.0).expect("valid")
    }
}

impl InitialDensity for MeasureModel {
    fn log_density(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.stddev;
        -0.5 * z * z - self.stddev.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Normal::new(self.mean, self.stddev)
            .expect("validated parameters")
            .sample(rng)
    }
}

const STREAM_W0: u64 = 0;

fn right_stream(block: u64) -> u64 {
    1 + 2 * block
}

fn left_stream(block: u64) -> u64 {
    2 + 2 * block
}

fn keyed_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer; derives per-sample seeds from `(base, index)`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fills `out[i]` with the walk `W_{±(i+1)dt} - W_0` for one side, block by block.
fn walk_side(seed: u64, side_right: bool, n: usize, steps: usize, out: &mut Vec<f64>) {
    let sd = (1.0 / n as f64).sqrt();
    let mut acc = 0.0;
    let blocks = steps.div_ceil(n);
    for b in 0..blocks {
        let stream = if side_right {
            right_stream(b as u64)
        } else {
            left_stream(b as u64)
        };
        let mut rng = keyed_rng(seed, stream);
        let take = n.min(steps - b * n);
        for _ in 0..take {
            let z: f64 = StandardNormal.sample(&mut rng);
            acc += sd * z;
            out.push(acc);
        }
    }
}

/// Samples `W` on `[t_left, t_right]`, `t_left < 0 < t_right`.
pub fn sample_w(
    t_left: f64,
    t_right: f64,
    dt: f64,
    measure: &MeasureModel,
    seed: u64,
) -> Result<GridPath> {
    let n = steps_per_unit(dt)?;
    let lo = align(t_left, n)?;
    let hi = align(t_right, n)?;
    if !(lo < 0 && hi > 0) {
        return Err(Error::invalid(format!(
            "sampling window [{t_left}, {t_right}] must straddle 0"
        )));
    }
    let mut left = Vec::with_capacity((-lo) as usize);
    walk_side(seed, false, n as usize, (-lo) as usize, &mut left);
    let mut rel = Vec::with_capacity((hi - lo + 1) as usize);
    rel.extend(left.iter().rev());
    rel.push(0.0);
    walk_side(seed, true, n as usize, hi as usize, &mut rel);
    let w0 = measure.sample(&mut keyed_rng(seed, STREAM_W0));
    GridPath::from_parts(lo, n, w0, rel)
}

/// Forces `W_0 = c`. Exact for sampled paths, whose relative part vanishes at 0.
pub fn set_w0_override(w: &mut GridPath, c: f64) -> Result<()> {
    let k0 = w.index_of(0.0)?;
    let rel0 = w.at(k0) - w.level();
    *w = w.shift_constant(c - rel0 - w.level());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let m = MeasureModel::standard();
        let a = sample_w(-2.0, 1.0, 1.0 / 64.0, &m, 7).unwrap();
        let b = sample_w(-2.0, 1.0, 1.0 / 64.0, &m, 7).unwrap();
        assert_eq!(a, b);
        let c = sample_w(-2.0, 1.0, 1.0 / 64.0, &m, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn nested_windows_agree() {
        let m = MeasureModel::gaussian(1.0, 0.5).unwrap();
        let small = sample_w(-1.5, 0.75, 1.0 / 32.0, &m, 11).unwrap();
        let large = sample_w(-4.0, 3.0, 1.0 / 32.0, &m, 11).unwrap();
        for k in small.start_index()..=small.end_index() {
            assert_eq!(small.at(k), large.at(k));
        }
    }

    #[test]
    fn rejects_bad_windows() {
        let m = MeasureModel::standard();
        assert!(sample_w(0.0, 1.0, 0.25, &m, 1).is_err());
        assert!(sample_w(-1.1, 1.0, 0.25, &m, 1).is_err());
        assert!(sample_w(-1.0, 1.0, 0.3, &m, 1).is_err());
        assert!(MeasureModel::gaussian(0.0, 0.0).is_err());
    }

    #[test]
    fn w0_override_is_exact() {
        let m = MeasureModel::standard();
        let mut w = sample_w(-1.0, 1.0, 0.125, &m, 3).unwrap();
        set_w0_override(&mut w, 0.3).unwrap();
        assert_eq!(w.value(0.0).unwrap(), 0.3);
        set_w0_override(&mut w, 0.0).unwrap();
        assert_eq!(w.value(0.0).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_log_density() {
        let m = MeasureModel::standard();
        let ratio = (m.log_density(1.0) - m.log_density(0.0)).exp();
        assert!((ratio - (-0.5f64).exp()).abs() < 1e-15);
        assert!((m.density(0.0) - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
    }
}
