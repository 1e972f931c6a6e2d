//! The solution on `(-inf, 0]` that stays bounded as time goes to `-inf`.
//!
//! On the segment `[-k-1, -k)` the solution is `g_k(v + k) + q(v)`, where
//!
//! * `g_k(v0) = sum_{j>=0} a^j I^j[h_{k+j}](v0)` with
//!   `h_i(v) = W(v - i) - W(-i-1)` and `I` the integral from `-1` on `[-1, 0]`,
//! * `q(v) = sum_k g_k(0) r(v + k)`.
//!
//! The series is evaluated in nested (Horner) form, innermost integrand first:
//! `acc <- h_j + a·I(acc)`. Chains for different offsets share their inner
//! part, so one sweep from the deepest offset down to zero yields every
//! `g_k` at once, each bit-identical to [`series_f`] at depth `k_top - k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::SegmentFunction;
use crate::fundamental::{check_coefficient, FundamentalSolution};
use crate::grid::{align, GridPath};
use crate::quadrature::{corrected_cumulative_trapezoid, cumulative_trapezoid};

pub const DEFAULT_K_F: usize = 25;
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeftTailParams {
    /// Target for the truncation bound of the `q` series.
    pub tol: f64,
    /// Minimum depth of every `g_k` series.
    pub k_f: usize,
    /// Left end of the constructed window (grid-aligned, `<= -1`).
    pub t_left: f64,
    /// Forces the number of `q` terms instead of selecting it from `tol`.
    #[serde(default)]
    pub k_q: Option<usize>,
}

impl LeftTailParams {
    pub fn new(tol: f64, t_left: f64) -> Self {
        Self {
            tol,
            k_f: DEFAULT_K_F,
            t_left,
            k_q: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LeftTailDiagnostics {
    /// Deepest offset evaluated by the sweep.
    pub k_top: usize,
    /// `max_k |g_k(0)|` over the retained terms.
    pub max_g0: f64,
    /// `max_k sup |g_k|` over the retained terms.
    pub max_g_sup: f64,
    /// Largest jump between adjacent segment formulas.
    pub glue_jump: f64,
}

#[derive(Clone, Debug)]
pub struct LeftTailResult {
    pub f: SegmentFunction,
    /// `g_k` for `k = 0..=k_q`.
    pub g: Vec<SegmentFunction>,
    /// `q` on `[t_left, 0]`; right-continuous at negative integers, and
    /// holding the left limit `q(0-)` at zero.
    pub q: GridPath,
    pub x_left: GridPath,
    pub k_f: usize,
    pub k_q: usize,
    pub tail_bound: f64,
    pub diagnostics: LeftTailDiagnostics,
}

/// `h_i` on the `[-1, 0]` grid.
fn driver_segment(w: &GridPath, offset: usize) -> Vec<f64> {
    let n = w.steps_per_unit() as i64;
    let base = -(offset as i64 + 1) * n;
    (0..=n).map(|m| w.diff(base + m, base)).collect()
}

/// Runs the nested chain from offset `top` down to `bottom`, reporting the
/// accumulated segment at every offset.
fn horner_chain(
    w: &GridPath,
    a: f64,
    top: usize,
    bottom: usize,
    mut emit: impl FnMut(usize, &[f64]),
) -> Result<()> {
    let n = w.steps_per_unit();
    w.require(-(top as f64) - 1.0, -(bottom as f64))?;
    let h = 1.0 / n as f64;
    let mut acc = driver_segment(w, top);
    let mut prev: Option<Vec<f64>> = None;
    let mut integral = vec![0.0; acc.len()];
    emit(top, &acc);
    for j in (bottom..top).rev() {
        match &prev {
            // the innermost integrand is the piecewise-linear driver alone
            None => cumulative_trapezoid(&acc, h, &mut integral),
            Some(p) => corrected_cumulative_trapezoid(&acc, Some((a, p)), h, &mut integral),
        }
        let next: Vec<f64> = driver_segment(w, j)
            .into_iter()
            .zip(&integral)
            .map(|(hj, i)| hj + a * i)
            .collect();
        prev = Some(std::mem::replace(&mut acc, next));
        emit(j, &acc);
    }
    Ok(())
}

/// The series for `g_{k_offset}` truncated after `k_f` iterated integrals;
/// `k_offset = 0` gives `f`.
pub fn series_f(w: &GridPath, a: f64, k_offset: usize, k_f: usize) -> Result<SegmentFunction> {
    check_coefficient(a)?;
    let mut out = Vec::new();
    horner_chain(w, a, k_offset + k_f, k_offset, |k, acc| {
        if k == k_offset {
            out = acc.to_vec();
        }
    })?;
    SegmentFunction::new(w.steps_per_unit(), out)
}

/// Every `g_k`, `k = 0..=k_top`, where `g_k` has depth `k_top - k`.
pub fn series_sweep(w: &GridPath, a: f64, k_top: usize) -> Result<Vec<SegmentFunction>> {
    check_coefficient(a)?;
    let n = w.steps_per_unit();
    let mut out: Vec<Option<SegmentFunction>> = vec![None; k_top + 1];
    let mut failure = None;
    horner_chain(w, a, k_top, 0, |k, acc| {
        match SegmentFunction::new(n, acc.to_vec()) {
            Ok(s) => out[k] = Some(s),
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(out
        .into_iter()
        .map(|s| s.expect("every offset emitted"))
        .collect())
}

/// The individual terms `a^j I^j[h_{k_offset+j}]`, `j = 0..=k_f`, integrated
/// level by level rather than in nested form.
pub fn series_terms(
    w: &GridPath,
    a: f64,
    k_offset: usize,
    k_f: usize,
) -> Result<Vec<SegmentFunction>> {
    check_coefficient(a)?;
    let n = w.steps_per_unit();
    w.require(-((k_offset + k_f) as f64) - 1.0, -(k_offset as f64))?;
    let h = 1.0 / n as f64;
    let mut terms = Vec::with_capacity(k_f + 1);
    for j in 0..=k_f {
        let mut cur = driver_segment(w, k_offset + j);
        let mut below: Option<Vec<f64>> = None;
        for _ in 0..j {
            let mut next = vec![0.0; cur.len()];
            match &below {
                None => cumulative_trapezoid(&cur, h, &mut next),
                Some(d) => corrected_cumulative_trapezoid(&cur, Some((1.0, d)), h, &mut next),
            }
            below = Some(std::mem::replace(&mut cur, next));
        }
        let scale = a.powi(j as i32);
        terms.push(SegmentFunction::new(
            n,
            cur.into_iter().map(|v| scale * v).collect(),
        )?);
    }
    Ok(terms)
}

fn growth_guard(k: usize) -> f64 {
    3.0 * (2.0 * (k.max(2) as f64).ln()).sqrt()
}

/// Number of unit segments needed to reach `t_left`.
fn segments_for(t_left: f64) -> usize {
    ((-t_left).ceil() as usize).max(1)
}

/// Upper bound on the neglected part of `q` on `[t_left, 0]` when `k_q`
/// terms are kept and `|g_k(0)| <= g_max` for the retained `k`.
pub fn q_tail_bound(fs: &FundamentalSolution, g_max: f64, k_q: usize, t_left: f64) -> Result<f64> {
    let env = fs.decay().ok_or(Error::EnvelopeUnavailable)?;
    let segs = segments_for(t_left);
    let first = (k_q + 1) as f64 - segs as f64;
    Ok((g_max + growth_guard(k_q + 1)) * env.tail_sum(first.max(1.0)))
}

/// `sum_{k=1}^{k_q} g0[k] r(v + k)` at grid index `i <= 0`; `r` is taken
/// as its left limit at zero for the term `skip`.
fn q_at(g0: &[f64], table: &[f64], n: i64, i: i64, skip: Option<usize>) -> f64 {
    let mut acc = 0.0;
    for (k, gk) in g0.iter().enumerate().skip(1) {
        let j = i + k as i64 * n;
        if j < 0 || (j == 0 && skip == Some(k)) {
            continue;
        }
        acc += gk * table[j as usize];
    }
    acc
}

pub fn construct_left(
    w: &GridPath,
    fs: &FundamentalSolution,
    params: &LeftTailParams,
) -> Result<LeftTailResult> {
    let a = fs.a();
    check_coefficient(a)?;
    let n = w.steps_per_unit();
    let ni = n as i64;
    if !(params.tol > 0.0) {
        return Err(Error::invalid(format!(
            "tol must be > 0, got {}",
            params.tol
        )));
    }
    let out_start = align(params.t_left, n)?;
    if out_start > -ni {
        return Err(Error::invalid(format!(
            "left window end {} must be <= -1",
            params.t_left
        )));
    }
    w.require(params.t_left, 0.0)?;
    let segs = segments_for(params.t_left);
    let available = (-w.t_left()).floor() as usize;
    let k_top = available.saturating_sub(1);
    let needed_top = segs + params.k_f;
    if available < 1 || k_top < needed_top {
        return Err(w.exhausted(-(needed_top as f64) - 1.0, 0.0));
    }
    let k_q_max = k_top - params.k_f;

    let g = series_sweep(w, a, k_top)?;
    let g0: Vec<f64> = g.iter().map(|s| s.values()[n as usize]).collect();

    let (k_q, tail_bound) = match params.k_q {
        Some(k) => {
            if k < segs || k > k_q_max {
                return Err(Error::invalid(format!(
                    "forced k_q = {k} outside the admissible range {segs}..={k_q_max}"
                )));
            }
            let g_max = g0[..=k].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            (k, q_tail_bound(fs, g_max, k, params.t_left)?)
        }
        None => {
            let mut best = f64::INFINITY;
            let mut chosen = None;
            let mut g_max = g0[..segs].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            for (k, gk) in g0.iter().enumerate().take(k_q_max + 1).skip(segs) {
                g_max = g_max.max(gk.abs());
                let bound = q_tail_bound(fs, g_max, k, params.t_left)?;
                best = best.min(bound);
                if bound < params.tol {
                    chosen = Some((k, bound));
                    break;
                }
            }
            chosen.ok_or(Error::TolUnreachable {
                tol: params.tol,
                best,
            })?
        }
    };
    if fs.max_interval() < k_q + 1 {
        return Err(Error::invalid(format!(
            "fundamental solution tabulated on {} intervals, need {}",
            fs.max_interval(),
            k_q + 1
        )));
    }

    let table = fs.grid_values(n);
    let g0 = &g0[..=k_q];
    let q_vals: Vec<f64> = (out_start..=0)
        .map(|i| q_at(g0, &table, ni, i, if i == 0 { Some(0) } else { None }))
        .collect();
    let x_vals: Vec<f64> = (out_start..=0)
        .zip(&q_vals)
        .map(|(i, q)| {
            if i == 0 {
                g[0].values()[n as usize] + q
            } else {
                let k = (-i - 1) / ni;
                let m = i + k * ni + ni;
                g[k as usize].values()[m as usize] + q
            }
        })
        .collect();

    let mut glue_jump = 0.0_f64;
    for k in 1..segs {
        let i = -(k as i64) * ni;
        if i < out_start {
            break;
        }
        let left = g[k].values()[n as usize] + q_at(g0, &table, ni, i, Some(k));
        let right = g[k - 1].values()[0] + q_vals[(i - out_start) as usize];
        glue_jump = glue_jump.max((left - right).abs());
    }

    let mut g: Vec<SegmentFunction> = g;
    g.truncate(k_q + 1);
    let diagnostics = LeftTailDiagnostics {
        k_top,
        max_g0: g0.iter().fold(0.0, |m: f64, v| m.max(v.abs())),
        max_g_sup: g.iter().map(SegmentFunction::sup_norm).fold(0.0, f64::max),
        glue_jump,
    };
    Ok(LeftTailResult {
        f: g[0].clone(),
        g,
        q: GridPath::from_indices(out_start, n, q_vals)?,
        x_left: GridPath::from_indices(out_start, n, x_vals)?,
        k_f: params.k_f,
        k_q,
        tail_bound,
        diagnostics,
    })
}

/// Largest jump between the formulas of adjacent segments at `-k`.
pub fn segment_glue_check(result: &LeftTailResult) -> f64 {
    result.diagnostics.glue_jump
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path_sampler::{sample_w, MeasureModel};

    fn ramp(n: u32, t0: f64, t1: f64) -> GridPath {
        let k0 = align(t0, n).unwrap();
        let k1 = align(t1, n).unwrap();
        GridPath::from_indices(k0, n, (k0..=k1).map(|k| k as f64 / n as f64).collect()).unwrap()
    }

    #[test]
    fn zero_driver_gives_zero_segment() {
        let w = GridPath::from_indices(-64 * 30, 64, vec![1.5; 64 * 31 + 1]).unwrap();
        let f = series_f(&w, -0.5, 0, 25).unwrap();
        assert!(f.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn series_starts_at_zero() {
        let w = sample_w(-30.0, 1.0, 1.0 / 64.0, &MeasureModel::standard(), 4).unwrap();
        for k in [0, 3] {
            assert_eq!(series_f(&w, -0.5, k, 25).unwrap().values()[0], 0.0);
        }
    }

    #[test]
    fn ramp_closed_form() {
        let n = 256;
        let w = ramp(n, -40.0, 1.0);
        for a in [-0.5_f64, -0.9] {
            let expect = |v0: f64| ((a * (v0 + 1.0)).exp() - 1.0) / a;
            for k in [0, 4] {
                let g = series_f(&w, a, k, 25).unwrap();
                for (i, v) in g.values().iter().enumerate() {
                    let v0 = -1.0 + i as f64 / n as f64;
                    assert!((v - expect(v0)).abs() < 1e-12, "a={a} k={k} v0={v0}");
                }
            }
        }
    }

    #[test]
    fn sweep_matches_individual_chains_bitwise() {
        let w = sample_w(-14.0, 1.0, 1.0 / 32.0, &MeasureModel::standard(), 12).unwrap();
        let sweep = series_sweep(&w, -0.7, 12).unwrap();
        for k in [0, 1, 5, 12] {
            let direct = series_f(&w, -0.7, k, 12 - k).unwrap();
            assert_eq!(sweep[k], direct);
        }
    }

    #[test]
    fn terms_sum_to_nested_form() {
        let w = sample_w(-20.0, 1.0, 1.0 / 64.0, &MeasureModel::standard(), 2).unwrap();
        let nested = series_f(&w, -0.8, 2, 15).unwrap();
        let terms = series_terms(&w, -0.8, 2, 15).unwrap();
        let summed = terms
            .iter()
            .skip(1)
            .fold(terms[0].clone(), |acc, t| acc.add(t).unwrap());
        for (x, y) in nested.values().iter().zip(summed.values()) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn window_exhaustion() {
        let w = sample_w(-5.0, 1.0, 1.0 / 16.0, &MeasureModel::standard(), 1).unwrap();
        assert!(matches!(
            series_f(&w, -0.5, 0, 25),
            Err(Error::WindowExhausted { .. })
        ));
        let fs = FundamentalSolution::build(-0.5, 40).unwrap();
        assert!(matches!(
            construct_left(&w, &fs, &LeftTailParams::new(1e-8, -2.0)),
            Err(Error::WindowExhausted { .. })
        ));
    }

    #[test]
    fn needs_envelope() {
        let w = sample_w(-40.0, 1.0, 1.0 / 16.0, &MeasureModel::standard(), 1).unwrap();
        let fs = FundamentalSolution::build(-0.5, 8).unwrap();
        assert_eq!(
            construct_left(&w, &fs, &LeftTailParams::new(1e-8, -2.0)).unwrap_err(),
            Error::EnvelopeUnavailable
        );
    }

    #[test]
    fn unreachable_tolerance() {
        let w = sample_w(-34.0, 1.0, 1.0 / 16.0, &MeasureModel::standard(), 1).unwrap();
        let fs = FundamentalSolution::build(-0.5, 60).unwrap();
        assert!(matches!(
            construct_left(&w, &fs, &LeftTailParams::new(1e-30, -2.0)),
            Err(Error::TolUnreachable { .. })
        ));
    }
}
