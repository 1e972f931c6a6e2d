//! Cumulative trapezoid rules on a uniform grid.

/// `out[i] = ∫_{x_0}^{x_i}` of the piecewise-linear interpolant of `values`.
pub fn cumulative_trapezoid(values: &[f64], h: f64, out: &mut [f64]) {
    debug_assert_eq!(values.len(), out.len());
    let half = 0.5 * h;
    let mut acc = 0.0;
    out[0] = 0.0;
    for i in 1..values.len() {
        acc += half * (values[i - 1] + values[i]);
        out[i] = acc;
    }
}

/// Cumulative trapezoid with the Euler-Maclaurin endpoint correction for the
/// smooth part of the integrand.
///
/// The integrand is `rough + smooth`, where `rough` is piecewise linear on the
/// grid (integrated exactly by the trapezoid rule) and `smooth` has the known
/// grid derivative `scale * derivative`. The correction
/// `-h²/12 · scale · (derivative[i] - derivative[0])` makes the rule exact for
/// cell-wise cubics with continuous first derivative.
pub fn corrected_cumulative_trapezoid(
    values: &[f64],
    derivative: Option<(f64, &[f64])>,
    h: f64,
    out: &mut [f64],
) {
    cumulative_trapezoid(values, h, out);
    if let Some((scale, d)) = derivative {
        debug_assert_eq!(d.len(), out.len());
        let c = scale * h * h / 12.0;
        let d0 = d[0];
        for (o, di) in out.iter_mut().zip(d) {
            *o -= c * (di - d0);
        }
    }
}
