//! Centre, height and width of a spectral line.

use crate::error::{Error, Result};
use crate::spectrum::{Column, SpectrumTable};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakMetrics {
    pub center: f64,
    pub height: f64,
    pub fwhm: f64,
}

/// Peak of `column` inside `window = (lo, hi)`.
///
/// The extremum of `|value|` must sit strictly inside the window. Centre and
/// height come from the parabola through the extremal sample and its two
/// neighbours. The width is measured at half height above the baseline
/// given by the mean of the two window-edge samples, with linear
/// interpolation between samples.
pub fn peak_metrics(table: &SpectrumTable, column: Column, window: (f64, f64)) -> Result<PeakMetrics> {
    peak_metrics_xy(&table.omega, table.column(column), window)
}

pub fn peak_metrics_xy(x: &[f64], y: &[f64], window: (f64, f64)) -> Result<PeakMetrics> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!("empty peak window ({lo}, {hi})")));
    }
    let first = x.partition_point(|&w| w < lo);
    let end = x.partition_point(|&w| w <= hi);
    if end < first + 3 {
        return Err(Error::NoPeak);
    }
    let (xs, ys) = (&x[first..end], &y[first..end]);
    let n = xs.len();

    let mut k = 0;
    for i in 1..n {
        if ys[i].abs() > ys[k].abs() {
            k = i;
        }
    }
    if k == 0 || k == n - 1 || ys[k] == ys[k - 1] && ys[k] == ys[k + 1] {
        return Err(Error::NoPeak);
    }

    let (center, height) = parabola_vertex(
        (xs[k - 1], ys[k - 1]),
        (xs[k], ys[k]),
        (xs[k + 1], ys[k + 1]),
    );
    let baseline = 0.5 * (ys[0] + ys[n - 1]);
    let amplitude = height - baseline;
    if amplitude == 0.0 {
        return Err(Error::NoPeak);
    }
    // fraction of the peak above baseline at sample i
    let level = |i: usize| (ys[i] - baseline) / amplitude;

    let mut left = None;
    for i in (0..k).rev() {
        if level(i) <= 0.5 {
            let (a, b) = (level(i), level(i + 1));
            left = Some(xs[i] + (0.5 - a) / (b - a) * (xs[i + 1] - xs[i]));
            break;
        }
    }
    let mut right = None;
    for i in k + 1..n {
        if level(i) <= 0.5 {
            let (a, b) = (level(i - 1), level(i));
            right = Some(xs[i - 1] + (a - 0.5) / (a - b) * (xs[i] - xs[i - 1]));
            break;
        }
    }
    match (left, right) {
        (Some(l), Some(r)) => Ok(PeakMetrics { center, height, fwhm: r - l }),
        _ => Err(Error::ClippedPeak),
    }
}

/// Vertex of the parabola through three points; falls back to the middle
/// point when they are collinear.
fn parabola_vertex(p0: (f64, f64), p1: (f64, f64), p2: (f64, f64)) -> (f64, f64) {
    let (x0, y0) = p0;
    let (x1, y1) = p1;
    let (x2, y2) = p2;
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curvature = (d12 - d01) / (x2 - x0);
    if curvature == 0.0 || !curvature.is_finite() {
        return p1;
    }
    // around x1 the parabola reads y1 + s·(x − x1) + curvature·(x − x1)²
    let slope_at_x1 = d01 + curvature * (x1 - x0);
    let xv = x1 - slope_at_x1 / (2.0 * curvature);
    let yv = y1 + slope_at_x1 * (xv - x1) + curvature * (xv - x1) * (xv - x1);
    (xv, yv)
}
