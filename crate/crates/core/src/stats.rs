//! Empirical distribution helpers: step-function CDFs, the two-sample
//! Kolmogorov–Smirnov statistic and fixed-width histograms.

use serde::{Deserialize, Serialize};

/// One step of an empirical CDF: the fraction of observations `<= value`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub value: f64,
    pub count: usize,
    pub cumulative: f64,
}

/// Empirical CDF evaluated at each distinct observed value, ascending.
/// NaNs are ignored.
pub fn ecdf(values: &[f64]) -> Vec<CdfPoint> {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut out: Vec<CdfPoint> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        match out.last_mut() {
            Some(last) if last.value == v => {
                last.count += 1;
                last.cumulative = (i + 1) as f64 / n as f64;
            }
            _ => out.push(CdfPoint {
                value: v,
                count: 1,
                cumulative: (i + 1) as f64 / n as f64,
            }),
        }
    }
    if let Some(last) = out.last_mut() {
        last.cumulative = 1.0;
    }
    out
}

/// Value of a step CDF at `x` (right-continuous).
pub fn cdf_at(cdf: &[CdfPoint], x: f64) -> f64 {
    let idx = cdf.partition_point(|p| p.value <= x);
    if idx == 0 {
        0.0
    } else {
        cdf[idx - 1].cumulative
    }
}

/// Largest vertical gap between the empirical CDFs of `a` and `b`.
/// Zero when either side is empty.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut xs: Vec<f64> = a.iter().copied().filter(|v| !v.is_nan()).collect();
    let mut ys: Vec<f64> = b.iter().copied().filter(|v| !v.is_nan()).collect();
    if xs.is_empty() || ys.is_empty() {
        return 0.0;
    }
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (nx, ny) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / nx - j as f64 / ny).abs());
    }
    d
}

/// Fixed-width histogram starting at the smallest value: bin `i` covers
/// `[min + i·width, min + (i+1)·width)`.
pub fn histogram(values: &[f64], width: f64) -> Vec<(f64, usize)> {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let Some(min) = finite.iter().copied().reduce(f64::min) else {
        return Vec::new();
    };
    let max = finite.iter().copied().fold(min, f64::max);
    let bins = ((max - min) / width).floor() as usize + 1;
    let mut counts = vec![0usize; bins];
    for v in finite {
        let b = (((v - min) / width).floor() as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (min + i as f64 * width, c))
        .collect()
}
