//! Isolate-Detect for continuous piecewise-linear signals.
//!
//! The detector scans expanding intervals anchored alternately at the left and right
//! end of the current segment. Within an interval, every admissible knot `b` is scored
//! by the gain in fit of a continuous one-knot line over a single line. The first
//! interval whose best score exceeds `C * sigma * sqrt(2 ln T)` isolates one
//! change-point at the maximising knot; the segment is split there and both halves are
//! processed again until nothing triggers.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{median_in_place, DetectionResult, TimeSeries};

/// Consistency constant of the MAD for Gaussian data.
const MAD_SCALE: f64 = 0.6745;
/// Scores at or below this fraction of the data norm are treated as rounding noise.
const NUMERICAL_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdConfig {
    /// Threshold constant `C`.
    pub threshold_const: f64,
    /// Expansion step `lambda` of the isolating intervals.
    pub expansion_step: usize,
    /// Minimum number of samples on each side of a knot, the knot included.
    pub min_gap: usize,
    /// Noise level override; estimated from the data when `None`.
    pub sigma: Option<f64>,
}

impl Default for IdConfig {
    fn default() -> Self {
        Self {
            threshold_const: 1.0,
            expansion_step: 10,
            min_gap: 3,
            sigma: None,
        }
    }
}

impl IdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_const.is_finite() && self.threshold_const > 0.0) {
            return Err(Error::invalid("threshold constant must be > 0"));
        }
        if self.expansion_step == 0 {
            return Err(Error::invalid("expansion step must be >= 1"));
        }
        if self.min_gap < 2 {
            return Err(Error::invalid("min_gap must be >= 2"));
        }
        if let Some(s) = self.sigma {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::invalid("sigma override must be > 0"));
            }
        }
        Ok(())
    }

    /// Shortest series the detector accepts.
    pub fn min_series_len(&self) -> usize {
        2 * self.min_gap + 4
    }
}

/// Robust white-noise scale from the MAD of second differences.
///
/// Second differencing removes any linear trend and inflates white-noise variance by
/// a factor of six.
pub fn estimate_sigma(series: &TimeSeries) -> Result<f64> {
    let mut scratch = Vec::new();
    estimate_sigma_with(series.values(), &mut scratch)
}

pub(crate) fn estimate_sigma_with(x: &[f64], scratch: &mut Vec<f64>) -> Result<f64> {
    if x.len() < 4 {
        return Err(Error::invalid(format!(
            "sigma estimation needs at least 4 samples, got {}",
            x.len()
        )));
    }
    scratch.clear();
    scratch.extend(x.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]));
    let med = median_in_place(scratch);
    for d in scratch.iter_mut() {
        *d = (*d - med).abs();
    }
    let mad = median_in_place(scratch);
    Ok(mad / MAD_SCALE / 6f64.sqrt())
}

/// Prefix sums that let the one-knot contrast be evaluated in constant time.
#[derive(Debug, Clone)]
pub(crate) struct ContrastTable {
    sum_x: Vec<f64>,
    sum_tx: Vec<f64>,
}

impl ContrastTable {
    pub(crate) fn new(x: &[f64]) -> Self {
        let mut sum_x = Vec::with_capacity(x.len() + 1);
        let mut sum_tx = Vec::with_capacity(x.len() + 1);
        let (mut a, mut b) = (0.0, 0.0);
        sum_x.push(a);
        sum_tx.push(b);
        for (t, &v) in x.iter().enumerate() {
            a += v;
            b += t as f64 * v;
            sum_x.push(a);
            sum_tx.push(b);
        }
        Self { sum_x, sum_tx }
    }

    /// Line fit terms shared by every knot inside `[s, e]`.
    #[inline]
    fn interval(&self, s: usize, e: usize) -> IntervalTerms {
        let n = (e - s + 1) as f64;
        let sx = self.sum_x[e + 1] - self.sum_x[s];
        let stx = self.sum_tx[e + 1] - self.sum_tx[s];
        let ubar = (n - 1.0) / 2.0;
        // sum over the interval of (u - ubar) x with u = t - s
        let sux = stx - (s as f64 + ubar) * sx;
        let suu = n * (n * n - 1.0) / 12.0;
        IntervalTerms {
            s,
            e,
            n,
            ubar,
            sx,
            sux,
            suu,
        }
    }

    /// Squared contrast `RSS0 - RSS1` for knot `b` inside `[s, e]`.
    #[inline]
    fn squared(&self, iv: &IntervalTerms, b: usize) -> f64 {
        let e = iv.e;
        let k = (b - iv.s) as f64;
        let m = (e - b) as f64;
        // hinge phi_u = max(u - k, 0) over u in [0, n)
        let a1 = m * (m + 1.0) / 2.0;
        let a2 = m * (m + 1.0) * (2.0 * m + 1.0) / 6.0;
        let phi_u = k * a1 + a2 - iv.ubar * a1;
        let norm2 = a2 - a1 * a1 / iv.n - phi_u * phi_u / iv.suu;
        if norm2 <= 0.0 {
            return 0.0;
        }
        let x_phi = (self.sum_tx[e + 1] - self.sum_tx[b])
            - b as f64 * (self.sum_x[e + 1] - self.sum_x[b]);
        let inner = x_phi - a1 / iv.n * iv.sx - phi_u / iv.suu * iv.sux;
        inner * inner / norm2
    }
}

#[derive(Debug, Clone, Copy)]
struct IntervalTerms {
    s: usize,
    e: usize,
    n: f64,
    ubar: f64,
    sx: f64,
    sux: f64,
    suu: f64,
}

fn check_geometry(len: usize, s: usize, e: usize, b: usize, min_gap: usize) -> Result<()> {
    if e >= len || s >= e || e - s < 4 {
        return Err(Error::Geometry(format!(
            "interval [{s}, {e}] invalid for series of length {len} (needs e - s >= 4)"
        )));
    }
    if b + 1 < s + min_gap || b + min_gap > e + 1 {
        return Err(Error::Geometry(format!(
            "knot {b} closer than {min_gap} samples to the ends of [{s}, {e}]"
        )));
    }
    Ok(())
}

/// Square root of the drop in residual sum of squares when a single line on `[s, e]`
/// is replaced by a continuous broken line with its knot at `b`.
pub fn slope_contrast(series: &TimeSeries, s: usize, e: usize, b: usize, min_gap: usize) -> Result<f64> {
    check_geometry(series.len(), s, e, b, min_gap)?;
    let table = ContrastTable::new(series.values());
    let iv = table.interval(s, e);
    Ok(table.squared(&iv, b).sqrt())
}

/// Reusable buffers for repeated detection on same-length series.
#[derive(Debug, Default)]
pub struct IdWorkspace {
    scratch: Vec<f64>,
    stack: Vec<(usize, usize)>,
    found: Vec<usize>,
}

pub fn id_detect(series: &TimeSeries, config: &IdConfig) -> Result<DetectionResult> {
    let mut ws = IdWorkspace::default();
    id_detect_with(series.values(), config, &mut ws)
}

pub(crate) fn id_detect_with(
    x: &[f64],
    config: &IdConfig,
    ws: &mut IdWorkspace,
) -> Result<DetectionResult> {
    config.validate()?;
    let len = x.len();
    if len < config.min_series_len() {
        return Err(Error::invalid(format!(
            "series of length {len} shorter than {} required by min_gap {}",
            config.min_series_len(),
            config.min_gap
        )));
    }
    let sigma = match config.sigma {
        Some(s) => s,
        None => estimate_sigma_with(x, &mut ws.scratch)?,
    };
    let zeta = config.threshold_const * sigma * (2.0 * (len as f64).ln()).sqrt();
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let floor = NUMERICAL_FLOOR * norm;
    let threshold = zeta.max(floor);
    let threshold_sq = threshold * threshold;

    let table = ContrastTable::new(x);
    let gap = config.min_gap - 1;
    let step = config.expansion_step;

    ws.stack.clear();
    ws.found.clear();
    ws.stack.push((0, len - 1));
    while let Some((s, e)) = ws.stack.pop() {
        if e - s < (2 * gap).max(4) {
            continue;
        }
        if let Some((b, _)) = isolate(&table, s, e, gap, step, threshold_sq) {
            ws.found.push(b);
            ws.stack.push((b, e));
            ws.stack.push((s, b));
        }
    }
    ws.found.sort_unstable();
    refine(x, &table, gap, threshold_sq, &mut ws.found);
    let (result, _) = DetectionResult::from_unsorted(std::mem::take(&mut ws.found));
    Ok(result)
}

/// Post-isolation clean-up.
///
/// Every change-point is re-localised between its neighbours; a point whose contrast
/// there no longer clears the threshold is dropped, and two neighbours that explain
/// the data no better than a single knot are merged into that knot.
fn refine(x: &[f64], table: &ContrastTable, gap: usize, threshold_sq: f64, found: &mut Vec<usize>) {
    const MAX_PASSES: usize = 20;
    let len = x.len();
    let bounds = |found: &[usize], i: usize, span: usize| {
        let s = if i == 0 { 0 } else { found[i - 1] };
        let e = if i + span >= found.len() { len - 1 } else { found[i + span] };
        (s, e)
    };
    for _ in 0..MAX_PASSES {
        let mut changed = false;
        let mut weakest: Option<(f64, usize)> = None;
        for i in 0..found.len() {
            let (s, e) = bounds(found, i, 1);
            let (score, b) = argmax_knot(table, s, e, gap).unwrap_or((0.0, found[i]));
            if b != found[i] {
                found[i] = b;
                changed = true;
            }
            if weakest.is_none_or(|(w, _)| score < w) {
                weakest = Some((score, i));
            }
        }
        if let Some((score, i)) = weakest {
            if score <= threshold_sq {
                found.remove(i);
                continue;
            }
        }
        if changed {
            continue;
        }
        let mut weakest_pair: Option<(f64, usize, usize)> = None;
        for i in 0..found.len().saturating_sub(1) {
            let (s, e) = bounds(found, i, 2);
            let Some((single_gain, b)) = argmax_knot(table, s, e, gap) else {
                continue;
            };
            let single_rss = line_rss(table, x, s, e) - single_gain;
            let pair_rss = knot_rss(&x[s..=e], &[found[i] - s, found[i + 1] - s]);
            let gain = single_rss - pair_rss;
            if weakest_pair.is_none_or(|(g, _, _)| gain < g) {
                weakest_pair = Some((gain, i, b));
            }
        }
        match weakest_pair {
            Some((gain, i, b)) if gain <= threshold_sq => {
                found[i] = b;
                found.remove(i + 1);
            }
            _ => break,
        }
    }
}

/// Residual sum of squares of the least-squares line on `[s, e]`.
fn line_rss(table: &ContrastTable, x: &[f64], s: usize, e: usize) -> f64 {
    let iv = table.interval(s, e);
    let mean = iv.sx / iv.n;
    let ss: f64 = x[s..=e].iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss - iv.sux * iv.sux / iv.suu).max(0.0)
}

/// Residual sum of squares of the continuous broken-line fit with the given knots
/// (local indices).
fn knot_rss(y: &[f64], knots: &[usize]) -> f64 {
    let n = y.len();
    let p = 2 + knots.len();
    let design = DMatrix::from_fn(n, p, |r, c| match c {
        0 => 1.0,
        1 => r as f64,
        _ => (r as f64 - knots[c - 2] as f64).max(0.0),
    });
    let target = DVector::from_column_slice(y);
    let qr = design.clone().qr();
    let coef = qr
        .r()
        .solve_upper_triangular(&(qr.q().transpose() * &target))
        .unwrap_or_else(|| DVector::zeros(p));
    (target - design * coef).norm_squared()
}

/// Largest squared contrast and its knot over the admissible range of `[s, e]`.
#[inline]
fn argmax_knot(table: &ContrastTable, s: usize, e: usize, gap: usize) -> Option<(f64, usize)> {
    if e < s + (2 * gap).max(4) {
        return None;
    }
    let iv = table.interval(s, e);
    let mut best = (0.0, s + gap);
    for b in (s + gap)..=(e - gap) {
        let c = table.squared(&iv, b);
        if c > best.0 {
            best = (c, b);
        }
    }
    Some(best)
}

/// First triggering knot in the alternating sequence of expanding intervals.
fn isolate(
    table: &ContrastTable,
    s: usize,
    e: usize,
    gap: usize,
    step: usize,
    threshold_sq: f64,
) -> Option<(usize, Growing)> {
    let mut j = 1;
    loop {
        let right_end = (s + j * step).min(e);
        let left_start = e.saturating_sub(j * step).max(s);
        // both expansions reach the whole segment at the same step
        if right_end == e {
            return best_knot(table, s, e, gap, threshold_sq, Growing::Neither)
                .map(|b| (b, Growing::Neither));
        }
        if let Some(b) = best_knot(table, s, right_end, gap, threshold_sq, Growing::Right) {
            return Some((b, Growing::Right));
        }
        if let Some(b) = best_knot(table, left_start, e, gap, threshold_sq, Growing::Left) {
            return Some((b, Growing::Left));
        }
        j += 1;
    }
}

/// Which end of an interval is still expanding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Growing {
    Left,
    Right,
    Neither,
}

/// Knot with the largest contrast in `[s, e]` if that contrast clears the threshold.
/// Ties keep the smallest index.
///
/// A maximum on the admissible edge next to the growing end usually means the
/// change-point lies just outside the admissible range; it is left for the next,
/// wider interval.
#[inline]
fn best_knot(
    table: &ContrastTable,
    s: usize,
    e: usize,
    gap: usize,
    threshold_sq: f64,
    growing: Growing,
) -> Option<usize> {
    if e < s + (2 * gap).max(4) {
        return None;
    }
    let iv = table.interval(s, e);
    let (lo, hi) = (s + gap, e - gap);
    let mut best = (0.0, 0usize);
    for b in lo..=hi {
        let c = table.squared(&iv, b);
        if c > best.0 {
            best = (c, b);
        }
    }
    let on_growing_edge = match growing {
        Growing::Left => best.1 == lo,
        Growing::Right => best.1 == hi,
        Growing::Neither => false,
    };
    (best.0 > threshold_sq && !on_growing_edge).then_some(best.1)
}
