//! Shared domain types, order statistics and accuracy metrics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniformly sampled scalar series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
    dt: f64,
    origin: f64,
}

impl TimeSeries {
    /// Series with unit spacing starting at time zero.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_timing(values, 1.0, 0.0)
    }

    pub fn with_timing(values: Vec<f64>, dt: f64, origin: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("time series"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite value at index {i}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("sample spacing must be > 0, got {dt}")));
        }
        if !origin.is_finite() {
            return Err(Error::invalid("origin must be finite"));
        }
        Ok(Self { values, dt, origin })
    }

    /// Same timing as `self`, new values. Lengths must match.
    pub fn map_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::Dimension(format!(
                "expected {} values, got {}",
                self.values.len(),
                values.len()
            )));
        }
        Self::with_timing(values, self.dt, self.origin)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    /// Time stamp of sample `i`.
    pub fn time_at(&self, i: usize) -> f64 {
        self.origin + self.dt * i as f64
    }

    /// Contiguous sub-series `[start, start + len)`, keeping time stamps.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        let end = start
            .checked_add(len)
            .filter(|&end| end <= self.len() && len > 0)
            .ok_or_else(|| {
                Error::Dimension(format!(
                    "slice [{start}, {start}+{len}) outside series of length {}",
                    self.len()
                ))
            })?;
        Self::with_timing(
            self.values[start..end].to_vec(),
            self.dt,
            self.time_at(start),
        )
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }

    /// Sample standard deviation (n - 1 divisor); zero for a single sample.
    pub fn sample_std(&self) -> f64 {
        sample_std(&self.values)
    }
}

/// Estimated change-points as sorted, strictly increasing interior indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionResult {
    locations: Vec<usize>,
}

impl DetectionResult {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Validates ordering and that every index lies in `[1, series_len - 2]`.
    pub fn new(locations: Vec<usize>, series_len: usize) -> Result<Self> {
        validate_locations(&locations, series_len)?;
        Ok(Self { locations })
    }

    /// Sorts and deduplicates arbitrary locations. Returns whether duplicates were dropped.
    pub(crate) fn from_unsorted(mut locations: Vec<usize>) -> (Self, bool) {
        locations.sort_unstable();
        let before = locations.len();
        locations.dedup();
        let dropped = locations.len() != before;
        (Self { locations }, dropped)
    }

    pub fn locations(&self) -> &[usize] {
        &self.locations
    }

    pub fn count(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn into_locations(self) -> Vec<usize> {
        self.locations
    }
}

/// True change-point locations.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    locations: Vec<usize>,
}

impl GroundTruth {
    pub fn new(locations: Vec<usize>, series_len: usize) -> Result<Self> {
        validate_locations(&locations, series_len)?;
        Ok(Self { locations })
    }

    pub fn locations(&self) -> &[usize] {
        &self.locations
    }

    pub fn count(&self) -> usize {
        self.locations.len()
    }
}

fn validate_locations(locations: &[usize], series_len: usize) -> Result<()> {
    if let Some(w) = locations.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::invalid(format!(
            "locations must be strictly increasing ({} followed by {})",
            w[0], w[1]
        )));
    }
    let max = series_len.saturating_sub(2);
    for &loc in locations {
        if loc < 1 || loc > max {
            return Err(Error::IndexOutOfRange {
                index: loc,
                min: 1,
                max,
            });
        }
    }
    Ok(())
}

/// Most frequent value; ties go to the smallest tied value.
pub fn mode<T: Ord + Copy>(xs: &[T]) -> Result<T> {
    let mut counts: BTreeMap<T, usize> = BTreeMap::new();
    for &x in xs {
        *counts.entry(x).or_insert(0) += 1;
    }
    let mut best: Option<(T, usize)> = None;
    for (value, count) in counts {
        // ascending iteration: only a strictly larger count replaces the incumbent
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((value, count));
        }
    }
    best.map(|(v, _)| v).ok_or(Error::Empty("mode of an empty sequence"))
}

/// Root mean squared location error, pairing estimates and truths in sorted order.
///
/// Only defined when both sides have the same number of change-points. Two empty
/// sets have an error of zero.
pub fn rmse(estimated: &DetectionResult, truth: &GroundTruth) -> Result<f64> {
    rmse_between(estimated.locations(), truth.locations())
}

pub(crate) fn rmse_between(estimated: &[usize], truth: &[usize]) -> Result<f64> {
    if estimated.len() != truth.len() {
        return Err(Error::CountMismatch {
            estimated: estimated.len(),
            truth: truth.len(),
        });
    }
    if truth.is_empty() {
        return Ok(0.0);
    }
    let sq: f64 = estimated
        .iter()
        .zip(truth)
        .map(|(&p, &q)| {
            let d = p as f64 - q as f64;
            d * d
        })
        .sum();
    Ok((sq / truth.len() as f64).sqrt())
}

/// 75th percentile with linear interpolation between order statistics.
pub fn quartile3(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::Empty("quartile of an empty sequence"));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("quartile input contains non-finite values"));
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = 0.75 * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// Rescale to zero sample mean and unit sample standard deviation.
pub fn zscore_normalize(series: &TimeSeries) -> Result<TimeSeries> {
    if series.len() < 2 {
        return Err(Error::invalid("z-score needs at least two samples"));
    }
    let m = series.mean();
    let s = series.sample_std();
    if s.is_nan() || s <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    series.map_values(series.values().iter().map(|v| (v - m) / s).collect())
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub(crate) fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Median of a scratch buffer (reordered in place). Even lengths average the middle pair.
pub(crate) fn median_in_place(xs: &mut [f64]) -> f64 {
    let n = xs.len();
    debug_assert!(n > 0);
    let mid = n / 2;
    let (lower, upper, _) = xs.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower_max = lower.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower_max + upper)
    }
}
