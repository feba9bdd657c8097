//! Sliding-window regression baseline.
//!
//! At each admissible centre `t` a window of `w` samples is fitted once with a single
//! line and once with two independent lines on its halves `[t - w/2, t)` and
//! `[t, t + w/2)`. The Gaussian AIC difference is negative where two lines are
//! clearly better.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{DetectionResult, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AicConfig {
    /// Even window length in samples.
    pub window_days: usize,
    /// Detection threshold; centres with a lower difference are flagged.
    pub threshold: f64,
}

impl Default for AicConfig {
    fn default() -> Self {
        Self {
            window_days: 14,
            threshold: -5.0,
        }
    }
}

impl AicConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_days < 6 || !self.window_days.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "window must be even and >= 6, got {}",
                self.window_days
            )));
        }
        if !self.threshold.is_finite() {
            return Err(Error::invalid("threshold must be finite"));
        }
        Ok(())
    }
}

/// Residual sum of squares of the least-squares line through `y` at `t = 0, 1, ...`.
fn line_rss(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let tbar = (n - 1.0) / 2.0;
    let ybar = y.iter().sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for (t, &v) in y.iter().enumerate() {
        let dt = t as f64 - tbar;
        let dy = v - ybar;
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    (syy - sty * sty / stt).max(0.0)
}

fn variance(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let m = y.iter().sum::<f64>() / n;
    y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)
}

/// Gaussian AIC of a fit with the given residual sum of squares.
fn aic(n: f64, rss: f64, k: f64) -> f64 {
    n * (rss / n).ln() + 2.0 * k
}

/// Difference `AIC(two lines) - AIC(one line)` at every centre; the first and last
/// `w/2` positions are `None`.
pub fn delta_aic_series(series: &TimeSeries, config: &AicConfig) -> Result<Vec<Option<f64>>> {
    config.validate()?;
    let x = series.values();
    let w = config.window_days;
    let half = w / 2;
    if x.len() <= w {
        return Err(Error::invalid(format!(
            "series of length {} not longer than window {w}",
            x.len()
        )));
    }
    let n = w as f64;
    let mut out = vec![None; x.len()];
    for (t, slot) in out.iter_mut().enumerate().take(x.len() - half).skip(half) {
        let win = &x[t - half..t + half];
        let floor = (1e-12 * n * variance(win)).max(f64::MIN_POSITIVE);
        let one = line_rss(win).max(floor);
        let two = (line_rss(&win[..half]) + line_rss(&win[half..])).max(floor);
        *slot = Some(aic(n, two, 5.0) - aic(n, one, 3.0));
    }
    Ok(out)
}

/// Indices whose difference lies below `zeta`, one per run of consecutive flagged
/// indices, placed at the run's minimum.
pub fn threshold_detect(delta: &[Option<f64>], zeta: f64) -> DetectionResult {
    let mut locations = Vec::new();
    let mut run: Option<(usize, f64)> = None;
    for (i, d) in delta.iter().enumerate() {
        match (*d, run) {
            (Some(v), None) if v < zeta => run = Some((i, v)),
            (Some(v), Some((_, best))) if v < zeta => {
                if v < best {
                    run = Some((i, v));
                }
            }
            _ => {
                if let Some((b, _)) = run.take() {
                    locations.push(b);
                }
            }
        }
    }
    if let Some((b, _)) = run {
        locations.push(b);
    }
    DetectionResult::from_unsorted(locations).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{add_noise, NoiseSpec};
    use proptest::prelude::*;

    fn ramp(len: usize) -> TimeSeries {
        TimeSeries::new((0..len).map(|t| 0.3 * t as f64 - 2.0).collect()).unwrap()
    }

    #[test]
    fn straight_line_gives_pure_penalty() {
        let d = delta_aic_series(&ramp(60), &AicConfig::default()).unwrap();
        let defined: Vec<f64> = d.iter().flatten().copied().collect();
        assert_eq!(defined.len(), 60 - 14);
        assert!(defined.iter().all(|v| (v - 4.0).abs() < 1e-9), "{defined:?}");
        assert!(d[..7].iter().all(Option::is_none));
        assert!(d[53..].iter().all(Option::is_none));
        assert!(d[7].is_some() && d[52].is_some());
    }

    #[test]
    fn tent_apex_is_strongly_negative() {
        let x: Vec<f64> = (0..61).map(|t| 30.0 - (t as f64 - 30.0).abs()).collect();
        let d = delta_aic_series(&TimeSeries::new(x).unwrap(), &AicConfig::default()).unwrap();
        let apex = d[30].unwrap();
        assert!(apex < -100.0, "{apex}");
        let argmin = (0..61).filter(|&i| d[i].is_some()).min_by(|&a, &b| d[a].unwrap().total_cmp(&d[b].unwrap()));
        assert_eq!(argmin, Some(30));
    }

    #[test]
    fn collapse_runs_to_their_minimum() {
        let mut d = vec![None; 60];
        for (i, v) in [(48, -6.0), (49, -7.0), (50, -9.0), (51, -8.0), (52, -6.5)] {
            d[i] = Some(v);
        }
        d[47] = Some(1.0);
        d[53] = Some(0.0);
        assert_eq!(threshold_detect(&d, -5.0).locations(), &[50]);
        assert!(threshold_detect(&d, -10.0).is_empty());
    }

    #[test]
    fn a_run_can_split_under_a_lower_threshold() {
        let d = vec![None, Some(-6.0), Some(-4.0), Some(-6.5), None];
        assert_eq!(threshold_detect(&d, -3.0).locations(), &[3]);
        assert_eq!(threshold_detect(&d, -5.0).locations(), &[1, 3]);
    }

    #[test]
    fn detection_count_falls_with_threshold_on_noise() {
        let base = TimeSeries::new(vec![0.0; 365]).unwrap();
        let zetas = [-12.0, -8.0, -4.0, 0.0, 2.0];
        let mut totals = [0usize; 5];
        for seed in 0..50 {
            let x = add_noise(&base, &NoiseSpec { c_wn: 1.0, seed }).unwrap();
            let d = delta_aic_series(&x, &AicConfig::default()).unwrap();
            for (z, total) in zetas.iter().zip(totals.iter_mut()) {
                *total += threshold_detect(&d, *z).count();
            }
        }
        assert!(totals.windows(2).all(|w| w[0] <= w[1]), "{totals:?}");
        assert!(totals[0] < totals[4]);
    }

    #[test]
    fn bad_windows() {
        assert!(delta_aic_series(&ramp(14), &AicConfig::default()).is_err());
        let odd = AicConfig { window_days: 9, ..AicConfig::default() };
        assert!(delta_aic_series(&ramp(50), &odd).is_err());
        let tiny = AicConfig { window_days: 4, ..AicConfig::default() };
        assert!(delta_aic_series(&ramp(50), &tiny).is_err());
    }

    proptest! {
        #[test]
        fn affine_trend_does_not_change_delta(seed in 0u64..500, a in -5.0f64..5.0, b in -0.5f64..0.5) {
            let base = TimeSeries::new(vec![0.0; 80]).unwrap();
            let x = add_noise(&base, &NoiseSpec { c_wn: 1.0, seed }).unwrap();
            let y = x.map_values(x.values().iter().enumerate().map(|(t, v)| v + a + b * t as f64).collect()).unwrap();
            let dx = delta_aic_series(&x, &AicConfig::default()).unwrap();
            let dy = delta_aic_series(&y, &AicConfig::default()).unwrap();
            for (p, q) in dx.iter().zip(&dy) {
                match (p, q) {
                    (Some(p), Some(q)) => prop_assert!((p - q).abs() < 1e-6),
                    (None, None) => {}
                    _ => prop_assert!(false),
                }
            }
        }

        #[test]
        fn lower_threshold_never_flags_more_centres(seed in 0u64..200, z1 in -20.0f64..5.0, dz in 0.0f64..10.0) {
            let base = TimeSeries::new(vec![0.0; 200]).unwrap();
            let x = add_noise(&base, &NoiseSpec { c_wn: 1.0, seed }).unwrap();
            let d = delta_aic_series(&x, &AicConfig::default()).unwrap();
            let flagged = |z: f64| d.iter().flatten().filter(|v| **v < z).count();
            prop_assert!(flagged(z1 - dz) <= flagged(z1));
        }
    }
}
