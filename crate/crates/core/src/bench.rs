//! Monte Carlo evaluation: success rates over noise levels, the suitable-noise-level
//! interval, parameter sensitivity and detector threshold calibration.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{delta_aic_series, threshold_detect, AicConfig};
use crate::error::{Error, Result};
use crate::id::{id_detect, IdConfig};
use crate::rng::derive_seed;
use crate::series::{rmse, DetectionResult, GroundTruth, TimeSeries};
use crate::simulate::{add_noise, generate_family, generate_sse_like, FamilySpec, NoiseSpec, SseSignalSpec};
use crate::ssaid::{ssaid_detect, ssaid_detect_sliding, SsaidConfig};

/// Correct count and RMSE strictly below `v`.
pub fn success(detection: &DetectionResult, truth: &GroundTruth, v: f64) -> bool {
    detection.count() == truth.count() && rmse(detection, truth).is_ok_and(|e| e < v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SignalSpec {
    Sse(SseSignalSpec),
    Family(FamilySpec),
}

impl SignalSpec {
    pub fn generate(&self) -> Result<(TimeSeries, GroundTruth)> {
        match self {
            SignalSpec::Sse(s) => generate_sse_like(s),
            SignalSpec::Family(f) => generate_family(f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    IdDirect,
    Ssaid,
    SsaidSliding,
    Baseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub signal: SignalSpec,
    /// Noise levels `C_wn`, ascending.
    pub noise_grid: Vec<f64>,
    pub seeds_per_level: usize,
    pub detector: DetectorKind,
    /// Success threshold on the RMSE, in samples.
    pub v: f64,
    pub id: IdConfig,
    pub ssaid: SsaidConfig,
    /// Segment length for the sliding detector.
    pub segment_len: usize,
    pub aic: AicConfig,
    pub master_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            signal: SignalSpec::Sse(SseSignalSpec::default()),
            noise_grid: vec![0.05, 0.15, 0.25],
            seeds_per_level: 20,
            detector: DetectorKind::Ssaid,
            v: 3.0,
            id: IdConfig::default(),
            ssaid: SsaidConfig::desk(),
            segment_len: 80,
            aic: AicConfig::default(),
            master_seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds_per_level == 0 {
            return Err(Error::invalid("seeds_per_level must be >= 1"));
        }
        if self.noise_grid.is_empty() {
            return Err(Error::Empty("noise grid"));
        }
        if self.noise_grid.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::invalid("noise levels must be finite and >= 0"));
        }
        if self.noise_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("noise grid must be strictly ascending"));
        }
        if self.v.is_nan() || self.v <= 0.0 {
            return Err(Error::invalid("v must be > 0"));
        }
        Ok(())
    }

    /// Run the configured detector on one input.
    pub fn detect(&self, x: &TimeSeries, seed: u64) -> Result<DetectionResult> {
        match self.detector {
            DetectorKind::IdDirect => id_detect(x, &self.id),
            DetectorKind::Ssaid => Ok(ssaid_detect(x, &self.ssaid.clone().with_seed(seed))?.detection),
            DetectorKind::SsaidSliding => {
                Ok(ssaid_detect_sliding(x, &self.ssaid.clone().with_seed(seed), self.segment_len)?.detection)
            }
            DetectorKind::Baseline => Ok(threshold_detect(&delta_aic_series(x, &self.aic)?, self.aic.threshold)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub level: f64,
    /// Trial index within the level.
    pub seed: usize,
    pub detected_count: usize,
    pub rmse: Option<f64>,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub c_wn: f64,
    pub r_sd: f64,
    pub r1: f64,
    pub mean_rmse_when_correct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnlReport {
    pub per_level: Vec<LevelStats>,
    /// Longest contiguous run of levels with `r_sd >= 0.5`.
    pub snl_interval: Option<(f64, f64)>,
    pub seeds_per_level: usize,
}

impl SnlReport {
    pub fn r_sd(&self) -> Vec<f64> {
        self.per_level.iter().map(|l| l.r_sd).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub report: SnlReport,
    pub trials: Vec<TrialRecord>,
}

/// Noise seed of trial `j` at level index `i`.
pub fn trial_noise_seed(master: u64, level: usize, trial: usize) -> u64 {
    derive_seed(master, &[level as u64, trial as u64])
}

/// Detector seed of trial `j` at level index `i`.
pub fn trial_detector_seed(master: u64, level: usize, trial: usize) -> u64 {
    derive_seed(master, &[level as u64, trial as u64, 1])
}

pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepOutcome> {
    config.validate()?;
    let (signal, truth) = config.signal.generate()?;
    let cells: Vec<(usize, usize)> = (0..config.noise_grid.len())
        .flat_map(|i| (0..config.seeds_per_level).map(move |j| (i, j)))
        .collect();
    let trials = cells
        .par_iter()
        .map(|&(i, j)| {
            let level = config.noise_grid[i];
            let noise = NoiseSpec {
                c_wn: level,
                seed: trial_noise_seed(config.master_seed, i, j),
            };
            let x = add_noise(&signal, &noise)?;
            let found = config.detect(&x, trial_detector_seed(config.master_seed, i, j))?;
            let err = (found.count() == truth.count()).then(|| rmse(&found, &truth)).transpose()?;
            Ok(TrialRecord {
                level,
                seed: j,
                detected_count: found.count(),
                rmse: err,
                success: success(&found, &truth, config.v),
            })
        })
        .collect::<Result<Vec<TrialRecord>>>()?;
    let report = summarize(&config.noise_grid, config.seeds_per_level, &trials);
    Ok(SweepOutcome { report, trials })
}

fn summarize(grid: &[f64], per_level: usize, trials: &[TrialRecord]) -> SnlReport {
    let levels: Vec<LevelStats> = grid
        .iter()
        .zip(trials.chunks(per_level))
        .map(|(&c_wn, chunk)| {
            let n = chunk.len() as f64;
            let correct: Vec<f64> = chunk.iter().filter_map(|t| t.rmse).collect();
            LevelStats {
                c_wn,
                r_sd: chunk.iter().filter(|t| t.success).count() as f64 / n,
                r1: correct.len() as f64 / n,
                mean_rmse_when_correct: (!correct.is_empty())
                    .then(|| correct.iter().sum::<f64>() / correct.len() as f64),
            }
        })
        .collect();
    let snl_interval = longest_run(&levels.iter().map(|l| l.r_sd >= 0.5).collect::<Vec<_>>())
        .map(|(a, b)| (levels[a].c_wn, levels[b].c_wn));
    SnlReport {
        per_level: levels,
        snl_interval,
        seeds_per_level: per_level,
    }
}

/// First longest run of `true`, as inclusive index bounds.
fn longest_run(flags: &[bool]) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for (i, &f) in flags.iter().chain(std::iter::once(&false)).enumerate() {
        match (f, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if best.is_none_or(|(a, b)| i - s > b - a + 1) {
                    best = Some((s, i - 1));
                }
                start = None;
            }
            _ => {}
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    /// Realizations per group.
    Q,
    /// Number of noise levels.
    L,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub param: SweepParam,
    pub runs: Vec<(usize, SnlReport)>,
    /// Sup-norm distance between the `r_sd` curves of consecutive values.
    pub max_diffs: Vec<f64>,
}

/// Sup-norm distance between two curves of equal length.
pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Repeat a sweep for each value of one ensemble parameter. Noise instances are the
/// same for every value, so curves are compared on paired data.
pub fn sensitivity_sweep(param: SweepParam, values: &[usize], base: &ExperimentConfig) -> Result<SensitivityReport> {
    if values.is_empty() {
        return Err(Error::Empty("parameter values"));
    }
    let runs = values
        .iter()
        .map(|&value| {
            let mut config = base.clone();
            match param {
                SweepParam::Q => config.ssaid.realizations = value,
                SweepParam::L => config.ssaid.noise_levels = value,
            }
            Ok((value, run_sweep(&config)?.report))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_diffs = runs
        .windows(2)
        .map(|w| sup_distance(&w[0].1.r_sd(), &w[1].1.r_sd()))
        .collect();
    Ok(SensitivityReport { param, runs, max_diffs })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub threshold_const: f64,
    pub false_positive_rate: f64,
}

/// False-positive rate of the inner detector on pure white noise for each threshold
/// constant, plus the smallest constant whose rate does not exceed `target`.
pub fn calibrate_threshold(
    constants: &[f64],
    length: usize,
    trials: usize,
    target: f64,
    master_seed: u64,
    base: &IdConfig,
) -> Result<(Vec<CalibrationPoint>, Option<f64>)> {
    if trials == 0 || constants.is_empty() {
        return Err(Error::invalid("calibration needs constants and trials"));
    }
    let zero = TimeSeries::new(vec![0.0; length])?;
    let noises = (0..trials)
        .map(|j| add_noise(&zero, &NoiseSpec { c_wn: 1.0, seed: derive_seed(master_seed, &[j as u64]) }))
        .collect::<Result<Vec<_>>>()?;
    let points = constants
        .iter()
        .map(|&c| {
            let cfg = IdConfig { threshold_const: c, ..*base };
            let hits = noises
                .par_iter()
                .map(|x| id_detect(x, &cfg).map(|d| !d.is_empty() as usize))
                .sum::<Result<usize>>()?;
            Ok(CalibrationPoint {
                threshold_const: c,
                false_positive_rate: hits as f64 / trials as f64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let chosen = points
        .iter()
        .filter(|p| p.false_positive_rate <= target)
        .map(|p| p.threshold_const)
        .min_by(f64::total_cmp);
    Ok((points, chosen))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn success_is_strict_at_v() {
        let truth = GroundTruth::new(vec![10, 20], 40).unwrap();
        let exact = DetectionResult::new(vec![10, 20], 40).unwrap();
        assert!(success(&exact, &truth, 3.0));
        let shifted = DetectionResult::new(vec![13, 23], 40).unwrap();
        assert!(!success(&shifted, &truth, 3.0));
        assert!(success(&shifted, &truth, 3.0001));
        let short = DetectionResult::new(vec![10], 40).unwrap();
        assert!(!success(&short, &truth, 100.0));
    }

    #[test]
    fn longest_run_picks_first_of_equal_runs() {
        assert_eq!(longest_run(&[false, true, true, false, true, true]), Some((1, 2)));
        assert_eq!(longest_run(&[true, false, true, true, true]), Some((2, 4)));
        assert_eq!(longest_run(&[false, false]), None);
        assert_eq!(longest_run(&[true]), Some((0, 0)));
    }

    fn quick_id_sweep(seeds: usize) -> ExperimentConfig {
        ExperimentConfig {
            noise_grid: vec![0.0, 0.1, 0.3, 1.5],
            seeds_per_level: seeds,
            detector: DetectorKind::IdDirect,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn sweep_fractions_are_consistent() {
        let out = run_sweep(&quick_id_sweep(6)).unwrap();
        assert_eq!(out.trials.len(), 24);
        for level in &out.report.per_level {
            assert!((0.0..=1.0).contains(&level.r_sd) && (0.0..=1.0).contains(&level.r1));
            assert!(level.r_sd <= level.r1);
        }
        // the raw non-linear signal defeats the detector without noise
        assert_eq!(out.report.per_level[0].r_sd, 0.0);
        if let Some((lo, hi)) = out.report.snl_interval {
            let grid = &out.report.per_level;
            assert!(grid.iter().filter(|l| l.c_wn >= lo && l.c_wn <= hi).all(|l| l.r_sd >= 0.5));
        } else {
            assert!(out.report.per_level.iter().all(|l| l.r_sd < 0.5));
        }
    }

    #[test]
    fn single_seed_gives_binary_rates() {
        let out = run_sweep(&quick_id_sweep(1)).unwrap();
        assert!(out.report.per_level.iter().all(|l| l.r_sd == 0.0 || l.r_sd == 1.0));
    }

    #[test]
    fn sweep_is_reproducible() {
        let a = run_sweep(&quick_id_sweep(4)).unwrap();
        let b = run_sweep(&quick_id_sweep(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sensitivity_single_value_has_no_diff_row() {
        let base = ExperimentConfig {
            noise_grid: vec![0.1],
            seeds_per_level: 1,
            ssaid: SsaidConfig {
                ssa: crate::ssa::SsaConfig::with_components(3),
                noise_levels: 3,
                realizations: 3,
                ..SsaidConfig::desk()
            },
            ..ExperimentConfig::default()
        };
        let rep = sensitivity_sweep(SweepParam::Q, &[3], &base).unwrap();
        assert_eq!(rep.runs.len(), 1);
        assert!(rep.max_diffs.is_empty());
        assert!(sensitivity_sweep(SweepParam::Q, &[], &base).is_err());
    }

    #[test]
    fn calibration_rates_fall_with_the_constant() {
        let (points, chosen) = calibrate_threshold(&[0.5, 1.0, 1.5], 200, 60, 0.05, 7, &IdConfig::default()).unwrap();
        assert!(points.windows(2).all(|w| w[1].false_positive_rate <= w[0].false_positive_rate));
        assert!(points[0].false_positive_rate > 0.5);
        assert!(chosen.is_some_and(|c| c >= 1.0));
    }

    #[test]
    fn invalid_experiments() {
        let mut c = quick_id_sweep(0);
        assert!(run_sweep(&c).is_err());
        c.seeds_per_level = 1;
        c.noise_grid = vec![0.3, 0.1];
        assert!(run_sweep(&c).is_err());
    }
}
