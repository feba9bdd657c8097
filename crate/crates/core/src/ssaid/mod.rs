//! The SSAID ensemble.
//!
//! For every partial reconstruction `Y^k` and every noise level `a_s`, a group of `Q`
//! realizations `Y^k + a_s * w` is passed to the inner detector. Groups whose
//! realizations agree on the count, and roughly on the locations, are treated as data
//! inside the detector's suitable noise range; their consensus forms the answer.

mod group;
mod sliding;

pub use group::{run_group, GroupStats};
pub use sliding::ssaid_detect_sliding;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::id::IdConfig;
use crate::rng::derive_seed;
use crate::series::{mode, DetectionResult, TimeSeries};
use crate::ssa::{decompose, SsaConfig};
use group::{run_group_with, GroupWorkspace};

/// Shortest series accepted by [`ssaid_detect`].
pub const MIN_SERIES_LEN: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SsaidConfig {
    pub ssa: SsaConfig,
    /// Number of noise levels `L`.
    pub noise_levels: usize,
    /// Realizations per group `Q`.
    pub realizations: usize,
    /// RMSE threshold `v` in samples.
    pub rmse_threshold: f64,
    /// Top of the noise grid as a multiple of the input's standard deviation.
    pub noise_max_factor: f64,
    pub seed: u64,
    pub id: IdConfig,
}

impl Default for SsaidConfig {
    fn default() -> Self {
        Self::paper()
    }
}

impl SsaidConfig {
    /// Full-scale ensemble: 100 components, 80 levels, 50 realizations.
    pub fn paper() -> Self {
        Self {
            ssa: SsaConfig::with_components(100),
            noise_levels: 80,
            realizations: 50,
            rmse_threshold: 3.0,
            noise_max_factor: 2.0,
            seed: 0,
            id: IdConfig::default(),
        }
    }

    /// Reduced ensemble (20 components, 20 levels, 30 realizations), about 33 times cheaper.
    pub fn desk() -> Self {
        Self {
            ssa: SsaConfig::with_components(20),
            noise_levels: 20,
            realizations: 30,
            ..Self::paper()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.noise_levels == 0 || self.realizations == 0 {
            return Err(Error::invalid("noise_levels and realizations must be >= 1"));
        }
        if !(self.rmse_threshold > 0.0 && self.rmse_threshold.is_finite()) {
            return Err(Error::invalid(format!("rmse threshold must be > 0, got {}", self.rmse_threshold)));
        }
        if !(self.noise_max_factor > 0.0 && self.noise_max_factor.is_finite()) {
            return Err(Error::invalid(format!(
                "noise_max_factor must be > 0, got {}",
                self.noise_max_factor
            )));
        }
        self.id.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsaidResult {
    pub detection: DetectionResult,
    pub in_snl_groups: Vec<GroupStats>,
    pub all_groups: Vec<GroupStats>,
    pub config_echo: SsaidConfig,
    pub warnings: Vec<String>,
}

/// `a_s = (s / L) * factor * std` for `s = 1..=L`.
pub fn noise_grid(series_std: f64, levels: usize, factor: f64) -> Result<Vec<f64>> {
    if levels == 0 {
        return Err(Error::invalid("noise grid needs at least one level"));
    }
    if !(series_std >= 0.0 && series_std.is_finite() && factor > 0.0 && factor.is_finite()) {
        return Err(Error::invalid(format!("bad noise grid scale {series_std} x {factor}")));
    }
    let top = factor * series_std;
    Ok((1..=levels).map(|s| s as f64 / levels as f64 * top).collect())
}

/// Probability that at least half of `q` independent detections succeed, each with
/// probability `p_s`.
pub fn voting_success_prob(p_s: f64, q: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_s) {
        return Err(Error::Domain(format!("probability {p_s} outside [0, 1]")));
    }
    if q == 0 {
        return Err(Error::invalid("q must be >= 1"));
    }
    let need = q.div_ceil(2);
    if p_s == 0.0 {
        return Ok(0.0);
    }
    if p_s == 1.0 {
        return Ok(1.0);
    }
    let (lp, lq) = (p_s.ln(), (1.0 - p_s).ln());
    // ln C(q, j) built up incrementally from ln C(q, 0) = 0
    let mut ln_binom = 0.0;
    let mut total = 0.0;
    for j in 0..=q {
        if j >= need {
            total += (ln_binom + j as f64 * lp + (q - j) as f64 * lq).exp();
        }
        if j < q {
            ln_binom += ((q - j) as f64).ln() - ((j + 1) as f64).ln();
        }
    }
    Ok(total.min(1.0))
}

/// Groups meeting all three conditions: `r2 >= 0.5`, a non-zero mode count and
/// `omega3 <= v`. Degenerate groups never qualify.
pub fn identify_in_snl(groups: &[GroupStats], v: f64) -> Vec<GroupStats> {
    groups.iter().filter(|g| g.is_in_snl(v)).cloned().collect()
}

/// Consensus of the in-SNL groups: the most common count, then the column-wise mode
/// of the groups that have it.
pub fn aggregate(in_snl: &[GroupStats]) -> Result<DetectionResult> {
    aggregate_checked(in_snl).map(|(d, _)| d)
}

/// Like [`aggregate`], also reporting whether duplicate locations were dropped.
fn aggregate_checked(in_snl: &[GroupStats]) -> Result<(DetectionResult, bool)> {
    if in_snl.is_empty() {
        return Err(Error::Empty("in-SNL groups"));
    }
    let counts: Vec<usize> = in_snl.iter().map(|g| g.h_mode).collect();
    let n_hat = mode(&counts)?;
    let chosen: Vec<&GroupStats> = in_snl.iter().filter(|g| g.h_mode == n_hat).collect();
    let mut column = Vec::with_capacity(chosen.len());
    let mut locations = Vec::with_capacity(n_hat);
    for i in 0..n_hat {
        column.clear();
        column.extend(chosen.iter().map(|g| g.locations[i]));
        locations.push(mode(&column)?);
    }
    Ok(DetectionResult::from_unsorted(locations))
}

/// Full SSAID run.
///
/// Evaluates all `M * L` groups. The noise of member `m` in group `(k, s)` is keyed by
/// `(seed, k, s, m)`, so the result does not depend on how work is scheduled.
pub fn ssaid_detect(series: &TimeSeries, config: &SsaidConfig) -> Result<SsaidResult> {
    config.validate()?;
    if series.len() < MIN_SERIES_LEN {
        return Err(Error::invalid(format!(
            "series of length {} shorter than {MIN_SERIES_LEN}",
            series.len()
        )));
    }
    let dec = decompose(series, &config.ssa)?;
    let reconstructions = dec.cumulative_all();
    let grid = noise_grid(series.sample_std(), config.noise_levels, config.noise_max_factor)?;

    let cells: Vec<(usize, usize)> = (1..=reconstructions.len())
        .flat_map(|k| (1..=grid.len()).map(move |s| (k, s)))
        .collect();
    let all_groups = cells
        .par_iter()
        .map_init(GroupWorkspace::default, |ws, &(k, s)| {
            let seed = derive_seed(config.seed, &[k as u64, s as u64]);
            let y = reconstructions[k - 1].values();
            run_group_with(y, grid[s - 1], config.realizations, seed, &config.id, ws)
                .map(|g| GroupStats { k, s, ..g })
        })
        .collect::<Result<Vec<GroupStats>>>()?;

    let in_snl_groups = identify_in_snl(&all_groups, config.rmse_threshold);
    let mut warnings = Vec::new();
    let detection = if in_snl_groups.is_empty() {
        DetectionResult::empty()
    } else {
        let (detection, collided) = aggregate_checked(&in_snl_groups)?;
        if collided {
            warnings.push("aggregated locations collided; duplicates dropped".to_string());
        }
        detection
    };
    let degenerate = all_groups.iter().filter(|g| g.degenerate).count();
    if degenerate > 0 {
        warnings.push(format!("{degenerate} groups had colliding column modes"));
    }
    Ok(SsaidResult {
        detection,
        in_snl_groups,
        all_groups,
        config_echo: config.clone(),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{add_noise, FamilySpec, NoiseSpec, generate_family};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn group(h_mode: usize, r2: f64, omega3: Option<f64>, locations: Vec<usize>) -> GroupStats {
        GroupStats {
            k: 1,
            s: 1,
            a_s: 0.1,
            h_mode,
            r2,
            omega3,
            locations,
            kappa: (r2 * 30.0).round() as usize,
            degenerate: false,
            window: None,
        }
    }

    fn brute_force(p: f64, q: usize) -> f64 {
        let mut total = 0.0;
        for mask in 0u32..(1 << q) {
            let j = mask.count_ones() as usize;
            if 2 * j >= q {
                total += p.powi(j as i32) * (1.0 - p).powi((q - j) as i32);
            }
        }
        total
    }

    #[test]
    fn voting_probability_examples() {
        assert_abs_diff_eq!(voting_success_prob(0.6, 100).unwrap(), 0.9832, epsilon = 1e-4);
        assert_eq!(voting_success_prob(1.0, 7).unwrap(), 1.0);
        assert_abs_diff_eq!(voting_success_prob(0.5, 2).unwrap(), 0.75, epsilon = 1e-15);
        assert!(matches!(voting_success_prob(1.2, 3), Err(Error::Domain(_))));
        assert!(matches!(voting_success_prob(-0.1, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn voting_probability_matches_enumeration() {
        for q in 1..=14 {
            for p in [0.1, 0.3, 0.5, 0.7, 0.9] {
                assert_abs_diff_eq!(voting_success_prob(p, q).unwrap(), brute_force(p, q), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn voting_matches_simulated_groups() {
        use rand::Rng;
        let (p, q, trials) = (0.55, 25, 4000);
        let mut rng = crate::rng::keyed_rng(5, &[]);
        let wins = (0..trials)
            .filter(|_| 2 * (0..q).filter(|_| rng.random_bool(p)).count() >= q)
            .count();
        let expected = voting_success_prob(p, q).unwrap();
        let se = (expected * (1.0 - expected) / trials as f64).sqrt();
        assert!((wins as f64 / trials as f64 - expected).abs() < 3.0 * se);
    }

    #[test]
    fn noise_grid_examples() {
        assert_eq!(noise_grid(1.0, 4, 2.0).unwrap(), vec![0.5, 1.0, 1.5, 2.0]);
        assert_eq!(noise_grid(0.7, 1, 2.0).unwrap(), vec![1.4]);
        let g = noise_grid(0.5, 80, 2.0).unwrap();
        assert_eq!(g.len(), 80);
        assert_abs_diff_eq!(g[79], 1.0, epsilon = 1e-15);
        let step = g[0];
        assert!(g.windows(2).all(|w| (w[1] - w[0] - step).abs() < 1e-12));
        assert!(noise_grid(1.0, 0, 2.0).is_err());
    }

    #[test]
    fn in_snl_conditions() {
        let groups = vec![
            group(0, 0.9, None, vec![]),
            group(10, 0.6, Some(2.5), (1..=10).map(|i| i * 10).collect()),
            group(10, 0.49, Some(0.0), (1..=10).map(|i| i * 10).collect()),
            group(2, 0.8, Some(3.5), vec![5, 9]),
            GroupStats { degenerate: true, ..group(2, 0.8, None, vec![5]) },
        ];
        let picked = identify_in_snl(&groups, 3.0);
        assert_eq!(picked, vec![groups[1].clone()]);
    }

    #[test]
    fn aggregate_examples() {
        let single = group(2, 0.8, Some(0.5), vec![40, 90]);
        assert_eq!(aggregate(std::slice::from_ref(&single)).unwrap().locations(), &[40, 90]);

        let tens: Vec<usize> = (1..=10).map(|i| i * 20).collect();
        let nines: Vec<usize> = (1..=9).map(|i| i * 21).collect();
        let mixed = vec![
            group(10, 0.9, Some(1.0), tens.clone()),
            group(10, 0.9, Some(1.0), tens.clone()),
            group(9, 0.9, Some(1.0), nines),
        ];
        assert_eq!(aggregate(&mixed).unwrap().locations(), tens.as_slice());

        let cols = vec![
            group(2, 0.9, Some(1.0), vec![100, 200]),
            group(2, 0.9, Some(1.0), vec![101, 200]),
            group(2, 0.9, Some(1.0), vec![100, 200]),
        ];
        assert_eq!(aggregate(&cols).unwrap().locations(), &[100, 200]);
        assert!(matches!(aggregate(&[]), Err(Error::Empty(_))));
    }

    proptest! {
        #[test]
        fn aggregate_ignores_group_order(
            raw in prop::collection::vec((1usize..4, prop::collection::vec(1usize..30, 3)), 1..8),
            shift in 0usize..8,
        ) {
            let groups: Vec<GroupStats> = raw
                .iter()
                .map(|(h, locs)| {
                    let mut l: Vec<usize> = locs.iter().scan(0, |acc, d| { *acc += d; Some(*acc) }).take(*h).collect();
                    l.sort_unstable();
                    group(*h, 0.9, Some(1.0), l)
                })
                .collect();
            let mut rotated = groups.clone();
            rotated.rotate_left(shift % groups.len());
            rotated.reverse();
            prop_assert_eq!(aggregate(&groups).unwrap(), aggregate(&rotated).unwrap());
        }
    }

    fn two_kink_signal() -> TimeSeries {
        let spec = FamilySpec::piecewise_linear(300, vec![100, 200], &[0.1, -0.1, 0.1]);
        generate_family(&spec).unwrap().0
    }

    #[test]
    fn group_on_two_kinks() {
        let y = two_kink_signal();
        let a_s = 0.05 * y.sample_std();
        let g = run_group(&y, a_s, 20, 11, &IdConfig::default()).unwrap();
        assert_eq!(g.h_mode, 2);
        assert!(g.r2 >= 0.9, "{g:?}");
        assert!(g.omega3.unwrap() <= 1.0, "{g:?}");
        assert_eq!(g.kappa, (g.r2 * 20.0).round() as usize);
    }

    #[test]
    fn group_on_a_line_is_empty() {
        let y = TimeSeries::new((0..200).map(|t| 0.02 * t as f64).collect()).unwrap();
        let g = run_group(&y, 0.3, 20, 3, &IdConfig::default()).unwrap();
        assert_eq!(g.h_mode, 0);
        assert!(g.r2 >= 0.9);
        assert!(g.locations.is_empty() && g.omega3.is_none());
    }

    #[test]
    fn single_member_group() {
        let y = two_kink_signal();
        let g = run_group(&y, 0.2, 1, 4, &IdConfig::default()).unwrap();
        assert_eq!(g.r2, 1.0);
        assert_eq!(g.kappa, 1);
        if g.h_mode > 0 {
            assert_eq!(g.omega3, Some(0.0));
        }
        assert!(run_group(&y, 0.2, 0, 4, &IdConfig::default()).is_err());
    }

    fn tiny() -> SsaidConfig {
        SsaidConfig {
            ssa: SsaConfig::with_components(5),
            noise_levels: 4,
            realizations: 6,
            ..SsaidConfig::desk()
        }
    }

    #[test]
    fn pipeline_records_every_group_and_is_deterministic() {
        let x = add_noise(&two_kink_signal(), &NoiseSpec { c_wn: 0.5, seed: 1 }).unwrap();
        let cfg = tiny().with_seed(9);
        let a = ssaid_detect(&x, &cfg).unwrap();
        assert_eq!(a.all_groups.len(), 5 * 4);
        let keys: Vec<(usize, usize)> = a.all_groups.iter().map(|g| (g.k, g.s)).collect();
        assert_eq!(keys[0], (1, 1));
        assert_eq!(keys[19], (5, 4));
        let b = ssaid_detect(&x, &cfg).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let c = pool.install(|| ssaid_detect(&x, &cfg)).unwrap();
        assert_eq!(a, c);
        assert!(a.detection.locations().iter().all(|&b| (1..=298).contains(&b)));
        if a.in_snl_groups.is_empty() {
            assert!(a.detection.is_empty());
        }
    }

    #[test]
    fn pipeline_on_a_line_reports_nothing() {
        let line = TimeSeries::new((0..150).map(|t| 0.01 * t as f64).collect()).unwrap();
        let x = add_noise(&line, &NoiseSpec { c_wn: 0.3, seed: 2 }).unwrap();
        let res = ssaid_detect(&x, &tiny()).unwrap();
        assert!(res.detection.is_empty());
    }

    #[test]
    fn pipeline_rejects_short_or_bad_input() {
        let x = TimeSeries::new((0..29).map(|t| t as f64).collect()).unwrap();
        assert!(ssaid_detect(&x, &tiny()).is_err());
        let x = TimeSeries::new((0..100).map(|t| (t as f64).sin()).collect()).unwrap();
        let bad = SsaidConfig { realizations: 0, ..tiny() };
        assert!(ssaid_detect(&x, &bad).is_err());
    }

    #[test]
    fn sliding_with_one_window_matches_plain_run() {
        let x = add_noise(&two_kink_signal(), &NoiseSpec { c_wn: 0.3, seed: 4 }).unwrap();
        let cfg = tiny();
        let plain = ssaid_detect(&x, &cfg).unwrap();
        let slid = ssaid_detect_sliding(&x, &cfg, 100).unwrap();
        assert_eq!(plain.detection, slid.detection);
        assert!(ssaid_detect_sliding(&x, &cfg, 101).is_err());
        assert!(ssaid_detect_sliding(&x, &cfg, 9).is_err());
    }
}
