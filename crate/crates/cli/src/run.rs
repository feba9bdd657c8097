//! Executable description of a run. Every command is first resolved into a
//! [`RunSpec`]; the spec is what gets executed and what the manifest records, so a
//! manifest can be replayed without the original flags or config file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ssaid_core::baseline::{delta_aic_series, threshold_detect, AicConfig};
use ssaid_core::bench::{calibrate_threshold, run_sweep, sensitivity_sweep, ExperimentConfig, SweepParam};
use ssaid_core::simulate::{add_noise, generate_sse_like, NoiseSpec, SseSignalSpec};
use ssaid_core::{ssaid_detect, ssaid_detect_sliding, DetectionResult, GroupStats, IdConfig, SsaidConfig};

use crate::error::{CliError, CliResult};
use crate::gps::{Component, DayGap};
use crate::input::{self, InputFormat, LoadedSeries};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunSpec {
    Detect {
        input: PathBuf,
        component: Component,
        ssaid: SsaidConfig,
    },
    DetectSliding {
        input: PathBuf,
        component: Component,
        ssaid: SsaidConfig,
        segment_len: usize,
    },
    Simulate {
        signal: SseSignalSpec,
        noise: f64,
        seed: u64,
        /// Output file name, written inside the output directory.
        file_name: String,
    },
    Baseline {
        input: PathBuf,
        component: Component,
        aic: AicConfig,
    },
    SnlScan {
        experiment: ExperimentConfig,
    },
    Bench {
        experiment: ExperimentConfig,
        param: SweepParam,
        values: Vec<usize>,
    },
    Calibrate {
        constants: Vec<f64>,
        length: usize,
        trials: usize,
        target: f64,
        seed: u64,
        id: IdConfig,
    },
}

impl RunSpec {
    pub fn name(&self) -> &'static str {
        match self {
            RunSpec::Detect { .. } => "detect",
            RunSpec::DetectSliding { .. } => "detect-sliding",
            RunSpec::Simulate { .. } => "simulate",
            RunSpec::Baseline { .. } => "baseline",
            RunSpec::SnlScan { .. } => "snl-scan",
            RunSpec::Bench { .. } => "bench",
            RunSpec::Calibrate { .. } => "calibrate",
        }
    }

    fn manifest_name(&self) -> String {
        match self {
            RunSpec::Simulate { file_name, .. } => format!("{}.manifest.json", stem(file_name)),
            _ => MANIFEST.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// RFC 3339; taken from `SOURCE_DATE_EPOCH` when that is set.
    pub timestamp: String,
    pub outputs: Vec<String>,
    pub run: RunSpec,
}

impl Manifest {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}

fn timestamp() -> String {
    let secs = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.parse::<i64>().ok());
    let when = match secs.and_then(|s| chrono::DateTime::from_timestamp(s, 0)) {
        Some(t) => t,
        None => chrono::Utc::now(),
    };
    when.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn stem(file_name: &str) -> &str {
    Path::new(file_name).file_stem().and_then(|s| s.to_str()).unwrap_or(file_name)
}

/// Execute `spec`, writing its outputs and manifest into `out_dir`.
pub fn execute(spec: &RunSpec, out_dir: &Path) -> CliResult<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|source| CliError::Write { path: out_dir.to_path_buf(), source })?;
    let mut out = Outputs { dir: out_dir, written: Vec::new() };
    match spec {
        RunSpec::Detect { input, component, ssaid } => {
            let data = input::load(input, *component)?;
            let res = ssaid_detect(&data.series, ssaid)?;
            write_detection(&mut out, &data, &res.detection, &res.all_groups, &res.warnings, ssaid)?;
        }
        RunSpec::DetectSliding { input, component, ssaid, segment_len } => {
            let data = input::load(input, *component)?;
            let res = ssaid_detect_sliding(&data.series, ssaid, *segment_len)?;
            write_detection(&mut out, &data, &res.detection, &res.all_groups, &res.warnings, ssaid)?;
        }
        RunSpec::Simulate { signal, noise, seed, file_name } => {
            let (clean, truth) = generate_sse_like(signal)?;
            let noisy = add_noise(&clean, &NoiseSpec { c_wn: *noise, seed: *seed })?;
            let rows = noisy.values().iter().enumerate().map(|(t, v)| vec![t.to_string(), v.to_string()]);
            out.csv(file_name, &["t", "value"], rows)?;
            let truth_rows = truth.locations().iter().map(|&i| vec![i.to_string(), noisy.time_at(i).to_string()]);
            out.csv(&format!("{}.truth.csv", stem(file_name)), &["index", "t"], truth_rows)?;
        }
        RunSpec::Baseline { input, component, aic } => {
            let data = input::load(input, *component)?;
            let delta = delta_aic_series(&data.series, aic)?;
            let rows = delta
                .iter()
                .enumerate()
                .filter_map(|(i, d)| d.map(|d| vec![i.to_string(), data.times[i].to_string(), d.to_string()]));
            out.csv("delta_aic.csv", &["index", "time", "delta_aic"], rows)?;
            let found = threshold_detect(&delta, aic.threshold);
            write_changepoints(&mut out, &data, &found)?;
            let diag = BaselineDiagnostics {
                input_format: data.format,
                series_len: data.series.len(),
                gaps: &data.gaps,
                window: aic.window_days,
                threshold: aic.threshold,
                count: found.count(),
                locations: found.locations(),
            };
            out.json("diagnostics.json", &diag)?;
        }
        RunSpec::SnlScan { experiment } => {
            let sweep = run_sweep(experiment)?;
            let rows = sweep.trials.iter().map(|t| {
                vec![
                    t.level.to_string(),
                    t.seed.to_string(),
                    t.detected_count.to_string(),
                    t.rmse.map(|e| e.to_string()).unwrap_or_default(),
                    t.success.to_string(),
                ]
            });
            out.csv("trials.csv", &["level", "seed", "detected_count", "rmse", "success"], rows)?;
            out.json("summary.json", &sweep.report)?;
        }
        RunSpec::Bench { experiment, param, values } => {
            let report = sensitivity_sweep(*param, values, experiment)?;
            let rows = report.runs.iter().flat_map(|(value, rep)| {
                rep.per_level
                    .iter()
                    .map(move |l| vec![value.to_string(), l.c_wn.to_string(), l.r_sd.to_string(), l.r1.to_string()])
            });
            out.csv("curves.csv", &["value", "level", "r_sd", "r1"], rows)?;
            out.json("summary.json", &report)?;
        }
        RunSpec::Calibrate { constants, length, trials, target, seed, id } => {
            let (points, chosen) = calibrate_threshold(constants, *length, *trials, *target, *seed, id)?;
            let rows = points
                .iter()
                .map(|p| vec![p.threshold_const.to_string(), p.false_positive_rate.to_string()]);
            out.csv("calibration.csv", &["threshold_const", "false_positive_rate"], rows)?;
            out.json("summary.json", &serde_json::json!({ "target": target, "chosen": chosen, "points": points }))?;
        }
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: timestamp(),
        outputs: out
            .written
            .iter()
            .filter_map(|p| p.file_name().and_then(|n| n.to_str()).map(String::from))
            .collect(),
        run: spec.clone(),
    };
    out.json(&spec.manifest_name(), &manifest)?;
    Ok(out.written)
}

struct Outputs<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl Outputs<'_> {
    fn csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> CliResult<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let path = self.dir.join(name);
        let fail = |e: csv::Error| CliError::Write { path: path.clone(), source: e.into() };
        let mut w = csv::Writer::from_path(&path).map_err(fail)?;
        w.write_record(header).map_err(fail)?;
        for row in rows {
            w.write_record(&row).map_err(fail)?;
        }
        w.flush().map_err(|source| CliError::Write { path: path.clone(), source })?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text).map_err(|source| CliError::Write { path: path.clone(), source })?;
        self.written.push(path);
        Ok(())
    }
}

fn write_changepoints(out: &mut Outputs, data: &LoadedSeries, found: &DetectionResult) -> CliResult<()> {
    let rows = found
        .locations()
        .iter()
        .map(|&i| vec![i.to_string(), data.times[i].to_string(), data.label.clone()]);
    out.csv("changepoints.csv", &["index", "time", "component"], rows)
}

#[derive(Serialize)]
struct GroupRow<'a> {
    #[serde(flatten)]
    stats: &'a GroupStats,
    in_snl: bool,
}

#[derive(Serialize)]
struct DetectDiagnostics<'a> {
    input_format: InputFormat,
    series_len: usize,
    gaps: &'a [DayGap],
    warnings: &'a [String],
    count: usize,
    locations: &'a [usize],
    in_snl_groups: usize,
    groups: Vec<GroupRow<'a>>,
}

#[derive(Serialize)]
struct BaselineDiagnostics<'a> {
    input_format: InputFormat,
    series_len: usize,
    gaps: &'a [DayGap],
    window: usize,
    threshold: f64,
    count: usize,
    locations: &'a [usize],
}

fn write_detection(
    out: &mut Outputs,
    data: &LoadedSeries,
    found: &DetectionResult,
    groups: &[GroupStats],
    warnings: &[String],
    config: &SsaidConfig,
) -> CliResult<()> {
    write_changepoints(out, data, found)?;
    let rows: Vec<GroupRow> = groups
        .iter()
        .map(|g| GroupRow { stats: g, in_snl: g.is_in_snl(config.rmse_threshold) })
        .collect();
    let diag = DetectDiagnostics {
        input_format: data.format,
        series_len: data.series.len(),
        gaps: &data.gaps,
        warnings,
        count: found.count(),
        locations: found.locations(),
        in_snl_groups: rows.iter().filter(|r| r.in_snl).count(),
        groups: rows,
    };
    out.json("diagnostics.json", &diag)
}
