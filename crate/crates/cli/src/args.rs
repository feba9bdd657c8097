use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ssaid_core::bench::{DetectorKind, ExperimentConfig, SignalSpec, SweepParam};
use ssaid_core::simulate::{RampShape, SseSignalSpec};
use ssaid_core::{IdConfig, SsaidConfig};

use crate::config::{FileConfig, Preset};
use crate::error::{CliError, CliResult};
use crate::gps::Component;
use crate::run::{execute, Manifest, RunSpec};

#[derive(Debug, Parser)]
#[command(name = "ssaid", version, about = "Change-point detection in noisy piecewise signals")]
pub struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run SSAID on a series.
    Detect(DetectArgs),
    /// Run SSAID on windows of three consecutive segments.
    DetectSliding {
        #[command(flatten)]
        detect: DetectArgs,
        /// Segment length in samples; windows span three segments.
        #[arg(long, default_value_t = 80)]
        segment_len: usize,
    },
    /// Generate a slow-slip-like series with a truth sidecar.
    Simulate(SimulateArgs),
    /// Sliding-window AIC comparison of one and two lines.
    Baseline(BaselineArgs),
    /// Success rate of a detector over a grid of noise levels.
    SnlScan(ScanArgs),
    /// Repeat an SNL scan for several values of Q or L.
    Bench {
        #[command(flatten)]
        scan: ScanArgs,
        #[arg(long, value_enum)]
        param: ParamArg,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
    },
    /// False-positive rate of the inner detector on white noise per threshold constant.
    Calibrate(CalibrateArgs),
    /// Re-run the command recorded in a manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct EnsembleArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// SSA components.
    #[arg(long)]
    pub m: Option<usize>,
    /// Noise levels.
    #[arg(long)]
    pub l: Option<usize>,
    /// Realizations per group.
    #[arg(long)]
    pub q: Option<usize>,
    /// RMSE threshold in samples.
    #[arg(long)]
    pub v: Option<f64>,
}

impl EnsembleArgs {
    fn apply(&self, cfg: &mut SsaidConfig) {
        if let Some(m) = self.m {
            cfg.ssa.num_components = m;
        }
        if let Some(l) = self.l {
            cfg.noise_levels = l;
        }
        if let Some(q) = self.q {
            cfg.realizations = q;
        }
        if let Some(v) = self.v {
            cfg.rmse_threshold = v;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
    }

    fn resolve(&self, file: &FileConfig) -> CliResult<SsaidConfig> {
        let mut cfg = file.ssaid(self.preset)?;
        self.apply(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// GPS component; ignored for two-column input.
    #[arg(long, value_enum)]
    pub component: Option<Component>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub events: Option<usize>,
    /// Event duration in days.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Days between event starts.
    #[arg(long)]
    pub recurrence: Option<f64>,
    #[arg(long)]
    pub first_event: Option<f64>,
    #[arg(long)]
    pub length: Option<usize>,
    /// Background trend per day.
    #[arg(long, allow_hyphen_values = true)]
    pub slope: Option<f64>,
    /// Reversal per event; one value or one per event.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub amplitude: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub ramp: Option<RampArg>,
    /// Standard deviation of the added white noise.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; the truth sidecar and manifest are written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum RampArg {
    Sigmoid,
    Quadratic,
    Linear,
}

impl From<RampArg> for RampShape {
    fn from(r: RampArg) -> Self {
        match r {
            RampArg::Sigmoid => RampShape::SmoothSigmoid,
            RampArg::Quadratic => RampShape::QuadraticEase,
            RampArg::Linear => RampShape::Linear,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub component: Option<Component>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Even window length in samples.
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub zeta: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum SignalArg {
    /// Five week-long events in a year.
    FiveEvents,
    /// Two events with a five-fold difference in size.
    TwoUnequal,
    TwoEqual,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum DetectorArg {
    IdDirect,
    Ssaid,
    SsaidSliding,
    Baseline,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum ParamArg {
    Q,
    L,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[arg(long, value_enum)]
    pub detector: Option<DetectorArg>,
    #[arg(long, value_enum)]
    pub signal: Option<SignalArg>,
    /// Noise levels, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<f64>>,
    #[arg(long)]
    pub seeds_per_level: Option<usize>,
    #[arg(long)]
    pub segment_len: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub zeta: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
}

impl ScanArgs {
    fn resolve(&self) -> CliResult<ExperimentConfig> {
        let file = FileConfig::load(self.ensemble.config.as_deref())?;
        // scans repeat the ensemble many times, so they default to the desk preset
        let preset = self.ensemble.preset.or(file.preset).unwrap_or(Preset::Desk);
        let base = ExperimentConfig { ssaid: file.ssaid(Some(preset))?, ..ExperimentConfig::default() };
        let mut exp = file.experiment(base)?;
        self.ensemble.apply(&mut exp.ssaid);
        if let Some(d) = self.detector {
            exp.detector = match d {
                DetectorArg::IdDirect => DetectorKind::IdDirect,
                DetectorArg::Ssaid => DetectorKind::Ssaid,
                DetectorArg::SsaidSliding => DetectorKind::SsaidSliding,
                DetectorArg::Baseline => DetectorKind::Baseline,
            };
        }
        if let Some(s) = self.signal {
            exp.signal = SignalSpec::Sse(match s {
                SignalArg::FiveEvents => SseSignalSpec::default(),
                SignalArg::TwoUnequal => SseSignalSpec::two_events_unequal(),
                SignalArg::TwoEqual => SseSignalSpec::two_events_equal(),
            });
        }
        if let Some(levels) = &self.levels {
            exp.noise_grid = levels.clone();
        }
        if let Some(n) = self.seeds_per_level {
            exp.seeds_per_level = n;
        }
        if let Some(n) = self.segment_len.or(file.segment_len) {
            exp.segment_len = n;
        }
        if let Some(z) = self.zeta {
            exp.aic.threshold = z;
        }
        if let Some(v) = self.ensemble.v {
            exp.v = v;
        }
        if let Some(seed) = self.ensemble.seed.or(file.seed) {
            exp.master_seed = seed;
        }
        exp.validate()?;
        Ok(exp)
    }
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    /// Threshold constants to evaluate, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.8,0.9,1.0,1.1,1.2")]
    pub constants: Vec<f64>,
    #[arg(long, default_value_t = 365)]
    pub length: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Largest acceptable false-positive rate.
    #[arg(long, default_value_t = 0.01)]
    pub target: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

fn component(flag: Option<Component>, file: &FileConfig) -> Component {
    flag.or(file.component).unwrap_or_default()
}

/// Resolve the command into a run spec and the directory it writes to.
pub fn resolve(command: &Command) -> CliResult<(RunSpec, PathBuf)> {
    Ok(match command {
        Command::Detect(a) => {
            let file = FileConfig::load(a.ensemble.config.as_deref())?;
            let spec = RunSpec::Detect {
                input: a.input.clone(),
                component: component(a.component, &file),
                ssaid: a.ensemble.resolve(&file)?,
            };
            (spec, a.out_dir.clone())
        }
        Command::DetectSliding { detect: a, segment_len } => {
            let file = FileConfig::load(a.ensemble.config.as_deref())?;
            let spec = RunSpec::DetectSliding {
                input: a.input.clone(),
                component: component(a.component, &file),
                ssaid: a.ensemble.resolve(&file)?,
                segment_len: *segment_len,
            };
            (spec, a.out_dir.clone())
        }
        Command::Simulate(a) => {
            let file = FileConfig::load(a.config.as_deref())?;
            let mut signal = file.simulate()?;
            if let Some(n) = a.events {
                signal.n_events = n;
            }
            if let Some(d) = a.duration {
                signal.event_duration = d;
            }
            if let Some(r) = a.recurrence {
                signal.recurrence = r;
            }
            if a.first_event.is_some() {
                signal.first_event = a.first_event;
            }
            if let Some(n) = a.length {
                signal.length_days = n;
            }
            if let Some(s) = a.slope {
                signal.inter_event_slope = s;
            }
            if let Some(amp) = &a.amplitude {
                signal.event_amplitudes = amp.clone();
            }
            if let Some(r) = a.ramp {
                signal.ramp_shape = r.into();
            }
            signal.validate()?;
            let file_name = a
                .out
                .file_name()
                .and_then(|n| n.to_str())
                .ok_or_else(|| CliError::Input(format!("bad output path {}", a.out.display())))?
                .to_string();
            let dir = a.out.parent().map(PathBuf::from).unwrap_or_default();
            let dir = if dir.as_os_str().is_empty() { PathBuf::from(".") } else { dir };
            (RunSpec::Simulate { signal, noise: a.noise, seed: a.seed, file_name }, dir)
        }
        Command::Baseline(a) => {
            let file = FileConfig::load(a.config.as_deref())?;
            let mut aic = file.aic()?;
            if let Some(w) = a.window {
                aic.window_days = w;
            }
            if let Some(z) = a.zeta {
                aic.threshold = z;
            }
            aic.validate()?;
            let spec = RunSpec::Baseline {
                input: a.input.clone(),
                component: component(a.component, &file),
                aic,
            };
            (spec, a.out_dir.clone())
        }
        Command::SnlScan(a) => (RunSpec::SnlScan { experiment: a.resolve()? }, a.out_dir.clone()),
        Command::Bench { scan, param, values } => {
            let param = match param {
                ParamArg::Q => SweepParam::Q,
                ParamArg::L => SweepParam::L,
            };
            let spec = RunSpec::Bench {
                experiment: scan.resolve()?,
                param,
                values: values.clone(),
            };
            (spec, scan.out_dir.clone())
        }
        Command::Calibrate(a) => {
            let spec = RunSpec::Calibrate {
                constants: a.constants.clone(),
                length: a.length,
                trials: a.trials,
                target: a.target,
                seed: a.seed,
                id: IdConfig::default(),
            };
            (spec, a.out_dir.clone())
        }
        Command::Replay { manifest, out_dir } => (Manifest::read(manifest)?.run, out_dir.clone()),
    })
}

pub fn run(cli: &Cli) -> CliResult<Vec<PathBuf>> {
    let (spec, dir) = resolve(&cli.command)?;
    match cli.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Internal(e.to_string()))?;
            pool.install(|| execute(&spec, &dir))
        }
        None => execute(&spec, &dir),
    }
}
