//! Command-line interface: `convert`, `threshold-search`, `run`, `sweep`
//! and `make-toy`. Flags mirror the experiment config fields; `sweep`
//! also accepts a JSON config file, with explicit flags taking
//! precedence over file values.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use spikebench_core::coding::CodingScheme;
use spikebench_core::network::threshold_search;
use spikebench_core::snnx::{self, ModelFile};

use crate::error::{HarnessError, Result};
use crate::experiment::{
    build_coding, load_base_model, run_point, run_sweep, trials_for_point, write_csv,
    ExperimentConfig, ScaleMode,
};
use crate::idx;
use crate::toy::{generate_toy_model, parse_layer_spec};

fn parse_scheme(s: &str) -> std::result::Result<CodingScheme, String> {
    CodingScheme::parse(s).ok_or_else(|| format!("unknown coding scheme {s:?}"))
}

fn parse_scale_mode(s: &str) -> std::result::Result<ScaleMode, String> {
    ScaleMode::parse(s).map_err(|e| e.to_string())
}

#[derive(Parser, Debug)]
#[command(
    name = "spikebench",
    version,
    about = "Deterministic spiking-network noise benchmarks",
    propagate_version = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Convert a raw DNN model file into a spiking model
    Convert(ConvertArgs),
    /// Grid-search the firing threshold on a calibration batch
    ThresholdSearch(ThresholdSearchArgs),
    /// Evaluate a model at one noise point
    Run(RunArgs),
    /// Evaluate a deletion/jitter grid and write a CSV
    Sweep(SweepArgs),
    /// Generate a deterministic synthetic MLP model file
    MakeToy(MakeToyArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CodingArgs {
    /// Coding scheme: rate | phase | burst | ttfs | ttas
    #[arg(long, value_parser = parse_scheme)]
    pub coding: Option<CodingScheme>,
    /// Simulation window in timesteps
    #[arg(long)]
    pub timesteps: Option<u32>,
    /// Firing threshold (defaults per scheme: 0.4/1.2/0.4/0.8/0.8)
    #[arg(long)]
    pub theta: Option<f64>,
    /// Phase period K
    #[arg(long)]
    pub phase_period: Option<u32>,
    /// Burst-coding max spikes per step
    #[arg(long)]
    pub burst_cap: Option<u32>,
    /// PSC kernel decay constant for the timing schemes
    #[arg(long)]
    pub tau: Option<f64>,
    /// TTAS burst duration t_a
    #[arg(long)]
    pub burst_duration: Option<u32>,
    /// Threshold decay constant for the timing schemes; 0 disables
    #[arg(long)]
    pub theta_decay: Option<f64>,
    /// Stage per-layer coding windows sequentially
    #[arg(long)]
    pub staged_windows: Option<bool>,
}

#[derive(Args, Debug)]
pub struct ConvertArgs {
    /// Raw DNN model file (SNNX)
    #[arg(long)]
    pub model: PathBuf,
    /// Output spiking model file (SNNX)
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub coding: CodingArgs,
}

#[derive(Args, Debug)]
pub struct ThresholdSearchArgs {
    /// Converted spiking model file
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset base path (expects <base>-images.idx3 / <base>-labels.idx1)
    #[arg(long)]
    pub dataset: PathBuf,
    /// Comma-separated threshold candidates
    #[arg(long)]
    pub grid: String,
    /// Calibration batch size
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    /// Write the model with the selected threshold here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[command(flatten)]
    pub coding: CodingArgs,
    /// Spike deletion probability
    #[arg(long, default_value_t = 0.0)]
    pub deletion_p: f64,
    /// Spike jitter standard deviation (timesteps)
    #[arg(long, default_value_t = 0.0)]
    pub jitter_sigma: f64,
    /// Trials (seeds) to average; defaults to 10 noisy / 1 clean
    #[arg(long)]
    pub trials: Option<u32>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Weight scaling: auto | off | <float>
    #[arg(long, value_parser = parse_scale_mode, default_value = "off")]
    pub weight_scale: ScaleMode,
    /// Cap on evaluated samples
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// JSON config file; explicit flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Output CSV path
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub coding: CodingArgs,
    /// Deletion probability grid point (repeatable)
    #[arg(long = "deletion-p")]
    pub deletion_ps: Vec<f64>,
    /// Jitter sigma grid point (repeatable)
    #[arg(long = "jitter-sigma")]
    pub jitter_sigmas: Vec<f64>,
    #[arg(long)]
    pub trials: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = parse_scale_mode)]
    pub weight_scale: Option<ScaleMode>,
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Args, Debug)]
pub struct MakeToyArgs {
    /// Layer sizes, input first, e.g. 784,48,24,10
    #[arg(long)]
    pub layers: String,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Optional-everything mirror of [`ExperimentConfig`] for config files.
#[derive(Debug, Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    model: Option<PathBuf>,
    dataset: Option<PathBuf>,
    out: Option<PathBuf>,
    coding: Option<CodingScheme>,
    timesteps: Option<u32>,
    theta: Option<f64>,
    phase_period: Option<u32>,
    burst_cap: Option<u32>,
    tau: Option<f64>,
    burst_duration: Option<u32>,
    theta_decay: Option<f64>,
    staged_windows: Option<bool>,
    deletion_ps: Option<Vec<f64>>,
    jitter_sigmas: Option<Vec<f64>>,
    trials: Option<u32>,
    seed: Option<u64>,
    weight_scale: Option<ScaleMode>,
    samples: Option<usize>,
}

impl SweepArgs {
    /// Merge flags over the optional config file into a full config.
    pub fn into_config(self) -> Result<ExperimentConfig> {
        let file: SweepFile = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                serde_json::from_str(&text)
                    .map_err(|e| HarnessError::config(format!("config file: {e}")))?
            }
            None => SweepFile::default(),
        };
        let require = |name: &str, v: Option<PathBuf>| {
            v.ok_or_else(|| HarnessError::config(format!("missing --{name}")))
        };
        Ok(ExperimentConfig {
            model: require("model", self.model.or(file.model))?,
            dataset: require("dataset", self.dataset.or(file.dataset))?,
            out: require("out", self.out.or(file.out))?,
            coding: self.coding.coding.or(file.coding),
            timesteps: self.coding.timesteps.or(file.timesteps),
            theta: self.coding.theta.or(file.theta),
            phase_period: self.coding.phase_period.or(file.phase_period),
            burst_cap: self.coding.burst_cap.or(file.burst_cap),
            tau: self.coding.tau.or(file.tau),
            burst_duration: self.coding.burst_duration.or(file.burst_duration),
            theta_decay: self.coding.theta_decay.or(file.theta_decay),
            staged_windows: self.coding.staged_windows.or(file.staged_windows),
            deletion_ps: if self.deletion_ps.is_empty() {
                file.deletion_ps.unwrap_or_default()
            } else {
                self.deletion_ps
            },
            jitter_sigmas: if self.jitter_sigmas.is_empty() {
                file.jitter_sigmas.unwrap_or_default()
            } else {
                self.jitter_sigmas
            },
            trials: self.trials.or(file.trials),
            seed: self.seed.or(file.seed).unwrap_or(0),
            weight_scale: self
                .weight_scale
                .or(file.weight_scale)
                .unwrap_or_default(),
            samples: self.samples.or(file.samples),
        })
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Convert(args) => cmd_convert(args),
        Command::ThresholdSearch(args) => cmd_threshold_search(args),
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::MakeToy(args) => cmd_make_toy(args),
    }
}

fn cmd_convert(args: ConvertArgs) -> Result<()> {
    let file = snnx::load(&args.model)?;
    if file.coding.is_some() {
        return Err(HarnessError::config(
            "model file already carries coding metadata",
        ));
    }
    let scheme = args
        .coding
        .coding
        .ok_or_else(|| HarnessError::config("convert needs --coding"))?;
    let dnn = file.dnn()?;
    let c = &args.coding;
    let coding = build_coding(
        scheme,
        dnn.layers.len(),
        c.timesteps,
        c.theta,
        c.phase_period,
        c.burst_cap,
        c.tau,
        c.burst_duration,
        c.theta_decay,
    )?;
    let theta = c.theta.unwrap_or_else(|| scheme.default_theta());
    let mut snn = spikebench_core::network::SnnModel::convert_uniform(&dnn, coding, theta)?;
    let staged = c
        .staged_windows
        .unwrap_or(matches!(scheme, CodingScheme::Ttfs | CodingScheme::Ttas));
    if staged {
        let t_sub = (snn.coding.window / snn.layers.len() as u32).max(1);
        snn.set_staged_windows(t_sub);
    }
    snnx::save(&args.out, &ModelFile::from_snn(&snn))?;
    println!(
        "converted {} -> {} ({} layers, scheme {}, T={}, theta={})",
        args.model.display(),
        args.out.display(),
        snn.layers.len(),
        scheme.name(),
        snn.coding.window,
        theta
    );
    Ok(())
}

fn cmd_threshold_search(args: ThresholdSearchArgs) -> Result<()> {
    let snn = snnx::load(&args.model)?.snn()?;
    let dataset = idx::load_idx(&args.dataset)?;
    let calib = dataset.pairs(Some(args.samples));
    let grid: Vec<f64> = args
        .grid
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| HarnessError::config(format!("bad grid value {s:?}")))
        })
        .collect::<Result<_>>()?;
    let theta = threshold_search(&snn, &calib, &grid)?;
    println!("selected theta {theta}");
    if let Some(out) = args.out {
        let tuned = snn.with_uniform_theta(theta);
        snnx::save(&out, &ModelFile::from_snn(&tuned))?;
        eprintln!("wrote {}", out.display());
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let cfg = ExperimentConfig {
        model: args.model,
        dataset: args.dataset,
        out: PathBuf::new(),
        coding: args.coding.coding,
        timesteps: args.coding.timesteps,
        theta: args.coding.theta,
        phase_period: args.coding.phase_period,
        burst_cap: args.coding.burst_cap,
        tau: args.coding.tau,
        burst_duration: args.coding.burst_duration,
        theta_decay: args.coding.theta_decay,
        staged_windows: args.coding.staged_windows,
        deletion_ps: vec![args.deletion_p],
        jitter_sigmas: vec![args.jitter_sigma],
        trials: args.trials,
        seed: args.seed,
        weight_scale: args.weight_scale,
        samples: args.samples,
    };
    let base = load_base_model(&cfg)?;
    let dataset = idx::load_idx(&cfg.dataset)?;
    let data = dataset.pairs(cfg.samples);
    if data.is_empty() {
        return Err(HarnessError::config("dataset is empty"));
    }
    let trials = trials_for_point(cfg.trials, args.deletion_p, args.jitter_sigma);
    let row = run_point(
        &base,
        &data,
        cfg.weight_scale,
        args.deletion_p,
        args.jitter_sigma,
        cfg.seed,
        trials,
    )?;
    println!(
        "scheme={} p={} sigma={} trials={trials} accuracy={:.4} mean_spikes={:.1} mean_latency={}",
        row.scheme, row.p, row.sigma, row.accuracy, row.mean_spikes, row.mean_latency
    );
    eprintln!("wall_ms={}", row.wall_ms);
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let cfg = args.into_config()?;
    let start = std::time::Instant::now();
    let rows = run_sweep(&cfg)?;
    write_csv(&cfg.out, &rows)?;
    println!("wrote {} rows to {}", rows.len(), cfg.out.display());
    eprintln!("sweep wall_ms={}", start.elapsed().as_millis());
    Ok(())
}

fn cmd_make_toy(args: MakeToyArgs) -> Result<()> {
    let sizes = parse_layer_spec(&args.layers)?;
    let model = generate_toy_model(&sizes, args.seed)?;
    snnx::save(&args.out, &ModelFile::from_dnn(&model))?;
    println!(
        "wrote synthetic model {} (layers {:?}, seed {})",
        args.out.display(),
        sizes,
        args.seed
    );
    Ok(())
}
