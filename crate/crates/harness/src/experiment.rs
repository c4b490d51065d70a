//! Experiment configuration, sweep orchestration and CSV result output.
//!
//! A sweep evaluates one coding scheme over a (deletion p) x (jitter
//! sigma) grid. Grid points are independent and run on a worker pool;
//! rows are sorted before emission so the CSV bytes depend only on the
//! configuration and seed. Wall-clock timings go to stderr, never into
//! the CSV.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use spikebench_core::coding::{CodingConfig, CodingScheme};
use spikebench_core::network::{batch_evaluate, SnnModel};
use spikebench_core::noise::NoiseConfig;
use spikebench_core::robustness::{
    apply_plan, choose_scale_factor, ttas_scale_factor, ScalePlan, ScaleProvenance,
};
use spikebench_core::snnx;

use crate::error::{HarnessError, Result};
use crate::idx;

/// Weight-scaling mode for noisy grid points.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleMode {
    /// `C = 1 / (1 - p)` per grid point.
    Auto,
    /// No deletion compensation.
    #[default]
    Off,
    /// Fixed factor for every point.
    Fixed(f64),
}

impl ScaleMode {
    pub fn parse(s: &str) -> Result<ScaleMode> {
        match s {
            "auto" => Ok(ScaleMode::Auto),
            "off" => Ok(ScaleMode::Off),
            other => other
                .parse::<f64>()
                .map(ScaleMode::Fixed)
                .map_err(|_| HarnessError::config(format!("bad weight-scale {other:?}"))),
        }
    }
}

/// Full description of one sweep, assembled from flags and optionally a
/// JSON config file (flags win).
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ExperimentConfig {
    pub model: PathBuf,
    pub dataset: PathBuf,
    pub out: PathBuf,
    #[serde(default)]
    pub coding: Option<CodingScheme>,
    #[serde(default)]
    pub timesteps: Option<u32>,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub phase_period: Option<u32>,
    #[serde(default)]
    pub burst_cap: Option<u32>,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub burst_duration: Option<u32>,
    /// Threshold decay constant; 0 disables, absent uses the scheme
    /// policy (tau for the timing schemes).
    #[serde(default)]
    pub theta_decay: Option<f64>,
    /// Sequential per-layer coding windows; absent enables them for the
    /// timing schemes.
    #[serde(default)]
    pub staged_windows: Option<bool>,
    #[serde(default)]
    pub deletion_ps: Vec<f64>,
    #[serde(default)]
    pub jitter_sigmas: Vec<f64>,
    #[serde(default)]
    pub trials: Option<u32>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub weight_scale: ScaleMode,
    /// Cap on evaluated samples; absent uses the whole dataset.
    #[serde(default)]
    pub samples: Option<usize>,
}

/// One aggregated grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scheme: String,
    pub p: f64,
    pub sigma: f64,
    pub accuracy: f64,
    pub mean_spikes: f64,
    pub mean_latency: f64,
    /// Diagnostic only; excluded from the CSV so byte-determinism holds.
    pub wall_ms: u64,
}

pub const CSV_HEADER: &str = "scheme,p,sigma,accuracy,mean_spike_count,mean_latency_steps";

/// Default windows: 100 steps for the count schemes, 108 for the timing
/// schemes (36 per stage on the bundled three-layer model).
pub fn default_timesteps(scheme: CodingScheme) -> u32 {
    match scheme {
        CodingScheme::Ttfs | CodingScheme::Ttas => 108,
        _ => 100,
    }
}

/// Build the coding config for a scheme from optional overrides, applying
/// the harness policy for the timing schemes: staged windows plus a
/// threshold decay equal to the kernel tau (both opt-out).
pub fn build_coding(
    scheme: CodingScheme,
    n_layers: usize,
    timesteps: Option<u32>,
    theta: Option<f64>,
    phase_period: Option<u32>,
    burst_cap: Option<u32>,
    tau: Option<f64>,
    burst_duration: Option<u32>,
    theta_decay: Option<f64>,
) -> Result<CodingConfig> {
    let t_len = timesteps.unwrap_or_else(|| default_timesteps(scheme));
    let theta = theta.unwrap_or_else(|| scheme.default_theta());
    let cfg = match scheme {
        CodingScheme::Rate => CodingConfig::rate(t_len, theta),
        CodingScheme::Phase => CodingConfig::phase(t_len, theta, phase_period.unwrap_or(8)),
        CodingScheme::Burst => CodingConfig::burst(t_len, theta, burst_cap.unwrap_or(5)),
        CodingScheme::Ttfs | CodingScheme::Ttas => {
            let t_sub = (t_len / n_layers as u32).max(1);
            let tau = tau.unwrap_or_else(|| f64::from(t_sub));
            let mut cfg = if scheme == CodingScheme::Ttfs {
                CodingConfig::ttfs(t_len, theta, tau)
            } else {
                CodingConfig::ttas(t_len, theta, tau, burst_duration.unwrap_or(4))
            };
            cfg.theta_decay = match theta_decay {
                Some(d) => (d != 0.0).then_some(d),
                None => Some(tau),
            };
            cfg
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Load the model file and produce the base (unscaled) SNN according to
/// the config: converted files are used as-is, raw DNN files are
/// converted using the coding flags.
pub fn load_base_model(cfg: &ExperimentConfig) -> Result<SnnModel> {
    let file = snnx::load(&cfg.model)?;
    match (&file.coding, cfg.coding) {
        (Some(_), Some(_)) => Err(HarnessError::config(
            "model file already carries coding metadata; drop --coding or convert a raw model",
        )),
        (Some(_), None) => Ok(file.snn()?),
        (None, Some(scheme)) => {
            let dnn = file.dnn()?;
            let coding = build_coding(
                scheme,
                dnn.layers.len(),
                cfg.timesteps,
                cfg.theta,
                cfg.phase_period,
                cfg.burst_cap,
                cfg.tau,
                cfg.burst_duration,
                cfg.theta_decay,
            )?;
            let mut snn = SnnModel::convert_uniform(&dnn, coding, cfg.theta.unwrap_or_else(|| scheme.default_theta()))?;
            let staged = cfg
                .staged_windows
                .unwrap_or(matches!(scheme, CodingScheme::Ttfs | CodingScheme::Ttas));
            if staged {
                let t_sub = (snn.coding.window / snn.layers.len() as u32).max(1);
                snn.set_staged_windows(t_sub);
            }
            Ok(snn)
        }
        (None, None) => Err(HarnessError::config(
            "model file is a raw DNN; pass --coding to convert it",
        )),
    }
}

/// Scale plan for one grid point: the deletion compensator per the mode,
/// with the burst normalization folded in for TTAS models.
pub fn point_plan(snn: &SnnModel, mode: ScaleMode, p: f64) -> Result<ScalePlan> {
    let (c, provenance) = match mode {
        ScaleMode::Auto => {
            if p >= 1.0 {
                return Err(HarnessError::config(
                    "auto weight scale needs deletion p < 1",
                ));
            }
            (choose_scale_factor(p)?, ScaleProvenance::AutoFromP)
        }
        ScaleMode::Off => (1.0, ScaleProvenance::Off),
        ScaleMode::Fixed(c) => (c, ScaleProvenance::Manual),
    };
    let c_a = if snn.coding.scheme == CodingScheme::Ttas {
        ttas_scale_factor(&snn.coding.kernel(), snn.coding.burst_duration)?
    } else {
        1.0
    };
    Ok(ScalePlan {
        c,
        c_a,
        provenance,
        scale_biases: true,
    })
}

/// Evaluate one grid point.
pub fn run_point(
    base: &SnnModel,
    data: &[(Vec<f64>, usize)],
    mode: ScaleMode,
    p: f64,
    sigma: f64,
    seed: u64,
    trials: u32,
) -> Result<ResultRow> {
    let start = Instant::now();
    let plan = point_plan(base, mode, p)?;
    let model = apply_plan(base, &plan)?;
    let noise = NoiseConfig::new(p, sigma, seed);
    noise.validate().map_err(HarnessError::Core)?;
    let eval = batch_evaluate(&model, data, &noise, trials)?;
    Ok(ResultRow {
        scheme: base.coding.scheme.name().to_string(),
        p,
        sigma,
        accuracy: eval.accuracy,
        mean_spikes: eval.mean_spikes,
        mean_latency: eval.mean_latency,
        wall_ms: start.elapsed().as_millis() as u64,
    })
}

fn sorted_grid(values: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = if values.is_empty() {
        vec![0.0]
    } else {
        values.to_vec()
    };
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite grid values"));
    v.dedup();
    v
}

/// Trials for a grid point: explicit override, else 10 for noisy points
/// and 1 for the clean point.
pub fn trials_for_point(explicit: Option<u32>, p: f64, sigma: f64) -> u32 {
    explicit.unwrap_or(if p == 0.0 && sigma == 0.0 { 1 } else { 10 })
}

/// Run the full sweep grid and return rows in deterministic
/// (scheme, p, sigma) order.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let base = load_base_model(cfg)?;
    let dataset = idx::load_idx(&cfg.dataset)?;
    if dataset.is_empty() {
        return Err(HarnessError::config("dataset is empty"));
    }
    let data = dataset.pairs(cfg.samples);
    let ps = sorted_grid(&cfg.deletion_ps);
    let sigmas = sorted_grid(&cfg.jitter_sigmas);
    let points: Vec<(f64, f64)> = ps
        .iter()
        .flat_map(|&p| sigmas.iter().map(move |&s| (p, s)))
        .collect();
    let mut rows = points
        .par_iter()
        .map(|&(p, sigma)| {
            run_point(
                &base,
                &data,
                cfg.weight_scale,
                p,
                sigma,
                cfg.seed,
                trials_for_point(cfg.trials, p, sigma),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        (a.p, a.sigma)
            .partial_cmp(&(b.p, b.sigma))
            .expect("finite grid values")
    });
    Ok(rows)
}

/// Render rows as CSV (RFC-4180-style, `.` decimal, LF line ends).
pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.scheme, r.p, r.sigma, r.accuracy, r.mean_spikes, r.mean_latency
        )
        .expect("string write");
    }
    out
}

pub fn write_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    std::fs::write(path, rows_to_csv(rows))?;
    Ok(())
}

/// Parse a CSV produced by [`write_csv`] back into rows.
pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let text = std::fs::read_to_string(path)?;
    parse_csv(&text)
}

pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => {
            return Err(HarnessError::Format {
                offset: 0,
                msg: format!("bad CSV header {other:?}"),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(HarnessError::Format {
                offset: i as u64 + 1,
                msg: format!("row {i} has {} fields", fields.len()),
            });
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| HarnessError::Format {
                offset: i as u64 + 1,
                msg: format!("bad number {s:?}"),
            })
        };
        rows.push(ResultRow {
            scheme: fields[0].to_string(),
            p: num(fields[1])?,
            sigma: num(fields[2])?,
            accuracy: num(fields[3])?,
            mean_spikes: num(fields[4])?,
            mean_latency: num(fields[5])?,
            wall_ms: 0,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows() -> Vec<ResultRow> {
        vec![
            ResultRow {
                scheme: "rate".into(),
                p: 0.0,
                sigma: 0.0,
                accuracy: 0.97,
                mean_spikes: 10432.5,
                mean_latency: 100.0,
                wall_ms: 12,
            },
            ResultRow {
                scheme: "rate".into(),
                p: 0.5,
                sigma: 2.0,
                accuracy: 0.81,
                mean_spikes: 5120.25,
                mean_latency: 100.0,
                wall_ms: 48,
            },
        ]
    }

    #[test]
    fn csv_round_trips_through_own_reader() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let rows = sample_rows();
        write_csv(&path, &rows).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(back.len(), rows.len());
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(a.scheme, b.scheme);
            assert_eq!(a.p, b.p);
            assert_eq!(a.sigma, b.sigma);
            assert_eq!(a.accuracy, b.accuracy);
            assert_eq!(a.mean_spikes, b.mean_spikes);
            assert_eq!(a.mean_latency, b.mean_latency);
        }
    }

    #[test]
    fn csv_rendering_is_stable() {
        let text = rows_to_csv(&sample_rows());
        assert_eq!(
            text,
            "scheme,p,sigma,accuracy,mean_spike_count,mean_latency_steps\n\
             rate,0,0,0.97,10432.5,100\n\
             rate,0.5,2,0.81,5120.25,100\n"
        );
    }

    #[test]
    fn csv_reader_rejects_malformed_input() {
        assert!(parse_csv("nonsense\n").is_err());
        let bad = format!("{CSV_HEADER}\nrate,0,0,x,1,2\n");
        assert!(parse_csv(&bad).is_err());
        let short = format!("{CSV_HEADER}\nrate,0,0,1\n");
        assert!(parse_csv(&short).is_err());
    }

    #[test]
    fn trials_default_to_ten_for_noisy_points() {
        assert_eq!(trials_for_point(None, 0.0, 0.0), 1);
        assert_eq!(trials_for_point(None, 0.2, 0.0), 10);
        assert_eq!(trials_for_point(None, 0.0, 1.5), 10);
        assert_eq!(trials_for_point(Some(3), 0.5, 0.0), 3);
    }

    #[test]
    fn scale_mode_parses_all_variants() {
        assert_eq!(ScaleMode::parse("auto").unwrap(), ScaleMode::Auto);
        assert_eq!(ScaleMode::parse("off").unwrap(), ScaleMode::Off);
        assert_eq!(ScaleMode::parse("2.5").unwrap(), ScaleMode::Fixed(2.5));
        assert!(ScaleMode::parse("maybe").is_err());
    }

    #[test]
    fn grids_default_to_zero_and_sort() {
        assert_eq!(sorted_grid(&[]), vec![0.0]);
        assert_eq!(sorted_grid(&[0.5, 0.1, 0.5]), vec![0.1, 0.5]);
    }
}
