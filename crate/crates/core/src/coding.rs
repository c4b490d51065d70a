//! Neural coding schemes: rate, phase, burst, TTFS and TTAS.
//!
//! Encoding maps a normalized activation in `[0, 1]` to a spike train
//! over a window of `T` steps; decoding inverts it. All encoders are
//! deterministic so that noise experiments are not confounded by input
//! sampling.
//!
//! Scheme internals:
//! - rate: `N = round(v * T)` evenly spaced unit spikes, decoded as `N / T`.
//! - phase: binary expansion of `v` across slots of weight
//!   `2^-(1 + (t mod K))`, most significant bit first, repeated in every
//!   complete period; decoded as the weighted sum averaged over periods.
//! - burst: `round(v * T)` spikes front-loaded with per-step multiplicity
//!   up to `burst_cap`, decoded as total count over `T`.
//! - ttfs: one spike at `t_f = round(-tau * ln v)`, decoded as
//!   `exp(-t_f / tau)`; an empty train decodes to 0.
//! - ttas: a phasic burst of `t_a` consecutive spikes starting at the
//!   TTFS time, decoded as `C_A * sum(exp(-t / tau))` with the burst
//!   normalization factor `C_A`.

use crate::error::{CoreError, Result};
use crate::neuron::PscKernel;
use crate::robustness::ttas_scale_factor;
use crate::train::{SpikeEvent, SpikeTrain};

/// The five supported coding schemes.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum CodingScheme {
    Rate,
    Phase,
    Burst,
    Ttfs,
    Ttas,
}

impl CodingScheme {
    pub fn name(&self) -> &'static str {
        match self {
            CodingScheme::Rate => "rate",
            CodingScheme::Phase => "phase",
            CodingScheme::Burst => "burst",
            CodingScheme::Ttfs => "ttfs",
            CodingScheme::Ttas => "ttas",
        }
    }

    /// Threshold defaults from the empirical search: 0.4 for rate and
    /// burst, 1.2 for phase, 0.8 for TTFS (and TTAS, which must match
    /// TTFS at `t_a = 1`).
    pub fn default_theta(&self) -> f64 {
        match self {
            CodingScheme::Rate | CodingScheme::Burst => 0.4,
            CodingScheme::Phase => 1.2,
            CodingScheme::Ttfs | CodingScheme::Ttas => 0.8,
        }
    }

    pub fn parse(s: &str) -> Option<CodingScheme> {
        match s {
            "rate" => Some(CodingScheme::Rate),
            "phase" => Some(CodingScheme::Phase),
            "burst" => Some(CodingScheme::Burst),
            "ttfs" => Some(CodingScheme::Ttfs),
            "ttas" => Some(CodingScheme::Ttas),
            _ => None,
        }
    }

    /// PSC kernel used by the scheme: delta for the count-based family,
    /// exponential for the timing-based family.
    pub fn kernel(&self, tau: f64) -> PscKernel {
        match self {
            CodingScheme::Ttfs | CodingScheme::Ttas => PscKernel::Exponential { tau },
            _ => PscKernel::Delta,
        }
    }
}

/// Scheme tag plus scheme parameters.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CodingConfig {
    pub scheme: CodingScheme,
    /// Window length `T` in timesteps.
    pub window: u32,
    /// Firing threshold `theta`.
    pub theta: f64,
    /// Phase period `K` (phase coding).
    pub phase_period: u32,
    /// Max spikes per step (burst coding).
    pub burst_cap: u32,
    /// Kernel decay constant in timesteps (ttfs/ttas).
    pub tau: f64,
    /// Burst duration `t_a` (ttas; 1 reproduces ttfs).
    pub burst_duration: u32,
    /// Optional threshold decay constant for the timing schemes; `None`
    /// keeps the threshold constant.
    pub theta_decay: Option<f64>,
}

impl CodingConfig {
    pub fn rate(window: u32, theta: f64) -> Self {
        CodingConfig {
            scheme: CodingScheme::Rate,
            window,
            theta,
            phase_period: 8,
            burst_cap: 1,
            tau: 1.0,
            burst_duration: 1,
            theta_decay: None,
        }
    }

    pub fn phase(window: u32, theta: f64, period: u32) -> Self {
        CodingConfig {
            scheme: CodingScheme::Phase,
            phase_period: period,
            ..CodingConfig::rate(window, theta)
        }
    }

    pub fn burst(window: u32, theta: f64, cap: u32) -> Self {
        CodingConfig {
            scheme: CodingScheme::Burst,
            burst_cap: cap,
            ..CodingConfig::rate(window, theta)
        }
    }

    pub fn ttfs(window: u32, theta: f64, tau: f64) -> Self {
        CodingConfig {
            scheme: CodingScheme::Ttfs,
            tau,
            burst_duration: 1,
            ..CodingConfig::rate(window, theta)
        }
    }

    pub fn ttas(window: u32, theta: f64, tau: f64, t_a: u32) -> Self {
        CodingConfig {
            scheme: CodingScheme::Ttas,
            tau,
            burst_duration: t_a,
            ..CodingConfig::rate(window, theta)
        }
    }

    /// Check the scheme invariants.
    pub fn validate(&self) -> Result<()> {
        if self.window < 1 {
            return Err(CoreError::invalid_config("window must be >= 1"));
        }
        if !(self.theta > 0.0) || !self.theta.is_finite() {
            return Err(CoreError::invalid_config("theta must be positive"));
        }
        match self.scheme {
            CodingScheme::Phase => {
                if self.phase_period < 2 {
                    return Err(CoreError::invalid_config("phase period K must be >= 2"));
                }
            }
            CodingScheme::Burst => {
                if self.burst_cap < 1 {
                    return Err(CoreError::invalid_config("burst cap must be >= 1"));
                }
            }
            CodingScheme::Ttfs | CodingScheme::Ttas => {
                if !(self.tau > 0.0) {
                    return Err(CoreError::invalid_config("tau must be positive"));
                }
                if self.burst_duration < 1 {
                    return Err(CoreError::invalid_config("burst duration t_a must be >= 1"));
                }
                if let Some(td) = self.theta_decay {
                    if !(td > 0.0) {
                        return Err(CoreError::invalid_config("theta decay must be positive"));
                    }
                }
            }
            CodingScheme::Rate => {}
        }
        Ok(())
    }

    /// PSC kernel for this configuration.
    pub fn kernel(&self) -> PscKernel {
        self.scheme.kernel(self.tau)
    }

    /// Burst normalization factor `C_A`; 1 for everything but ttas.
    pub fn burst_norm(&self) -> f64 {
        if self.scheme == CodingScheme::Ttas {
            ttas_scale_factor(&self.kernel(), self.burst_duration)
                .expect("validated t_a >= 1")
        } else {
            1.0
        }
    }
}

/// Phase slot weight `2^-(1 + (t mod K))`, most significant slot first.
pub fn phase_slot_weight(t: u32, period: u32) -> f64 {
    (2.0f64).powi(-(1 + (t % period) as i32))
}

/// Effective synaptic multiplier carried by an event of the given scheme.
/// Rate, ttfs and ttas spikes are unweighted; phase spikes carry the slot
/// weight; burst events carry their multiplicity.
pub fn synaptic_multiplier(cfg: &CodingConfig, time: u32, count: u32) -> f64 {
    let c = f64::from(count);
    match cfg.scheme {
        CodingScheme::Phase => c * phase_slot_weight(time, cfg.phase_period),
        _ => c,
    }
}

/// Effective threshold at step `t` for a neuron whose coding window
/// starts at `window_offset`.
///
/// Phase neurons compare against the slot-weighted threshold so that a
/// period emits the binary expansion of the accumulated potential. The
/// timing schemes optionally decay the threshold exponentially from the
/// window start, which converts a settled membrane potential into a
/// first-spike time.
pub fn effective_theta(cfg: &CodingConfig, t: u32, window_offset: u32) -> f64 {
    match cfg.scheme {
        CodingScheme::Phase => cfg.theta * phase_slot_weight(t, cfg.phase_period),
        CodingScheme::Ttfs | CodingScheme::Ttas => match cfg.theta_decay {
            Some(tau_theta) => {
                let dt = f64::from(t) - f64::from(window_offset);
                cfg.theta * (-dt / tau_theta).exp()
            }
            None => cfg.theta,
        },
        _ => cfg.theta,
    }
}

/// Encode a normalized activation into a spike train.
pub fn encode(value: f64, cfg: &CodingConfig) -> Result<SpikeTrain> {
    cfg.validate()?;
    if !(0.0..=1.0).contains(&value) || !value.is_finite() {
        return Err(CoreError::invalid_input(format!(
            "value {value} outside [0, 1]"
        )));
    }
    let t_len = cfg.window;
    let train = match cfg.scheme {
        CodingScheme::Rate => {
            let n = (value * f64::from(t_len)).round() as u32;
            let times: Vec<u32> = (0..n)
                .map(|k| ((u64::from(k) * u64::from(t_len)) / u64::from(n.max(1))) as u32)
                .collect();
            SpikeTrain::from_unit_times(times)
        }
        CodingScheme::Phase => {
            let k = cfg.phase_period;
            let full_periods = t_len / k;
            let slots = if full_periods >= 1 { k } else { t_len };
            let bits = quantize_bits(value, k);
            let mut times = Vec::new();
            let periods = full_periods.max(1);
            for q in 0..periods {
                for m in 0..slots {
                    if (bits >> (k - 1 - m)) & 1 == 1 {
                        times.push(q * k + m);
                    }
                }
            }
            SpikeTrain::from_unit_times(times)
        }
        CodingScheme::Burst => {
            let mut remaining = (value * f64::from(t_len)).round() as u32;
            let mut events = Vec::new();
            let mut t = 0;
            while remaining > 0 {
                let c = remaining.min(cfg.burst_cap);
                events.push(SpikeEvent { time: t, count: c });
                remaining -= c;
                t += 1;
            }
            SpikeTrain::new(events, t_len)?
        }
        CodingScheme::Ttfs | CodingScheme::Ttas => {
            if value == 0.0 {
                SpikeTrain::empty()
            } else {
                let t_f = ((-cfg.tau * value.ln()).round() as i64).clamp(0, i64::from(t_len) - 1)
                    as u32;
                let dur = if cfg.scheme == CodingScheme::Ttas {
                    cfg.burst_duration
                } else {
                    1
                };
                let times: Vec<u32> = (0..dur)
                    .map(|i| t_f + i)
                    .take_while(|&t| t < t_len)
                    .collect();
                SpikeTrain::from_unit_times(times)
            }
        }
    };
    Ok(train)
}

/// Decode a spike train back into an activation estimate.
pub fn decode(train: &SpikeTrain, cfg: &CodingConfig) -> f64 {
    match cfg.scheme {
        CodingScheme::Rate | CodingScheme::Burst => {
            train.total_count() as f64 / f64::from(cfg.window)
        }
        CodingScheme::Phase => {
            let periods = (cfg.window / cfg.phase_period).max(1);
            let sum: f64 = train
                .events()
                .iter()
                .map(|e| f64::from(e.count) * phase_slot_weight(e.time, cfg.phase_period))
                .sum();
            sum / f64::from(periods)
        }
        CodingScheme::Ttfs => match train.first_time() {
            Some(t) => (-f64::from(t) / cfg.tau).exp(),
            None => 0.0,
        },
        CodingScheme::Ttas => {
            if train.is_empty() {
                return 0.0;
            }
            let sum: f64 = train
                .events()
                .iter()
                .map(|e| f64::from(e.count) * (-f64::from(e.time) / cfg.tau).exp())
                .sum();
            cfg.burst_norm() * sum
        }
    }
}

/// Argmax over accumulated output potentials; ties break to the lowest
/// class index. The spike counts are accepted for interface parity with
/// count-based readouts but the potential readout does not consult them.
pub fn output_layer_readout(
    potentials: &[f64],
    _spike_counts: &[u64],
    _cfg: &CodingConfig,
) -> Result<usize> {
    if potentials.is_empty() {
        return Err(CoreError::invalid_input("empty class vector"));
    }
    let mut best = 0;
    for (i, &p) in potentials.iter().enumerate() {
        if p > potentials[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Truncate `value` to `bits` binary fraction digits, clamping 1.0 to the
/// all-ones pattern.
fn quantize_bits(value: f64, bits: u32) -> u64 {
    let scaled = (value * (2.0f64).powi(bits as i32)).floor() as u64;
    scaled.min((1u64 << bits) - 1)
}
