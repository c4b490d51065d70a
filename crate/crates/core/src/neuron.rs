//! Discrete-time integrate-and-fire dynamics.
//!
//! The timestep is fixed at 1, so membrane integration is plain per-step
//! accumulation. Three reset modes are supported: soft reset (subtract
//! threshold), reset to zero, and the phasic-burst reset that yields a
//! single onset burst followed by permanent silence. The burst variant is
//! the simplified integrate-and-fire-or-burst neuron: once the threshold
//! is first crossed at `t1`, the reset feed keeps the unit firing for
//! `t_a` consecutive steps, after which it is dead for the rest of the
//! window.

use crate::error::{CoreError, Result};
use crate::train::SpikeTrain;

/// Post-synaptic current kernel shapes.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum PscKernel {
    /// Unit impulse at the spike timestep.
    Delta,
    /// `exp(-(t - t_f)/tau)` for `t >= t_f`, zero before.
    Exponential { tau: f64 },
}

impl PscKernel {
    /// Kernel value at `dt` steps after the spike.
    pub fn value(&self, dt: u32) -> f64 {
        match self {
            PscKernel::Delta => {
                if dt == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            PscKernel::Exponential { tau } => (-f64::from(dt) / tau).exp(),
        }
    }

    /// Total discrete mass of the kernel, `sum_{dt >= 0} value(dt)`.
    ///
    /// Used to normalize the charge a single spike delivers downstream.
    pub fn mass(&self) -> f64 {
        match self {
            PscKernel::Delta => 1.0,
            PscKernel::Exponential { tau } => 1.0 / (1.0 - (-1.0 / tau).exp()),
        }
    }

    /// Per-step decay multiplier for incremental PSC accumulators.
    pub fn decay(&self) -> f64 {
        match self {
            PscKernel::Delta => 0.0,
            PscKernel::Exponential { tau } => (-1.0 / tau).exp(),
        }
    }
}

/// Reset behaviour applied after a fire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ResetMode {
    /// Soft reset: subtract the threshold, keeping the residual.
    SubtractThreshold,
    /// Hard reset to zero.
    ToZero,
    /// Phasic burst of `t_a` consecutive spikes starting at the first
    /// crossing, then permanent silence.
    PhasicBurst { t_a: u32 },
}

/// Per-neuron simulation state.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronState {
    /// Membrane potential in activation units.
    pub u: f64,
    /// First spike time, set once.
    pub t_first: Option<u32>,
    /// Remaining steps of the current burst window.
    pub burst_left: u32,
    /// Set when the phasic-burst window has elapsed; the neuron never
    /// fires again and its potential is frozen.
    pub dead: bool,
}

impl Default for NeuronState {
    fn default() -> Self {
        NeuronState::new()
    }
}

impl NeuronState {
    pub fn new() -> Self {
        NeuronState {
            u: 0.0,
            t_first: None,
            burst_left: 0,
            dead: false,
        }
    }

    /// State with a preloaded membrane potential (one-shot bias injection).
    pub fn with_potential(u0: f64) -> Self {
        NeuronState {
            u: u0,
            ..NeuronState::new()
        }
    }

    /// Accumulate one step of input current and bias current.
    ///
    /// Dead neurons are frozen and ignore input.
    pub fn integrate(&mut self, input_current: f64, bias: f64) -> Result<()> {
        if !input_current.is_finite() || !bias.is_finite() {
            return Err(CoreError::invalid_input(format!(
                "non-finite drive: current={input_current}, bias={bias}"
            )));
        }
        if self.dead {
            return Ok(());
        }
        self.u += input_current + bias;
        Ok(())
    }

    /// Firing condition: `u >= theta` and the neuron is alive.
    pub fn fire_check(&self, theta: f64) -> bool {
        debug_assert!(theta > 0.0, "threshold must stay positive");
        !self.dead && self.u >= theta
    }

    /// True while the phasic-burst window is open, in which case the
    /// neuron fires unconditionally this step.
    pub fn in_burst(&self, t: u32) -> bool {
        !self.dead && self.burst_left > 0 && self.t_first.is_some() && {
            let t1 = self.t_first.unwrap();
            t >= t1
        }
    }

    /// Apply the reset for a fire that happened at step `t`.
    pub fn apply_reset(&mut self, mode: ResetMode, theta: f64, t: u32) -> Result<()> {
        match mode {
            ResetMode::SubtractThreshold => {
                self.u -= theta;
                if self.t_first.is_none() {
                    self.t_first = Some(t);
                }
            }
            ResetMode::ToZero => {
                self.u = 0.0;
                if self.t_first.is_none() {
                    self.t_first = Some(t);
                }
            }
            ResetMode::PhasicBurst { t_a } => {
                if t_a == 0 {
                    return Err(CoreError::invalid_config("phasic burst needs t_a >= 1"));
                }
                if self.t_first.is_none() {
                    self.t_first = Some(t);
                    self.burst_left = t_a;
                }
                // The burst-window reset feed refills exactly what the fire
                // subtracts, so the membrane is left untouched here and the
                // remaining burst steps fire regardless of input.
                self.burst_left = self.burst_left.saturating_sub(1);
                if self.burst_left == 0 {
                    self.dead = true;
                }
            }
        }
        Ok(())
    }

    /// Per-step bookkeeping after the fire phase. For phasic-burst
    /// neurons this enforces death once the window `[t1, t1 + t_a)` has
    /// elapsed even if some burst step was clipped by the window end.
    pub fn end_step(&mut self, mode: ResetMode, t: u32) {
        if let ResetMode::PhasicBurst { t_a } = mode {
            if let Some(t1) = self.t_first {
                if t + 1 >= t1 + t_a {
                    self.dead = true;
                }
            }
        }
    }
}

/// Kernel-weighted influence of a spike train at step `t`:
/// `sum over events with time <= t of count * kernel(t - time)`.
pub fn psc_value(train: &SpikeTrain, kernel: &PscKernel, t: u32) -> f64 {
    train
        .events()
        .iter()
        .take_while(|e| e.time <= t)
        .map(|e| f64::from(e.count) * kernel.value(t - e.time))
        .sum()
}
