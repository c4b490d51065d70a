//! Deterministic discrete-time simulator for deep spiking neural
//! networks.
//!
//! The crate covers the full conversion-and-evaluation path: DNN weights
//! come in, spiking networks under one of five neural coding schemes
//! (rate, phase, burst, time-to-first-spike, time-to-average-spike) come
//! out, spike deletion and jitter noise can be injected into every
//! inter-layer train, and two compensation mechanisms (deletion-aware
//! weight scaling and burst-sum normalization) counteract the noise.
//! Everything is reproducible: the generator is pinned to ChaCha8 and all
//! randomness flows from explicit seeds.

pub mod coding;
pub mod dnn;
pub mod error;
pub mod network;
pub mod neuron;
pub mod noise;
pub mod robustness;
pub mod snnx;
pub mod train;

pub use coding::{decode, encode, output_layer_readout, CodingConfig, CodingScheme};
pub use dnn::{Conv2d, Dense, DnnForward, DnnLayer, DnnModel};
pub use error::{CoreError, Result};
pub use network::{
    batch_evaluate, simulate, simulate_trace, threshold_search, EvalSummary, SimResult, SimTrace,
    SnnLayer, SnnModel,
};
pub use neuron::{psc_value, NeuronState, PscKernel, ResetMode};
pub use noise::{
    apply_noise, delete_spikes, expected_psc_after_deletion, jitter_spikes, NoiseConfig,
};
pub use robustness::{
    apply_plan, choose_scale_factor, linear_scale_factor, scale_weights, ttas_scale_factor,
    AppliedScale, ScalePlan, ScaleProvenance,
};
pub use train::{SpikeEvent, SpikeTrain};
