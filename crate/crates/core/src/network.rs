//! Layered feedforward SNNs converted from DNN weights, and the
//! discrete-time simulation that runs them.
//!
//! Conversion keeps the DNN weights untouched; the per-layer synaptic
//! gain applied during simulation is `theta_emitter / kernel_mass`, which
//! folds the emitting layer's threshold (1 for the input encoding) and
//! normalizes the charge of one spike. Layers advance in lockstep with a
//! one-step synaptic delay; because the topology is feedforward the
//! simulator can roll each layer out over the whole window before moving
//! on, which lets train-level noise (including backward jitter) be
//! applied between layers without lookahead. The output layer never
//! fires; classification reads its accumulated potential.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::coding::{
    decode, effective_theta, encode, output_layer_readout, synaptic_multiplier, CodingConfig,
    CodingScheme,
};
use crate::dnn::{DnnLayer, DnnModel};
use crate::error::{CoreError, Result};
use crate::neuron::{psc_value, NeuronState, PscKernel, ResetMode};
use crate::noise::{apply_noise, NoiseConfig};
use crate::robustness::AppliedScale;
use crate::train::{SpikeEvent, SpikeTrain};

/// One spiking layer: DNN parameters plus threshold and window offset.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SnnLayer {
    pub layer: DnnLayer,
    pub theta: f64,
    /// Start of this layer's coding window; 0 runs all layers
    /// concurrently, staged offsets give the timing schemes a settled
    /// membrane before their window opens.
    pub window_offset: u32,
    /// Length of the coding window for the timing schemes. Once it
    /// elapses a neuron that never fired is dead for the rest of the
    /// run (its value is zero); `None` leaves firing unrestricted.
    pub window_len: Option<u32>,
}

/// Converted spiking network.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SnnModel {
    pub input_shape: Vec<usize>,
    pub layers: Vec<SnnLayer>,
    pub coding: CodingConfig,
    /// Record of an applied scale plan; also the double-application guard.
    pub scale: Option<AppliedScale>,
}

/// Outcome of one simulated inference.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Argmax class of the output potentials.
    pub predicted: usize,
    /// Spike counts of the delivered (post-noise) trains: entry 0 is the
    /// input encoding, entry `k` is spiking layer `k - 1`.
    pub per_layer_spike_counts: Vec<u64>,
    pub total_spikes: u64,
    /// Mean decoded activation of each spiking hidden layer.
    pub per_layer_mean_activation: Vec<f64>,
    /// Accumulated output-layer potentials.
    pub output_potentials: Vec<f64>,
    pub elapsed_timesteps: u32,
}

/// Simulation outcome plus per-neuron detail used by tests and audits.
#[derive(Debug, Clone)]
pub struct SimTrace {
    pub result: SimResult,
    /// Delivered trains per layer: `[0]` input encoding, then one entry
    /// per spiking hidden layer.
    pub layer_trains: Vec<Vec<SpikeTrain>>,
    /// Decoded activation per unit for each spiking hidden layer.
    pub hidden_activations: Vec<Vec<f64>>,
}

/// Accuracy and cost aggregates over a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSummary {
    pub accuracy: f64,
    pub mean_spikes: f64,
    pub mean_latency: f64,
}

impl SnnModel {
    /// Convert a pretrained DNN: weights are copied, ReLU becomes spiking
    /// dynamics, `thetas` attaches one threshold per layer.
    pub fn convert(dnn: &DnnModel, coding: CodingConfig, thetas: &[f64]) -> Result<SnnModel> {
        dnn.validate()?;
        coding.validate()?;
        if thetas.len() != dnn.layers.len() {
            return Err(CoreError::invalid_input(format!(
                "{} thetas for {} layers",
                thetas.len(),
                dnn.layers.len()
            )));
        }
        for (i, layer) in dnn.layers.iter().enumerate() {
            if let DnnLayer::MaxPool2d { .. } = layer {
                return Err(CoreError::UnsupportedLayer {
                    index: i,
                    kind: layer.kind_name().to_string(),
                });
            }
        }
        if thetas.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(CoreError::invalid_input("thresholds must be positive"));
        }
        Ok(SnnModel {
            input_shape: dnn.input_shape.clone(),
            layers: dnn
                .layers
                .iter()
                .zip(thetas)
                .map(|(layer, &theta)| SnnLayer {
                    layer: layer.clone(),
                    theta,
                    window_offset: 0,
                    window_len: None,
                })
                .collect(),
            coding,
            scale: None,
        })
    }

    /// Same conversion with one threshold for every layer.
    pub fn convert_uniform(dnn: &DnnModel, coding: CodingConfig, theta: f64) -> Result<SnnModel> {
        let thetas = vec![theta; dnn.layers.len()];
        SnnModel::convert(dnn, coding, &thetas)
    }

    /// Copy with every layer threshold replaced.
    pub fn with_uniform_theta(&self, theta: f64) -> SnnModel {
        let mut m = self.clone();
        for l in &mut m.layers {
            l.theta = theta;
        }
        m
    }

    /// Stage the coding windows sequentially: the input encodes in
    /// `[0, t_sub)` and spiking layer `k` fires within
    /// `[(k + 1) * t_sub, (k + 2) * t_sub)`. Used by the timing schemes,
    /// whose values live in spike times.
    pub fn set_staged_windows(&mut self, t_sub: u32) {
        let spiking = self.layers.len().saturating_sub(1);
        for (k, layer) in self.layers.iter_mut().take(spiking).enumerate() {
            layer.window_offset = (k as u32 + 1) * t_sub;
            layer.window_len = Some(t_sub);
        }
    }

    /// Window available to the input encoder.
    pub fn input_window(&self) -> u32 {
        match self.layers.first() {
            Some(l) if l.window_offset > 0 => l.window_offset,
            _ => self.coding.window,
        }
    }

    /// View of the raw DNN parameters (used by the scaling transforms).
    pub fn dnn_view(&self) -> DnnModel {
        DnnModel {
            input_shape: self.input_shape.clone(),
            layers: self.layers.iter().map(|l| l.layer.clone()).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dnn_view().validate()?;
        self.coding.validate()?;
        if self.layers.iter().any(|l| !(l.theta > 0.0)) {
            return Err(CoreError::invalid_config("layer thresholds must be positive"));
        }
        Ok(())
    }
}

fn reset_mode(cfg: &CodingConfig) -> ResetMode {
    match cfg.scheme {
        CodingScheme::Ttfs => ResetMode::PhasicBurst { t_a: 1 },
        CodingScheme::Ttas => ResetMode::PhasicBurst {
            t_a: cfg.burst_duration,
        },
        _ => ResetMode::SubtractThreshold,
    }
}

fn per_step_bias(cfg: &CodingConfig, bias: f64) -> f64 {
    match cfg.scheme {
        CodingScheme::Phase => bias / f64::from(cfg.phase_period),
        CodingScheme::Ttfs | CodingScheme::Ttas => 0.0,
        _ => bias,
    }
}

fn initial_potential(cfg: &CodingConfig, bias: f64) -> f64 {
    match cfg.scheme {
        CodingScheme::Ttfs | CodingScheme::Ttas => bias,
        _ => 0.0,
    }
}

/// Decode one neuron's delivered train relative to its layer window.
fn decode_in_window(train: &SpikeTrain, cfg: &CodingConfig, offset: u32) -> f64 {
    match cfg.scheme {
        CodingScheme::Ttfs => match train.first_time() {
            Some(t) => (-(f64::from(t.saturating_sub(offset))) / cfg.tau).exp(),
            None => 0.0,
        },
        CodingScheme::Ttas => {
            if train.is_empty() {
                return 0.0;
            }
            let sum: f64 = train
                .events()
                .iter()
                .map(|e| {
                    f64::from(e.count) * (-(f64::from(e.time.saturating_sub(offset))) / cfg.tau).exp()
                })
                .sum();
            cfg.burst_norm() * sum
        }
        _ => decode(train, cfg),
    }
}

/// Per-layer charge propagation: keeps the PSC state of the emitting
/// population and produces the weighted input current of each downstream
/// unit, one step at a time.
struct Propagator<'a> {
    layer: &'a DnnLayer,
    in_shape: Vec<usize>,
    out_n: usize,
    /// Transposed dense weights (`in x out`) for event-driven delta steps.
    w_t: Vec<f64>,
    z: Vec<f64>,
    cur: Vec<f64>,
    decay: f64,
    event_driven: bool,
}

impl<'a> Propagator<'a> {
    fn new(layer: &'a DnnLayer, in_shape: &[usize], kernel: &PscKernel) -> Result<Self> {
        let in_n: usize = in_shape.iter().product();
        let out_n: usize = layer.output_shape(in_shape)?.iter().product();
        let event_driven = matches!(kernel, PscKernel::Delta);
        let w_t = match layer {
            DnnLayer::Dense(d) if event_driven => {
                let mut w_t = vec![0.0f64; d.inp * d.out];
                for j in 0..d.out {
                    for i in 0..d.inp {
                        w_t[i * d.out + j] = f64::from(d.weights[j * d.inp + i]);
                    }
                }
                w_t
            }
            _ => Vec::new(),
        };
        Ok(Propagator {
            layer,
            in_shape: in_shape.to_vec(),
            out_n,
            w_t,
            z: vec![0.0; in_n],
            cur: vec![0.0; out_n],
            decay: kernel.decay(),
            event_driven,
        })
    }

    /// Advance one step given the spikes arriving now as
    /// `(input index, synaptic multiplier)` pairs.
    fn step(&mut self, arrivals: &[(usize, f64)]) -> Result<&[f64]> {
        match self.layer {
            DnnLayer::Dense(d) if self.event_driven => {
                self.cur.iter_mut().for_each(|c| *c = 0.0);
                for &(i, m) in arrivals {
                    let col = &self.w_t[i * d.out..(i + 1) * d.out];
                    for (c, w) in self.cur.iter_mut().zip(col) {
                        *c += w * m;
                    }
                }
            }
            DnnLayer::Dense(d) => {
                for v in self.z.iter_mut() {
                    *v *= self.decay;
                }
                for &(i, m) in arrivals {
                    self.z[i] += m;
                }
                for (j, c) in self.cur.iter_mut().enumerate() {
                    let row = &d.weights[j * d.inp..(j + 1) * d.inp];
                    *c = row
                        .iter()
                        .zip(self.z.iter())
                        .map(|(w, z)| f64::from(*w) * z)
                        .sum();
                }
            }
            DnnLayer::Conv2d(conv) => {
                let (h, w) = match self.in_shape.as_slice() {
                    [_, h, w] => (*h, *w),
                    [h, w] => (*h, *w),
                    other => {
                        return Err(CoreError::ShapeMismatch(format!(
                            "conv input shape {other:?}"
                        )))
                    }
                };
                if self.event_driven {
                    if arrivals.is_empty() {
                        self.cur.iter_mut().for_each(|c| *c = 0.0);
                        return Ok(&self.cur);
                    }
                    self.z.iter_mut().for_each(|v| *v = 0.0);
                    for &(i, m) in arrivals {
                        self.z[i] += m;
                    }
                } else {
                    for v in self.z.iter_mut() {
                        *v *= self.decay;
                    }
                    for &(i, m) in arrivals {
                        self.z[i] += m;
                    }
                }
                self.cur = conv.apply(&self.z, h, w, false)?;
            }
            DnnLayer::MaxPool2d { .. } => {
                return Err(CoreError::UnsupportedLayer {
                    index: 0,
                    kind: "max_pool2d".into(),
                })
            }
        }
        Ok(&self.cur)
    }
}

/// Bucket a population's events by arrival step (emission + 1).
fn arrival_buckets(
    trains: &[SpikeTrain],
    cfg: &CodingConfig,
    window: u32,
) -> Vec<Vec<(usize, f64)>> {
    let mut buckets: Vec<Vec<(usize, f64)>> = vec![Vec::new(); window as usize + 1];
    for (i, train) in trains.iter().enumerate() {
        for e in train.events() {
            let arrive = e.time + 1;
            if arrive <= window {
                buckets[arrive as usize].push((i, synaptic_multiplier(cfg, e.time, e.count)));
            }
        }
    }
    buckets
}

fn check_finite(values: impl Iterator<Item = f64>, layer: usize) -> Result<()> {
    for v in values {
        if !v.is_finite() {
            return Err(CoreError::NumericFailure {
                layer,
                msg: "non-finite membrane potential".into(),
            });
        }
    }
    Ok(())
}

fn layer_bias(layer: &DnnLayer) -> &[f32] {
    match layer {
        DnnLayer::Dense(d) => &d.bias,
        DnnLayer::Conv2d(c) => &c.bias,
        DnnLayer::MaxPool2d { .. } => &[],
    }
}

/// Per-unit bias vector expanded to the layer's flat output size.
fn expanded_bias(layer: &DnnLayer, in_shape: &[usize]) -> Result<Vec<f64>> {
    let out_shape = layer.output_shape(in_shape)?;
    let out_n: usize = out_shape.iter().product();
    let b = layer_bias(layer);
    match layer {
        DnnLayer::Dense(_) => Ok(b.iter().map(|x| f64::from(*x)).collect()),
        DnnLayer::Conv2d(_) => {
            let per_channel = out_n / b.len().max(1);
            let mut out = Vec::with_capacity(out_n);
            for bc in b {
                out.extend(std::iter::repeat_n(f64::from(*bc), per_channel));
            }
            Ok(out)
        }
        DnnLayer::MaxPool2d { .. } => Ok(vec![0.0; out_n]),
    }
}

/// Run a full inference, returning per-neuron trains alongside the
/// aggregate result.
pub fn simulate_trace(
    snn: &SnnModel,
    input: &[f64],
    noise: &NoiseConfig,
    seed: u64,
) -> Result<SimTrace> {
    snn.validate()?;
    noise.validate()?;
    let cfg = &snn.coding;
    let t_len = cfg.window;
    let kernel = cfg.kernel();
    let mass = kernel.mass();
    let mode = reset_mode(cfg);
    let flat: usize = snn.input_shape.iter().product();
    if input.len() != flat {
        return Err(CoreError::ShapeMismatch(format!(
            "input len {} != {flat}",
            input.len()
        )));
    }

    // Input encoding over the input window.
    let mut enc_cfg = cfg.clone();
    enc_cfg.window = snn.input_window();
    let mut trains: Vec<SpikeTrain> = input
        .iter()
        .map(|&v| encode(v, &enc_cfg))
        .collect::<Result<_>>()?;

    let noisy = !noise.is_clean();
    if noisy && noise.applies_to_layer(0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0);
        for train in trains.iter_mut() {
            *train = apply_noise(train, noise.p, noise.sigma, t_len, &mut rng);
        }
    }

    let mut layer_trains: Vec<Vec<SpikeTrain>> = vec![trains];
    let mut hidden_activations: Vec<Vec<f64>> = Vec::new();
    let mut in_shape = snn.input_shape.clone();
    let n_layers = snn.layers.len();

    // Spiking hidden layers.
    for l in 0..n_layers - 1 {
        let snn_layer = &snn.layers[l];
        let emitter_theta = if l == 0 { 1.0 } else { snn.layers[l - 1].theta };
        let gain = emitter_theta / mass;
        let mut prop = Propagator::new(&snn_layer.layer, &in_shape, &kernel)?;
        let buckets = arrival_buckets(layer_trains.last().unwrap(), cfg, t_len);
        let biases = expanded_bias(&snn_layer.layer, &in_shape)?;
        let out_n = prop.out_n;
        let mut states: Vec<NeuronState> = biases
            .iter()
            .map(|&b| NeuronState::with_potential(initial_potential(cfg, b)))
            .collect();
        let mut emitted: Vec<Vec<SpikeEvent>> = vec![Vec::new(); out_n];

        for t in 0..t_len {
            let cur = prop.step(&buckets[t as usize])?;
            let theta_base = snn_layer.theta;
            // layer threshold with the scheme's time modulation applied
            let theta_t = effective_theta(cfg, t, snn_layer.window_offset) * theta_base / cfg.theta;
            let window_open = match snn_layer.window_len {
                Some(len) => t < snn_layer.window_offset + len,
                None => true,
            };
            for j in 0..out_n {
                let state = &mut states[j];
                if state.dead {
                    continue;
                }
                state.integrate(gain * cur[j], per_step_bias(cfg, biases[j]))?;
                match cfg.scheme {
                    CodingScheme::Burst => {
                        if state.fire_check(theta_base) {
                            let s = ((state.u / theta_base).floor() as u32).min(cfg.burst_cap);
                            state.u -= f64::from(s) * theta_base;
                            if state.t_first.is_none() {
                                state.t_first = Some(t);
                            }
                            emitted[j].push(SpikeEvent { time: t, count: s });
                        }
                    }
                    CodingScheme::Ttfs | CodingScheme::Ttas => {
                        if state.in_burst(t) || (window_open && state.fire_check(theta_t)) {
                            state.apply_reset(mode, theta_t, t)?;
                            emitted[j].push(SpikeEvent { time: t, count: 1 });
                        } else if !window_open && state.t_first.is_none() {
                            // window elapsed without a first spike: the
                            // unit's value is zero for this inference
                            state.dead = true;
                        }
                    }
                    _ => {
                        if state.fire_check(theta_t) {
                            state.apply_reset(mode, theta_t, t)?;
                            emitted[j].push(SpikeEvent { time: t, count: 1 });
                        }
                    }
                }
                state.end_step(mode, t);
            }
        }
        check_finite(states.iter().map(|s| s.u), l)?;

        let mut out_trains: Vec<SpikeTrain> = emitted
            .into_iter()
            .map(|ev| SpikeTrain::new(ev, t_len))
            .collect::<Result<_>>()?;
        // The layer's activation is what it computed and emitted; noise
        // below corrupts only what downstream layers receive.
        let acts: Vec<f64> = out_trains
            .iter()
            .map(|tr| decode_in_window(tr, cfg, snn_layer.window_offset) * snn_layer.theta)
            .collect();
        hidden_activations.push(acts);
        if noisy && noise.applies_to_layer(l + 1) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(l as u64 + 1);
            for train in out_trains.iter_mut() {
                *train = apply_noise(train, noise.p, noise.sigma, t_len, &mut rng);
            }
        }
        in_shape = snn_layer.layer.output_shape(&in_shape)?;
        layer_trains.push(out_trains);
    }

    // Output layer: accumulate potential, never fire.
    let out_layer = &snn.layers[n_layers - 1];
    let emitter_theta = if n_layers == 1 {
        1.0
    } else {
        snn.layers[n_layers - 2].theta
    };
    let gain = emitter_theta / mass;
    let mut prop = Propagator::new(&out_layer.layer, &in_shape, &kernel)?;
    let buckets = arrival_buckets(layer_trains.last().unwrap(), cfg, t_len);
    let biases = expanded_bias(&out_layer.layer, &in_shape)?;
    let mut potentials: Vec<f64> = biases
        .iter()
        .map(|&b| initial_potential(cfg, b))
        .collect();
    for t in 0..t_len {
        let cur = prop.step(&buckets[t as usize])?;
        for (j, p) in potentials.iter_mut().enumerate() {
            *p += gain * cur[j] + per_step_bias(cfg, biases[j]);
        }
    }
    check_finite(potentials.iter().copied(), n_layers - 1)?;

    let spike_counts: Vec<u64> = layer_trains
        .iter()
        .map(|trains| trains.iter().map(|t| t.total_count()).sum())
        .collect();
    let total = spike_counts.iter().sum();
    let predicted = output_layer_readout(&potentials, &vec![0; potentials.len()], cfg)?;
    let mean_acts: Vec<f64> = hidden_activations
        .iter()
        .map(|acts| {
            if acts.is_empty() {
                0.0
            } else {
                acts.iter().sum::<f64>() / acts.len() as f64
            }
        })
        .collect();

    Ok(SimTrace {
        result: SimResult {
            predicted,
            per_layer_spike_counts: spike_counts,
            total_spikes: total,
            per_layer_mean_activation: mean_acts,
            output_potentials: potentials,
            elapsed_timesteps: t_len,
        },
        layer_trains,
        hidden_activations,
    })
}

/// Run a full inference under the given noise and seed.
pub fn simulate(snn: &SnnModel, input: &[f64], noise: &NoiseConfig, seed: u64) -> Result<SimResult> {
    simulate_trace(snn, input, noise, seed).map(|t| t.result)
}

/// Accuracy and spike cost over a labelled dataset; trial `t`, sample `s`
/// uses the seed stream `noise.seed ^ (t * n + s)`.
pub fn batch_evaluate(
    snn: &SnnModel,
    dataset: &[(Vec<f64>, usize)],
    noise: &NoiseConfig,
    trials: u32,
) -> Result<EvalSummary> {
    if dataset.is_empty() {
        return Err(CoreError::invalid_input("empty dataset"));
    }
    if trials < 1 {
        return Err(CoreError::invalid_input("trials must be >= 1"));
    }
    let n = dataset.len() as u64;
    let mut correct = 0u64;
    let mut spikes = 0u64;
    let mut latency = 0u64;
    for trial in 0..u64::from(trials) {
        for (idx, (input, label)) in dataset.iter().enumerate() {
            let sim_seed = noise.seed ^ (trial * n + idx as u64);
            let r = simulate(snn, input, noise, sim_seed)?;
            if r.predicted == *label {
                correct += 1;
            }
            spikes += r.total_spikes;
            latency += u64::from(r.elapsed_timesteps);
        }
    }
    let runs = (u64::from(trials) * n) as f64;
    Ok(EvalSummary {
        accuracy: correct as f64 / runs,
        mean_spikes: spikes as f64 / runs,
        mean_latency: latency as f64 / runs,
    })
}

/// Grid search for the threshold with the best clean calibration
/// accuracy; ties prefer the cheaper (fewer spikes) candidate, then the
/// earlier grid entry.
pub fn threshold_search(
    snn: &SnnModel,
    calibration: &[(Vec<f64>, usize)],
    grid: &[f64],
) -> Result<f64> {
    if grid.is_empty() {
        return Err(CoreError::invalid_input("empty threshold grid"));
    }
    if calibration.is_empty() {
        return Err(CoreError::invalid_input("empty calibration batch"));
    }
    let clean = NoiseConfig::clean(0);
    let mut best: Option<(f64, EvalSummary)> = None;
    for &theta in grid {
        let candidate = snn.with_uniform_theta(theta);
        let eval = batch_evaluate(&candidate, calibration, &clean, 1)?;
        let better = match &best {
            None => true,
            Some((_, b)) => {
                eval.accuracy > b.accuracy
                    || (eval.accuracy == b.accuracy && eval.mean_spikes < b.mean_spikes)
            }
        };
        if better {
            best = Some((theta, eval));
        }
    }
    Ok(best.expect("nonempty grid").0)
}

/// Audit helper: kernel-sum PSC of a train at `t`, exposed for tests that
/// cross-check the incremental propagation against the direct formula.
pub fn train_psc(train: &SpikeTrain, kernel: &PscKernel, t: u32) -> f64 {
    psc_value(train, kernel, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dnn::Dense;

    fn dense_net(sizes: &[usize], weights: Vec<Vec<f32>>, biases: Vec<Vec<f32>>) -> DnnModel {
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, win)| {
                DnnLayer::Dense(
                    Dense::new(win[1], win[0], weights[i].clone(), biases[i].clone()).unwrap(),
                )
            })
            .collect();
        DnnModel::new(vec![sizes[0]], layers).unwrap()
    }

    fn identity_1x1() -> DnnModel {
        dense_net(&[1, 1], vec![vec![1.0]], vec![vec![0.0]])
    }

    #[test]
    fn convert_rejects_pool_layers() {
        let dnn = DnnModel {
            input_shape: vec![1, 4, 4],
            layers: vec![DnnLayer::MaxPool2d { k: 2, stride: 2 }],
        };
        let err = SnnModel::convert(&dnn, CodingConfig::rate(100, 0.4), &[0.4]).unwrap_err();
        match err {
            CoreError::UnsupportedLayer { index, kind } => {
                assert_eq!(index, 0);
                assert_eq!(kind, "max_pool2d");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn identity_net_decodes_its_input() {
        // 1x1 dense with unit weight: decoded output 0.5 +- 0.002 at T=1000
        let snn =
            SnnModel::convert_uniform(&identity_1x1(), CodingConfig::rate(1000, 0.4), 0.4).unwrap();
        let r = simulate(&snn, &[0.5], &NoiseConfig::clean(0), 0).unwrap();
        let decoded = r.output_potentials[0] / 1000.0;
        assert!((decoded - 0.5).abs() <= 0.002, "decoded {decoded}");
    }

    #[test]
    fn negative_weight_never_drives_spikes() {
        let dnn = dense_net(&[1, 1, 1], vec![vec![-1.0], vec![1.0]], vec![vec![0.0], vec![0.0]]);
        let snn = SnnModel::convert_uniform(&dnn, CodingConfig::rate(1000, 0.4), 0.4).unwrap();
        let tr = simulate_trace(&snn, &[0.5], &NoiseConfig::clean(0), 0).unwrap();
        assert_eq!(tr.result.per_layer_spike_counts[1], 0);
        assert_eq!(tr.hidden_activations[0], vec![0.0]);
    }

    #[test]
    fn zero_input_zero_bias_is_silent_and_ties_to_class_zero() {
        let dnn = dense_net(
            &[2, 2],
            vec![vec![0.3, 0.1, 0.2, 0.4]],
            vec![vec![0.0, 0.0]],
        );
        let snn = SnnModel::convert_uniform(&dnn, CodingConfig::rate(100, 0.4), 0.4).unwrap();
        let r = simulate(&snn, &[0.0, 0.0], &NoiseConfig::clean(0), 0).unwrap();
        assert_eq!(r.total_spikes, 0);
        assert_eq!(r.predicted, 0);
    }

    #[test]
    fn clean_simulation_ignores_seed() {
        let dnn = dense_net(
            &[3, 2],
            vec![vec![0.2, 0.1, 0.05, 0.1, 0.3, 0.2]],
            vec![vec![0.01, 0.0]],
        );
        let snn = SnnModel::convert_uniform(&dnn, CodingConfig::rate(200, 0.4), 0.4).unwrap();
        let input = vec![0.5, 0.25, 0.75];
        let a = simulate(&snn, &input, &NoiseConfig::clean(1), 1).unwrap();
        let b = simulate(&snn, &input, &NoiseConfig::clean(2), 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noisy_simulation_is_deterministic_per_seed() {
        let dnn = dense_net(
            &[3, 2],
            vec![vec![0.2, 0.1, 0.05, 0.1, 0.3, 0.2]],
            vec![vec![0.01, 0.0]],
        );
        let snn = SnnModel::convert_uniform(&dnn, CodingConfig::rate(200, 0.4), 0.4).unwrap();
        let noise = NoiseConfig::new(0.3, 1.0, 5);
        let input = vec![0.5, 0.25, 0.75];
        let a = simulate(&snn, &input, &noise, 7).unwrap();
        let b = simulate(&snn, &input, &noise, 7).unwrap();
        assert_eq!(a, b);
        let c = simulate(&snn, &input, &noise, 8).unwrap();
        assert!(a != c || a.total_spikes == c.total_spikes);
    }

    #[test]
    fn deletion_halves_single_layer_count_within_band() {
        // one dense layer: the delivered count is Binomial(N, 1/2)
        let dnn = dense_net(&[4, 2], vec![vec![0.1; 8]], vec![vec![0.0, 0.0]]);
        let snn = SnnModel::convert_uniform(&dnn, CodingConfig::rate(1000, 0.4), 0.4).unwrap();
        let input = vec![0.9, 0.8, 0.7, 0.6];
        let clean = simulate(&snn, &input, &NoiseConfig::clean(0), 0).unwrap();
        let n = clean.total_spikes as f64;
        let noisy = simulate(&snn, &input, &NoiseConfig::new(0.5, 0.0, 3), 3).unwrap();
        let sigma = (n * 0.25).sqrt();
        assert!(
            (noisy.total_spikes as f64 - 0.5 * n).abs() <= 3.0 * sigma,
            "clean {n}, noisy {}",
            noisy.total_spikes
        );
    }

    #[test]
    fn ttas_unit_duration_is_event_identical_to_ttfs() {
        let dnn = dense_net(
            &[4, 3, 2],
            vec![
                vec![0.1, 0.2, 0.05, 0.1, 0.15, 0.05, 0.1, 0.2, 0.1, 0.05, 0.05, 0.1],
                vec![0.2, 0.1, 0.05, 0.15, 0.1, 0.2],
            ],
            vec![vec![0.02, 0.0, 0.01], vec![0.0, 0.01]],
        );
        let mut ttfs_cfg = CodingConfig::ttfs(108, 0.8, 9.0);
        ttfs_cfg.theta_decay = Some(9.0);
        let mut ttas_cfg = CodingConfig::ttas(108, 0.8, 9.0, 1);
        ttas_cfg.theta_decay = Some(9.0);
        let mut a = SnnModel::convert_uniform(&dnn, ttfs_cfg, 0.8).unwrap();
        let mut b = SnnModel::convert_uniform(&dnn, ttas_cfg, 0.8).unwrap();
        a.set_staged_windows(36);
        b.set_staged_windows(36);
        let noise = NoiseConfig::new(0.2, 1.0, 21);
        for seed in [0u64, 5, 9] {
            let input = vec![0.9, 0.4, 0.0, 0.7];
            let ta = simulate_trace(&a, &input, &noise, seed).unwrap();
            let tb = simulate_trace(&b, &input, &noise, seed).unwrap();
            assert_eq!(ta.layer_trains, tb.layer_trains);
            assert_eq!(ta.result.predicted, tb.result.predicted);
        }
    }

    #[test]
    fn ttfs_neurons_fire_at_most_once() {
        let dnn = dense_net(
            &[3, 4, 2],
            vec![
                vec![0.3, 0.2, 0.1, 0.2, 0.1, 0.3, 0.25, 0.15, 0.05, 0.1, 0.2, 0.3],
                vec![0.2; 8],
            ],
            vec![vec![0.0; 4], vec![0.0; 2]],
        );
        let mut cfg = CodingConfig::ttfs(108, 0.8, 9.0);
        cfg.theta_decay = Some(9.0);
        let mut snn = SnnModel::convert_uniform(&dnn, cfg, 0.8).unwrap();
        snn.set_staged_windows(36);
        let tr = simulate_trace(&snn, &[1.0, 0.8, 0.6], &NoiseConfig::clean(0), 0).unwrap();
        for train in &tr.layer_trains[1] {
            assert!(train.total_count() <= 1);
        }
    }

    #[test]
    fn ttas_bursts_stay_within_duration_window() {
        let dnn = dense_net(
            &[3, 4, 2],
            vec![
                vec![0.3, 0.2, 0.1, 0.2, 0.1, 0.3, 0.25, 0.15, 0.05, 0.1, 0.2, 0.3],
                vec![0.2; 8],
            ],
            vec![vec![0.0; 4], vec![0.0; 2]],
        );
        let mut cfg = CodingConfig::ttas(108, 0.8, 9.0, 4);
        cfg.theta_decay = Some(9.0);
        let mut snn = SnnModel::convert_uniform(&dnn, cfg, 0.8).unwrap();
        snn.set_staged_windows(36);
        let tr = simulate_trace(&snn, &[1.0, 0.8, 0.6], &NoiseConfig::clean(0), 0).unwrap();
        for train in &tr.layer_trains[1] {
            assert!(train.total_count() <= 4);
            if let (Some(first), Some(last)) = (train.first_time(), train.last_time()) {
                assert!(last < first + 4);
            }
        }
    }

    #[test]
    fn layer_mask_gates_where_noise_applies() {
        let dnn = dense_net(&[2, 2], vec![vec![0.3, 0.0, 0.0, 0.3]], vec![vec![0.0, 0.0]]);
        let snn = SnnModel::convert_uniform(&dnn, CodingConfig::rate(100, 0.4), 0.4).unwrap();
        let input = vec![0.8, 0.6];
        // p = 1 on every layer wipes the input encoding
        let all = NoiseConfig::new(1.0, 0.0, 1);
        let wiped = simulate(&snn, &input, &all, 1).unwrap();
        assert_eq!(wiped.total_spikes, 0);
        // masking the input layer out leaves the encoding untouched
        let mut masked = all.clone();
        masked.layer_mask = Some(vec![false]);
        let kept = simulate(&snn, &input, &masked, 1).unwrap();
        assert_eq!(
            kept.per_layer_spike_counts[0],
            simulate(&snn, &input, &NoiseConfig::clean(0), 0)
                .unwrap()
                .per_layer_spike_counts[0]
        );
    }

    #[test]
    fn batch_evaluate_rejects_degenerate_inputs() {
        let snn =
            SnnModel::convert_uniform(&identity_1x1(), CodingConfig::rate(100, 0.4), 0.4).unwrap();
        assert!(batch_evaluate(&snn, &[], &NoiseConfig::clean(0), 1).is_err());
        let data = vec![(vec![0.5], 0)];
        assert!(batch_evaluate(&snn, &data, &NoiseConfig::clean(0), 0).is_err());
    }

    #[test]
    fn threshold_search_single_candidate() {
        let snn =
            SnnModel::convert_uniform(&identity_1x1(), CodingConfig::rate(100, 0.4), 0.4).unwrap();
        let calib = vec![(vec![0.9], 0)];
        assert_eq!(threshold_search(&snn, &calib, &[0.7]).unwrap(), 0.7);
        assert!(threshold_search(&snn, &calib, &[]).is_err());
    }

    #[test]
    fn threshold_search_matches_exhaustive_evaluation() {
        // two classes separated by input magnitude
        let dnn = dense_net(
            &[2, 2],
            vec![vec![0.5, 0.1, 0.1, 0.5]],
            vec![vec![0.0, 0.0]],
        );
        let snn = SnnModel::convert_uniform(&dnn, CodingConfig::rate(200, 0.4), 0.4).unwrap();
        let calib: Vec<(Vec<f64>, usize)> = vec![
            (vec![0.9, 0.1], 0),
            (vec![0.1, 0.9], 1),
            (vec![0.7, 0.2], 0),
            (vec![0.2, 0.8], 1),
        ];
        let grid = [0.2, 0.4, 0.8];
        let chosen = threshold_search(&snn, &calib, &grid).unwrap();
        let clean = NoiseConfig::clean(0);
        let mut best_acc = -1.0;
        let mut best_spikes = f64::INFINITY;
        let mut best_theta = grid[0];
        for &g in &grid {
            let e = batch_evaluate(&snn.with_uniform_theta(g), &calib, &clean, 1).unwrap();
            if e.accuracy > best_acc
                || (e.accuracy == best_acc && e.mean_spikes < best_spikes)
            {
                best_acc = e.accuracy;
                best_spikes = e.mean_spikes;
                best_theta = g;
            }
        }
        assert_eq!(chosen, best_theta);
    }
}
