//! Desk-scale model generation: seeded synthetic MLPs whose activations
//! are normalized to leave headroom under the firing thresholds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spikebench_core::dnn::{Dense, DnnLayer, DnnModel};

use crate::error::{HarnessError, Result};

/// Maximum hidden activation targeted by the normalization pass; below
/// the smallest scheme threshold (0.4) with margin so rate conversion
/// never saturates.
pub const ACTIVATION_TARGET: f64 = 0.35;

/// Deterministic synthetic MLP: seeded uniform init followed by a
/// per-layer rescaling pass that pins the maximum hidden activation over
/// a seeded probe batch to [`ACTIVATION_TARGET`].
pub fn generate_toy_model(sizes: &[usize], seed: u64) -> Result<DnnModel> {
    if sizes.len() < 2 {
        return Err(HarnessError::config(
            "layer spec needs an input size and at least one layer",
        ));
    }
    if sizes.contains(&0) {
        return Err(HarnessError::config("layer sizes must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::new();
    for win in sizes.windows(2) {
        let (inp, out) = (win[0], win[1]);
        let scale = (2.0 / inp as f64).sqrt();
        let w: Vec<f32> = (0..out * inp)
            .map(|_| (rng.gen_range(-1.0..1.0) * scale) as f32)
            .collect();
        let b: Vec<f32> = (0..out)
            .map(|_| rng.gen_range(-0.02..0.05) as f32)
            .collect();
        layers.push(DnnLayer::Dense(Dense::new(out, inp, w, b)?));
    }
    let mut model = DnnModel::new(vec![sizes[0]], layers)?;
    let probe: Vec<Vec<f64>> = (0..32)
        .map(|_| (0..sizes[0]).map(|_| rng.gen_range(0.0..1.0)).collect())
        .collect();
    for l in 0..model.layers.len().saturating_sub(1) {
        let mut max_act = 0.0f64;
        for input in &probe {
            let f = model.forward(input)?;
            for &a in &f.activations[l] {
                max_act = max_act.max(a);
            }
        }
        if max_act > 0.0 {
            let s = (ACTIVATION_TARGET / max_act) as f32;
            if let DnnLayer::Dense(d) = &mut model.layers[l] {
                for v in d.weights.iter_mut() {
                    *v *= s;
                }
                for v in d.bias.iter_mut() {
                    *v *= s;
                }
            }
        }
    }
    Ok(model)
}

/// Parse a `--layers` spec like `784,48,24,10`.
pub fn parse_layer_spec(spec: &str) -> Result<Vec<usize>> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| HarnessError::config(format!("bad layer size {s:?}")))
        })
        .collect()
}
