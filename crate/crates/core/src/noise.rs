//! Dynamic spike-noise models: deletion and jitter.
//!
//! Both transforms are deterministic given an explicit generator. The
//! generator is pinned to ChaCha8 throughout the workspace so that seeds
//! reproduce across platforms; callers derive disjoint streams for
//! parallel work as `seed ^ sample_index`.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{CoreError, Result};
use crate::train::SpikeTrain;

/// Noise parameters for one experiment.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NoiseConfig {
    /// Deletion probability in `[0, 1]`.
    pub p: f64,
    /// Jitter standard deviation in timesteps, `>= 0`.
    pub sigma: f64,
    /// Base seed for the pinned ChaCha8 generator.
    pub seed: u64,
    /// Per-layer on/off mask for ablations; `None` applies noise to the
    /// spike trains of every layer, input encoding included.
    #[serde(default)]
    pub layer_mask: Option<Vec<bool>>,
}

impl NoiseConfig {
    pub fn clean(seed: u64) -> Self {
        NoiseConfig {
            p: 0.0,
            sigma: 0.0,
            seed,
            layer_mask: None,
        }
    }

    pub fn new(p: f64, sigma: f64, seed: u64) -> Self {
        NoiseConfig {
            p,
            sigma,
            seed,
            layer_mask: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(CoreError::invalid_config(format!(
                "deletion probability {} outside [0, 1]",
                self.p
            )));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(CoreError::invalid_config(format!(
                "jitter sigma {} must be finite and >= 0",
                self.sigma
            )));
        }
        Ok(())
    }

    pub fn is_clean(&self) -> bool {
        self.p == 0.0 && self.sigma == 0.0
    }

    /// Whether noise applies to the train emitted by `layer` (the input
    /// encoding counts as layer 0).
    pub fn applies_to_layer(&self, layer: usize) -> bool {
        match &self.layer_mask {
            Some(mask) => mask.get(layer).copied().unwrap_or(true),
            None => true,
        }
    }
}

/// Remove each unit spike independently with probability `p`.
pub fn delete_spikes<R: Rng>(train: &SpikeTrain, p: f64, rng: &mut R) -> SpikeTrain {
    debug_assert!((0.0..=1.0).contains(&p));
    if p == 0.0 {
        return train.clone();
    }
    if p == 1.0 {
        return SpikeTrain::empty();
    }
    let mut survivors = Vec::new();
    for t in train.iter_units() {
        if rng.gen::<f64>() >= p {
            survivors.push(t);
        }
    }
    SpikeTrain::from_unit_times(survivors)
}

/// Shift each unit spike by quantized Gaussian noise of deviation
/// `sigma`, clamping to `[0, window - 1]` so counts are preserved.
pub fn jitter_spikes<R: Rng>(
    train: &SpikeTrain,
    sigma: f64,
    window: u32,
    rng: &mut R,
) -> SpikeTrain {
    debug_assert!(sigma >= 0.0);
    if sigma == 0.0 || train.is_empty() {
        return train.clone();
    }
    let normal = Normal::new(0.0, sigma).expect("sigma validated");
    let hi = i64::from(window) - 1;
    let times: Vec<u32> = train
        .iter_units()
        .map(|t| {
            // round() is half-away-from-zero, the pinned quantization
            let shift = normal.sample(rng).round() as i64;
            (i64::from(t) + shift).clamp(0, hi) as u32
        })
        .collect();
    SpikeTrain::from_unit_times(times)
}

/// Deletion followed by jitter, the composition order used for every
/// inter-layer train when both noises are active.
pub fn apply_noise<R: Rng>(
    train: &SpikeTrain,
    p: f64,
    sigma: f64,
    window: u32,
    rng: &mut R,
) -> SpikeTrain {
    let deleted = delete_spikes(train, p, rng);
    jitter_spikes(&deleted, sigma, window, rng)
}

/// Expected PSC sum after deletion: `(1 - p) * Z`.
pub fn expected_psc_after_deletion(z: f64, p: f64) -> f64 {
    (1.0 - p) * z
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn dense_train(n: u32) -> SpikeTrain {
        SpikeTrain::from_unit_times((0..n).collect())
    }

    #[test]
    fn delete_p_zero_is_identity() {
        let t = dense_train(100);
        assert_eq!(delete_spikes(&t, 0.0, &mut rng(1)), t);
    }

    #[test]
    fn delete_p_one_empties_train() {
        let t = dense_train(100);
        assert!(delete_spikes(&t, 1.0, &mut rng(1)).is_empty());
    }

    #[test]
    fn delete_survivors_within_binomial_band() {
        // 10,000 spikes at p = 0.5: 3 sigma of Binomial(10^4, 0.5) is 150
        let t = dense_train(10_000);
        let kept = delete_spikes(&t, 0.5, &mut rng(7)).total_count() as f64;
        assert!((kept - 5_000.0).abs() <= 3.0 * (10_000.0f64 * 0.25).sqrt());
    }

    #[test]
    fn delete_never_adds_spikes() {
        let t = dense_train(500);
        for seed in 0..5 {
            let out = delete_spikes(&t, 0.3, &mut rng(seed));
            assert!(out.total_count() <= t.total_count());
        }
    }

    #[test]
    fn jitter_sigma_zero_is_identity() {
        let t = dense_train(50);
        assert_eq!(jitter_spikes(&t, 0.0, 50, &mut rng(1)), t);
    }

    #[test]
    fn jitter_preserves_count_and_window() {
        let t = SpikeTrain::from_unit_times(vec![0, 1, 5, 49, 49]);
        for seed in 0..20 {
            let out = jitter_spikes(&t, 4.0, 50, &mut rng(seed));
            assert_eq!(out.total_count(), t.total_count());
            for e in out.events() {
                assert!(e.time < 50);
            }
        }
    }

    #[test]
    fn jitter_mean_stays_centered_mid_window() {
        // single spike at t = 50 in a wide window: sample mean of the
        // jittered time over 10,000 trials stays within 50 +- 0.1
        let t = SpikeTrain::from_unit_times(vec![50]);
        let mut r = rng(11);
        let mut sum = 0.0;
        let trials = 10_000;
        for _ in 0..trials {
            let out = jitter_spikes(&t, 2.0, 101, &mut r);
            sum += f64::from(out.first_time().unwrap());
        }
        let mean = sum / f64::from(trials);
        assert!((mean - 50.0).abs() < 0.1, "mean {mean}");
    }

    #[test]
    fn jitter_clamps_at_window_start() {
        let t = SpikeTrain::from_unit_times(vec![0]);
        let mut r = rng(3);
        for _ in 0..200 {
            let out = jitter_spikes(&t, 10.0, 100, &mut r);
            assert!(out.first_time().unwrap() < 100);
        }
    }

    #[test]
    fn noise_is_deterministic_per_seed() {
        let t = dense_train(200);
        let a = apply_noise(&t, 0.3, 1.5, 200, &mut rng(42));
        let b = apply_noise(&t, 0.3, 1.5, 200, &mut rng(42));
        assert_eq!(a, b);
        let c = apply_noise(&t, 0.3, 1.5, 200, &mut rng(43));
        assert_ne!(a, c);
    }

    #[test]
    fn expected_psc_examples() {
        assert_eq!(expected_psc_after_deletion(1.0, 0.0), 1.0);
        assert_eq!(expected_psc_after_deletion(2.0, 0.5), 1.0);
    }

    #[test]
    fn expected_psc_matches_monte_carlo() {
        // delta-kernel PSC sum equals the surviving count, so the mean
        // over 1,000 trials must match (1 - p) Z within 3 standard errors
        let t = dense_train(400);
        let z = t.total_count() as f64;
        let p = 0.3;
        let mut r = rng(99);
        let trials = 1_000;
        let samples: Vec<f64> = (0..trials)
            .map(|_| delete_spikes(&t, p, &mut r).total_count() as f64)
            .collect();
        let mean = samples.iter().sum::<f64>() / trials as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let se = (var / trials as f64).sqrt();
        let expect = expected_psc_after_deletion(z, p);
        assert!(
            (mean - expect).abs() <= 3.0 * se,
            "mean {mean}, expected {expect}, se {se}"
        );
    }

    #[test]
    fn composition_order_keeps_count_statistics() {
        let t = dense_train(300);
        let trials = 500;
        let mut r1 = rng(5);
        let mut r2 = rng(6);
        let mean_del_jit: f64 = (0..trials)
            .map(|_| {
                let d = delete_spikes(&t, 0.4, &mut r1);
                jitter_spikes(&d, 2.0, 300, &mut r1).total_count() as f64
            })
            .sum::<f64>()
            / f64::from(trials);
        let mean_jit_del: f64 = (0..trials)
            .map(|_| {
                let j = jitter_spikes(&t, 2.0, 300, &mut r2);
                delete_spikes(&j, 0.4, &mut r2).total_count() as f64
            })
            .sum::<f64>()
            / f64::from(trials);
        // both orders are Binomial(300, 0.6) in count
        let sd = (300.0f64 * 0.4 * 0.6).sqrt();
        let se = sd * (2.0 / f64::from(trials)).sqrt();
        assert!((mean_del_jit - mean_jit_del).abs() <= 3.0 * se);
    }
}
