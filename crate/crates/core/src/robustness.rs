//! Noise-compensation transforms: deletion-compensating weight scaling
//! and the burst-sum normalization used by TTAS coding.
//!
//! Deletion with probability `p` reduces the expected PSC sum to
//! `(1 - p) Z`, so the unbiased compensator is `C = 1 / (1 - p)`. A burst
//! of `t_a` spikes multiplies the delivered PSC by
//! `Z_hat = sum_{k < t_a} z(t1 + k)`; the factor `C_A = z(t1) / Z_hat`
//! offsets that increase and is folded into the synaptic weights so the
//! runtime pays nothing for it.

use crate::dnn::DnnLayer;
use crate::error::{CoreError, Result};
use crate::neuron::PscKernel;
use crate::network::SnnModel;

/// Where a scale plan's factors came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleProvenance {
    AutoFromP,
    Manual,
    Off,
}

/// A weight-scaling plan: the deletion compensator `C`, the burst
/// normalization `C_A`, and whether biases scale along with weights.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScalePlan {
    pub c: f64,
    pub c_a: f64,
    pub provenance: ScaleProvenance,
    /// Biases are not spike-borne, but scaling them keeps the affine
    /// map aligned at p = 0; set false to scale weights only.
    pub scale_biases: bool,
}

impl ScalePlan {
    /// Identity plan.
    pub fn off() -> Self {
        ScalePlan {
            c: 1.0,
            c_a: 1.0,
            provenance: ScaleProvenance::Off,
            scale_biases: true,
        }
    }

    /// Plan with an explicit factor.
    pub fn manual(c: f64) -> Self {
        ScalePlan {
            c,
            c_a: 1.0,
            provenance: ScaleProvenance::Manual,
            scale_biases: true,
        }
    }

    /// Plan derived from a known deletion probability.
    pub fn auto_from_p(p: f64) -> Result<Self> {
        Ok(ScalePlan {
            c: choose_scale_factor(p)?,
            c_a: 1.0,
            provenance: ScaleProvenance::AutoFromP,
            scale_biases: true,
        })
    }

    /// Attach the burst normalization factor.
    pub fn with_burst_norm(mut self, c_a: f64) -> Self {
        self.c_a = c_a;
        self
    }

    pub fn is_identity(&self) -> bool {
        self.c == 1.0 && self.c_a == 1.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(CoreError::invalid_input(format!(
                "scale factor C must be positive and finite, got {}",
                self.c
            )));
        }
        if !(self.c_a > 0.0) || self.c_a > 1.0 {
            return Err(CoreError::invalid_input(format!(
                "burst factor C_A must lie in (0, 1], got {}",
                self.c_a
            )));
        }
        Ok(())
    }
}

/// Record of a plan already folded into a model.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AppliedScale {
    pub c: f64,
    pub c_a: f64,
    pub provenance: ScaleProvenance,
}

/// Deletion compensator `C = 1 / (1 - p)`: restores the expected
/// activation `(1 - p) A` back to `A`, and is 1 when there is no noise.
pub fn choose_scale_factor(p: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(CoreError::invalid_input(format!(
            "deletion probability {p} outside [0, 1)"
        )));
    }
    Ok(1.0 / (1.0 - p))
}

/// Linear alternative `C = 1 + alpha * p` for sensitivity studies.
pub fn linear_scale_factor(p: f64, alpha: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(CoreError::invalid_input(format!(
            "deletion probability {p} outside [0, 1)"
        )));
    }
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(CoreError::invalid_input("alpha must be finite and >= 0"));
    }
    Ok(1.0 + alpha * p)
}

/// Burst-sum normalization `C_A = z(t1) / Z_hat` for a burst of `t_a`
/// consecutive spikes. With the exponential kernel
/// `Z_hat = sum_{k=0}^{t_a - 1} exp(-k / tau)`; with the delta kernel all
/// burst spikes deliver equal unit charge, so the factor is `1 / t_a`.
pub fn ttas_scale_factor(kernel: &PscKernel, t_a: u32) -> Result<f64> {
    if t_a < 1 {
        return Err(CoreError::invalid_config("burst duration t_a must be >= 1"));
    }
    match kernel {
        PscKernel::Delta => Ok(1.0 / f64::from(t_a)),
        PscKernel::Exponential { tau } => {
            if !(*tau > 0.0) {
                return Err(CoreError::invalid_config("tau must be positive"));
            }
            let z_hat: f64 = (0..t_a).map(|k| (-f64::from(k) / tau).exp()).sum();
            Ok(1.0 / z_hat)
        }
    }
}

fn scale_layer(layer: &DnnLayer, w_factor: f64, b_factor: f64) -> DnnLayer {
    let mul = |v: &[f32], f: f64| -> Vec<f32> {
        v.iter().map(|x| (f64::from(*x) * f) as f32).collect()
    };
    match layer {
        DnnLayer::Dense(d) => {
            let mut d = d.clone();
            d.weights = mul(&d.weights, w_factor);
            d.bias = mul(&d.bias, b_factor);
            DnnLayer::Dense(d)
        }
        DnnLayer::Conv2d(c) => {
            let mut c = c.clone();
            c.kernel = mul(&c.kernel, w_factor);
            c.bias = mul(&c.bias, b_factor);
            DnnLayer::Conv2d(c)
        }
        DnnLayer::MaxPool2d { k, stride } => DnnLayer::MaxPool2d {
            k: *k,
            stride: *stride,
        },
    }
}

/// Multiply every synaptic weight and bias by `C`; thresholds unchanged.
pub fn scale_weights(model: &SnnModel, c: f64) -> Result<SnnModel> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(CoreError::invalid_input(format!(
            "scale factor must be positive and finite, got {c}"
        )));
    }
    let mut out = model.clone();
    for layer in &mut out.layers {
        layer.layer = scale_layer(&layer.layer, c, c);
    }
    Ok(out)
}

/// Fold a scale plan into the model: weights pick up `C * C_A`, biases
/// pick up `C` (when the plan scales biases), and the applied factors are
/// recorded in the model metadata. Re-applying to an already scaled model
/// is an error.
pub fn apply_plan(model: &SnnModel, plan: &ScalePlan) -> Result<SnnModel> {
    plan.validate()?;
    if let Some(existing) = &model.scale {
        if !plan.is_identity() {
            return Err(CoreError::invalid_input(format!(
                "model already carries scale plan C={} C_A={}",
                existing.c, existing.c_a
            )));
        }
    }
    let mut out = model.clone();
    if !plan.is_identity() {
        let b_factor = if plan.scale_biases { plan.c } else { 1.0 };
        for layer in &mut out.layers {
            layer.layer = scale_layer(&layer.layer, plan.c * plan.c_a, b_factor);
        }
        out.scale = Some(AppliedScale {
            c: plan.c,
            c_a: plan.c_a,
            provenance: plan.provenance,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::CodingConfig;
    use crate::dnn::{Dense, DnnModel};

    fn toy_snn() -> SnnModel {
        let dnn = DnnModel::new(
            vec![2],
            vec![DnnLayer::Dense(
                Dense::new(2, 2, vec![0.3, -0.2, 0.1, 0.4], vec![0.05, -0.01]).unwrap(),
            )],
        )
        .unwrap();
        SnnModel::convert_uniform(&dnn, CodingConfig::rate(100, 0.4), 0.4).unwrap()
    }

    #[test]
    fn scale_factor_restores_expected_loss() {
        assert_eq!(choose_scale_factor(0.0).unwrap(), 1.0);
        assert!((choose_scale_factor(0.5).unwrap() - 2.0).abs() < 1e-12);
        assert!((choose_scale_factor(0.8).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn scale_factor_is_monotone_in_p() {
        let mut prev = 0.0;
        for i in 0..20 {
            let p = f64::from(i) / 20.0;
            let c = choose_scale_factor(p).unwrap();
            assert!(c > prev);
            prev = c;
        }
    }

    #[test]
    fn scale_factor_rejects_p_at_or_above_one() {
        assert!(choose_scale_factor(1.0).is_err());
        assert!(choose_scale_factor(1.5).is_err());
        assert!(choose_scale_factor(-0.1).is_err());
    }

    #[test]
    fn ttas_factor_examples() {
        let exp4 = PscKernel::Exponential { tau: 4.0 };
        assert_eq!(ttas_scale_factor(&exp4, 1).unwrap(), 1.0);
        let expected = 1.0 / (1.0 + (-0.25f64).exp());
        assert!((ttas_scale_factor(&exp4, 2).unwrap() - expected).abs() < 1e-12);
        assert!((ttas_scale_factor(&exp4, 2).unwrap() - 0.5622).abs() < 1e-4);
        assert!((ttas_scale_factor(&PscKernel::Delta, 3).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(ttas_scale_factor(&exp4, 0).is_err());
    }

    #[test]
    fn ttas_factor_strictly_decreasing_in_duration() {
        for kernel in [PscKernel::Exponential { tau: 9.0 }, PscKernel::Delta] {
            let mut prev = f64::INFINITY;
            for t_a in 1..10 {
                let c = ttas_scale_factor(&kernel, t_a).unwrap();
                assert!(c < prev);
                prev = c;
            }
        }
    }

    #[test]
    fn scale_weights_unit_factor_is_identity() {
        let m = toy_snn();
        let s = scale_weights(&m, 1.0).unwrap();
        assert_eq!(m, s);
    }

    #[test]
    fn scale_weights_doubles_weights_and_biases() {
        let m = toy_snn();
        let s = scale_weights(&m, 2.0).unwrap();
        let (DnnLayer::Dense(orig), DnnLayer::Dense(scaled)) =
            (&m.layers[0].layer, &s.layers[0].layer)
        else {
            panic!()
        };
        assert_eq!(scaled.weights[0], 0.6);
        assert_eq!(scaled.bias[0], 0.1);
        assert_eq!(orig.weights[0], 0.3);
        assert_eq!(s.layers[0].theta, m.layers[0].theta);
    }

    #[test]
    fn scale_weights_rejects_bad_factor() {
        let m = toy_snn();
        assert!(scale_weights(&m, 0.0).is_err());
        assert!(scale_weights(&m, f64::NAN).is_err());
    }

    #[test]
    fn apply_plan_off_is_bit_exact_identity() {
        let m = toy_snn();
        let out = apply_plan(&m, &ScalePlan::off()).unwrap();
        assert_eq!(m, out);
        assert!(out.scale.is_none());
    }

    #[test]
    fn apply_plan_composes_factors() {
        let m = toy_snn();
        let plan = ScalePlan::manual(2.0).with_burst_norm(0.5);
        let out = apply_plan(&m, &plan).unwrap();
        let (DnnLayer::Dense(orig), DnnLayer::Dense(scaled)) =
            (&m.layers[0].layer, &out.layers[0].layer)
        else {
            panic!()
        };
        // net weight multiplier C * C_A = 1, bias multiplier C = 2
        assert_eq!(scaled.weights, orig.weights);
        assert_eq!(scaled.bias[0], 0.1);
        let meta = out.scale.unwrap();
        assert_eq!(meta.c, 2.0);
        assert_eq!(meta.c_a, 0.5);
    }

    #[test]
    fn apply_plan_guards_double_application() {
        let m = toy_snn();
        let plan = ScalePlan::auto_from_p(0.5).unwrap();
        let once = apply_plan(&m, &plan).unwrap();
        assert!(apply_plan(&once, &plan).is_err());
        // identity plan on a scaled model is fine
        assert!(apply_plan(&once, &ScalePlan::off()).is_ok());
    }
}
