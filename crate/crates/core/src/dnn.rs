//! Feedforward DNN model: the conversion source and the exact
//! affine-plus-ReLU reference that spiking runs are checked against.

use crate::error::{CoreError, Result};

/// Fully connected layer, weights row-major `out x in`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Dense {
    pub out: usize,
    pub inp: usize,
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
}

impl Dense {
    pub fn new(out: usize, inp: usize, weights: Vec<f32>, bias: Vec<f32>) -> Result<Self> {
        if weights.len() != out * inp || bias.len() != out {
            return Err(CoreError::ShapeMismatch(format!(
                "dense {out}x{inp}: got {} weights, {} biases",
                weights.len(),
                bias.len()
            )));
        }
        Ok(Dense {
            out,
            inp,
            weights,
            bias,
        })
    }

    pub fn weight(&self, row: usize, col: usize) -> f32 {
        self.weights[row * self.inp + col]
    }
}

/// 2D convolution, kernel `out_c x in_c x kh x kw`, zero padding.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Conv2d {
    pub out_channels: usize,
    pub in_channels: usize,
    pub kh: usize,
    pub kw: usize,
    pub stride: usize,
    pub padding: usize,
    pub kernel: Vec<f32>,
    pub bias: Vec<f32>,
}

impl Conv2d {
    pub fn output_hw(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let eh = h + 2 * self.padding;
        let ew = w + 2 * self.padding;
        if eh < self.kh || ew < self.kw || self.stride == 0 {
            return Err(CoreError::ShapeMismatch(format!(
                "conv kernel {}x{} does not fit input {h}x{w} with padding {}",
                self.kh, self.kw, self.padding
            )));
        }
        Ok(((eh - self.kh) / self.stride + 1, (ew - self.kw) / self.stride + 1))
    }

    /// Direct convolution over a flat `[in_c, h, w]` frame, returning a
    /// flat `[out_c, oh, ow]` frame. `with_bias` is off when the frame is
    /// a per-step spike injection whose bias is handled elsewhere.
    pub fn apply(&self, frame: &[f64], h: usize, w: usize, with_bias: bool) -> Result<Vec<f64>> {
        if frame.len() != self.in_channels * h * w {
            return Err(CoreError::ShapeMismatch(format!(
                "conv input len {} != {}x{h}x{w}",
                frame.len(),
                self.in_channels
            )));
        }
        let (oh, ow) = self.output_hw(h, w)?;
        let mut out = vec![0.0f64; self.out_channels * oh * ow];
        for oc in 0..self.out_channels {
            let b = if with_bias { f64::from(self.bias[oc]) } else { 0.0 };
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = b;
                    for ic in 0..self.in_channels {
                        for ky in 0..self.kh {
                            let iy = (oy * self.stride + ky) as isize - self.padding as isize;
                            if iy < 0 || iy >= h as isize {
                                continue;
                            }
                            for kx in 0..self.kw {
                                let ix =
                                    (ox * self.stride + kx) as isize - self.padding as isize;
                                if ix < 0 || ix >= w as isize {
                                    continue;
                                }
                                let kidx = ((oc * self.in_channels + ic) * self.kh + ky)
                                    * self.kw
                                    + kx;
                                let fidx = (ic * h + iy as usize) * w + ix as usize;
                                acc += f64::from(self.kernel[kidx]) * frame[fidx];
                            }
                        }
                    }
                    out[(oc * oh + oy) * ow + ox] = acc;
                }
            }
        }
        Ok(out)
    }
}

/// One layer of a feedforward DNN.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DnnLayer {
    Dense(Dense),
    Conv2d(Conv2d),
    /// Present so richer model files can be represented; has no spiking
    /// equivalent and conversion rejects it.
    MaxPool2d { k: usize, stride: usize },
}

impl DnnLayer {
    pub fn kind_name(&self) -> &'static str {
        match self {
            DnnLayer::Dense(_) => "dense",
            DnnLayer::Conv2d(_) => "conv2d",
            DnnLayer::MaxPool2d { .. } => "max_pool2d",
        }
    }

    /// Output shape for a given input shape.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match self {
            DnnLayer::Dense(d) => {
                let flat: usize = input.iter().product();
                if flat != d.inp {
                    return Err(CoreError::ShapeMismatch(format!(
                        "dense expects {} inputs, got shape {input:?}",
                        d.inp
                    )));
                }
                Ok(vec![d.out])
            }
            DnnLayer::Conv2d(c) => {
                let (ic, h, w) = chw(input)?;
                if ic != c.in_channels {
                    return Err(CoreError::ShapeMismatch(format!(
                        "conv expects {} channels, got {ic}",
                        c.in_channels
                    )));
                }
                let (oh, ow) = c.output_hw(h, w)?;
                Ok(vec![c.out_channels, oh, ow])
            }
            DnnLayer::MaxPool2d { k, stride } => {
                let (ic, h, w) = chw(input)?;
                if *stride == 0 || h < *k || w < *k {
                    return Err(CoreError::ShapeMismatch("pool does not fit input".into()));
                }
                Ok(vec![ic, (h - k) / stride + 1, (w - k) / stride + 1])
            }
        }
    }

    fn params(&self) -> (&[f32], &[f32]) {
        match self {
            DnnLayer::Dense(d) => (&d.weights, &d.bias),
            DnnLayer::Conv2d(c) => (&c.kernel, &c.bias),
            DnnLayer::MaxPool2d { .. } => (&[], &[]),
        }
    }
}

fn chw(shape: &[usize]) -> Result<(usize, usize, usize)> {
    match shape {
        [c, h, w] => Ok((*c, *h, *w)),
        [h, w] => Ok((1, *h, *w)),
        other => Err(CoreError::ShapeMismatch(format!(
            "expected a 2d/3d shape, got {other:?}"
        ))),
    }
}

/// Pretrained feedforward network with ReLU between layers.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DnnModel {
    pub input_shape: Vec<usize>,
    pub layers: Vec<DnnLayer>,
}

/// Forward-pass record: post-ReLU activations for every hidden layer and
/// the raw logits of the final layer.
#[derive(Debug, Clone)]
pub struct DnnForward {
    pub activations: Vec<Vec<f64>>,
    pub logits: Vec<f64>,
}

impl DnnModel {
    pub fn new(input_shape: Vec<usize>, layers: Vec<DnnLayer>) -> Result<Self> {
        let model = DnnModel {
            input_shape,
            layers,
        };
        model.validate()?;
        Ok(model)
    }

    /// Check shape compatibility and parameter finiteness.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(CoreError::invalid_config("model needs at least one layer"));
        }
        let mut shape = self.input_shape.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            shape = layer
                .output_shape(&shape)
                .map_err(|e| CoreError::ShapeMismatch(format!("layer {i}: {e}")))?;
            let (w, b) = layer.params();
            if w.iter().chain(b.iter()).any(|x| !x.is_finite()) {
                return Err(CoreError::invalid_config(format!(
                    "layer {i} has non-finite parameters"
                )));
            }
        }
        Ok(())
    }

    pub fn output_classes(&self) -> usize {
        match self.layers.last() {
            Some(DnnLayer::Dense(d)) => d.out,
            _ => 0,
        }
    }

    /// Exact affine + ReLU forward pass; the last layer stays linear.
    pub fn forward(&self, input: &[f64]) -> Result<DnnForward> {
        let flat: usize = self.input_shape.iter().product();
        if input.len() != flat {
            return Err(CoreError::ShapeMismatch(format!(
                "input len {} != {flat}",
                input.len()
            )));
        }
        let mut shape = self.input_shape.clone();
        let mut x = input.to_vec();
        let mut activations = Vec::with_capacity(self.layers.len());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut y = match layer {
                DnnLayer::Dense(d) => {
                    let mut y = vec![0.0f64; d.out];
                    for (j, yj) in y.iter_mut().enumerate() {
                        let row = &d.weights[j * d.inp..(j + 1) * d.inp];
                        let mut acc = f64::from(d.bias[j]);
                        for (wij, xi) in row.iter().zip(x.iter()) {
                            acc += f64::from(*wij) * xi;
                        }
                        *yj = acc;
                    }
                    y
                }
                DnnLayer::Conv2d(c) => {
                    let (_, h, w) = chw(&shape)?;
                    c.apply(&x, h, w, true)?
                }
                DnnLayer::MaxPool2d { k, stride } => {
                    let (ic, h, w) = chw(&shape)?;
                    let oh = (h - k) / stride + 1;
                    let ow = (w - k) / stride + 1;
                    let mut y = vec![f64::NEG_INFINITY; ic * oh * ow];
                    for c in 0..ic {
                        for oy in 0..oh {
                            for ox in 0..ow {
                                let mut m = f64::NEG_INFINITY;
                                for ky in 0..*k {
                                    for kx in 0..*k {
                                        let v =
                                            x[(c * h + oy * stride + ky) * w + ox * stride + kx];
                                        if v > m {
                                            m = v;
                                        }
                                    }
                                }
                                y[(c * oh + oy) * ow + ox] = m;
                            }
                        }
                    }
                    y
                }
            };
            shape = layer.output_shape(&shape)?;
            if i != last {
                for v in y.iter_mut() {
                    *v = v.max(0.0);
                }
                activations.push(y.clone());
            }
            x = y;
        }
        Ok(DnnForward {
            activations,
            logits: x,
        })
    }

    /// Argmax of the logits with low-index tie break.
    pub fn predict(&self, input: &[f64]) -> Result<usize> {
        let f = self.forward(input)?;
        let mut best = 0;
        for (i, &v) in f.logits.iter().enumerate() {
            if v > f.logits[best] {
                best = i;
            }
        }
        Ok(best)
    }
}
