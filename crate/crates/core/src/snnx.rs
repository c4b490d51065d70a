//! SNNX v1 model files.
//!
//! A model is a pair of adjacent files: a UTF-8 JSON manifest listing
//! layer kind, shape, dtype, and the byte extent of each parameter block,
//! plus a flat little-endian f32 blob holding the row-major parameters.
//! The manifest for `model.snnx` names its blob, stored as
//! `model.snnx.bin` next to it. Files describe either a plain DNN
//! (no coding metadata) or a converted SNN (coding, thresholds and any
//! applied scale plan included). Saving is byte-deterministic so golden
//! files can be compared exactly.

use std::fs;
use std::path::{Path, PathBuf};

use crate::coding::CodingConfig;
use crate::dnn::{Conv2d, Dense, DnnLayer, DnnModel};
use crate::error::{CoreError, Result};
use crate::network::{SnnLayer, SnnModel};
use crate::robustness::AppliedScale;

pub const SNNX_FORMAT: &str = "SNNX";
pub const SNNX_VERSION: u32 = 1;
pub const SNNX_DTYPE: &str = "f32le";

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
struct BlockRef {
    offset: u64,
    len: u64,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
struct ManifestLayer {
    kind: String,
    shape: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    stride: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    padding: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    theta: Option<f64>,
    #[serde(default)]
    window_offset: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    window_len: Option<u32>,
    weights: BlockRef,
    bias: BlockRef,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    dtype: String,
    blob: String,
    input_shape: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    coding: Option<CodingConfig>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    scale_plan: Option<AppliedScale>,
    layers: Vec<ManifestLayer>,
}

/// One layer of a model file: weights plus optional spiking metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct FileLayer {
    pub layer: DnnLayer,
    pub theta: Option<f64>,
    pub window_offset: u32,
    pub window_len: Option<u32>,
}

/// In-memory form of an SNNX file: a DNN plus optional spiking metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub input_shape: Vec<usize>,
    pub layers: Vec<FileLayer>,
    pub coding: Option<CodingConfig>,
    pub scale_plan: Option<AppliedScale>,
}

impl ModelFile {
    pub fn from_dnn(dnn: &DnnModel) -> Self {
        ModelFile {
            input_shape: dnn.input_shape.clone(),
            layers: dnn
                .layers
                .iter()
                .map(|l| FileLayer {
                    layer: l.clone(),
                    theta: None,
                    window_offset: 0,
                    window_len: None,
                })
                .collect(),
            coding: None,
            scale_plan: None,
        }
    }

    pub fn from_snn(snn: &SnnModel) -> Self {
        ModelFile {
            input_shape: snn.input_shape.clone(),
            layers: snn
                .layers
                .iter()
                .map(|l| FileLayer {
                    layer: l.layer.clone(),
                    theta: Some(l.theta),
                    window_offset: l.window_offset,
                    window_len: l.window_len,
                })
                .collect(),
            coding: Some(snn.coding.clone()),
            scale_plan: snn.scale,
        }
    }

    /// Weights as a plain DNN, dropping spiking metadata.
    pub fn dnn(&self) -> Result<DnnModel> {
        DnnModel::new(
            self.input_shape.clone(),
            self.layers.iter().map(|fl| fl.layer.clone()).collect(),
        )
    }

    /// Interpret as a converted SNN; fails when coding or any threshold
    /// is missing.
    pub fn snn(&self) -> Result<SnnModel> {
        let coding = self.coding.clone().ok_or_else(|| {
            CoreError::invalid_config("model file has no coding metadata; convert it first")
        })?;
        let layers = self
            .layers
            .iter()
            .enumerate()
            .map(|(i, fl)| {
                fl.theta
                    .map(|t| SnnLayer {
                        layer: fl.layer.clone(),
                        theta: t,
                        window_offset: fl.window_offset,
                        window_len: fl.window_len,
                    })
                    .ok_or_else(|| {
                        CoreError::invalid_config(format!("layer {i} has no threshold"))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        let model = SnnModel {
            input_shape: self.input_shape.clone(),
            layers,
            coding,
            scale: self.scale_plan,
        };
        model.validate()?;
        Ok(model)
    }
}

fn blob_path(manifest_path: &Path, blob_name: &str) -> PathBuf {
    match manifest_path.parent() {
        Some(dir) => dir.join(blob_name),
        None => PathBuf::from(blob_name),
    }
}

fn push_block(blob: &mut Vec<u8>, values: &[f32]) -> BlockRef {
    let offset = blob.len() as u64;
    for v in values {
        blob.extend_from_slice(&v.to_le_bytes());
    }
    BlockRef {
        offset,
        len: (values.len() * 4) as u64,
    }
}

fn read_block(blob: &[u8], block: &BlockRef, expect: usize) -> Result<Vec<f32>> {
    if block.len != (expect * 4) as u64 {
        return Err(CoreError::Format {
            offset: block.offset,
            msg: format!("block length {} != {} f32 values", block.len, expect),
        });
    }
    let start = block.offset as usize;
    let end = start + block.len as usize;
    if end > blob.len() {
        return Err(CoreError::Format {
            offset: block.offset,
            msg: format!("block extends past blob of {} bytes", blob.len()),
        });
    }
    Ok(blob[start..end]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect())
}

/// Write a model as a manifest plus adjacent blob. Returns the blob path.
pub fn save(path: &Path, model: &ModelFile) -> Result<PathBuf> {
    let blob_name = format!(
        "{}.bin",
        path.file_name()
            .and_then(|s| s.to_str())
            .ok_or_else(|| CoreError::invalid_input("model path has no file name"))?
    );
    let mut blob = Vec::new();
    let mut layers = Vec::with_capacity(model.layers.len());
    for fl in &model.layers {
        let (kind, shape, stride, padding, w, b): (
            &str,
            Vec<usize>,
            Option<usize>,
            Option<usize>,
            &[f32],
            &[f32],
        ) = match &fl.layer {
            DnnLayer::Dense(d) => ("dense", vec![d.out, d.inp], None, None, &d.weights, &d.bias),
            DnnLayer::Conv2d(c) => (
                "conv2d",
                vec![c.out_channels, c.in_channels, c.kh, c.kw],
                Some(c.stride),
                Some(c.padding),
                &c.kernel,
                &c.bias,
            ),
            DnnLayer::MaxPool2d { k, stride } => {
                ("max_pool2d", vec![*k], Some(*stride), None, &[], &[])
            }
        };
        let weights = push_block(&mut blob, w);
        let bias = push_block(&mut blob, b);
        layers.push(ManifestLayer {
            kind: kind.to_string(),
            shape,
            stride,
            padding,
            theta: fl.theta,
            window_offset: fl.window_offset,
            window_len: fl.window_len,
            weights,
            bias,
        });
    }
    let manifest = Manifest {
        format: SNNX_FORMAT.to_string(),
        version: SNNX_VERSION,
        dtype: SNNX_DTYPE.to_string(),
        blob: blob_name.clone(),
        input_shape: model.input_shape.clone(),
        coding: model.coding.clone(),
        scale_plan: model.scale_plan,
        layers,
    };
    let mut json = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| CoreError::invalid_input(format!("manifest serialization: {e}")))?;
    json.push(b'\n');
    fs::write(path, json)?;
    let blob_file = blob_path(path, &blob_name);
    fs::write(&blob_file, blob)?;
    Ok(blob_file)
}

/// Load a manifest and its blob back into a model.
pub fn load(path: &Path) -> Result<ModelFile> {
    let text = fs::read(path)?;
    let manifest: Manifest = serde_json::from_slice(&text).map_err(|e| CoreError::Format {
        offset: e.column() as u64,
        msg: format!("manifest parse error: {e}"),
    })?;
    if manifest.format != SNNX_FORMAT {
        return Err(CoreError::Format {
            offset: 0,
            msg: format!("bad format tag {:?}", manifest.format),
        });
    }
    if manifest.version != SNNX_VERSION {
        return Err(CoreError::Format {
            offset: 0,
            msg: format!("unsupported version {}", manifest.version),
        });
    }
    if manifest.dtype != SNNX_DTYPE {
        return Err(CoreError::Format {
            offset: 0,
            msg: format!("dtype must be {SNNX_DTYPE}, got {:?}", manifest.dtype),
        });
    }
    let blob = fs::read(blob_path(path, &manifest.blob))?;
    let mut layers = Vec::with_capacity(manifest.layers.len());
    for (i, ml) in manifest.layers.iter().enumerate() {
        let layer = match (ml.kind.as_str(), ml.shape.as_slice()) {
            ("dense", [out, inp]) => {
                let w = read_block(&blob, &ml.weights, out * inp)?;
                let b = read_block(&blob, &ml.bias, *out)?;
                DnnLayer::Dense(Dense::new(*out, *inp, w, b)?)
            }
            ("conv2d", [oc, ic, kh, kw]) => {
                let w = read_block(&blob, &ml.weights, oc * ic * kh * kw)?;
                let b = read_block(&blob, &ml.bias, *oc)?;
                DnnLayer::Conv2d(Conv2d {
                    out_channels: *oc,
                    in_channels: *ic,
                    kh: *kh,
                    kw: *kw,
                    stride: ml.stride.unwrap_or(1),
                    padding: ml.padding.unwrap_or(0),
                    kernel: w,
                    bias: b,
                })
            }
            ("max_pool2d", [k]) => DnnLayer::MaxPool2d {
                k: *k,
                stride: ml.stride.unwrap_or(*k),
            },
            (kind, shape) => {
                return Err(CoreError::Format {
                    offset: ml.weights.offset,
                    msg: format!("layer {i}: unknown kind {kind:?} with shape {shape:?}"),
                })
            }
        };
        layers.push(FileLayer {
            layer,
            theta: ml.theta,
            window_offset: ml.window_offset,
            window_len: ml.window_len,
        });
    }
    Ok(ModelFile {
        input_shape: manifest.input_shape,
        layers,
        coding: manifest.coding,
        scale_plan: manifest.scale_plan,
    })
}
