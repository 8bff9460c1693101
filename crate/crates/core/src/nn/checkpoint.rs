//! Model persistence: a `model.json` manifest plus `params.bin`, a flat
//! little-endian 64-bit float blob holding every parameter in layout
//! order (the tensor list in the manifest declares that order).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::NnError;
use crate::io;
use crate::nn::{Architecture, ClassifierModel, GatedRecurrentNet, TemporalConvNet};
use crate::Scalar;

pub const MODEL_FORMAT_VERSION: &str = "1.0";

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelManifest {
    format_version: String,
    architecture: Architecture,
    n_features: usize,
    t_steps: usize,
    /// Architecture hyperparameters: (channels, kernel, blocks) for the
    /// convolutional family, (hidden, 0, 0) for the recurrent one.
    hyper: (usize, usize, usize),
    seed: u64,
    param_count: usize,
    tensors: Vec<TensorEntry>,
}

fn nn_io(path: &Path, e: std::io::Error) -> NnError {
    NnError::Io { path: path.display().to_string(), source: e }
}

fn nn_format(path: &Path, message: impl Into<String>) -> NnError {
    NnError::FormatError { path: path.display().to_string(), message: message.into() }
}

pub fn save_model<F: Scalar>(model: &ClassifierModel<F>, dir: &Path) -> Result<(), NnError> {
    let (n, t) = match model {
        ClassifierModel::TemporalConv(m) => (m.n_features, m.t_steps),
        ClassifierModel::GatedRecurrent(m) => (m.n_features, m.t_steps),
    };
    let hyper = match model {
        ClassifierModel::TemporalConv(m) => (m.channels, m.kernel, m.n_blocks),
        ClassifierModel::GatedRecurrent(m) => (m.hidden, 0, 0),
    };
    let manifest = ModelManifest {
        format_version: MODEL_FORMAT_VERSION.to_string(),
        architecture: model.architecture(),
        n_features: n,
        t_steps: t,
        hyper,
        seed: model.seed(),
        param_count: model.params().len(),
        tensors: model
            .layout()
            .tensors()
            .iter()
            .map(|t| TensorEntry { name: t.name.clone(), shape: t.shape.clone() })
            .collect(),
    };
    std::fs::create_dir_all(dir).map_err(|e| nn_io(dir, e))?;
    let manifest_path = dir.join("model.json");
    io::write_json(&manifest_path, &manifest).map_err(|e| nn_io(&manifest_path, e))?;

    let mut blob = Vec::with_capacity(model.params().len() * 8);
    for v in model.params() {
        blob.extend_from_slice(&v.to_f64().unwrap().to_le_bytes());
    }
    let blob_path = dir.join("params.bin");
    std::fs::write(&blob_path, blob).map_err(|e| nn_io(&blob_path, e))
}

pub fn load_model<F: Scalar>(dir: &Path) -> Result<ClassifierModel<F>, NnError> {
    let manifest_path = dir.join("model.json");
    let manifest: ModelManifest =
        io::read_json(&manifest_path).map_err(|e| nn_format(&manifest_path, e))?;
    if manifest.format_version != MODEL_FORMAT_VERSION {
        return Err(nn_format(
            &manifest_path,
            format!("unsupported model format {}", manifest.format_version),
        ));
    }
    let mut model = match manifest.architecture {
        Architecture::TemporalConv => {
            let (channels, kernel, blocks) = manifest.hyper;
            ClassifierModel::TemporalConv(TemporalConvNet::new(
                manifest.n_features,
                manifest.t_steps,
                channels,
                kernel,
                blocks,
                manifest.seed,
            ))
        }
        Architecture::GatedRecurrent => ClassifierModel::GatedRecurrent(GatedRecurrentNet::new(
            manifest.n_features,
            manifest.t_steps,
            manifest.hyper.0,
            manifest.seed,
        )),
    };
    if model.params().len() != manifest.param_count {
        return Err(nn_format(
            &manifest_path,
            format!(
                "manifest declares {} parameters, architecture has {}",
                manifest.param_count,
                model.params().len()
            ),
        ));
    }

    let blob_path = dir.join("params.bin");
    let blob = std::fs::read(&blob_path).map_err(|e| nn_io(&blob_path, e))?;
    if blob.len() != manifest.param_count * 8 {
        return Err(nn_format(
            &blob_path,
            format!("blob holds {} bytes, expected {}", blob.len(), manifest.param_count * 8),
        ));
    }
    for (i, chunk) in blob.chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(nn_format(&blob_path, format!("parameter {i} is not finite")));
        }
        model.params_mut()[i] = crate::num(v);
    }
    Ok(model)
}
