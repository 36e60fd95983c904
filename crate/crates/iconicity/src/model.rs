//! Versioned JSON model file holding the architecture, row-major weights
//! and the training configuration.

use std::path::Path;

use iconicity_core::mlp::{Activation, Layer};
use iconicity_core::{MlpParams, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::atomic::write_atomic;
use crate::error::{AppError, AppResult};

pub const FORMAT: &str = "iconicity-mlp";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerFile {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: String,
    /// Row-major `out_dim × in_dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfigFile {
    pub margin: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
    pub selu_on_last_hidden: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub input_dim: usize,
    pub widths: Vec<usize>,
    pub seed: u64,
    pub train_config: TrainConfigFile,
    /// Resolved command-line settings, in resolution order.
    pub settings: Vec<(String, String)>,
    pub layers: Vec<LayerFile>,
}

impl ModelFile {
    pub fn new(params: &MlpParams, config: &TrainConfig, settings: &[(String, String)]) -> Self {
        Self {
            format: FORMAT.to_string(),
            version: VERSION,
            input_dim: params.input_dim(),
            widths: params.widths(),
            seed: config.seed,
            train_config: TrainConfigFile {
                margin: config.margin,
                n_pos: config.n_pos,
                n_neg: config.n_neg,
                batch_size: config.batch_size,
                epochs: config.epochs,
                learning_rate: config.learning_rate,
                momentum: config.momentum,
                seed: config.seed,
                selu_on_last_hidden: config.selu_on_last_hidden,
            },
            settings: settings.to_vec(),
            layers: params
                .layers()
                .iter()
                .map(|l| LayerFile {
                    in_dim: l.in_dim,
                    out_dim: l.out_dim,
                    activation: l.activation.name().to_string(),
                    weights: l.weights.clone(),
                    bias: l.bias.clone(),
                })
                .collect(),
        }
    }

    pub fn params(&self) -> Result<MlpParams, String> {
        if self.format != FORMAT {
            return Err(format!("format {:?}, expected {FORMAT:?}", self.format));
        }
        if self.version != VERSION {
            return Err(format!("unsupported model version {}", self.version));
        }
        let layers = self
            .layers
            .iter()
            .map(|l| {
                Ok(Layer {
                    in_dim: l.in_dim,
                    out_dim: l.out_dim,
                    activation: Activation::from_name(&l.activation)
                        .ok_or_else(|| format!("unknown activation {:?}", l.activation))?,
                    weights: l.weights.clone(),
                    bias: l.bias.clone(),
                })
            })
            .collect::<Result<Vec<_>, String>>()?;
        let params = MlpParams::from_layers(layers).map_err(|e| e.to_string())?;
        if params.input_dim() != self.input_dim || params.widths() != self.widths {
            return Err("layer shapes disagree with input_dim/widths".into());
        }
        Ok(params)
    }
}

pub fn write_model(path: &Path, model: &ModelFile) -> AppResult<()> {
    let mut bytes = serde_json::to_vec_pretty(model).expect("model serializes");
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_model(path: &Path) -> AppResult<(ModelFile, MlpParams)> {
    let text = std::fs::read(path).map_err(|e| AppError::io(path, e))?;
    let model: ModelFile =
        serde_json::from_slice(&text).map_err(|e| AppError::data(path, e.to_string()))?;
    let params = model.params().map_err(|m| AppError::data(path, m))?;
    Ok((model, params))
}
