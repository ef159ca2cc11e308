//! Coordinate network: optional positional encoding, MLP, sigmoid head and
//! threshold decoding back to a codebook.

pub mod checkpoint;
pub mod encoding;
pub mod mlp;
pub mod train;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::codebook::{label_len, Codebook, EncodedLabel};
use crate::dataset::{DatasetMeta, Sample};
use crate::error::{Error, Result};
use crate::field::Point3;

pub use encoding::{positional_encoding, PeConfig};
pub use mlp::{bce_loss, Activation, Mlp, MlpConfig, Prediction};
pub use train::{train, EpochStats, TrainConfig};

/// What the network's outputs mean.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    /// The `M + N - 1` bit compressed label.
    Encoded,
    /// The raw row-major `M * N` codebook bits (`+1 -> 1`).
    Flat,
}

impl LabelMode {
    pub fn output_dim(self, rows: usize, cols: usize) -> usize {
        match self {
            LabelMode::Encoded => label_len(rows, cols),
            LabelMode::Flat => rows * cols,
        }
    }

    pub fn targets(self, label: &EncodedLabel) -> Vec<u8> {
        match self {
            LabelMode::Encoded => label.bits().to_vec(),
            LabelMode::Flat => label.decode().to_bits(),
        }
    }

    pub fn to_codebook(self, rows: usize, cols: usize, bits: &[u8]) -> Result<Codebook> {
        match self {
            LabelMode::Encoded => EncodedLabel::decode_bits(rows, cols, bits),
            LabelMode::Flat => Codebook::from_bits(rows, cols, bits),
        }
    }
}

/// Network input width for an optional encoding.
pub fn input_dim(pe: Option<&PeConfig>) -> usize {
    pe.map_or(3, PeConfig::output_dim)
}

/// A trained (or initialized) coordinate-to-codebook model.
#[derive(Clone, Debug, PartialEq)]
pub struct InrModel {
    pub rows: usize,
    pub cols: usize,
    pub labels: LabelMode,
    pub pe: Option<PeConfig>,
    pub net: Mlp,
}

impl InrModel {
    pub fn new(rows: usize, cols: usize, labels: LabelMode, pe: Option<PeConfig>, net: Mlp) -> Result<Self> {
        if let Some(pe) = &pe {
            pe.validate()?;
        }
        let cfg = net.config();
        if cfg.input_dim != input_dim(pe.as_ref()) {
            return Err(Error::ConfigMismatch(format!(
                "network input_dim {} does not match encoding width {}",
                cfg.input_dim,
                input_dim(pe.as_ref())
            )));
        }
        if cfg.output_dim != labels.output_dim(rows, cols) {
            return Err(Error::ConfigMismatch(format!(
                "network output_dim {} does not match {} label length {}",
                cfg.output_dim,
                labels.name(),
                labels.output_dim(rows, cols)
            )));
        }
        Ok(InrModel {
            rows,
            cols,
            labels,
            pe,
            net,
        })
    }

    pub fn features(&self, v_norm: Point3) -> Vec<f64> {
        features(self.pe.as_ref(), v_norm)
    }

    pub fn feature_matrix<'a>(&self, coords: impl ExactSizeIterator<Item = &'a Point3>) -> Array2<f64> {
        feature_matrix(self.pe.as_ref(), coords)
    }

    pub fn predict(&self, v_norm: Point3) -> Result<Prediction> {
        self.net.forward(&self.features(v_norm))
    }

    /// Thresholded output bits for every sample, in sample order.
    pub fn predict_bits(&self, samples: &[Sample]) -> Result<Vec<Vec<u8>>> {
        let x = self.feature_matrix(samples.iter().map(|s| &s.coord_norm));
        let z = self.net.logits(x.view())?;
        // sigmoid(z) >= 0.5 exactly when z >= 0
        Ok(z.outer_iter().map(|row| row.iter().map(|&z| u8::from(z >= 0.0)).collect()).collect())
    }

    pub fn check_meta(&self, meta: &DatasetMeta) -> Result<()> {
        if (meta.geometry.rows, meta.geometry.cols) != (self.rows, self.cols) {
            return Err(Error::ConfigMismatch(format!(
                "model is for a {}x{} panel, dataset has {}x{}",
                self.rows, self.cols, meta.geometry.rows, meta.geometry.cols
            )));
        }
        Ok(())
    }

    /// Normalize by the dataset box, encode, run the network, threshold at
    /// 0.5 and decode.
    pub fn predict_codebook(&self, v_raw: Point3, meta: &DatasetMeta) -> Result<Codebook> {
        self.check_meta(meta)?;
        let bits = self.predict(meta.grid.normalize(v_raw))?.threshold();
        self.labels.to_codebook(self.rows, self.cols, &bits)
    }
}

impl LabelMode {
    pub fn name(self) -> &'static str {
        match self {
            LabelMode::Encoded => "encoded",
            LabelMode::Flat => "flat",
        }
    }
}

pub fn features(pe: Option<&PeConfig>, v_norm: Point3) -> Vec<f64> {
    match pe {
        Some(pe) => pe.encode(v_norm),
        None => v_norm.to_vec(),
    }
}

pub fn feature_matrix<'a>(pe: Option<&PeConfig>, coords: impl ExactSizeIterator<Item = &'a Point3>) -> Array2<f64> {
    let width = input_dim(pe);
    let mut x = Array2::zeros((coords.len(), width));
    for (mut row, v) in x.outer_iter_mut().zip(coords) {
        let out = row.as_slice_mut().expect("standard layout");
        match pe {
            Some(pe) => pe.encode_into(*v, out),
            None => out.copy_from_slice(v),
        }
    }
    x
}

pub fn target_matrix(labels: LabelMode, samples: &[Sample], output_dim: usize) -> Result<Array2<f64>> {
    let mut t = Array2::zeros((samples.len(), output_dim));
    for (mut row, s) in t.outer_iter_mut().zip(samples) {
        let bits = labels.targets(&s.label);
        if bits.len() != output_dim {
            return Err(Error::ConfigMismatch(format!(
                "label has {} bits but network outputs {output_dim}",
                bits.len()
            )));
        }
        row.iter_mut().zip(bits).for_each(|(t, b)| *t = f64::from(b));
    }
    Ok(t)
}
