//! Mini-batch SGD.

use ndarray::Axis;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::bce_from_logits;
use super::{feature_matrix, input_dim, target_matrix, InrModel, LabelMode, Mlp, MlpConfig, PeConfig};
use crate::dataset::Sample;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 64,
            epochs: 200,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) || self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::InvalidConfig(
                "learning_rate, batch_size and epochs must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Network shape plus what its inputs and outputs mean.
#[derive(Clone, Debug, PartialEq)]
pub struct Architecture {
    pub labels: LabelMode,
    pub pe: Option<PeConfig>,
    pub mlp: MlpConfig,
}

impl Architecture {
    /// Derives input and output widths from the encoding choices.
    pub fn new(
        rows: usize,
        cols: usize,
        labels: LabelMode,
        pe: Option<PeConfig>,
        hidden_layers: usize,
        hidden_width: usize,
        activation: super::Activation,
    ) -> Self {
        Architecture {
            labels,
            mlp: MlpConfig {
                input_dim: input_dim(pe.as_ref()),
                hidden_layers,
                hidden_width,
                output_dim: labels.output_dim(rows, cols),
                activation,
            },
            pe,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Sample-weighted mean of the batch losses seen during the epoch.
    pub train_loss: f64,
    pub val_bit_accuracy: Option<f64>,
}

/// Glorot initialization followed by `cfg.epochs` passes of shuffled
/// mini-batch SGD on the mean per-sample BCE.
pub fn train(
    train: &[Sample],
    val: &[Sample],
    arch: &Architecture,
    cfg: &TrainConfig,
) -> Result<(InrModel, Vec<EpochStats>)> {
    cfg.validate()?;
    let first = train
        .first()
        .ok_or_else(|| Error::InvalidConfig("training set is empty".into()))?;
    let (rows, cols) = (first.label.rows(), first.label.cols());
    if train.iter().chain(val).any(|s| (s.label.rows(), s.label.cols()) != (rows, cols)) {
        return Err(Error::ConfigMismatch("samples come from different panel shapes".into()));
    }
    let expected = arch.labels.output_dim(rows, cols);
    if arch.mlp.output_dim != expected {
        return Err(Error::ConfigMismatch(format!(
            "{} labels have {expected} bits but output_dim is {}",
            arch.labels.name(),
            arch.mlp.output_dim
        )));
    }

    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let net = Mlp::init(arch.mlp.clone(), &mut init_rng)?;
    let mut model = InrModel::new(rows, cols, arch.labels, arch.pe, net)?;

    let x = feature_matrix(arch.pe.as_ref(), train.iter().map(|s| &s.coord_norm));
    let t = target_matrix(arch.labels, train, expected)?;
    let val_targets: Vec<Vec<u8>> = val.iter().map(|s| arch.labels.targets(&s.label)).collect();

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffle_rng.set_stream(1);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let xb = x.select(Axis(0), batch);
            let tb = t.select(Axis(0), batch);
            let (loss, grads) = model.net.loss_and_gradients(xb.view(), tb.view())?;
            loss_sum += loss * batch.len() as f64;
            model.net.sgd_step(&grads, cfg.learning_rate);
        }
        let val_bit_accuracy = if val.is_empty() {
            None
        } else {
            let pred = model.predict_bits(val)?;
            Some(pooled_agreement(&pred, &val_targets))
        };
        history.push(EpochStats {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            val_bit_accuracy,
        });
    }
    Ok((model, history))
}

/// Mean per-sample BCE of `model` on `samples`.
pub fn mean_loss(model: &InrModel, samples: &[Sample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let x = model.feature_matrix(samples.iter().map(|s| &s.coord_norm));
    let t = target_matrix(model.labels, samples, model.net.config().output_dim)?;
    let z = model.net.logits(x.view())?;
    Ok(bce_from_logits(z.view(), t.view()) / samples.len() as f64)
}

pub(crate) fn pooled_agreement(pred: &[Vec<u8>], truth: &[Vec<u8>]) -> f64 {
    let (mut hit, mut total) = (0usize, 0usize);
    for (p, t) in pred.iter().zip(truth) {
        hit += p.iter().zip(t).filter(|(a, b)| a == b).count();
        total += t.len();
    }
    hit as f64 / total as f64
}
