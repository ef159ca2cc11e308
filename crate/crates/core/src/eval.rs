//! Metrics and experiment runners.
//!
//! Two accuracies are reported everywhere. `bit_accuracy` compares the
//! thresholded network outputs with the target bits of whatever label the
//! model was trained on (`M + N - 1` encoded bits or `M * N` raw bits).
//! `element_accuracy` compares the decoded `M x N` codebooks.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::codebook::Codebook;
use crate::config::{AblationGrid, ModelConfig};
use crate::dataset::{split, split_indices, Dataset, Sample};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::field::{to_dbm, ScenarioGeometry};
use crate::inr::train::{mean_loss, pooled_agreement, train};
use crate::inr::{InrModel, TrainConfig};

fn non_empty(samples: &[Sample]) -> Result<()> {
    if samples.is_empty() {
        Err(Error::EmptyTestSet)
    } else {
        Ok(())
    }
}

/// Fraction of predicted label bits equal to the target bits, pooled over
/// samples.
pub fn bit_accuracy(model: &InrModel, samples: &[Sample]) -> Result<f64> {
    non_empty(samples)?;
    let pred = model.predict_bits(samples)?;
    let truth: Vec<Vec<u8>> = samples.iter().map(|s| model.labels.targets(&s.label)).collect();
    Ok(pooled_agreement(&pred, &truth))
}

pub fn predicted_codebooks(model: &InrModel, samples: &[Sample]) -> Result<Vec<Codebook>> {
    model
        .predict_bits(samples)?
        .iter()
        .map(|bits| model.labels.to_codebook(model.rows, model.cols, bits))
        .collect()
}

/// Fraction of codebook entries matching the labeled codebook, pooled over
/// samples.
pub fn element_accuracy(model: &InrModel, samples: &[Sample]) -> Result<f64> {
    non_empty(samples)?;
    let pred = predicted_codebooks(model, samples)?;
    let hits: usize = pred
        .iter()
        .zip(samples)
        .map(|(p, s)| p.matching_entries(&s.label.decode()))
        .sum();
    Ok(hits as f64 / (samples.len() * model.rows * model.cols) as f64)
}

/// Per-sample element accuracy.
pub fn element_accuracies(model: &InrModel, samples: &[Sample]) -> Result<Vec<f64>> {
    let n = (model.rows * model.cols) as f64;
    Ok(predicted_codebooks(model, samples)?
        .iter()
        .zip(samples)
        .map(|(p, s)| p.matching_entries(&s.label.decode()) as f64 / n)
        .collect())
}

/// Received power of one codebook family averaged over the evaluation points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerSummary {
    /// Mean of the per-point dBm values.
    pub mean_dbm: f64,
    /// dBm of the mean linear power.
    pub dbm_of_mean: f64,
}

impl PowerSummary {
    fn from_linear(values: &[f64]) -> Self {
        let n = values.len() as f64;
        PowerSummary {
            mean_dbm: values.iter().map(|&p| to_dbm(p)).sum::<f64>() / n,
            dbm_of_mean: to_dbm(values.iter().sum::<f64>() / n),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerReport {
    pub inr: PowerSummary,
    pub label: PowerSummary,
    pub random: PowerSummary,
    pub initial: PowerSummary,
    /// Per-point linear powers in sample order: (inr, label, random, initial).
    pub per_point: Vec<[f64; 4]>,
}

/// Compares predicted codebooks against the stored labels, a seeded uniform
/// random codebook per point and the all `-1` state.
pub fn power_eval(
    model: &InrModel,
    geom: &ScenarioGeometry,
    samples: &[Sample],
    random_seed: u64,
    exec: Execution,
) -> Result<PowerReport> {
    non_empty(samples)?;
    let (rows, cols) = (geom.rows(), geom.cols());
    let predicted = predicted_codebooks(model, samples)?;
    let mut rng = ChaCha8Rng::seed_from_u64(random_seed);
    let random: Vec<Codebook> = samples
        .iter()
        .map(|_| {
            let e = (0..rows * cols).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
            Codebook::new(rows, cols, e).expect("valid shape")
        })
        .collect();
    let initial = Codebook::initial(rows, cols);
    let per_point = exec.try_map(samples.len(), |i| {
        let h = geom.channel_gains(samples[i].coord_raw)?;
        Ok::<_, Error>([
            h.power(&predicted[i])?.linear,
            h.power(&samples[i].label.decode())?.linear,
            h.power(&random[i])?.linear,
            h.power(&initial)?.linear,
        ])
    })?;
    let column = |k: usize| PowerSummary::from_linear(&per_point.iter().map(|p| p[k]).collect::<Vec<_>>());
    Ok(PowerReport {
        inr: column(0),
        label: column(1),
        random: column(2),
        initial: column(3),
        per_point,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub bit_accuracy: f64,
    pub element_accuracy: f64,
    pub power: PowerReport,
    pub sample_count: usize,
    pub fingerprint: String,
}

/// Stable short hash of a checkpoint, dataset header and baseline seed.
pub fn fingerprint(model: &InrModel, dataset: &Dataset, random_seed: u64) -> String {
    let mut h = Sha256::new();
    h.update(model.to_text());
    h.update(toml::to_string(&dataset.meta).expect("meta serializes"));
    h.update(random_seed.to_le_bytes());
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Full report on `samples` (usually the test split of `dataset`).
pub fn evaluate(
    model: &InrModel,
    dataset: &Dataset,
    samples: &[Sample],
    random_seed: u64,
    exec: Execution,
) -> Result<EvalReport> {
    model.check_meta(&dataset.meta)?;
    let geom = dataset.meta.validate()?;
    Ok(EvalReport {
        bit_accuracy: bit_accuracy(model, samples)?,
        element_accuracy: element_accuracy(model, samples)?,
        power: power_eval(model, &geom, samples, random_seed, exec)?,
        sample_count: samples.len(),
        fingerprint: fingerprint(model, dataset, random_seed),
    })
}

#[derive(Serialize)]
struct EvalRow<'a> {
    fingerprint: &'a str,
    sample_count: usize,
    bit_accuracy: f64,
    element_accuracy: f64,
    mean_power_inr_dbm: f64,
    mean_power_label_dbm: f64,
    mean_power_random_dbm: f64,
    mean_power_initial_dbm: f64,
    inr_dbm_of_mean: f64,
    label_dbm_of_mean: f64,
    random_dbm_of_mean: f64,
    initial_dbm_of_mean: f64,
}

impl EvalReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let p = &self.power;
        let mut out = csv::Writer::from_writer(w);
        out.serialize(EvalRow {
            fingerprint: &self.fingerprint,
            sample_count: self.sample_count,
            bit_accuracy: self.bit_accuracy,
            element_accuracy: self.element_accuracy,
            mean_power_inr_dbm: p.inr.mean_dbm,
            mean_power_label_dbm: p.label.mean_dbm,
            mean_power_random_dbm: p.random.mean_dbm,
            mean_power_initial_dbm: p.initial.mean_dbm,
            inr_dbm_of_mean: p.inr.dbm_of_mean,
            label_dbm_of_mean: p.label.dbm_of_mean,
            random_dbm_of_mean: p.random.dbm_of_mean,
            initial_dbm_of_mean: p.initial.dbm_of_mean,
        })?;
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// One trained ablation cell, evaluated on the test split.
#[derive(Clone, Debug, PartialEq)]
pub struct AblationCell {
    pub model: ModelConfig,
    pub bit_accuracy: f64,
    pub element_accuracy: f64,
    pub final_train_loss: f64,
}

/// Trains one model per cell of `grid` with the same seed and budget.
pub fn ablate(
    dataset: &Dataset,
    base: &ModelConfig,
    grid: &AblationGrid,
    train_cfg: &TrainConfig,
    exec: Execution,
) -> Result<Vec<AblationCell>> {
    let splits = split(dataset)?;
    let (rows, cols) = (dataset.meta.geometry.rows, dataset.meta.geometry.cols);
    let cells = grid.cells(base);
    exec.try_map(cells.len(), |i| {
        let cfg = &cells[i];
        let arch = cfg.architecture(rows, cols)?;
        let (model, _) = train(&splits.train, &splits.val, &arch, train_cfg)?;
        Ok(AblationCell {
            model: cfg.clone(),
            bit_accuracy: bit_accuracy(&model, &splits.test)?,
            element_accuracy: element_accuracy(&model, &splits.test)?,
            final_train_loss: mean_loss(&model, &splits.train)?,
        })
    })
}

#[derive(Serialize)]
struct AblationRow {
    activation: &'static str,
    pe: bool,
    enc_bit_accuracy: Option<f64>,
    wo_enc_bit_accuracy: Option<f64>,
    enc_element_accuracy: Option<f64>,
    wo_enc_element_accuracy: Option<f64>,
}

/// Ablation table: one row per (activation, PE), enc and w/o-enc side by side.
pub fn write_ablation_csv<W: Write>(cells: &[AblationCell], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut keys: Vec<(crate::inr::Activation, bool)> = Vec::new();
    for c in cells {
        let k = (c.model.activation, c.model.positional_encoding);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    for (activation, pe) in keys {
        let find = |enc: bool| {
            cells.iter().find(|c| {
                c.model.activation == activation && c.model.positional_encoding == pe && c.model.encoding == enc
            })
        };
        let (enc, wo) = (find(true), find(false));
        out.serialize(AblationRow {
            activation: activation.name(),
            pe,
            enc_bit_accuracy: enc.map(|c| c.bit_accuracy),
            wo_enc_bit_accuracy: wo.map(|c| c.bit_accuracy),
            enc_element_accuracy: enc.map(|c| c.element_accuracy),
            wo_enc_element_accuracy: wo.map(|c| c.element_accuracy),
        })?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub variant: String,
    pub fraction: f64,
    pub train_count: usize,
    pub bit_accuracy: f64,
    pub element_accuracy: f64,
}

/// Subsample size for a fraction of `n` training samples (at least one).
pub fn subsample_len(n: usize, fraction: f64) -> usize {
    ((n as f64 * fraction).round() as usize).clamp(1, n)
}

/// Trains each variant on growing prefixes of one seeded permutation of the
/// training split, so smaller subsets are nested in larger ones, and scores
/// every run on the same test split. Subsets keep the split's sample order,
/// so fraction 1.0 is exactly a standard training run.
pub fn sweep_data_fraction(
    dataset: &Dataset,
    fractions: &[f64],
    variants: &[ModelConfig],
    train_cfg: &TrainConfig,
    exec: Execution,
) -> Result<Vec<SweepPoint>> {
    if let Some(f) = fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
        return Err(Error::InvalidConfig(format!("sweep fraction {f} outside (0, 1]")));
    }
    let idx = split_indices(dataset.samples.len(), &dataset.meta.split, dataset.meta.seed)?;
    let pick = |ix: &[usize]| -> Vec<Sample> { ix.iter().map(|&i| dataset.samples[i].clone()).collect() };
    let (train_all, val, test) = (pick(&idx.train), pick(&idx.val), pick(&idx.test));
    let mut order: Vec<usize> = (0..train_all.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(train_cfg.seed ^ 0x5eed_f4ac));
    let (rows, cols) = (dataset.meta.geometry.rows, dataset.meta.geometry.cols);

    let jobs: Vec<(&ModelConfig, f64)> = variants
        .iter()
        .flat_map(|v| fractions.iter().map(move |&f| (v, f)))
        .collect();
    exec.try_map(jobs.len(), |j| {
        let (variant, fraction) = jobs[j];
        let n = subsample_len(train_all.len(), fraction);
        let mut chosen = order[..n].to_vec();
        chosen.sort_unstable();
        let subset: Vec<Sample> = chosen.iter().map(|&i| train_all[i].clone()).collect();
        let arch = variant.architecture(rows, cols)?;
        let (model, _) = train(&subset, &val, &arch, train_cfg)?;
        Ok(SweepPoint {
            variant: variant.tag(),
            fraction,
            train_count: n,
            bit_accuracy: bit_accuracy(&model, &test)?,
            element_accuracy: element_accuracy(&model, &test)?,
        })
    })
}

pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for p in points {
        out.serialize(p)?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
