//! Miniature trainable models around the encoder and loss, an Adam optimizer,
//! batching, and JSON checkpoints.

mod checkpoint;
mod data;
mod model;
mod optim;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, SCHEMA_VERSION};
pub use data::{build_samples, split_indices, Batch, LabelVocabulary, Sample};
pub use model::{Dense, DenseGrads, ForwardCache, Model, ModelConfig, ModelGrads, ModelMode};
pub use optim::Adam;

use crate::analyze::{macro_auroc, macro_f1};
use crate::cil::{class_weights, total_loss, LossBreakdown, LossConfig, PredictionMatrix, WeightScope};
use crate::error::{Error, Result};
use crate::numcore::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub train_fraction: f64,
    pub val_fraction: f64,
    /// Probability cut-off for F1.
    pub threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            batch_size: 32,
            epochs: 100,
            train_fraction: 0.8,
            val_fraction: 0.2,
            threshold: 0.5,
        }
    }
}

impl TrainConfig {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        // lr = 0 is accepted: it freezes the model
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            out.push(format!("train.lr must be finite and >= 0, got {}", self.lr));
        }
        if self.batch_size == 0 {
            out.push("train.batch_size must be >= 1".to_string());
        }
        let fractions_ok = (0.0..=1.0).contains(&self.train_fraction)
            && (0.0..=1.0).contains(&self.val_fraction)
            && (self.train_fraction + self.val_fraction - 1.0).abs() < 1e-9;
        if !fractions_ok {
            out.push(format!(
                "train.train_fraction + train.val_fraction must equal 1, got {} + {}",
                self.train_fraction, self.val_fraction
            ));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            out.push("train.beta1 and train.beta2 must lie in [0, 1)".to_string());
        }
        if self.eps.is_nan() || self.eps <= 0.0 {
            out.push("train.eps must be > 0".to_string());
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            out.push(format!(
                "train.threshold must lie in (0, 1), got {}",
                self.threshold
            ));
        }
        out
    }
}

/// Scalar loss components, without gradients.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct LossValues {
    pub basis: f64,
    pub stt: f64,
    #[serde(rename = "class")]
    pub class_energy: f64,
    pub sample: f64,
    pub col: f64,
    pub total: f64,
}

impl From<&LossBreakdown> for LossValues {
    fn from(b: &LossBreakdown) -> Self {
        LossValues {
            basis: b.basis,
            stt: b.stt,
            class_energy: b.class_energy,
            sample: b.sample,
            col: b.col,
            total: b.total,
        }
    }
}

impl LossValues {
    fn accumulate(&mut self, other: &LossValues, weight: f64) {
        self.basis += weight * other.basis;
        self.stt += weight * other.stt;
        self.class_energy += weight * other.class_energy;
        self.sample += weight * other.sample;
        self.col += weight * other.col;
        self.total += weight * other.total;
    }
}

/// One line of the JSON-lines training log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    #[serde(flatten)]
    pub train: LossValues,
    pub val_f1: Option<f64>,
    pub val_auroc: Option<f64>,
    pub val_total: Option<f64>,
}

pub struct Trainer {
    pub model: Model,
    pub loss: LossConfig,
    pub config: TrainConfig,
    optimizer: Adam,
    rng: ChaCha8Rng,
    global_weights: Option<Vec<f64>>,
}

impl Trainer {
    pub fn new(model: Model, config: TrainConfig, loss: LossConfig) -> Result<Self> {
        let mut problems = config.problems();
        problems.extend(loss.problems());
        if !problems.is_empty() {
            return Err(Error::InvalidConfig(problems.join("; ")));
        }
        let mut optimizer = Adam::new(config.lr);
        optimizer.beta1 = config.beta1;
        optimizer.beta2 = config.beta2;
        optimizer.eps = config.eps;
        // distinct stream from model initialization
        let rng = ChaCha8Rng::seed_from_u64(model.config().seed ^ 0x5eed_5eed);
        Ok(Trainer {
            model,
            loss,
            config,
            optimizer,
            rng,
            global_weights: None,
        })
    }

    /// Fixes class weights from the whole training split (used when the loss
    /// config asks for global scope).
    pub fn set_global_weights(&mut self, train: &[Sample]) -> Result<()> {
        let batch = Batch::new(&train.iter().collect::<Vec<_>>())?;
        self.global_weights = Some(class_weights(&batch.labels, &self.loss));
        Ok(())
    }

    fn weights(&self) -> Option<&[f64]> {
        match self.loss.weight_scope {
            WeightScope::Batch => None,
            WeightScope::Global => self.global_weights.as_deref(),
        }
    }

    /// One shuffled pass with an Adam step per batch; returns size-weighted mean losses.
    pub fn train_epoch(&mut self, data: &[Sample]) -> Result<LossValues> {
        if data.is_empty() {
            return Err(Error::EmptyBatch);
        }
        if self.loss.weight_scope == WeightScope::Global && self.global_weights.is_none() {
            self.set_global_weights(data)?;
        }
        let mut order: Vec<usize> = (0..data.len()).collect();
        // a single full batch is the same set whatever the order
        if data.len() > self.config.batch_size {
            order.shuffle(&mut self.rng);
        }
        let mut mean = LossValues::default();
        for (batch_index, chunk) in order.chunks(self.config.batch_size).enumerate() {
            let batch = Batch::from_indices(data, chunk)?;
            let (pred, cache) = self.model.forward_with_cache(&batch)?;
            let breakdown = total_loss(
                &pred.logits,
                &batch.labels,
                &batch.pooled,
                &self.loss,
                self.weights(),
            )?;
            if !breakdown.total.is_finite() || !breakdown.grad_logits.is_finite() {
                return Err(Error::NonFiniteLoss { batch: batch_index });
            }
            let grads = self.model.backward(&cache, &breakdown.grad_logits)?;
            let grad_refs = grads.tensors();
            let mut params: Vec<&mut Matrix> = self.model.tensors_mut().into_iter().map(|(_, t)| t).collect();
            self.optimizer.step(&mut params, &grad_refs)?;
            mean.accumulate(
                &LossValues::from(&breakdown),
                chunk.len() as f64 / data.len() as f64,
            );
        }
        Ok(mean)
    }

    /// Loss of `data` evaluated as a single batch, no update.
    pub fn evaluate_loss(&self, data: &[Sample]) -> Result<LossValues> {
        let batch = Batch::new(&data.iter().collect::<Vec<_>>())?;
        let pred = self.model.forward(&batch)?;
        let b = total_loss(
            &pred.logits,
            &batch.labels,
            &batch.pooled,
            &self.loss,
            self.weights(),
        )?;
        Ok(LossValues::from(&b))
    }
}

/// Predictions for `data` in chunks of `batch_size`, rows in input order.
pub fn predict(model: &Model, data: &[Sample], batch_size: usize) -> Result<PredictionMatrix> {
    if data.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut rows: Vec<f64> = Vec::new();
    let mut m = 0;
    for chunk in data.chunks(batch_size.max(1)) {
        let batch = Batch::new(&chunk.iter().collect::<Vec<_>>())?;
        let p = model.forward(&batch)?;
        m = p.logits.cols();
        rows.extend_from_slice(p.logits.as_slice());
    }
    Ok(PredictionMatrix::from_logits(Matrix::new(data.len(), m, rows)?))
}

pub fn label_matrix(data: &[Sample]) -> Result<Matrix> {
    Matrix::from_rows(&data.iter().map(|s| s.labels.as_slice()).collect::<Vec<_>>())
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    /// Model with the best validation macro-F1 (the final model when there is
    /// no validation data).
    pub best_model: Model,
    pub best_epoch: Option<usize>,
    pub records: Vec<EpochRecord>,
}

/// Runs `config.epochs` epochs, evaluating on `val` after each.
pub fn fit(
    trainer: &mut Trainer,
    train: &[Sample],
    val: &[Sample],
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<FitOutcome> {
    let mut records = Vec::with_capacity(trainer.config.epochs);
    let mut best: Option<(f64, usize, Model)> = None;
    for epoch in 1..=trainer.config.epochs {
        let train_loss = trainer.train_epoch(train)?;
        let (val_f1, val_auroc, val_total) = if val.is_empty() {
            (None, None, None)
        } else {
            let pred = predict(&trainer.model, val, trainer.config.batch_size)?;
            let y = label_matrix(val)?;
            let f1 = macro_f1(&pred.probs, &y, trainer.config.threshold)?;
            let (auc, _) = macro_auroc(&pred.probs, &y)?;
            let total = trainer.evaluate_loss(val)?.total;
            (Some(f1), auc, Some(total))
        };
        let record = EpochRecord {
            epoch,
            train: train_loss,
            val_f1,
            val_auroc,
            val_total,
        };
        on_epoch(&record);
        if let Some(f1) = val_f1 {
            if best.as_ref().is_none_or(|(b, _, _)| f1 > *b) {
                best = Some((f1, epoch, trainer.model.clone()));
            }
        }
        records.push(record);
    }
    let (best_model, best_epoch) = match best {
        Some((_, epoch, model)) => (model, Some(epoch)),
        None => (trainer.model.clone(), None),
    };
    Ok(FitOutcome {
        best_model,
        best_epoch,
        records,
    })
}
