//! Epoch loop, evaluation, checkpoints and metrics export.

mod checkpoint;
mod metrics;

pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use metrics::{
    export_metrics, format_metrics, parse_metrics, read_metrics, MetricsRecord, METRICS_HEADER,
};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::data::{batch_iter, AugmentationConfig, DatasetSplit, LabeledImage};
use crate::error::{Error, Result};
use crate::model::{bce_loss, classify, Model, ModelConfig, Optimizer, OptimizerConfig};
use crate::report::{InspectionReport, ReportRow};
use crate::tensor::Tensor;

/// Images per forward pass when scoring without gradients.
const EVAL_CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub optimizer: OptimizerConfig,
    pub batch_size: usize,
    pub augmentation: Option<AugmentationConfig>,
    /// Drives the per-epoch shuffle.
    pub seed: u64,
    /// Where to write the best-validation checkpoint, if anywhere.
    pub checkpoint_path: Option<PathBuf>,
    /// Where to write the per-epoch metrics CSV, if anywhere.
    pub metrics_path: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            optimizer: OptimizerConfig::default(),
            batch_size: 32,
            augmentation: None,
            seed: 42,
            checkpoint_path: None,
            metrics_path: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.optimizer.learning_rate > 0.0 && self.optimizer.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate {} must be positive",
                self.optimizer.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub final_model: Model,
    /// Parameters from the epoch with the highest validation accuracy (earliest
    /// on ties); the freshly built model when no epochs ran.
    pub best_model: Model,
    pub best_epoch: Option<usize>,
    pub metrics: Vec<MetricsRecord>,
}

impl TrainOutcome {
    pub fn best_record(&self) -> Option<&MetricsRecord> {
        self.best_epoch.map(|e| &self.metrics[e - 1])
    }
}

/// Loss, accuracy and the per-image table for a labelled image set.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
    pub report: InspectionReport,
}

pub fn train(
    splits: &DatasetSplit,
    model_config: &ModelConfig,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    train_with_progress(splits, model_config, config, |_| {})
}

/// [`train`], calling `on_epoch` after each epoch's metrics are known.
pub fn train_with_progress(
    splits: &DatasetSplit,
    model_config: &ModelConfig,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&MetricsRecord),
) -> Result<TrainOutcome> {
    config.validate()?;
    if splits.train.is_empty() || splits.validate.is_empty() {
        return Err(Error::invalid(
            "training needs non-empty train and validate splits",
        ));
    }
    let mut model = Model::build(model_config.clone())?;
    let mut optimizer = Optimizer::new(config.optimizer)?;
    let size = (model_config.input_height, model_config.input_width);
    let validation = preprocess_all(&splits.validate, size)?;

    let mut best_model = model.clone();
    let mut best: Option<(usize, f64)> = None;
    let mut metrics = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        let batches = batch_iter(
            &splits.train,
            config.batch_size,
            size,
            Some(config.seed),
            epoch as u64,
            config.augmentation,
        )?;
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in batches {
            let n = batch.targets.len();
            let (probs, cache) = model.forward(&batch.inputs)?;
            let (loss, grad) = bce_loss(&probs, &batch.targets)?;
            loss_sum += loss * n as f64;
            for (&p, &y) in probs.data().iter().zip(batch.targets.data()) {
                correct += usize::from(classify(p)?.encode() == y);
            }
            let grads = model.backward(&cache, &grad)?;
            optimizer.step(model.params_mut(), &grads)?;
        }
        let seen = splits.train.len() as f64;
        let (val_loss, val_accuracy) = score_tensors(&model, &validation)?;
        let record = MetricsRecord {
            epoch,
            train_loss: loss_sum / seen,
            train_accuracy: correct as f64 / seen,
            val_loss,
            val_accuracy,
        };
        if best.is_none_or(|(_, acc)| val_accuracy > acc) {
            best = Some((epoch, val_accuracy));
            best_model = model.clone();
        }
        on_epoch(&record);
        metrics.push(record);
    }

    let outcome = TrainOutcome {
        final_model: model,
        best_model,
        best_epoch: best.map(|(e, _)| e),
        metrics,
    };
    if let Some(path) = &config.checkpoint_path {
        let ck = Checkpoint::from_model(
            &outcome.best_model,
            outcome.best_record().cloned(),
            config.seed,
        );
        save_checkpoint(&ck, path)?;
    }
    if let Some(path) = &config.metrics_path {
        if !outcome.metrics.is_empty() {
            export_metrics(&outcome.metrics, path)?;
        }
    }
    Ok(outcome)
}

/// Score every image and build the per-image table (identifier, actual,
/// calculation, predict). The accuracy is recomputed from the table rows.
pub fn evaluate(model: &Model, images: &[LabeledImage]) -> Result<Evaluation> {
    if images.is_empty() {
        return Err(Error::invalid("cannot evaluate an empty image list"));
    }
    let size = (model.config().input_height, model.config().input_width);
    let labelled = preprocess_all(images, size)?;
    let probs = predict_all(model, &labelled)?;
    let (loss, _) = bce_loss(&probs, &labelled.targets)?;
    let rows = images
        .iter()
        .zip(probs.data())
        .map(|(img, &p)| ReportRow::new(img.identifier.clone(), Some(img.label), p, None))
        .collect::<Result<Vec<_>>>()?;
    let mut report = InspectionReport::from_rows(rows);
    report.loss = Some(loss);
    let accuracy = report.accuracy.expect("all rows are labelled");
    Ok(Evaluation {
        loss,
        accuracy,
        report,
    })
}

/// Preprocessed inputs and encoded targets for a whole image list.
struct Prepared {
    inputs: Vec<Tensor>,
    targets: Tensor,
}

fn preprocess_all(images: &[LabeledImage], size: (usize, usize)) -> Result<Prepared> {
    let inputs = batch_iter(images, EVAL_CHUNK, size, None, 0, None)?
        .map(|b| b.inputs)
        .collect();
    let targets = Tensor::new(
        &[images.len()],
        images.iter().map(|i| i.label.encode()).collect(),
    )?;
    Ok(Prepared { inputs, targets })
}

fn predict_all(model: &Model, prepared: &Prepared) -> Result<Tensor> {
    let mut probs = Vec::with_capacity(prepared.targets.len());
    for chunk in &prepared.inputs {
        probs.extend_from_slice(model.predict(chunk)?.data());
    }
    Tensor::new(&[probs.len()], probs)
}

/// Mean loss and raw-threshold accuracy.
fn score_tensors(model: &Model, prepared: &Prepared) -> Result<(f64, f64)> {
    let probs = predict_all(model, prepared)?;
    let (loss, _) = bce_loss(&probs, &prepared.targets)?;
    let mut correct = 0;
    for (&p, &y) in probs.data().iter().zip(prepared.targets.data()) {
        correct += usize::from(classify(p)?.encode() == y);
    }
    Ok((loss, correct as f64 / probs.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::KernelLabel;
    use image::{Rgb, RgbImage};

    fn toy_split() -> DatasetSplit {
        let img = |i: usize, label: KernelLabel| {
            let v = if label == KernelLabel::Normal {
                220
            } else {
                40
            };
            LabeledImage::new(
                format!("{}-{i}.png", label.dir_name()),
                RgbImage::from_pixel(16, 16, Rgb([v, v, (i * 9) as u8])),
                label,
            )
            .unwrap()
        };
        let set = |offset: usize, n: usize| {
            (0..n)
                .flat_map(|i| KernelLabel::ALL.map(|l| img(offset + i, l)))
                .collect::<Vec<_>>()
        };
        DatasetSplit {
            train: set(0, 4),
            validate: set(10, 2),
            test: set(20, 2),
        }
    }

    fn toy_model() -> ModelConfig {
        ModelConfig {
            filters: [2, 2, 2],
            dense_width: 4,
            ..ModelConfig::with_size(16)
        }
    }

    #[test]
    fn zero_epochs_returns_fresh_model() {
        let config = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let out = train(&toy_split(), &toy_model(), &config).unwrap();
        let fresh = Model::build(toy_model()).unwrap();
        assert_eq!(out.final_model, fresh);
        assert_eq!(out.best_model, fresh);
        assert!(out.metrics.is_empty());
        assert_eq!(out.best_epoch, None);
    }

    #[test]
    fn metrics_per_epoch_and_bounds() {
        let config = TrainConfig {
            epochs: 3,
            batch_size: 3,
            ..TrainConfig::default()
        };
        let out = train(&toy_split(), &toy_model(), &config).unwrap();
        assert_eq!(out.metrics.len(), 3);
        for (i, r) in out.metrics.iter().enumerate() {
            assert_eq!(r.epoch, i + 1);
            assert!(r.train_loss >= 0.0 && r.val_loss >= 0.0);
            assert!((0.0..=1.0).contains(&r.train_accuracy));
            assert!((0.0..=1.0).contains(&r.val_accuracy));
        }
        let best = out.best_record().unwrap();
        assert!(out
            .metrics
            .iter()
            .all(|r| r.val_accuracy <= best.val_accuracy));
        assert!(out
            .metrics
            .iter()
            .take_while(|r| r.epoch < best.epoch)
            .all(|r| r.val_accuracy < best.val_accuracy));
    }

    #[test]
    fn empty_validation_rejected() {
        let mut split = toy_split();
        split.validate.clear();
        assert!(matches!(
            train(&split, &toy_model(), &TrainConfig::default()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn bad_config_rejected() {
        let config = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(
            train(&toy_split(), &toy_model(), &config),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn evaluate_rows_and_determinism() {
        let model = Model::build(toy_model()).unwrap();
        let split = toy_split();
        let a = evaluate(&model, &split.test).unwrap();
        assert_eq!(a.report.rows.len(), 4);
        assert_eq!(
            Some(a.accuracy),
            crate::report::row_accuracy(&a.report.rows)
        );
        assert_eq!(a, evaluate(&model, &split.test).unwrap());
        let single = evaluate(&model, &split.test[..1]).unwrap();
        assert!(single.accuracy == 0.0 || single.accuracy == 1.0);
        assert!(evaluate(&model, &[]).is_err());
    }
}
