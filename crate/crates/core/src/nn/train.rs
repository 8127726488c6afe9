use std::time::{Duration, Instant};

use nalgebra::DMatrix;

use super::{backward, bce_loss, init_mlp, Adam, AdamHyper, MlpConfig, MlpModel, Mode};
use crate::error::{Error, Result};
use crate::eval::auroc;
use crate::features::DrugFeatureMatrix;
use crate::ids::DrugId;
use crate::sampling::{PairSample, SideEffectDataset};
use crate::seed::{shuffle, stage_rng};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrainOptions {
    /// Return the parameters of the epoch with the best validation AUROC
    /// instead of the final epoch.
    pub best_val_checkpoint: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochReport {
    pub epoch: usize,
    /// Sample-weighted mean of the mini-batch losses.
    pub train_loss: f64,
    /// `None` when the validation split is empty or single-class.
    pub val_auroc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochReport>,
    pub duration: Duration,
    /// 1-based epoch whose parameters were returned.
    pub returned_epoch: usize,
}

impl TrainReport {
    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.train_loss).collect()
    }

    pub fn final_val_auroc(&self) -> Option<f64> {
        self.epochs.get(self.returned_epoch.checked_sub(1)?)?.val_auroc
    }
}

pub(crate) const SHUFFLE_STAGE: &str = "shuffle";
pub(crate) const DROPOUT_STAGE: &str = "dropout";

/// Batch boundaries; a trailing batch of one joins its predecessor when batch
/// norm needs at least two rows.
fn batch_ranges(n: usize, size: usize, merge_single: bool) -> Vec<(usize, usize)> {
    let mut ranges: Vec<(usize, usize)> = (0..n).step_by(size).map(|s| (s, (s + size).min(n))).collect();
    if merge_single && ranges.len() >= 2 && ranges.last().is_some_and(|&(s, e)| e - s == 1) {
        let (_, end) = ranges.pop().unwrap();
        ranges.last_mut().unwrap().1 = end;
    }
    ranges
}

fn gather_rows(x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), x.ncols(), |r, c| x[(rows[r], c)])
}

/// Mini-batch Adam on prepared matrices. Labels are 0/1.
pub fn train_on_matrices(
    x: &DMatrix<f64>,
    labels: &[f64],
    validation: Option<(&DMatrix<f64>, &[bool])>,
    config: &MlpConfig,
    options: &TrainOptions,
) -> Result<(MlpModel, TrainReport)> {
    let started = Instant::now();
    if labels.len() != x.nrows() {
        return Err(Error::Dimension {
            expected: x.nrows(),
            actual: labels.len(),
            context: "training labels",
        });
    }
    let minimum = if config.use_batch_norm { 2 } else { 1 };
    if x.nrows() < minimum {
        return Err(Error::TooSmall {
            actual: x.nrows(),
            minimum,
        });
    }
    let mut model = init_mlp(x.ncols(), config)?;
    let mut adam = Adam::new(
        &model,
        AdamHyper {
            learning_rate: config.learning_rate,
            ..AdamHyper::default()
        },
    );
    let mut shuffle_rng = stage_rng(config.seed, SHUFFLE_STAGE, "");
    let mut dropout_rng = stage_rng(config.seed, DROPOUT_STAGE, "");
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    let ranges = batch_ranges(x.nrows(), config.batch_size, config.use_batch_norm);

    let mut epochs = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, MlpModel)> = None;
    for epoch in 1..=config.epochs {
        shuffle(&mut shuffle_rng, &mut order);
        let mut loss_sum = 0.0;
        for (batch_index, &(start, end)) in ranges.iter().enumerate() {
            let rows = &order[start..end];
            let batch = gather_rows(x, rows);
            let batch_labels: Vec<f64> = rows.iter().map(|&r| labels[r]).collect();
            let masks = model.sample_dropout_masks(rows.len(), &mut dropout_rng);
            let (probs, cache) = model.forward(
                &batch,
                Mode::Train {
                    dropout: masks.as_ref(),
                },
            )?;
            let loss = bce_loss(probs.as_slice(), &batch_labels)?;
            if !loss.is_finite() || probs.iter().any(|p| !p.is_finite()) {
                return Err(Error::Divergence {
                    epoch,
                    batch: batch_index,
                    loss,
                });
            }
            loss_sum += loss * rows.len() as f64;
            let grads = backward(&model, &cache, &batch_labels)?;
            if grads.tensors().iter().any(|t| t.iter().any(|g| !g.is_finite())) {
                return Err(Error::Divergence {
                    epoch,
                    batch: batch_index,
                    loss,
                });
            }
            model.update_running_stats(&cache);
            adam.step(&mut model, &grads)?;
        }
        let val_auroc = match validation {
            Some((vx, vy)) if vx.nrows() > 0 => match auroc(model.predict(vx)?.as_slice(), vy) {
                Ok(a) => Some(a),
                Err(Error::UndefinedMetric(_)) => None,
                Err(e) => return Err(e),
            },
            _ => None,
        };
        if options.best_val_checkpoint {
            if let Some(a) = val_auroc {
                if best.as_ref().is_none_or(|(b, _, _)| a > *b) {
                    best = Some((a, epoch, model.clone()));
                }
            }
        }
        epochs.push(EpochReport {
            epoch,
            train_loss: loss_sum / x.nrows() as f64,
            val_auroc,
        });
    }
    let (model, returned_epoch) = match best {
        Some((_, epoch, m)) => (m, epoch),
        None => (model, config.epochs),
    };
    Ok((
        model,
        TrainReport {
            epochs,
            duration: started.elapsed(),
            returned_epoch,
        },
    ))
}

fn split_matrix(features: &DrugFeatureMatrix, samples: &[PairSample]) -> Result<DMatrix<f64>> {
    features.pair_matrix(samples.iter().map(|s| (s.pair.first(), s.pair.second())))
}

pub fn train(
    features: &DrugFeatureMatrix,
    dataset: &SideEffectDataset,
    config: &MlpConfig,
) -> Result<(MlpModel, TrainReport)> {
    train_with(features, dataset, config, &TrainOptions::default())
}

/// Trains on the train split and tracks AUROC on the validation split.
pub fn train_with(
    features: &DrugFeatureMatrix,
    dataset: &SideEffectDataset,
    config: &MlpConfig,
    options: &TrainOptions,
) -> Result<(MlpModel, TrainReport)> {
    if dataset.train.is_empty() {
        return Err(Error::TooSmall { actual: 0, minimum: 1 });
    }
    let x = split_matrix(features, &dataset.train)?;
    let y: Vec<f64> = dataset.train.iter().map(PairSample::label).collect();
    let vx = split_matrix(features, &dataset.val)?;
    let vy: Vec<bool> = dataset.val.iter().map(|s| s.positive).collect();
    train_on_matrices(&x, &y, Some((&vx, &vy)), config, options)
}

/// Inference-mode probabilities for a list of samples, in order.
pub fn score_samples(model: &MlpModel, features: &DrugFeatureMatrix, samples: &[PairSample]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Ok(Vec::new());
    }
    Ok(model.predict(&split_matrix(features, samples)?)?.as_slice().to_vec())
}

pub fn predict_pair(model: &MlpModel, features: &DrugFeatureMatrix, a: &DrugId, b: &DrugId) -> Result<f64> {
    let v = features.pair_vector(a, b)?;
    let x = DMatrix::from_row_slice(1, v.len(), v.as_slice());
    Ok(model.predict(&x)?[0])
}
