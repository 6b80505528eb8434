use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::Serialize;

use super::{
    adam_step, cross_entropy_loss, init_network, AdamState, ForwardMode, NetworkConfig, NnError, PlateauScheduler,
    Result, TrainedModel, TrainingSchedule,
};
use crate::dataset::{DatasetSplit, FeatureDataset};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    /// Rate used during this epoch.
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub probs: Array2<f64>,
    pub labels: Vec<usize>,
}

/// Index of the largest entry per row; ties go to the lowest index.
pub fn argmax_rows(probs: ArrayView2<'_, f64>) -> Vec<usize> {
    probs
        .outer_iter()
        .map(|row| {
            let mut best = 0;
            for (i, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

pub fn predict(model: &TrainedModel, data: &FeatureDataset) -> Result<Prediction> {
    let probs = model.forward(data.features().view(), ForwardMode::Infer)?.probs;
    let labels = argmax_rows(probs.view());
    Ok(Prediction { probs, labels })
}

fn accuracy_of(pred: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
}

/// Shuffled mini-batches of indices. A trailing batch of one record is merged
/// into the previous batch, since batch statistics need two rows.
fn batches(n: usize, batch_size: usize, seed: u64, epoch: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::substream(seed, epoch as u64 + 1));
    let mut out: Vec<Vec<usize>> = order.chunks(batch_size).map(<[usize]>::to_vec).collect();
    if out.len() > 1 && out.last().is_some_and(|b| b.len() == 1) {
        let last = out.pop().unwrap();
        out.last_mut().unwrap().extend(last);
    }
    out
}

fn check_split(config: &NetworkConfig, split: &DatasetSplit) -> Result<()> {
    if split.train.len() < 2 {
        return Err(NnError::Data(format!("training part has {} records, need at least 2", split.train.len())));
    }
    if split.validation.is_empty() {
        return Err(NnError::Data("validation part is empty".into()));
    }
    if split.train.dim() != config.input_dim {
        return Err(NnError::DimensionMismatch { expected: config.input_dim, found: split.train.dim() });
    }
    if split.train.n_classes() != config.output_classes {
        return Err(NnError::Data(format!(
            "dataset has {} classes, network outputs {}",
            split.train.n_classes(),
            config.output_classes
        )));
    }
    Ok(())
}

/// Mini-batch Adam training with plateau-driven learning-rate reduction.
///
/// The returned model carries the parameters of the epoch with the highest
/// validation accuracy (earliest on ties) and the full per-epoch history.
/// `seed` drives batch shuffling and dropout masks; weight initialization
/// uses `config.weight_init_seed`.
pub fn train(
    config: &NetworkConfig,
    schedule: &TrainingSchedule,
    split: &DatasetSplit,
    seed: u64,
) -> Result<TrainedModel> {
    schedule.validate()?;
    let mut model = init_network(config)?;
    if schedule.max_epochs == 0 {
        return Ok(model);
    }
    check_split(config, split)?;

    let train_x = split.train.features();
    let train_y = split.train.labels();
    let mut adam = AdamState::new(schedule.adam, &model.param_sizes());
    let mut scheduler = PlateauScheduler::new(schedule.initial_lr, schedule.plateau);
    let mut history = Vec::with_capacity(schedule.max_epochs);
    let mut best: Option<(f64, usize, TrainedModel)> = None;

    for epoch in 0..schedule.max_epochs {
        let lr = scheduler.lr();
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for (b, idx) in batches(train_y.len(), schedule.batch_size, seed, epoch).iter().enumerate() {
            let x = train_x.select(Axis(0), idx);
            let y: Vec<usize> = idx.iter().map(|&i| train_y[i]).collect();
            let dropout_seed = rng::mix_seed(&[seed, epoch as u64, b as u64]);
            let out = model.forward(x.view(), ForwardMode::train(dropout_seed))?;
            let loss = cross_entropy_loss(out.probs.view(), &y);
            if !loss.is_finite() {
                return Err(NnError::NonFiniteLoss { epoch: epoch + 1, batch: b });
            }
            loss_sum += loss * y.len() as f64;
            correct += argmax_rows(out.probs.view()).iter().zip(&y).filter(|(p, t)| p == t).count();
            let cache = out.cache.expect("train mode caches");
            let grads = model.backward(&cache, &y)?;
            model.update_running_stats(&cache);
            let grad_tensors = grads.tensors();
            adam_step(&mut adam, &mut model.param_tensors_mut(), &grad_tensors, lr);
        }

        let val = predict(&model, &split.validation)?;
        let val_loss = cross_entropy_loss(val.probs.view(), split.validation.labels());
        let val_acc = accuracy_of(&val.labels, split.validation.labels());
        if !val_loss.is_finite() || !model.all_finite() {
            return Err(NnError::NonFiniteLoss { epoch: epoch + 1, batch: usize::MAX });
        }
        history.push(super::EpochRecord {
            epoch: epoch + 1,
            train_loss: loss_sum / train_y.len() as f64,
            train_acc: correct as f64 / train_y.len() as f64,
            val_loss,
            val_acc,
            lr,
        });
        if best.as_ref().is_none_or(|(acc, _, _)| val_acc > *acc) {
            best = Some((val_acc, epoch + 1, model.clone()));
        }
        scheduler.step(val_acc);
    }

    let (_, best_epoch, mut chosen) = best.expect("at least one epoch ran");
    chosen.history = history;
    chosen.best_epoch = Some(best_epoch);
    Ok(chosen)
}
