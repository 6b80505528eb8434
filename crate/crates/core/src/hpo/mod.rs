//! Hyperparameter search: encodes network hyperparameters as a bounded
//! continuous vector, scores candidates by short training runs, and drives the
//! hawks optimizer over them.

mod space;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::DatasetSplit;
use crate::hho::{self, EvalContext, HhoError, HhoParams, Objective};
use crate::nn::{self, NetworkConfig, NnError, PlateauConfig, TrainedModel, TrainingSchedule};
use crate::rng;

pub use space::{decode, default_hyperspace, encode, HyperBounds, HyperDim, HyperParams, HyperSpace, ParamKind};

#[derive(Debug, Error)]
pub enum HpoError {
    #[error("invalid hyperparameter space: {0}")]
    InvalidSpace(String),
    #[error("{name} = {value} is outside the search space")]
    OutOfBounds { name: String, value: f64 },
    #[error("expected {expected} coordinates, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid fitness settings: {0}")]
    InvalidFitness(String),
    #[error("unusable data: {0}")]
    Data(String),
    #[error("every initial trial failed; first failure: {0}")]
    AllTrialsFailed(String),
    #[error(transparent)]
    Hho(#[from] HhoError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("cannot write trial log: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = HpoError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessConfig {
    /// Weight of validation loss in the fitness.
    pub lambda_loss: f64,
    /// Training epochs per evaluation.
    pub epoch_budget: usize,
    /// Weight-init and shuffle seed shared by every candidate.
    pub seed: u64,
    /// Number of training seeds averaged per evaluation; the first is `seed`.
    pub seeds: usize,
    pub plateau: PlateauConfig,
}

impl Default for FitnessConfig {
    fn default() -> Self {
        Self { lambda_loss: 0.1, epoch_budget: 15, seed: 0, seeds: 1, plateau: PlateauConfig::default() }
    }
}

impl FitnessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_loss >= 0.0 && self.lambda_loss.is_finite()) {
            return Err(HpoError::InvalidFitness(format!("lambda_loss {} must be >= 0", self.lambda_loss)));
        }
        if self.epoch_budget < 1 {
            return Err(HpoError::InvalidFitness("epoch_budget must be at least 1".into()));
        }
        if self.seeds < 1 {
            return Err(HpoError::InvalidFitness("seeds must be at least 1".into()));
        }
        Ok(())
    }

    /// Training seed for repetition `j`.
    pub fn seed_for(&self, j: usize) -> u64 {
        if j == 0 {
            self.seed
        } else {
            rng::mix_seed(&[self.seed, j as u64])
        }
    }
}

/// `(1 − val_acc) + λ·val_loss`.
pub fn fitness_value(val_accuracy: f64, val_loss: f64, lambda: f64) -> f64 {
    (1.0 - val_accuracy) + lambda * val_loss
}

/// Validation outcome of one short training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrainStats {
    pub val_accuracy: f64,
    pub val_loss: f64,
    pub epochs: usize,
}

/// Runs one budgeted training for a candidate.
pub trait Trainer: Sync {
    fn train(
        &self,
        params: &HyperParams,
        split: &DatasetSplit,
        config: &FitnessConfig,
        seed: u64,
    ) -> Result<TrainStats, NnError>;
}

impl<F> Trainer for F
where
    F: Fn(&HyperParams, &DatasetSplit, &FitnessConfig, u64) -> Result<TrainStats, NnError> + Sync,
{
    fn train(
        &self,
        params: &HyperParams,
        split: &DatasetSplit,
        config: &FitnessConfig,
        seed: u64,
    ) -> Result<TrainStats, NnError> {
        self(params, split, config, seed)
    }
}

/// Trains the dense network and reports the best validation epoch.
#[derive(Debug, Clone, Copy, Default)]
pub struct NetworkTrainer;

impl Trainer for NetworkTrainer {
    fn train(
        &self,
        params: &HyperParams,
        split: &DatasetSplit,
        config: &FitnessConfig,
        seed: u64,
    ) -> Result<TrainStats, NnError> {
        let net = network_config(params, split, seed);
        let schedule = training_schedule(
            params,
            &TrainingSchedule {
                max_epochs: config.epoch_budget,
                plateau: config.plateau,
                ..TrainingSchedule::default()
            },
        );
        let model = nn::train(&net, &schedule, split, seed)?;
        let best = model.best_epoch.expect("budget is at least one epoch");
        let rec = model.history[best - 1];
        Ok(TrainStats { val_accuracy: rec.val_acc, val_loss: rec.val_loss, epochs: model.history.len() })
    }
}

/// Baseline layout with the searched widths and dropout; input and output
/// sizes come from the data.
pub fn network_config(params: &HyperParams, split: &DatasetSplit, init_seed: u64) -> NetworkConfig {
    NetworkConfig {
        hidden_widths: params.hidden_widths.clone(),
        output_classes: split.n_classes(),
        input_dropout_rate: params.dropout_rate,
        weight_init_seed: init_seed,
        ..NetworkConfig::baseline(split.dim())
    }
}

/// `base` with the searched learning rate and batch size. The plateau floor is
/// lowered to the learning rate when the rate starts below it.
pub fn training_schedule(params: &HyperParams, base: &TrainingSchedule) -> TrainingSchedule {
    let mut s = base.clone();
    s.initial_lr = params.learning_rate;
    s.batch_size = params.batch_size;
    s.plateau.min_lr = s.plateau.min_lr.min(params.learning_rate);
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    /// 1-based position in the trial log; 0 outside a search.
    pub trial: usize,
    /// HHO iteration (0-based) and hawk index that requested the evaluation.
    pub iter: usize,
    pub hawk: usize,
    pub position: Vec<f64>,
    pub params: HyperParams,
    pub fitness: f64,
    pub val_accuracy: f64,
    pub val_loss: f64,
    pub epochs: usize,
    pub seconds: f64,
    /// Why training produced no usable result (divergence or error).
    pub failure: Option<String>,
    #[serde(skip)]
    seq: usize,
}

fn evaluate_params(
    params: &HyperParams,
    split: &DatasetSplit,
    config: &FitnessConfig,
    trainer: &dyn Trainer,
) -> std::result::Result<TrainStats, String> {
    let mut acc = 0.0;
    let mut loss = 0.0;
    let mut epochs = 0;
    for j in 0..config.seeds {
        let s = trainer.train(params, split, config, config.seed_for(j)).map_err(|e| e.to_string())?;
        if !(s.val_accuracy.is_finite() && s.val_loss.is_finite()) {
            return Err("non-finite validation result".into());
        }
        acc += s.val_accuracy;
        loss += s.val_loss;
        epochs += s.epochs;
    }
    let k = config.seeds as f64;
    Ok(TrainStats { val_accuracy: acc / k, val_loss: loss / k, epochs })
}

fn trial_from(
    position: &[f64],
    params: HyperParams,
    outcome: std::result::Result<TrainStats, String>,
    config: &FitnessConfig,
    seconds: f64,
) -> TrialResult {
    let (val_accuracy, val_loss, epochs, failure) = match outcome {
        Ok(s) => (s.val_accuracy, s.val_loss, s.epochs, None),
        Err(e) => (0.0, f64::INFINITY, 0, Some(e)),
    };
    TrialResult {
        trial: 0,
        iter: 0,
        hawk: 0,
        position: position.to_vec(),
        params,
        fitness: fitness_value(val_accuracy, val_loss, config.lambda_loss),
        val_accuracy,
        val_loss,
        epochs,
        seconds,
        failure,
        seq: 0,
    }
}

fn check_split(split: &DatasetSplit) -> Result<()> {
    if split.train.len() < 2 {
        return Err(HpoError::Data(format!("training part has {} records, need at least 2", split.train.len())));
    }
    if split.validation.is_empty() {
        return Err(HpoError::Data("validation part is empty".into()));
    }
    Ok(())
}

/// Decodes `position`, trains the candidate for the epoch budget and scores it.
/// Divergence gives fitness +infinity.
pub fn fitness(
    position: &[f64],
    space: &HyperSpace,
    split: &DatasetSplit,
    config: &FitnessConfig,
) -> Result<TrialResult> {
    fitness_with(position, space, split, config, &NetworkTrainer)
}

pub fn fitness_with(
    position: &[f64],
    space: &HyperSpace,
    split: &DatasetSplit,
    config: &FitnessConfig,
    trainer: &dyn Trainer,
) -> Result<TrialResult> {
    config.validate()?;
    check_split(split)?;
    let params = decode(position, space)?;
    let start = Instant::now();
    let outcome = evaluate_params(&params, split, config, trainer);
    Ok(trial_from(position, params, outcome, config, start.elapsed().as_secs_f64()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HpoOutcome {
    pub best: HyperParams,
    pub best_trial: TrialResult,
    /// Every evaluation, ordered by iteration, hawk and call order.
    pub trials: Vec<TrialResult>,
    pub trace: hho::ConvergenceTrace,
}

type CacheKey = (Vec<usize>, u64, u64, usize);

struct SearchObjective<'a> {
    space: &'a HyperSpace,
    split: &'a DatasetSplit,
    config: &'a FitnessConfig,
    trainer: &'a dyn Trainer,
    log: Mutex<Vec<TrialResult>>,
    cache: Mutex<HashMap<CacheKey, std::result::Result<TrainStats, String>>>,
}

impl Objective for SearchObjective<'_> {
    fn evaluate(&self, position: &[f64], ctx: EvalContext) -> f64 {
        let start = Instant::now();
        let params = decode(position, self.space).expect("optimizer keeps the dimension");
        let key = (
            params.hidden_widths.clone(),
            params.learning_rate.to_bits(),
            params.dropout_rate.to_bits(),
            params.batch_size,
        );
        // Distinct positions often decode to the same candidate; training is
        // deterministic, so its result is reused.
        let cached = self.cache.lock().unwrap().get(&key).cloned();
        let outcome = match cached {
            Some(o) => o,
            None => {
                let o = evaluate_params(&params, self.split, self.config, self.trainer);
                self.cache.lock().unwrap().insert(key, o.clone());
                o
            }
        };
        let mut t = trial_from(position, params, outcome, self.config, start.elapsed().as_secs_f64());
        t.iter = ctx.iter;
        t.hawk = ctx.hawk;
        t.seq = ctx.seq;
        let f = t.fitness;
        self.log.lock().unwrap().push(t);
        f
    }
}

/// Searches `space` with the hawks optimizer, scoring candidates with [`fitness`].
pub fn optimize_hyperparameters(
    split: &DatasetSplit,
    space: &HyperSpace,
    hho_params: &HhoParams,
    config: &FitnessConfig,
) -> Result<HpoOutcome> {
    optimize_hyperparameters_with(split, space, hho_params, config, &NetworkTrainer, None)
}

/// As [`optimize_hyperparameters`] with a custom trainer and an optional
/// per-iteration observer.
pub fn optimize_hyperparameters_with(
    split: &DatasetSplit,
    space: &HyperSpace,
    hho_params: &HhoParams,
    config: &FitnessConfig,
    trainer: &dyn Trainer,
    observer: Option<&mut dyn FnMut(&hho::IterationRecord)>,
) -> Result<HpoOutcome> {
    space.validate()?;
    config.validate()?;
    check_split(split)?;
    let objective = SearchObjective {
        space,
        split,
        config,
        trainer,
        log: Mutex::new(Vec::new()),
        cache: Mutex::new(HashMap::new()),
    };
    let result = hho::optimize(&objective, &space.search_space(), hho_params, observer);
    let mut trials = objective.log.into_inner().unwrap();
    trials.sort_by_key(|t| (t.iter, t.hawk, t.seq));
    for (i, t) in trials.iter_mut().enumerate() {
        t.trial = i + 1;
    }
    let result = match result {
        Err(HhoError::AllNonFinite { .. }) => {
            let first = trials.iter().find_map(|t| t.failure.clone()).unwrap_or_default();
            return Err(HpoError::AllTrialsFailed(first));
        }
        r => r?,
    };
    let best_trial = trials
        .iter()
        .find(|t| t.fitness == result.best_fitness && t.position == result.best_position)
        .or_else(|| trials.iter().find(|t| t.fitness == result.best_fitness))
        .expect("best fitness comes from a logged trial")
        .clone();
    Ok(HpoOutcome { best: best_trial.params.clone(), best_trial, trials, trace: result.trace })
}

/// Full training of the selected configuration; `seed` drives weight
/// initialization, shuffling and dropout as in [`nn::train`].
pub fn final_train(
    best: &HyperParams,
    split: &DatasetSplit,
    schedule: &TrainingSchedule,
    seed: u64,
) -> Result<TrainedModel, NnError> {
    nn::train(&network_config(best, split, seed), &training_schedule(best, schedule), split, seed)
}

/// `trial,iter,hawk,h1..hN,lr,dropout,batch,val_acc,val_loss,fitness,epochs,seconds`
///
/// Wall time varies between runs, so `seconds` is left empty unless
/// `with_timing` is set; the rest of the log is reproducible.
pub fn trials_csv(trials: &[TrialResult], with_timing: bool) -> String {
    let widths = trials.first().map_or(3, |t| t.params.hidden_widths.len());
    let mut s = String::from("trial,iter,hawk,");
    for i in 1..=widths {
        let _ = write!(s, "h{i},");
    }
    s.push_str("lr,dropout,batch,val_acc,val_loss,fitness,epochs,seconds\n");
    for t in trials {
        let _ = write!(s, "{},{},{},", t.trial, t.iter, t.hawk);
        for w in &t.params.hidden_widths {
            let _ = write!(s, "{w},");
        }
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            t.params.learning_rate,
            t.params.dropout_rate,
            t.params.batch_size,
            t.val_accuracy,
            t.val_loss,
            t.fitness,
            t.epochs,
            if with_timing { format!("{:.3}", t.seconds) } else { String::new() }
        );
    }
    s
}

pub fn write_trials_csv(trials: &[TrialResult], path: &Path, with_timing: bool) -> Result<()> {
    std::fs::write(path, trials_csv(trials, with_timing))?;
    Ok(())
}
