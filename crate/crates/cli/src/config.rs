use std::fs;
use std::path::{Path, PathBuf};

use hawknet_core::hpo::HyperBounds;
use hawknet_core::nn::AdamConfig;
use hawknet_core::rng::mix_seed;
use hawknet_core::{
    Averaging, BlobSpec, FitnessConfig, HhoParams, HyperParams, NormalizeMode, PlateauConfig, SplitRatios,
    TrainingSchedule,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Every setting of a run. Config files are flat TOML tables using these
/// field names; command-line flags override file values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub dataset: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub jobs: usize,

    pub train_ratio: f64,
    pub validation_ratio: f64,
    pub test_ratio: f64,
    pub stratified: bool,
    pub normalize: NormalizeMode,

    pub hidden_widths: Vec<usize>,
    pub dropout_rate: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub plateau_factor: f64,
    pub plateau_patience: usize,
    pub plateau_min_delta: f64,
    pub min_lr: f64,

    pub width_min: f64,
    pub width_max: f64,
    pub log10_lr_min: f64,
    pub log10_lr_max: f64,
    pub dropout_min: f64,
    pub dropout_max: f64,
    pub log2_batch_min: f64,
    pub log2_batch_max: f64,

    pub n_hawks: usize,
    pub max_iters: usize,
    pub levy_beta: f64,

    pub lambda_loss: f64,
    pub epoch_budget: usize,
    pub fitness_seeds: usize,

    pub averaging: Averaging,

    pub per_class: usize,
    pub dim: usize,
    pub classes: usize,
    pub separation: f64,
    pub noise_sigma: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let bounds = HyperBounds::default();
        let schedule = TrainingSchedule::default();
        let blobs = BlobSpec::default();
        let fitness = FitnessConfig::default();
        let baseline = HyperParams::baseline();
        Self {
            seed: None,
            dataset: None,
            out: None,
            jobs: 1,
            train_ratio: 0.8,
            validation_ratio: 0.1,
            test_ratio: 0.1,
            stratified: true,
            normalize: NormalizeMode::None,
            hidden_widths: baseline.hidden_widths,
            dropout_rate: baseline.dropout_rate,
            learning_rate: schedule.initial_lr,
            batch_size: schedule.batch_size,
            max_epochs: schedule.max_epochs,
            plateau_factor: schedule.plateau.factor,
            plateau_patience: schedule.plateau.patience,
            plateau_min_delta: schedule.plateau.min_delta,
            min_lr: schedule.plateau.min_lr,
            width_min: bounds.width.0,
            width_max: bounds.width.1,
            log10_lr_min: bounds.log10_learning_rate.0,
            log10_lr_max: bounds.log10_learning_rate.1,
            dropout_min: bounds.dropout.0,
            dropout_max: bounds.dropout.1,
            log2_batch_min: bounds.log2_batch.0,
            log2_batch_max: bounds.log2_batch.1,
            n_hawks: 8,
            max_iters: 10,
            levy_beta: hawknet_core::hho::LEVY_BETA,
            lambda_loss: fitness.lambda_loss,
            epoch_budget: fitness.epoch_budget,
            fitness_seeds: fitness.seeds,
            averaging: Averaging::Macro,
            per_class: blobs.n_per_class,
            dim: blobs.dim,
            classes: blobs.n_classes,
            separation: blobs.separation,
            noise_sigma: blobs.noise_sigma,
        }
    }
}

/// Config file contents, kept verbatim for copying into the output directory.
pub struct LoadedConfig {
    pub config: RunConfig,
    pub source: Option<(PathBuf, String)>,
}

pub fn load(path: Option<&Path>) -> Result<LoadedConfig> {
    let Some(path) = path else {
        return Ok(LoadedConfig { config: RunConfig::default(), source: None });
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let config: RunConfig =
        toml::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    Ok(LoadedConfig { config, source: Some((path.to_path_buf(), text)) })
}

/// Seed roles derived from the single run seed.
#[derive(Debug, Clone, Copy)]
pub struct Seeds {
    pub split: u64,
    pub train: u64,
    pub search: u64,
}

impl RunConfig {
    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| CliError::usage("a seed is required: pass --seed N or set `seed` in the config file"))
    }

    pub fn seeds(&self) -> Result<Seeds> {
        let s = self.seed()?;
        Ok(Seeds { split: s, train: mix_seed(&[s, 1]), search: mix_seed(&[s, 2]) })
    }

    pub fn dataset(&self) -> Result<&Path> {
        self.dataset
            .as_deref()
            .ok_or_else(|| CliError::usage("no dataset: pass --data PATH or set `dataset` in the config file"))
    }

    pub fn out(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| CliError::usage("no output location: pass --out PATH or set `out` in the config file"))
    }

    pub fn ratios(&self) -> Result<SplitRatios> {
        SplitRatios::new(self.train_ratio, self.validation_ratio, self.test_ratio).map_err(CliError::from)
    }

    pub fn plateau(&self) -> PlateauConfig {
        PlateauConfig {
            factor: self.plateau_factor,
            patience: self.plateau_patience,
            min_delta: self.plateau_min_delta,
            min_lr: self.min_lr,
        }
    }

    pub fn schedule(&self) -> TrainingSchedule {
        TrainingSchedule {
            initial_lr: self.learning_rate,
            plateau: self.plateau(),
            max_epochs: self.max_epochs,
            batch_size: self.batch_size,
            adam: AdamConfig::default(),
        }
    }

    pub fn hyperparams(&self) -> HyperParams {
        HyperParams {
            hidden_widths: self.hidden_widths.clone(),
            learning_rate: self.learning_rate,
            dropout_rate: self.dropout_rate,
            batch_size: self.batch_size,
        }
    }

    pub fn bounds(&self) -> HyperBounds {
        HyperBounds {
            hidden_layers: self.hidden_widths.len(),
            width: (self.width_min, self.width_max),
            log10_learning_rate: (self.log10_lr_min, self.log10_lr_max),
            dropout: (self.dropout_min, self.dropout_max),
            log2_batch: (self.log2_batch_min, self.log2_batch_max),
        }
    }

    pub fn hho_params(&self) -> Result<HhoParams> {
        Ok(HhoParams {
            n_hawks: self.n_hawks,
            max_iters: self.max_iters,
            levy_beta: self.levy_beta,
            seed: self.seeds()?.search,
            jobs: self.jobs,
        })
    }

    pub fn fitness(&self) -> Result<FitnessConfig> {
        Ok(FitnessConfig {
            lambda_loss: self.lambda_loss,
            epoch_budget: self.epoch_budget,
            seed: self.seeds()?.train,
            seeds: self.fitness_seeds,
            plateau: self.plateau(),
        })
    }

    pub fn blob_spec(&self) -> Result<BlobSpec> {
        Ok(BlobSpec {
            n_per_class: self.per_class,
            dim: self.dim,
            n_classes: self.classes,
            separation: self.separation,
            noise_sigma: self.noise_sigma,
            seed: self.seed()?,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// The searched hyperparameters as a config fragment for `train --config`.
pub fn best_config_toml(best: &HyperParams) -> String {
    #[derive(Serialize)]
    struct Best<'a> {
        hidden_widths: &'a [usize],
        learning_rate: f64,
        dropout_rate: f64,
        batch_size: usize,
    }
    toml::to_string(&Best {
        hidden_widths: &best.hidden_widths,
        learning_rate: best.learning_rate,
        dropout_rate: best.dropout_rate,
        batch_size: best.batch_size,
    })
    .expect("best config serializes")
}
