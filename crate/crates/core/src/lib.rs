//! Dense softmax classifier over feature vectors, tuned with Harris Hawks
//! Optimization.
//!
//! - [`dataset`]: labeled feature files, splitting, normalization, synthetic blobs.
//! - [`nn`]: the network, Adam training with plateau scheduling, checkpoints.
//! - [`hho`]: the hawks optimizer and benchmark objectives.
//! - [`hpo`]: hyperparameter encoding, fitness and search.
//! - [`metrics`]: confusion matrix, per-class scores, kappa, ROC/AUC, reports.

pub mod dataset;
pub mod hho;
pub mod hpo;
pub mod metrics;
pub mod nn;
pub mod rng;

pub use dataset::{
    load_dataset, save_dataset, split, synthesize_blobs, BlobSpec, DatasetError, DatasetSplit, FeatureDataset,
    FileFormat, NormalizeMode, Scaler, SplitRatios,
};
pub use hho::{optimize, ConvergenceTrace, HhoError, HhoParams, HhoResult, SearchSpace};
pub use hpo::{
    default_hyperspace, final_train, optimize_hyperparameters, FitnessConfig, HpoError, HpoOutcome, HyperBounds,
    HyperParams, HyperSpace, TrialResult,
};
pub use metrics::{full_report, Averaging, EvaluationReport, MetricTable, MetricsError, ReportOptions};
pub use nn::{
    load_checkpoint, predict, save_checkpoint, train, LayerOrder, NetworkConfig, NnError, PlateauConfig, TrainedModel,
    TrainingSchedule,
};
