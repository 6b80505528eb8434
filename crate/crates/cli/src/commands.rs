use std::fs;
use std::path::{Path, PathBuf};

use hawknet_core::dataset::normalize_features;
use hawknet_core::hho::IterationRecord;
use hawknet_core::hpo::{self, NetworkTrainer, TrainStats, Trainer};
use hawknet_core::metrics::write_report_files;
use hawknet_core::nn::{argmax_rows, write_history_csv};
use hawknet_core::{
    final_train, full_report, load_checkpoint, load_dataset, predict, save_checkpoint, save_dataset, split,
    synthesize_blobs, DatasetSplit, EvaluationReport, FeatureDataset, FileFormat, FitnessConfig, HyperParams,
    HyperSpace, MetricTable, NnError, ReportOptions, Scaler, TrainedModel,
};

use crate::config::{best_config_toml, LoadedConfig, RunConfig};
use crate::error::{CliError, Result};

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Creates the output directory and records the configuration: the config
/// file byte for byte when one was given, plus the resolved settings.
fn prepare_out_dir(loaded: &LoadedConfig) -> Result<PathBuf> {
    let out = loaded.config.out()?.to_path_buf();
    fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    if let Some((_, text)) = &loaded.source {
        write(&out.join("config.toml"), text)?;
    }
    write(&out.join("run_config.toml"), loaded.config.to_toml())?;
    Ok(out)
}

struct Prepared {
    split: DatasetSplit,
    scaler: Option<Scaler>,
}

fn load(c: &RunConfig) -> Result<FeatureDataset> {
    let path = c.dataset()?;
    Ok(load_dataset(path, FileFormat::from_path(path))?)
}

fn split_data(data: &FeatureDataset, c: &RunConfig) -> Result<DatasetSplit> {
    Ok(split(data, c.ratios()?, c.seeds()?.split, c.stratified)?)
}

fn prepare_data(c: &RunConfig) -> Result<Prepared> {
    let raw = split_data(&load(c)?, c)?;
    let (split, scaler) = normalize_features(&raw, c.normalize)?;
    Ok(Prepared { split, scaler })
}

fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
}

/// Test-part report with the training-part accuracy attached.
fn evaluate(model: &TrainedModel, split: &DatasetSplit, c: &RunConfig) -> Result<EvaluationReport> {
    let test = predict(model, &split.test)?;
    let mut report = full_report(
        test.probs.view(),
        &test.labels,
        split.test.labels(),
        &split.test.class_names(),
        ReportOptions { averaging: c.averaging },
    )?;
    let train = predict(model, &split.train)?;
    report.training_accuracy = Some(accuracy(&argmax_rows(train.probs.view()), split.train.labels()));
    Ok(report)
}

fn write_model_outputs(
    out: &Path,
    model: &TrainedModel,
    scaler: Option<&Scaler>,
    report: &EvaluationReport,
) -> Result<()> {
    save_checkpoint(model, scaler, &out.join("model.lymm"))?;
    write_history_csv(&model.history, &out.join("history.csv"))?;
    write_report_files(report, out).map_err(|e| CliError::io(out, e))?;
    Ok(())
}

pub fn synth(c: &RunConfig) -> Result<()> {
    let spec = c.blob_spec()?;
    let out = c.out()?;
    let data = synthesize_blobs(&spec)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    save_dataset(&data, out, FileFormat::from_path(out))?;
    println!(
        "wrote {} records x {} features, {} classes to {}",
        data.len(),
        data.dim(),
        data.n_classes(),
        out.display()
    );
    Ok(())
}

pub fn train(loaded: &LoadedConfig) -> Result<()> {
    let c = &loaded.config;
    let seeds = c.seeds()?;
    let prepared = prepare_data(c)?;
    let out = prepare_out_dir(loaded)?;
    let model = final_train(&c.hyperparams(), &prepared.split, &c.schedule(), seeds.train)?;
    let report = evaluate(&model, &prepared.split, c)?;
    write_model_outputs(&out, &model, prepared.scaler.as_ref(), &report)?;
    print!("{}", hawknet_core::metrics::summary_text(&report));
    println!("artifacts in {}", out.display());
    Ok(())
}

pub struct OptimizeOptions {
    pub compare: Option<PathBuf>,
    pub record_timing: bool,
    pub fail_batch_size: Option<usize>,
}

/// Network trainer whose runs diverge for one batch size.
struct FaultyTrainer {
    batch_size: usize,
}

impl Trainer for FaultyTrainer {
    fn train(
        &self,
        params: &HyperParams,
        split: &DatasetSplit,
        config: &FitnessConfig,
        seed: u64,
    ) -> std::result::Result<TrainStats, NnError> {
        if params.batch_size == self.batch_size {
            return Err(NnError::NonFiniteLoss { epoch: 1, batch: 0 });
        }
        NetworkTrainer.train(params, split, config, seed)
    }
}

pub fn optimize(loaded: &LoadedConfig, opts: &OptimizeOptions) -> Result<()> {
    let c = &loaded.config;
    let seeds = c.seeds()?;
    let baseline_table = match &opts.compare {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            Some(MetricTable::from_csv(&text)?)
        }
        None => None,
    };
    let space = HyperSpace::from_bounds(&c.bounds())?;
    let hho = c.hho_params()?;
    let fitness = c.fitness()?;
    let prepared = prepare_data(c)?;
    let out = prepare_out_dir(loaded)?;

    let faulty = opts.fail_batch_size.map(|batch_size| FaultyTrainer { batch_size });
    let trainer: &dyn Trainer = match &faulty {
        Some(f) => f,
        None => &NetworkTrainer,
    };
    let total = hho.max_iters;
    let mut progress = |r: &IterationRecord| {
        println!(
            "iter {}/{}: best fitness {:.6}, mean fitness {:.6}",
            r.iter + 1,
            total,
            r.best_fitness,
            r.mean_fitness
        );
    };
    let outcome =
        hpo::optimize_hyperparameters_with(&prepared.split, &space, &hho, &fitness, trainer, Some(&mut progress))?;
    hpo::write_trials_csv(&outcome.trials, &out.join("trials.csv"), opts.record_timing)?;
    outcome.trace.write_csv(&out.join("convergence.csv"))?;
    write(&out.join("best_config.toml"), best_config_toml(&outcome.best))?;
    let failed = outcome.trials.iter().filter(|t| t.failure.is_some()).count();
    println!(
        "{} trials ({} failed); best fitness {:.6}: widths {:?}, lr {}, dropout {}, batch {}",
        outcome.trials.len(),
        failed,
        outcome.best_trial.fitness,
        outcome.best.hidden_widths,
        outcome.best.learning_rate,
        outcome.best.dropout_rate,
        outcome.best.batch_size
    );

    let model = final_train(&outcome.best, &prepared.split, &c.schedule(), seeds.train)?;
    let report = evaluate(&model, &prepared.split, c)?;
    write_model_outputs(&out, &model, prepared.scaler.as_ref(), &report)?;
    print!("{}", hawknet_core::metrics::summary_text(&report));
    if let Some(base) = baseline_table {
        let ours = MetricTable::from_report(&report);
        write(&out.join("comparison.csv"), base.comparison_csv(&ours))?;
        let text = base.comparison_text(&ours);
        write(&out.join("comparison.txt"), &text)?;
        print!("{text}");
    }
    println!("artifacts in {}", out.display());
    Ok(())
}

pub fn eval(loaded: &LoadedConfig, model_path: &Path) -> Result<()> {
    let c = &loaded.config;
    let (model, scaler) = load_checkpoint(model_path)?;
    let data = load(c)?;
    if data.dim() != model.config.input_dim {
        return Err(CliError::validation(format!(
            "checkpoint expects {} features per record, dataset has {}",
            model.config.input_dim,
            data.dim()
        )));
    }
    if data.n_classes() != model.config.output_classes {
        return Err(CliError::validation(format!(
            "checkpoint predicts {} classes, dataset has {}",
            model.config.output_classes,
            data.n_classes()
        )));
    }
    let raw = split_data(&data, c)?;
    let split = match &scaler {
        Some(s) => DatasetSplit {
            train: s.transform(&raw.train),
            validation: s.transform(&raw.validation),
            test: s.transform(&raw.test),
            ..raw
        },
        None => raw,
    };
    let out = prepare_out_dir(loaded)?;
    let report = evaluate(&model, &split, c)?;
    write_report_files(&report, &out).map_err(|e| CliError::io(&out, e))?;
    print!("{}", hawknet_core::metrics::summary_text(&report));
    println!("artifacts in {}", out.display());
    Ok(())
}
