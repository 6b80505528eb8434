use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hawknet_core::{load_dataset, FileFormat};

fn hawknet(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hawknet")).args(args).current_dir(dir).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = hawknet(dir, args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    hawknet(dir, args).status.code().expect("exit code")
}

fn read(path: impl AsRef<Path>) -> String {
    fs::read_to_string(path).unwrap()
}

fn synth(dir: &Path, name: &str, per_class: &str, dim: &str) {
    ok(dir, &["synth", "--per-class", per_class, "--dim", dim, "--seed", "3", "--out", name]);
}

fn metric(text: &str, name: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{name},")))
        .unwrap_or_else(|| panic!("no row {name}"))
        .parse()
        .unwrap()
}

#[test]
fn synth_writes_loadable_dataset() {
    let d = tempfile::tempdir().unwrap();
    synth(d.path(), "blobs.lymf", "100", "512");
    let data = load_dataset(&d.path().join("blobs.lymf"), FileFormat::Binary).unwrap();
    assert_eq!((data.len(), data.dim(), data.n_classes()), (300, 512, 3));
}

#[test]
fn synth_csv_matches_binary() {
    let d = tempfile::tempdir().unwrap();
    synth(d.path(), "a.lymf", "10", "4");
    synth(d.path(), "a.csv", "10", "4");
    let b = load_dataset(&d.path().join("a.lymf"), FileFormat::Binary).unwrap();
    let c = load_dataset(&d.path().join("a.csv"), FileFormat::Csv).unwrap();
    assert_eq!(b.labels(), c.labels());
    assert!(b.features().iter().zip(c.features()).all(|(x, y)| (x - y).abs() <= 1e-6));
}

#[test]
fn usage_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(d.path(), &["synth", "--out", "x.lymf"]), 2);
    assert_eq!(code(d.path(), &["synth", "--seed", "1", "--dim", "0", "--out", "x.lymf"]), 2);
    assert_eq!(code(d.path(), &["train", "--seed", "1", "--out", "o"]), 2);
    assert_eq!(code(d.path(), &["bogus"]), 2);
    assert!(!d.path().join("x.lymf").exists());
}

#[test]
fn missing_dataset_exits_3() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(d.path(), &["train", "--seed", "1", "--data", "nope.lymf", "--out", "o"]), 3);
}

#[test]
fn malformed_dataset_exits_4() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("bad.lymf"), b"not a dataset").unwrap();
    assert_eq!(code(d.path(), &["train", "--seed", "1", "--data", "bad.lymf", "--out", "o"]), 4);
}

#[test]
fn divergent_training_exits_5() {
    let d = tempfile::tempdir().unwrap();
    synth(d.path(), "d.lymf", "40", "16");
    let args = ["train", "--seed", "1", "--data", "d.lymf", "--out", "o", "--lr", "1e300", "--epochs", "3"];
    assert_eq!(code(d.path(), &args), 5);
}

#[test]
fn train_is_accurate_and_reproducible() {
    let d = tempfile::tempdir().unwrap();
    synth(d.path(), "d.lymf", "80", "32");
    let args = |out: &'static str| ["train", "--seed", "9", "--data", "d.lymf", "--epochs", "15", "--out", out];
    let stdout = ok(d.path(), &args("a"));
    assert!(stdout.contains("accuracy:"));
    ok(d.path(), &args("b"));
    let metrics = read(d.path().join("a/metrics.csv"));
    assert!(metric(&metrics, "Testing Accuracy") >= 0.95, "{metrics}");
    for f in ["history.csv", "metrics.csv", "model.lymm", "roc.csv", "confusion.csv", "confusion.svg", "report.txt"] {
        assert_eq!(fs::read(d.path().join("a").join(f)).unwrap(), fs::read(d.path().join("b").join(f)).unwrap(), "{f}");
    }
    assert!(read(d.path().join("a/history.csv")).starts_with("epoch,train_loss,train_acc,val_loss,val_acc,lr\n"));
}

#[test]
fn config_copied_and_flags_override() {
    let d = tempfile::tempdir().unwrap();
    synth(d.path(), "d.lymf", "30", "8");
    let config = "# run settings\nseed = 4\ndataset = \"d.lymf\"\nmax_epochs = 9\nhidden_widths = [16, 8]\n";
    fs::write(d.path().join("run.toml"), config).unwrap();
    ok(d.path(), &["train", "--config", "run.toml", "--epochs", "2", "--out", "o"]);
    assert_eq!(read(d.path().join("o/config.toml")), config);
    let resolved = read(d.path().join("o/run_config.toml"));
    assert!(resolved.contains("max_epochs = 2"), "{resolved}");
    assert!(resolved.contains("seed = 4"));
    assert_eq!(read(d.path().join("o/history.csv")).lines().count(), 3);
}

#[test]
fn unknown_config_key_exits_4() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("run.toml"), "seeed = 4\n").unwrap();
    assert_eq!(code(d.path(), &["train", "--config", "run.toml"]), 4);
}

#[test]
fn eval_reproduces_train_report() {
    let d = tempfile::tempdir().unwrap();
    synth(d.path(), "d.lymf", "40", "16");
    ok(d.path(), &["train", "--seed", "2", "--data", "d.lymf", "--epochs", "5", "--normalize", "zscore", "--out", "t"]);
    ok(d.path(), &["eval", "--seed", "2", "--data", "d.lymf", "--model", "t/model.lymm", "--out", "e"]);
    for f in ["metrics.csv", "roc.csv", "confusion.csv", "report.txt"] {
        assert_eq!(read(d.path().join("t").join(f)), read(d.path().join("e").join(f)), "{f}");
    }
    let roc = read(d.path().join("e/roc.csv"));
    for class in 0..3 {
        let rows: Vec<&str> = roc.lines().skip(1).filter(|l| l.starts_with(&format!("{class},"))).collect();
        let point = |l: &str| l.rsplitn(3, ',').take(2).collect::<Vec<_>>().join(",");
        assert_eq!(point(rows[0]), "0,0");
        assert_eq!(point(rows[rows.len() - 1]), "1,1");
    }
}

#[test]
fn eval_rejects_mismatched_dataset() {
    let d = tempfile::tempdir().unwrap();
    synth(d.path(), "d.lymf", "30", "16");
    synth(d.path(), "wide.lymf", "30", "8");
    ok(d.path(), &["train", "--seed", "2", "--data", "d.lymf", "--epochs", "2", "--out", "t"]);
    let args = ["eval", "--seed", "2", "--data", "wide.lymf", "--model", "t/model.lymm", "--out", "e"];
    assert_eq!(code(d.path(), &args), 4);
}

#[test]
fn optimize_writes_search_artifacts() {
    let d = tempfile::tempdir().unwrap();
    synth(d.path(), "d.lymf", "40", "16");
    ok(d.path(), &["train", "--seed", "6", "--data", "d.lymf", "--epochs", "4", "--out", "base"]);
    let stdout = ok(
        d.path(),
        &[
            "optimize",
            "--seed",
            "6",
            "--data",
            "d.lymf",
            "--hawks",
            "4",
            "--iters",
            "3",
            "--epoch-budget",
            "3",
            "--epochs",
            "4",
            "--compare",
            "base/metrics.csv",
            "--fail-batch-size",
            "32",
            "--out",
            "o",
        ],
    );
    assert!(stdout.contains("iter 3/3"));

    let conv = read(d.path().join("o/convergence.csv"));
    let best: Vec<f64> = conv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(best.len(), 3);
    assert!(best.windows(2).all(|w| w[1] <= w[0]), "{conv}");

    let trials = read(d.path().join("o/trials.csv"));
    let header: Vec<&str> = trials.lines().next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let rows: Vec<Vec<&str>> = trials.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert!(rows.len() >= 4);
    assert!(rows.iter().enumerate().all(|(i, r)| r[0] == (i + 1).to_string()));
    assert!(rows.iter().all(|r| r[col("seconds")].is_empty()));
    let failed: Vec<&Vec<&str>> = rows.iter().filter(|r| r[col("batch")] == "32").collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().all(|r| r[col("fitness")] == "inf"));
    let best_fitness: f64 =
        rows.iter().map(|r| r[col("fitness")].parse::<f64>().unwrap()).fold(f64::INFINITY, f64::min);
    assert_eq!(best_fitness, *best.last().unwrap());

    let comparison = read(d.path().join("o/comparison.txt"));
    for row in ["Training Accuracy", "Testing Accuracy", "Kappa Score", "ROC-AUC", "Loss"] {
        assert!(comparison.contains(row), "{comparison}");
    }
    assert!(read(d.path().join("o/comparison.csv")).starts_with("metric,DNN,ODNN with HHO\n"));

    let best_config = read(d.path().join("o/best_config.toml"));
    assert!(best_config.contains("hidden_widths"));
    ok(
        d.path(),
        &[
            "train",
            "--config",
            "o/best_config.toml",
            "--seed",
            "6",
            "--data",
            "d.lymf",
            "--epochs",
            "2",
            "--out",
            "again",
        ],
    );
}

#[test]
fn optimize_records_timing_on_request() {
    let d = tempfile::tempdir().unwrap();
    synth(d.path(), "d.lymf", "20", "8");
    ok(
        d.path(),
        &[
            "optimize",
            "--seed",
            "1",
            "--data",
            "d.lymf",
            "--hawks",
            "2",
            "--iters",
            "1",
            "--epoch-budget",
            "1",
            "--epochs",
            "1",
            "--record-timing",
            "--out",
            "o",
        ],
    );
    let trials = read(d.path().join("o/trials.csv"));
    let last = trials.lines().nth(1).unwrap().rsplit(',').next().unwrap();
    assert!(last.parse::<f64>().unwrap() >= 0.0);
}
