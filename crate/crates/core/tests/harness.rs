use std::fs;

use tapscount::dataset::GenerationConfig;
use tapscount::harness::{self, RunConfig, CHECKPOINT_FILE, CURVE_FILE, CURVE_HEADER, DATASET_FILE};
use tapscount::neural::{checkpoint, ArchitectureConfig};
use tapscount::Error;

fn toy(dir: &std::path::Path, classes: Vec<usize>, n_per_class: usize, epochs: usize) -> RunConfig {
    RunConfig {
        seed: 3,
        generation: GenerationConfig { classes, n_per_class, n_tx: 48, cir_len: 8, master_seed: 3, ..Default::default() },
        architecture: ArchitectureConfig { width: 32, dropout: 0.1, ..Default::default() },
        optimizer: harness::OptimizerConfig { batch_size: 32, ..Default::default() },
        epochs,
        output_dir: dir.to_path_buf(),
        svg: true,
        ..Default::default()
    }
}

#[test]
fn toy_training_beats_chance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy(dir.path(), vec![1, 2, 3], 100, 50);
    let summary = harness::cmd_train(&cfg).unwrap();
    let csv = fs::read_to_string(dir.path().join(CURVE_FILE)).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], CURVE_HEADER);
    assert_eq!(lines.len(), 51);
    assert!(summary.best_val_acc.unwrap() > 1.0 / 3.0, "{summary:?}");
    for f in [CHECKPOINT_FILE, DATASET_FILE, "split.json", "loss.svg", "accuracy.svg"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }

    let report = harness::cmd_eval(&cfg).unwrap();
    assert_eq!(report.n_samples, 45);
    assert_eq!(report.tolerance_accuracy[0], report.accuracy);
    assert_eq!(report.tolerance(3), 1.0);
    assert!(dir.path().join("dnn_confusion.svg").exists());
}

#[test]
fn zero_epochs_saves_untrained_network() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy(dir.path(), vec![1, 2], 10, 0);
    let summary = harness::cmd_train(&cfg).unwrap();
    assert_eq!(summary.epochs_run, 0);
    assert_eq!(fs::read_to_string(dir.path().join(CURVE_FILE)).unwrap(), format!("{CURVE_HEADER}\n"));
    let net = checkpoint::load(dir.path().join(CHECKPOINT_FILE)).unwrap();
    assert_eq!(net.n_classes(), 2);
}

#[test]
fn identical_runs_produce_identical_artifacts() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        harness::cmd_train(&toy(d.path(), vec![1, 2, 4], 20, 5)).unwrap();
    }
    for f in [CURVE_FILE, CHECKPOINT_FILE, DATASET_FILE] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn training_from_a_saved_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = toy(dir.path(), vec![1, 3], 10, 2);
    harness::cmd_generate(&cfg).unwrap();
    cfg.dataset = Some(dir.path().join(DATASET_FILE));
    cfg.generation.classes = vec![]; // ignored when a corpus is given
    harness::cmd_train(&cfg).unwrap();
    harness::cmd_swiss(&cfg).unwrap();
}

#[test]
fn single_tap_corpus_is_easy_for_every_method() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy(dir.path(), vec![1], 20, 3);
    harness::cmd_train(&cfg).unwrap();
    let report = harness::cmd_compare(&cfg).unwrap();
    for row in &report.rows {
        assert!(row.accuracy >= 0.99, "{row:?}");
        assert_eq!(row.samples, report.split_indices.len());
    }
    let csv = fs::read_to_string(dir.path().join("compare.csv")).unwrap();
    assert!(csv.starts_with("method,accuracy,tolerance_1,mean_seconds_per_sample,samples"));
}

#[test]
fn compare_scores_all_methods_on_the_same_split() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy(dir.path(), vec![1, 2, 3], 20, 3);
    harness::cmd_train(&cfg).unwrap();
    let report = harness::cmd_compare(&cfg).unwrap();
    let (_, split) = harness::prepare_data(&cfg).unwrap();
    assert_eq!(report.split_indices, split.test);
    let names: Vec<&str> = report.rows.iter().map(|r| r.method.as_str()).collect();
    assert_eq!(names, ["dnn", "swiss", "iht"]);
    // the IHT baseline sees the exact noise-free received block
    assert!(report.row("iht").unwrap().accuracy > 0.9);
}

#[test]
fn errors_map_to_categories() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = toy(dir.path(), vec![1, 2], 10, 1);
    // no checkpoint yet
    assert!(matches!(harness::cmd_eval(&cfg), Err(Error::Missing(_))));
    cfg.dataset = Some(dir.path().join("absent.taps"));
    assert_eq!(harness::cmd_train(&cfg).unwrap_err().exit_code(), 3);

    // checkpoint trained on a different corpus shape
    let other = tempfile::tempdir().unwrap();
    let mut cfg_b = toy(other.path(), vec![1, 2, 3], 10, 1);
    harness::cmd_train(&cfg_b).unwrap();
    cfg_b.generation.n_tx = 40;
    assert!(matches!(harness::cmd_eval(&cfg_b), Err(Error::ShapeMismatch(_))));

    let mut narrow = toy(dir.path(), vec![1, 2, 3], 10, 1);
    narrow.architecture.width = 2;
    assert!(matches!(harness::cmd_train(&narrow), Err(Error::Config(_))));
}
