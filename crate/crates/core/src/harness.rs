//! Command orchestration: generate, train, evaluate, and compare the DNN
//! against the SWISS and IHT baselines.
//!
//! Every command takes a [`RunConfig`] (JSON) and writes its artifacts into
//! `output_dir`. All randomness derives from `seed` and the generation
//! settings, so a command is reproducible from its config alone.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::discretize_cir;
use crate::dataset::{build_dataset, load_dataset, save_dataset, split_dataset, Dataset, GenerationConfig, Split};
use crate::error::{Error, Result};
use crate::metrics::EvalReport;
use crate::neural::{checkpoint, train_epoch, AdamState, ArchitectureConfig, LrScheduler, Network};
use crate::plot::{self, Series};
use crate::seed;
use crate::signal::defeaturize;
use crate::sparse::iht_count_taps;
use crate::swiss::{swiss_identify, SwissConfig, SwissObservation};

pub const DATASET_FILE: &str = "dataset.taps";
pub const CHECKPOINT_FILE: &str = "checkpoint.tapn";
pub const CURVE_FILE: &str = "curves.csv";
pub const CURVE_HEADER: &str = "epoch,train_loss,val_loss,train_acc,val_acc,lr";

// sub-seeds of `RunConfig::seed`
const SPLIT_STREAM: u64 = 10;
const INIT_STREAM: u64 = 11;
const EPOCH_STREAM: u64 = 12;
const FRAME_STREAM: u64 = 13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { lr: 0.001, batch_size: 128, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchedulerConfig {
    pub factor: f64,
    pub patience: usize,
    pub min_delta: f64,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self { factor: 0.8, patience: 18, min_delta: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IhtConfig {
    /// Dictionary width; `None` uses the widest delay window of the corpus.
    pub s_max: Option<usize>,
    pub significance: f64,
}

impl Default for IhtConfig {
    fn default() -> Self {
        Self { s_max: None, significance: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn part(&self, name: SplitName) -> &[usize] {
        match name {
            SplitName::Train => &self.train,
            SplitName::Validation => &self.validation,
            SplitName::Test => &self.test,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed for splitting, initialization, shuffling and dropout.
    pub seed: u64,
    /// Existing corpus; when absent one is generated from `generation`.
    pub dataset: Option<PathBuf>,
    pub generation: GenerationConfig,
    pub split: [f64; 3],
    pub architecture: ArchitectureConfig,
    pub optimizer: OptimizerConfig,
    pub scheduler: SchedulerConfig,
    pub epochs: usize,
    /// Stop after this many epochs without a new best validation accuracy.
    pub early_stopping: Option<usize>,
    pub output_dir: PathBuf,
    /// Checkpoint for eval/compare; defaults to the one in `output_dir`.
    pub checkpoint: Option<PathBuf>,
    pub eval_split: SplitName,
    pub swiss: SwissConfig,
    pub iht: IhtConfig,
    /// Also render SVG charts next to the CSV outputs.
    pub svg: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            dataset: None,
            generation: GenerationConfig::default(),
            split: [0.7, 0.15, 0.15],
            architecture: ArchitectureConfig::default(),
            optimizer: OptimizerConfig::default(),
            scheduler: SchedulerConfig::default(),
            epochs: 200,
            early_stopping: None,
            output_dir: PathBuf::from("out"),
            checkpoint: None,
            eval_split: SplitName::Test,
            swiss: SwissConfig::default(),
            iht: IhtConfig::default(),
            svg: true,
        }
    }
}

impl RunConfig {
    /// Parse JSON, applying `dotted.key=json-value` overrides first.
    pub fn from_json(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut value: serde_json::Value = serde_json::from_str(text)?;
        for (key, raw) in overrides {
            let v = serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.clone()));
            set_path(&mut value, key, v)?;
        }
        let cfg: Self = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>, overrides: &[(String, String)]) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::Missing(format!("config {}", path.display())),
            _ => Error::Io(e),
        })?;
        Self::from_json(&text, overrides)
    }

    /// A seed override reseeds both the run and corpus generation.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.generation.master_seed = seed;
        self
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.checkpoint.clone().unwrap_or_else(|| self.output_dir.join(CHECKPOINT_FILE))
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = &self.dataset {
            if !p.exists() {
                return Err(Error::Missing(format!("dataset {}", p.display())));
            }
        } else {
            self.generation.validate()?;
        }
        let o = &self.optimizer;
        if !(o.lr > 0.0) || o.batch_size < 2 {
            return Err(Error::Config("lr must be positive and batch_size >= 2".into()));
        }
        if !(0.0..1.0).contains(&o.beta1) || !(0.0..1.0).contains(&o.beta2) || !(o.epsilon > 0.0) {
            return Err(Error::Config("Adam betas must lie in [0,1) and epsilon > 0".into()));
        }
        let s = &self.scheduler;
        if !(s.factor > 0.0 && s.factor < 1.0) || s.patience == 0 || !(s.min_delta >= 0.0) {
            return Err(Error::Config("scheduler needs factor in (0,1), patience > 0, min_delta >= 0".into()));
        }
        if !(self.iht.significance > 0.0 && self.iht.significance <= 1.0) {
            return Err(Error::Config("iht.significance must be in (0, 1]".into()));
        }
        self.swiss.validate()
    }
}

fn set_path(root: &mut serde_json::Value, key: &str, v: serde_json::Value) -> Result<()> {
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("cannot set {key}: parent is not an object")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), v);
            return Ok(());
        }
        node = obj.entry(part.to_string()).or_insert_with(|| serde_json::json!({}));
    }
    Err(Error::Config("empty override key".into()))
}

/// Corpus and split for a run: loaded from `dataset` or generated.
pub fn prepare_data(cfg: &RunConfig) -> Result<(Dataset, Split)> {
    let ds = match &cfg.dataset {
        Some(p) => load_dataset(p)?,
        None => build_dataset(&cfg.generation)?,
    };
    let split = split_dataset(&ds, cfg.split, seed::derive(cfg.seed, &[SPLIT_STREAM]))?;
    Ok((ds, split))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
    pub lr: f64,
}

pub fn curve_csv(rows: &[CurveRow]) -> String {
    let mut s = format!("{CURVE_HEADER}\n");
    for r in rows {
        writeln!(s, "{},{},{},{},{},{}", r.epoch, r.train_loss, r.val_loss, r.train_acc, r.val_acc, r.lr).unwrap();
    }
    s
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the epoch with the best validation accuracy.
    pub best: Network,
    pub best_epoch: usize,
    pub curve: Vec<CurveRow>,
}

/// Train on `split.train`, tracking `split.validation`. Ties in validation
/// accuracy go to the lower validation loss, then the earlier epoch.
pub fn train_network(cfg: &RunConfig, ds: &Dataset, split: &Split) -> Result<TrainOutcome> {
    cfg.architecture.validate(ds.n_classes())?;
    let mut net = Network::new(ds.feature_dim, ds.n_classes(), &cfg.architecture, seed::derive(cfg.seed, &[INIT_STREAM]))?;
    let o = &cfg.optimizer;
    let mut adam = AdamState::new(o.beta1, o.beta2, o.epsilon);
    let s = &cfg.scheduler;
    let mut sched = LrScheduler::new(o.lr, s.factor, s.patience, s.min_delta);

    let (xt, yt) = (ds.tensor(&split.train), ds.labels_of(&split.train));
    let (xv, yv) = (ds.tensor(&split.validation), ds.labels_of(&split.validation));
    let mut best = (net.clone(), 0usize, f64::NEG_INFINITY, f64::INFINITY);
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let lr = sched.lr;
        let tr = train_epoch(&mut net, &mut adam, &xt, &yt, o.batch_size, lr, seed::derive(cfg.seed, &[EPOCH_STREAM, epoch as u64]))?;
        let va = net.evaluate(&xv, &yv)?;
        if !tr.mean_loss.is_finite() {
            return Err(Error::Diverged { iterations: epoch, norm: tr.mean_loss });
        }
        curve.push(CurveRow { epoch, train_loss: tr.mean_loss, val_loss: va.mean_loss, train_acc: tr.accuracy, val_acc: va.accuracy, lr });
        sched.step(tr.accuracy);
        if va.accuracy > best.2 || (va.accuracy == best.2 && va.mean_loss < best.3) {
            best = (net.clone(), epoch, va.accuracy, va.mean_loss);
        }
        if cfg.early_stopping.is_some_and(|p| epoch - best.1 >= p) {
            break;
        }
    }
    Ok(TrainOutcome { best: best.0, best_epoch: best.1, curve })
}

fn write(path: PathBuf, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
    fs::write(&path, contents)?;
    Ok(path)
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

/// Write the corpus described by `generation` to `output_dir/dataset.taps`.
pub fn cmd_generate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    cfg.generation.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let ds = build_dataset(&cfg.generation)?;
    let path = cfg.output_dir.join(DATASET_FILE);
    save_dataset(&ds, &path)?;
    Ok(vec![path.clone(), crate::dataset::metadata_path(&path)])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainSummary {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_acc: Option<f64>,
    pub n_train: usize,
    pub n_validation: usize,
    pub parameter_count: usize,
    pub seconds: f64,
}

/// Train and keep the best-validation checkpoint, the per-epoch curve CSV,
/// the split indices and (optionally) an SVG of the curves.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainSummary> {
    cfg.validate()?;
    let started = Instant::now();
    fs::create_dir_all(&cfg.output_dir)?;
    let (ds, split) = prepare_data(cfg)?;
    if cfg.dataset.is_none() {
        save_dataset(&ds, cfg.output_dir.join(DATASET_FILE))?;
    }
    let out = train_network(cfg, &ds, &split)?;
    checkpoint::save(&out.best, cfg.output_dir.join(CHECKPOINT_FILE))?;
    write(cfg.output_dir.join(CURVE_FILE), curve_csv(&out.curve))?;
    write(cfg.output_dir.join("split.json"), json(&split)?)?;
    if cfg.svg {
        write_curve_svgs(&cfg.output_dir, &out.curve)?;
    }
    let summary = TrainSummary {
        epochs_run: out.curve.len(),
        best_epoch: out.best_epoch,
        best_val_acc: out.curve.iter().find(|r| r.epoch == out.best_epoch).map(|r| r.val_acc),
        n_train: split.train.len(),
        n_validation: split.validation.len(),
        parameter_count: out.best.parameter_count(),
        seconds: started.elapsed().as_secs_f64(),
    };
    write(cfg.output_dir.join("train_summary.json"), json(&summary)?)?;
    Ok(summary)
}

fn write_curve_svgs(dir: &Path, curve: &[CurveRow]) -> Result<()> {
    let col = |f: fn(&CurveRow) -> f64| curve.iter().map(f).collect::<Vec<f64>>();
    let (tl, vl, ta, va) = (col(|r| r.train_loss), col(|r| r.val_loss), col(|r| r.train_acc), col(|r| r.val_acc));
    write(
        dir.join("loss.svg"),
        plot::line_chart("Cross-entropy loss", "epoch", &[
            Series { name: "train", color: "#c0392b", values: &tl },
            Series { name: "validation", color: "#2471a3", values: &vl },
        ]),
    )?;
    write(
        dir.join("accuracy.svg"),
        plot::line_chart("Accuracy", "epoch", &[
            Series { name: "train", color: "#c0392b", values: &ta },
            Series { name: "validation", color: "#2471a3", values: &va },
        ]),
    )?;
    Ok(())
}

fn load_checkpoint_for(cfg: &RunConfig, ds: &Dataset) -> Result<Network> {
    let path = cfg.checkpoint_path();
    let net = checkpoint::load(&path)?;
    if net.input_dim() != ds.feature_dim || net.n_classes() != ds.n_classes() {
        return Err(Error::ShapeMismatch(format!(
            "checkpoint expects {} features / {} classes, dataset has {} / {}",
            net.input_dim(),
            net.n_classes(),
            ds.feature_dim,
            ds.n_classes()
        )));
    }
    Ok(net)
}

/// Inference-mode class predictions of `net` on the given samples.
pub fn dnn_predict(net: &Network, ds: &Dataset, idx: &[usize]) -> Result<Vec<usize>> {
    net.predict(&ds.tensor(idx))
}

fn write_report(cfg: &RunConfig, prefix: &str, report: &EvalReport) -> Result<()> {
    let dir = &cfg.output_dir;
    write(dir.join(format!("{prefix}_report.json")), json(report)?)?;
    write(dir.join(format!("{prefix}_confusion.csv")), report.confusion_csv())?;
    write(dir.join(format!("{prefix}_tolerance.csv")), report.tolerance_csv())?;
    write(dir.join(format!("{prefix}_summary.txt")), report.summary())?;
    if cfg.svg {
        write(
            dir.join(format!("{prefix}_confusion.svg")),
            plot::matrix_chart(&format!("Normalized confusion ({prefix})"), &report.class_map, &report.confusion),
        )?;
    }
    Ok(())
}

/// Evaluate the checkpoint on `eval_split`.
pub fn cmd_eval(cfg: &RunConfig) -> Result<EvalReport> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let (ds, split) = prepare_data(cfg)?;
    let net = load_checkpoint_for(cfg, &ds)?;
    let idx = split.part(cfg.eval_split);
    let report = EvalReport::from_class_indices(&ds.class_map, &ds.labels_of(idx), &dnn_predict(&net, &ds, idx)?);
    write_report(cfg, "dnn", &report)?;
    Ok(report)
}

/// SWISS tap counts for the given samples, re-sounding each sample's channel
/// with a pilot frame fixed by the run seed.
pub fn swiss_predict(cfg: &RunConfig, ds: &Dataset, idx: &[usize]) -> Result<Vec<usize>> {
    let frame_seed = seed::derive(cfg.seed, &[FRAME_STREAM]);
    let grid = cir_grid(ds)?;
    idx.iter()
        .map(|&i| {
            let cir = discretize_cir(&ds.channel_of(i)?, grid)?;
            Ok(swiss_identify(SwissObservation::Cir { cir: &cir, frame_seed }, &cfg.swiss)?.identified_paths)
        })
        .collect()
}

fn cir_grid(ds: &Dataset) -> Result<usize> {
    let g = ds.generation.as_ref().ok_or_else(|| Error::Missing("dataset generation metadata".into()))?;
    Ok(g.classes.iter().map(|&l| g.class_spec(l).grid_len()).max().unwrap_or(1))
}

/// IHT tap counts computed from the stored features and the corpus pilot.
pub fn iht_predict(cfg: &RunConfig, ds: &Dataset, idx: &[usize]) -> Result<Vec<usize>> {
    let g = ds.generation.as_ref().ok_or_else(|| Error::Missing("dataset generation metadata".into()))?;
    let x = g.pilot();
    let s_max = cfg.iht.s_max.unwrap_or(cir_grid(ds)?).min(g.cir_len);
    let offset = if g.include_tx { 2 * g.n_tx } else { 0 };
    let ny = g.n_tx + g.cir_len - 1;
    idx.iter()
        .map(|&i| {
            let f: Vec<f64> = ds.sample(i)[offset..offset + 2 * ny].iter().map(|&v| v as f64).collect();
            let y: Vec<Complex64> = defeaturize(&f);
            // samples past the widest window are zero; the dictionary only spans s_max delays
            iht_count_taps(&x, &y[..g.n_tx + s_max - 1], s_max, cfg.iht.significance)
        })
        .collect()
}

fn eval_baseline(cfg: &RunConfig, name: &str, predict: fn(&RunConfig, &Dataset, &[usize]) -> Result<Vec<usize>>) -> Result<EvalReport> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let (ds, split) = prepare_data(cfg)?;
    let idx = split.part(cfg.eval_split);
    let truth: Vec<usize> = idx.iter().map(|&i| ds.tap_count(i)).collect();
    let report = EvalReport::from_tap_counts(&ds.class_map, &truth, &predict(cfg, &ds, idx)?);
    write_report(cfg, name, &report)?;
    Ok(report)
}

pub fn cmd_swiss(cfg: &RunConfig) -> Result<EvalReport> {
    eval_baseline(cfg, "swiss", swiss_predict)
}

pub fn cmd_iht(cfg: &RunConfig) -> Result<EvalReport> {
    eval_baseline(cfg, "iht", iht_predict)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: String,
    pub accuracy: f64,
    pub tolerance_1: f64,
    pub mean_seconds_per_sample: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareReport {
    pub rows: Vec<MethodRow>,
    /// Dataset indices every method was scored on.
    pub split_indices: Vec<usize>,
    /// Mean single-sample DNN inference time per class (tap count, seconds).
    pub dnn_seconds_by_class: Vec<(usize, f64)>,
    pub reports: Vec<(String, EvalReport)>,
}

impl CompareReport {
    pub fn row(&self, method: &str) -> Option<&MethodRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    pub fn table(&self) -> String {
        let mut s = String::from("method,accuracy,tolerance_1,mean_seconds_per_sample,samples\n");
        for r in &self.rows {
            writeln!(s, "{},{},{},{},{}", r.method, r.accuracy, r.tolerance_1, r.mean_seconds_per_sample, r.samples).unwrap();
        }
        s
    }
}

/// Score DNN, SWISS and IHT on the same split, timing each per sample.
pub fn compare(cfg: &RunConfig, ds: &Dataset, split: &Split, net: &Network) -> Result<CompareReport> {
    let idx = split.part(cfg.eval_split);
    let truth: Vec<usize> = idx.iter().map(|&i| ds.tap_count(i)).collect();
    let mut rows = Vec::new();
    let mut reports = Vec::new();

    // DNN: one sample at a time so the timing is per-sample latency.
    let mut dnn_pred = Vec::with_capacity(idx.len());
    let mut by_class = vec![(0.0, 0usize); ds.n_classes()];
    let t0 = Instant::now();
    for &i in idx {
        let t = Instant::now();
        dnn_pred.push(ds.class_map[dnn_predict(net, ds, &[i])?[0]]);
        let e = &mut by_class[ds.labels[i]];
        e.0 += t.elapsed().as_secs_f64();
        e.1 += 1;
    }
    let dnn_time = t0.elapsed().as_secs_f64();
    let dnn_seconds_by_class = by_class
        .iter()
        .zip(&ds.class_map)
        .filter(|((_, n), _)| *n > 0)
        .map(|((t, n), &l)| (l, t / *n as f64))
        .collect();

    let t0 = Instant::now();
    let swiss_pred = swiss_predict(cfg, ds, idx)?;
    let swiss_time = t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    let iht_pred = iht_predict(cfg, ds, idx)?;
    let iht_time = t0.elapsed().as_secs_f64();

    for (name, pred, secs) in [("dnn", dnn_pred, dnn_time), ("swiss", swiss_pred, swiss_time), ("iht", iht_pred, iht_time)] {
        let r = EvalReport::from_tap_counts(&ds.class_map, &truth, &pred);
        rows.push(MethodRow {
            method: name.into(),
            accuracy: r.accuracy,
            tolerance_1: r.tolerance(1),
            mean_seconds_per_sample: secs / idx.len().max(1) as f64,
            samples: idx.len(),
        });
        reports.push((name.to_string(), r));
    }
    Ok(CompareReport { rows, split_indices: idx.to_vec(), dnn_seconds_by_class, reports })
}

pub fn cmd_compare(cfg: &RunConfig) -> Result<CompareReport> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let (ds, split) = prepare_data(cfg)?;
    let net = load_checkpoint_for(cfg, &ds)?;
    let report = compare(cfg, &ds, &split, &net)?;
    write(cfg.output_dir.join("compare.csv"), report.table())?;
    write(cfg.output_dir.join("compare.json"), json(&report)?)?;
    for (name, r) in &report.reports {
        write_report(cfg, name, r)?;
    }
    Ok(report)
}
