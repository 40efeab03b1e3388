//! Labeled corpora of `(features, tap count)` pairs.
//!
//! Binary layout (little-endian):
//!
//! ```text
//! "TAPS" | u32 version = 1 | u32 n_samples | u32 feature_dim | u32 n_classes
//! | u32 class_map[n_classes] (tap count of each class index)
//! | n_samples × (f32 features[feature_dim] | u16 label)
//! ```
//!
//! The generation settings go to a sidecar `<file>.meta` of `key = value`
//! lines so a corpus can be regenerated and its channels re-drawn.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::bytes::{Reader, Writer};
use crate::channel::{discretize_cir, sample_channel, ChannelClassSpec, ChannelRealization};
use crate::error::{Error, Result};
use crate::neural::Tensor2;
use crate::seed;
use crate::signal::{generate_tx, SignalFrame, TxScheme};

pub const MAGIC: [u8; 4] = *b"TAPS";
pub const VERSION: u32 = 1;

/// How a corpus is synthesized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    /// Tap count of each class, in class-index order.
    pub classes: Vec<usize>,
    pub n_per_class: usize,
    /// Per-class sample counts overriding `n_per_class` (imbalanced corpora).
    pub class_counts: Option<Vec<usize>>,
    /// Transmit block length `N_x`.
    pub n_tx: usize,
    /// CIR grid length `K`; received blocks have `N_x + K − 1` samples.
    pub cir_len: usize,
    /// Sample positions taps may occupy. `None` sizes the window to the
    /// class's tap count, so the CIR spans exactly `L` samples.
    pub delay_window: Option<usize>,
    /// Power-delay-profile decay per sample period.
    pub pdp_decay_per_sample: f64,
    pub sample_rate: f64,
    pub tx_scheme: TxScheme,
    /// Put the transmit block's features in front of the received ones.
    pub include_tx: bool,
    pub master_seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            classes: (1..=10).collect(),
            n_per_class: 200,
            class_counts: None,
            n_tx: 1000,
            cir_len: 500,
            delay_window: None,
            pdp_decay_per_sample: 0.0,
            sample_rate: 100e6,
            tx_scheme: TxScheme::Qpsk,
            include_tx: false,
            master_seed: 1,
        }
    }
}

impl GenerationConfig {
    pub fn counts(&self) -> Vec<usize> {
        self.class_counts.clone().unwrap_or_else(|| vec![self.n_per_class; self.classes.len()])
    }

    pub fn n_samples(&self) -> usize {
        self.counts().iter().sum()
    }

    pub fn feature_dim(&self) -> usize {
        let rx = self.n_tx + self.cir_len - 1;
        2 * rx + if self.include_tx { 2 * self.n_tx } else { 0 }
    }

    pub fn class_spec(&self, n_taps: usize) -> ChannelClassSpec {
        let window = self.delay_window.unwrap_or(n_taps);
        ChannelClassSpec::on_grid(
            n_taps,
            window,
            self.pdp_decay_per_sample * self.sample_rate,
            self.sample_rate,
        )
    }

    pub fn pilot(&self) -> Vec<Complex64> {
        generate_tx(self.n_tx, seed::derive(self.master_seed, &[0]), self.tx_scheme)
    }

    /// Channel behind sample `index` of class `class`.
    pub fn channel(&self, class: usize, index: usize) -> Result<ChannelRealization> {
        let l = self.classes[class];
        sample_channel(&self.class_spec(l), seed::derive(self.master_seed, &[1, l as u64, index as u64]))
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::Config("at least one class is required".into()));
        }
        let mut sorted = self.classes.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.classes.len() {
            return Err(Error::Config("class tap counts must be distinct".into()));
        }
        if self.n_tx == 0 || self.cir_len == 0 {
            return Err(Error::Config("n_tx and cir_len must be positive".into()));
        }
        if matches!(&self.class_counts, Some(c) if c.len() != self.classes.len()) {
            return Err(Error::Config("class_counts needs one entry per class".into()));
        }
        for &l in &self.classes {
            let spec = self.class_spec(l);
            spec.validate()?;
            if spec.grid_len() > self.cir_len {
                return Err(Error::Config(format!(
                    "delay window of class L={l} ({} samples) exceeds cir_len {}",
                    spec.grid_len(),
                    self.cir_len
                )));
            }
        }
        if self.feature_dim() > u32::MAX as usize || self.classes.len() > u16::MAX as usize {
            return Err(Error::Config("corpus dimensions exceed the file format".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_dim: usize,
    /// Row-major `n_samples × feature_dim`, stored at file precision.
    pub features: Vec<f32>,
    /// Class index per sample.
    pub labels: Vec<usize>,
    /// Tap count of each class index.
    pub class_map: Vec<usize>,
    pub generation: Option<GenerationConfig>,
}

impl Dataset {
    pub fn empty(feature_dim: usize, class_map: Vec<usize>) -> Self {
        Self { feature_dim, features: Vec::new(), labels: Vec::new(), class_map, generation: None }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.class_map.len()
    }

    pub fn sample(&self, i: usize) -> &[f32] {
        &self.features[i * self.feature_dim..(i + 1) * self.feature_dim]
    }

    pub fn tap_count(&self, i: usize) -> usize {
        self.class_map[self.labels[i]]
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n_classes()];
        self.labels.iter().for_each(|&l| c[l] += 1);
        c
    }

    /// Features of the given samples widened to `f64`.
    pub fn tensor(&self, idx: &[usize]) -> Tensor2 {
        let mut data = Vec::with_capacity(idx.len() * self.feature_dim);
        for &i in idx {
            data.extend(self.sample(i).iter().map(|&v| v as f64));
        }
        Tensor2 { rows: idx.len(), cols: self.feature_dim, data }
    }

    pub fn labels_of(&self, idx: &[usize]) -> Vec<usize> {
        idx.iter().map(|&i| self.labels[i]).collect()
    }

    /// `(class index, index within class)` used to generate sample `i`.
    /// Samples are laid out class by class in generation order.
    pub fn origin(&self, i: usize) -> Option<(usize, usize)> {
        let counts = self.generation.as_ref()?.counts();
        let mut start = 0;
        for (class, &n) in counts.iter().enumerate() {
            if i < start + n {
                return Some((class, i - start));
            }
            start += n;
        }
        None
    }

    /// Re-draw the channel behind sample `i` from the generation settings.
    pub fn channel_of(&self, i: usize) -> Result<ChannelRealization> {
        let (class, index) = self
            .origin(i)
            .ok_or_else(|| Error::Missing(format!("generation metadata for sample {i}")))?;
        self.generation.as_ref().unwrap().channel(class, index)
    }
}

/// Synthesize a corpus: for every class `L`, draw channels, discretize them
/// onto `cir_len` taps, convolve with the corpus pilot and featurize.
pub fn build_dataset(cfg: &GenerationConfig) -> Result<Dataset> {
    cfg.validate()?;
    let pilot = cfg.pilot();
    let dim = cfg.feature_dim();
    let counts = cfg.counts();
    let mut ds = Dataset::empty(dim, cfg.classes.clone());
    ds.features.reserve(cfg.n_samples() * dim);
    for (class, &count) in counts.iter().enumerate() {
        for index in 0..count {
            let ch = cfg.channel(class, index)?;
            debug_assert_eq!(ch.label(), cfg.classes[class]);
            let h = discretize_cir(&ch, cfg.cir_len)?;
            let frame = SignalFrame::new(pilot.clone(), &h, cfg.include_tx);
            ds.features.extend(frame.features.iter().map(|&v| v as f32));
            ds.labels.push(class);
        }
    }
    ds.generation = Some(cfg.clone());
    Ok(ds)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Largest-remainder apportionment of `n` items; ties go to the earlier part.
fn apportion(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let exact: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut parts = [0usize; 3];
    for i in 0..3 {
        parts[i] = (exact[i] + 1e-9).floor() as usize;
    }
    let mut left = n - parts.iter().sum::<usize>().min(n);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let ra = exact[a] - parts[a] as f64;
        let rb = exact[b] - parts[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        parts[i] += 1;
        left -= 1;
    }
    parts
}

/// Stratified train/validation/test split, deterministic in `seed`.
pub fn split_dataset(ds: &Dataset, ratios: [f64; 3], seed: u64) -> Result<Split> {
    if ratios.iter().any(|r| !(*r >= 0.0)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidRatios(format!("{ratios:?} must be nonnegative and sum to 1")));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.n_classes()];
    for (i, &l) in ds.labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut split = Split { train: Vec::new(), validation: Vec::new(), test: Vec::new() };
    for (class, members) in by_class.iter_mut().enumerate() {
        if members.len() < 3 {
            return Err(Error::ClassTooSmall { class, count: members.len() });
        }
        members.shuffle(&mut seed::rng(seed::derive(seed, &[class as u64])));
        let [a, b, _] = apportion(members.len(), ratios);
        split.train.extend_from_slice(&members[..a]);
        split.validation.extend_from_slice(&members[a..a + b]);
        split.test.extend_from_slice(&members[a + b..]);
    }
    for (k, part) in [&mut split.train, &mut split.validation, &mut split.test].into_iter().enumerate() {
        part.shuffle(&mut seed::rng(seed::derive(seed, &[u64::MAX, k as u64])));
    }
    Ok(split)
}

pub fn encode(ds: &Dataset) -> Result<Vec<u8>> {
    if ds.class_map.len() > u16::MAX as usize + 1 {
        return Err(Error::Config("too many classes for u16 labels".into()));
    }
    let mut w = Writer::new();
    w.bytes(&MAGIC);
    w.u32(VERSION);
    w.u32(ds.len() as u32);
    w.u32(ds.feature_dim as u32);
    w.u32(ds.n_classes() as u32);
    for &l in &ds.class_map {
        w.u32(l as u32);
    }
    for i in 0..ds.len() {
        for &v in ds.sample(i) {
            w.f32(v);
        }
        w.u16(ds.labels[i] as u16);
    }
    Ok(w.buf)
}

pub fn decode(buf: &[u8]) -> Result<Dataset> {
    let mut r = Reader::new(buf);
    r.magic(MAGIC)?;
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::VersionUnsupported(version));
    }
    let n = r.u32("sample count")? as usize;
    let dim = r.u32("feature dim")? as usize;
    let n_classes = r.u32("class count")? as usize;
    let class_map = (0..n_classes)
        .map(|_| r.u32("class map").map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;
    let record = dim
        .checked_mul(4)
        .and_then(|b| b.checked_add(2))
        .ok_or_else(|| Error::Corrupt("feature dim overflow".into()))?;
    let body = r.take(
        n.checked_mul(record).ok_or_else(|| Error::Corrupt("size overflow".into()))?,
        "samples",
    )?;
    r.finish()?;
    let mut ds = Dataset::empty(dim, class_map);
    ds.features.reserve(n * dim);
    for rec in body.chunks_exact(record) {
        ds.features
            .extend(rec[..dim * 4].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())));
        let label = u16::from_le_bytes(rec[dim * 4..].try_into().unwrap()) as usize;
        if label >= n_classes {
            return Err(Error::Corrupt(format!("label {label} outside {n_classes} classes")));
        }
        ds.labels.push(label);
    }
    Ok(ds)
}

pub fn metadata_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".meta");
    PathBuf::from(p)
}

/// `key = value` lines; values are JSON scalars or arrays.
pub fn encode_metadata(ds: &Dataset) -> Result<String> {
    let mut out = String::new();
    writeln!(out, "format = \"TAPS\"").unwrap();
    writeln!(out, "version = {VERSION}").unwrap();
    writeln!(out, "feature_precision = \"f32\"").unwrap();
    writeln!(out, "n_samples = {}", ds.len()).unwrap();
    if let Some(g) = &ds.generation {
        if let serde_json::Value::Object(map) = serde_json::to_value(g)? {
            for (k, v) in map {
                writeln!(out, "generation.{k} = {v}").unwrap();
            }
        }
    }
    Ok(out)
}

pub fn decode_metadata(text: &str) -> Result<Option<GenerationConfig>> {
    let mut generation = serde_json::Map::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Corrupt(format!("metadata line {}: expected key = value", no + 1)))?;
        if let Some(key) = k.trim().strip_prefix("generation.") {
            generation.insert(key.to_string(), serde_json::from_str(v.trim())?);
        }
    }
    if generation.is_empty() {
        return Ok(None);
    }
    Ok(Some(serde_json::from_value(serde_json::Value::Object(generation))?))
}

pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(ds)?)?;
    fs::write(metadata_path(path), encode_metadata(ds)?)?;
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let buf = fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::Missing(path.display().to_string()),
        _ => Error::Io(e),
    })?;
    let mut ds = decode(&buf)?;
    let meta = metadata_path(path);
    if meta.exists() {
        ds.generation = decode_metadata(&fs::read_to_string(meta)?)?;
    }
    Ok(ds)
}

/// Label histogram keyed by tap count.
pub fn tap_histogram(ds: &Dataset) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for i in 0..ds.len() {
        *h.entry(ds.tap_count(i)).or_insert(0) += 1;
    }
    h
}
