//! Synthetic classification scenarios: Gaussian class clusters partitioned
//! across clients (IID or one-class-per-client), plus per-round availability
//! schedules. Everything derives from the scenario seed so a config
//! reproduces its data and schedule byte-for-byte.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use ndarray::Array2;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dfe::ClientId;
use crate::error::{Error, Result};

/// A labeled feature table.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionMode {
    /// Every client holds a stratified sample of all classes.
    Iid,
    /// Client k holds samples of class k mod C only.
    OneClassPerClient,
}

/// Which clients show up in which round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Availability {
    /// Everyone, every round.
    Always,
    /// Each client joins each round independently with probability `p`.
    Bernoulli { p: f64 },
    /// Explicit 1-based round lists per client id.
    Explicit { rounds: BTreeMap<String, Vec<u64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Number of clients K.
    pub clients: usize,
    /// Number of classes C.
    pub classes: usize,
    pub feature_dim: usize,
    pub samples_per_client: usize,
    /// Per-client sample-count overrides (by client id), for skewed-size
    /// scenarios; clients not listed get `samples_per_client`.
    pub samples_overrides: BTreeMap<String, usize>,
    pub partition: PartitionMode,
    pub availability: Availability,
    /// Radius of the ring the class means sit on.
    pub class_separation: f64,
    /// Standard deviation of the isotropic within-class noise.
    pub noise_sigma: f64,
    pub test_samples_per_class: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            clients: 12,
            classes: 6,
            feature_dim: 8,
            samples_per_client: 120,
            samples_overrides: BTreeMap::new(),
            partition: PartitionMode::OneClassPerClient,
            availability: Availability::Always,
            class_separation: 4.0,
            noise_sigma: 0.8,
            test_samples_per_class: 50,
            seed: 7,
        }
    }
}

impl ScenarioConfig {
    /// Collect every invalid field in one message.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.clients == 0 {
            problems.push("clients must be >= 1".to_string());
        }
        if self.classes < 2 {
            problems.push(format!("classes must be >= 2, got {}", self.classes));
        }
        if self.feature_dim < 2 {
            problems.push(format!("feature_dim must be >= 2, got {}", self.feature_dim));
        }
        if self.samples_per_client == 0 {
            problems.push("samples_per_client must be >= 1".to_string());
        }
        if self.test_samples_per_class == 0 {
            problems.push("test_samples_per_class must be >= 1".to_string());
        }
        if self.partition == PartitionMode::OneClassPerClient && self.clients < self.classes {
            problems.push(format!(
                "one-class-per-client partition needs clients >= classes ({} < {})",
                self.clients, self.classes
            ));
        }
        if !(self.class_separation.is_finite() && self.class_separation > 0.0) {
            problems.push("class_separation must be positive".to_string());
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma > 0.0) {
            problems.push("noise_sigma must be positive".to_string());
        }
        if let Availability::Bernoulli { p } = self.availability {
            if !(0.0..=1.0).contains(&p) {
                problems.push(format!("availability p must be in [0, 1], got {p}"));
            }
        }
        let known: Vec<String> = (0..self.clients).map(|k| format!("msms-{k}")).collect();
        for (name, &count) in &self.samples_overrides {
            if !known.contains(name) {
                problems.push(format!("samples_overrides names unknown client {name:?}"));
            }
            if count == 0 {
                problems.push(format!("samples_overrides[{name:?}] must be >= 1"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInput(problems.join("; ")))
        }
    }

    pub fn client_ids(&self) -> Vec<ClientId> {
        (0..self.clients)
            .map(|k| ClientId::new(format!("msms-{k}")))
            .collect()
    }

    /// Class of client k under the one-class partition.
    pub fn assigned_class(&self, k: usize) -> usize {
        k % self.classes
    }

    /// Model dimension of the multinomial logistic model this scenario
    /// trains: one weight row per class over (features + bias).
    pub fn model_dim(&self) -> usize {
        self.classes * (self.feature_dim + 1)
    }
}

fn subseed(seed: u64, label: &str, index: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"fedmining/scenario/v1");
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    h.update(index.to_le_bytes());
    h.finalize().into()
}

/// Standard normal via Box-Muller.
fn normal<R: RngCore>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Class means sit on a ring of radius `class_separation` in the first two
/// feature dimensions; remaining dimensions are pure noise.
pub fn class_mean(cfg: &ScenarioConfig, class: usize) -> Vec<f64> {
    let angle = std::f64::consts::TAU * class as f64 / cfg.classes as f64;
    let mut mean = vec![0.0; cfg.feature_dim];
    mean[0] = cfg.class_separation * angle.cos();
    mean[1] = cfg.class_separation * angle.sin();
    mean
}

fn sample_rows<R: RngCore>(
    cfg: &ScenarioConfig,
    spec: &[(usize, usize)], // (class, count)
    rng: &mut R,
) -> Dataset {
    let total: usize = spec.iter().map(|&(_, c)| c).sum();
    let mut features = Array2::zeros((total, cfg.feature_dim));
    let mut labels = Vec::with_capacity(total);
    let mut row = 0;
    for &(class, count) in spec {
        let mean = class_mean(cfg, class);
        for _ in 0..count {
            for (j, &m) in mean.iter().enumerate() {
                features[(row, j)] = m + cfg.noise_sigma * normal(rng);
            }
            labels.push(class);
            row += 1;
        }
    }
    Dataset { features, labels }
}

/// Stratified class counts summing to `total`.
fn stratified_counts(classes: usize, total: usize) -> Vec<(usize, usize)> {
    (0..classes)
        .map(|c| (c, total / classes + usize::from(c < total % classes)))
        .collect()
}

/// Per-client training datasets under the configured partition.
pub fn partition_data(cfg: &ScenarioConfig) -> Result<Vec<Dataset>> {
    cfg.validate()?;
    (0..cfg.clients)
        .map(|k| {
            let mut rng = ChaCha20Rng::from_seed(subseed(cfg.seed, "client-data", k as u64));
            let count = cfg
                .samples_overrides
                .get(&format!("msms-{k}"))
                .copied()
                .unwrap_or(cfg.samples_per_client);
            let spec = match cfg.partition {
                PartitionMode::Iid => stratified_counts(cfg.classes, count),
                PartitionMode::OneClassPerClient => {
                    vec![(cfg.assigned_class(k), count)]
                }
            };
            Ok(sample_rows(cfg, &spec, &mut rng))
        })
        .collect()
}

/// Held-out evaluation set covering every class.
pub fn test_set(cfg: &ScenarioConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = ChaCha20Rng::from_seed(subseed(cfg.seed, "test-data", 0));
    let spec: Vec<(usize, usize)> = (0..cfg.classes)
        .map(|c| (c, cfg.test_samples_per_class))
        .collect();
    Ok(sample_rows(cfg, &spec, &mut rng))
}

/// Materialize the availability schedule for rounds 1..=rounds.
pub fn build_schedule(cfg: &ScenarioConfig, rounds: u64) -> Result<Vec<BTreeSet<ClientId>>> {
    cfg.validate()?;
    let ids = cfg.client_ids();
    let mut schedule = Vec::with_capacity(rounds as usize);
    match &cfg.availability {
        Availability::Always => {
            for _ in 1..=rounds {
                schedule.push(ids.iter().cloned().collect());
            }
        }
        Availability::Bernoulli { p } => {
            let mut rng = ChaCha20Rng::from_seed(subseed(cfg.seed, "availability", 0));
            for _ in 1..=rounds {
                let mut set = BTreeSet::new();
                for id in &ids {
                    if rng.gen_bool(*p) {
                        set.insert(id.clone());
                    }
                }
                schedule.push(set);
            }
        }
        Availability::Explicit { rounds: lists } => {
            for name in lists.keys() {
                if !ids.iter().any(|id| id.as_str() == name) {
                    return Err(Error::InvalidInput(format!(
                        "availability schedule names unknown client {name:?}"
                    )));
                }
            }
            for t in 1..=rounds {
                let set = ids
                    .iter()
                    .filter(|id| {
                        lists
                            .get(id.as_str())
                            .map_or(true, |list| list.contains(&t))
                    })
                    .cloned()
                    .collect();
                schedule.push(set);
            }
        }
    }
    Ok(schedule)
}

/// Load an externally prepared feature table: every column but the last is a
/// feature, the last column is an integer class label. A header row is
/// optional and detected by non-numeric content.
pub fn load_csv_dataset(path: &Path) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_path(path)
        .map_err(|e| Error::Decode(format!("csv: {e}")))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Decode(format!("csv: {e}")))?;
        if record.len() < 2 {
            return Err(Error::Decode(format!(
                "csv row {i} has {} columns, need at least 2",
                record.len()
            )));
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|f| f.trim().parse::<f64>()).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if i == 0 => continue, // header row
            Err(e) => return Err(Error::Decode(format!("csv row {i}: {e}"))),
        };
        let (label, feats) = values.split_last().unwrap();
        if label.fract() != 0.0 || *label < 0.0 {
            return Err(Error::Decode(format!(
                "csv row {i}: label {label} is not a class index"
            )));
        }
        rows.push(feats.to_vec());
        labels.push(*label as usize);
    }
    if rows.is_empty() {
        return Err(Error::Decode("csv has no data rows".into()));
    }
    let dim = rows[0].len();
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::Decode("csv rows have inconsistent widths".into()));
    }
    let mut features = Array2::zeros((rows.len(), dim));
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            features[(i, j)] = v;
        }
    }
    Ok(Dataset { features, labels })
}
