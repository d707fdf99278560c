//! Accuracy evaluation, communication/computation accounting, and the
//! per-round metrics rows the simulator emits.
//!
//! Byte accounting deliberately reports two conventions side by side: the
//! published one (one `element_size` unit per model parameter, 56 bytes at a
//! 224-bit curve) and the measured one (the exact serialized ciphertext,
//! which carries two halves per coordinate plus headers). The gap between
//! them is visible in every report rather than silently resolved.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dfe::codec::cipher_wire_size;
use crate::error::{Error, Result};
use crate::scenario::Dataset;
use crate::suite::PairingSuite;

/// Element size used by the published byte accounting (a 224-bit-security
/// curve point).
pub const PAPER_ELEMENT_BYTES: u64 = 56;

/// Published convention: `element_size * |w|` bytes per client per round.
pub fn comm_overhead_paper(param_count: u64, element_size_bytes: u64) -> u64 {
    element_size_bytes * param_count
}

/// Measured convention: the exact wire size of one client's ciphertext for
/// this suite, including both halves, length prefixes, and the header.
pub fn comm_overhead_measured<P: PairingSuite>(
    param_count: usize,
    chunk_dim: usize,
    client_id_bytes: usize,
) -> u64 {
    cipher_wire_size::<P>(chunk_dim, param_count, client_id_bytes) as u64
}

/// Decimal megabytes, as used by the published tables.
pub fn bytes_to_mb(bytes: u64) -> f64 {
    bytes as f64 / 1e6
}

/// Classification quality of one model on one test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Raw confusion counts, true class by row, predicted class by column.
    pub confusion_counts: Vec<Vec<u64>>,
    /// Row-normalized confusion matrix; each row sums to 1.
    pub confusion: Vec<Vec<f64>>,
    /// Per-class recall (the confusion diagonal).
    pub per_class_accuracy: Vec<f64>,
    /// Mean of the per-class recalls.
    pub macro_accuracy: f64,
}

/// Score a prediction vector against ground truth.
pub fn evaluate_predictions(
    predictions: &[usize],
    labels: &[usize],
    classes: usize,
) -> Result<Evaluation> {
    if predictions.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions vs {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let mut counts = vec![vec![0u64; classes]; classes];
    for (&p, &t) in predictions.iter().zip(labels) {
        if t >= classes || p >= classes {
            return Err(Error::InvalidInput(format!(
                "label {t} / prediction {p} outside {classes} classes"
            )));
        }
        counts[t][p] += 1;
    }
    let mut confusion = vec![vec![0.0; classes]; classes];
    let mut per_class = Vec::with_capacity(classes);
    for (c, row) in counts.iter().enumerate() {
        let total: u64 = row.iter().sum();
        if total == 0 {
            return Err(Error::EmptyTestClass(c));
        }
        for (j, &n) in row.iter().enumerate() {
            confusion[c][j] = n as f64 / total as f64;
        }
        per_class.push(confusion[c][c]);
    }
    let macro_accuracy = per_class.iter().sum::<f64>() / classes as f64;
    Ok(Evaluation {
        confusion_counts: counts,
        confusion,
        per_class_accuracy: per_class,
        macro_accuracy,
    })
}

/// Score a flattened logistic model on a test set.
pub fn evaluate_model(weights: &[f64], classes: usize, test: &Dataset) -> Result<Evaluation> {
    let model = crate::fl::model::LogisticModel::from_flat(weights, classes, test.feature_dim())?;
    evaluate_predictions(&model.predict(&test.features), &test.labels, classes)
}

/// One CSV row per round. Per-class accuracies are semicolon-joined so the
/// column set stays stable across class counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub round: u64,
    pub k_prime: usize,
    /// Semicolon-joined participant ids.
    pub participants: String,
    pub macro_accuracy: f64,
    /// Semicolon-joined per-class accuracy.
    pub per_class_accuracy: String,
    pub alpha_sum: f64,
    pub clamp_count: u64,
    pub dlog_queries: u64,
    /// Published convention, per participating client.
    pub bytes_paper_per_client: u64,
    /// Actual serialized upload bytes summed over participants.
    pub bytes_measured_total: u64,
    pub encrypt_ms: f64,
    pub decrypt_ms: f64,
    /// Max per-coordinate gap to the plaintext oracle (both-pipelines mode).
    pub divergence_max: Option<f64>,
    /// Whether the gap stayed within K' * delta / 2.
    pub divergence_ok: Option<bool>,
    pub plaintext_macro_accuracy: Option<f64>,
}

/// Per-round confusion matrices, stored as a JSON sidecar next to the CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfusionRecord {
    pub round: u64,
    pub matrix: Vec<Vec<f64>>,
}

pub fn write_metrics_csv(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Decode(format!("csv: {e}")))?;
    for row in rows {
        w.serialize(row).map_err(|e| Error::Decode(format!("csv: {e}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Decode(format!("csv: {e}")))?;
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Decode(format!("csv: {e}"))))
        .collect()
}

pub fn write_confusion_sidecar(path: &Path, records: &[ConfusionRecord]) -> Result<()> {
    let json = serde_json::to_string_pretty(records)
        .map_err(|e| Error::Decode(format!("json: {e}")))?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn join_f64(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:.6}"))
        .collect::<Vec<_>>()
        .join(";")
}

/// Analytic FLOP/parameter counting over layer shapes. These are derived
/// from the architecture description, not measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    Conv2d {
        c_in: u64,
        c_out: u64,
        kernel: u64,
        h_out: u64,
        w_out: u64,
    },
    Linear {
        d_in: u64,
        d_out: u64,
    },
}

impl Layer {
    pub fn params(&self) -> u64 {
        match *self {
            Layer::Conv2d { c_in, c_out, kernel, .. } => kernel * kernel * c_in * c_out + c_out,
            Layer::Linear { d_in, d_out } => d_in * d_out + d_out,
        }
    }

    /// Multiply-accumulate pairs counted as 2 FLOPs.
    pub fn flops(&self) -> u64 {
        match *self {
            Layer::Conv2d { c_in, c_out, kernel, h_out, w_out } => {
                2 * kernel * kernel * c_in * c_out * h_out * w_out
            }
            Layer::Linear { d_in, d_out } => 2 * d_in * d_out,
        }
    }
}

pub fn total_params(layers: &[Layer]) -> u64 {
    layers.iter().map(Layer::params).sum()
}

pub fn total_gflops(layers: &[Layer]) -> f64 {
    layers.iter().map(Layer::flops).sum::<u64>() as f64 / 1e9
}

/// Published (parameter count, GFLOPs) rows used as accounting inputs for
/// the overhead tables; the models themselves are out of scope here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelCard {
    pub name: &'static str,
    pub params: u64,
    pub gflops: f64,
}

pub const MODEL_CARDS: [ModelCard; 3] = [
    ModelCard { name: "CNN / CIFAR-10", params: 7_759_521, gflops: 36.71 },
    ModelCard { name: "CNN / CIFAR-100", params: 7_759_521, gflops: 48.36 },
    ModelCard { name: "YOLOv7 / DsLMF+", params: 37_196_556, gflops: 105.11 },
];
