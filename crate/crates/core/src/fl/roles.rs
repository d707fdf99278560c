//! The client and aggregator roles. The KDC role lives in [`crate::dfe`]
//! next to the key material it guards.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use super::model::LogisticModel;
use super::weights::round_weights;
use super::{GlobalModel, RoundBroadcast};
use crate::dfe::{aggregate_decrypt, encrypt, AggregationKey, CipherVector, ClientId, ClientKey, DecryptPath, RoundUnmask};
use crate::error::{Error, Result};
use crate::quant::{dequantize_aggregate, quantize, QuantScheme, QuantizedVector};
use crate::scenario::Dataset;
use crate::suite::PairingSuite;

/// Local-training knobs shared by every client of a run.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    /// Local epochs I per round.
    pub local_epochs: u32,
    pub batch_size: usize,
    /// Learning-rate schedule eta_t = eta0 / (1 + eta_decay * (t - 1)).
    pub eta0: f64,
    pub eta_decay: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            local_epochs: 2,
            batch_size: 32,
            eta0: 0.05,
            eta_decay: 0.0,
        }
    }
}

impl TrainingConfig {
    pub fn eta(&self, round: u64) -> f64 {
        self.eta0 / (1.0 + self.eta_decay * (round.saturating_sub(1)) as f64)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.local_epochs == 0 {
            problems.push("local_epochs must be >= 1".to_string());
        }
        if self.batch_size == 0 {
            problems.push("batch_size must be >= 1".to_string());
        }
        if !(self.eta0.is_finite() && self.eta0 > 0.0) {
            problems.push(format!("eta0 must be positive, got {}", self.eta0));
        }
        if !(self.eta_decay.is_finite() && self.eta_decay >= 0.0) {
            problems.push(format!("eta_decay must be >= 0, got {}", self.eta_decay));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInput(problems.join("; ")))
        }
    }
}

/// Per-client protocol state.
#[derive(Debug, Clone)]
pub struct ClientState {
    pub id: ClientId,
    pub data: Dataset,
    /// Rounds this client has participated in so far (f_k).
    pub participation_count: u64,
    pub last_participation_round: Option<u64>,
    /// Most recent locally trained model, if any.
    pub local_weights: Option<Vec<f64>>,
}

/// The trained, weighted (but not yet encrypted) update of one round.
#[derive(Debug, Clone)]
pub struct TrainedUpdate {
    pub alpha: f64,
    /// The trained local model w_k^t (unscaled).
    pub local_weights: Vec<f64>,
    /// alpha * w_k^t, what actually enters aggregation.
    pub weighted: Vec<f64>,
}

/// Stage 3 output: ciphertext plus everything metrics want to know.
#[derive(Debug, Clone)]
pub struct ClientRoundOutput<P: PairingSuite> {
    pub cipher: CipherVector<P>,
    pub update: TrainedUpdate,
    pub clamped: u64,
}

/// One monitoring station: private data, private key, training state.
pub struct Client<P: PairingSuite> {
    pub state: ClientState,
    key: ClientKey<P>,
    quant: QuantScheme,
    training: TrainingConfig,
    classes: usize,
    train_seed: u64,
}

impl<P: PairingSuite> Client<P> {
    pub fn new(
        id: ClientId,
        data: Dataset,
        key: ClientKey<P>,
        quant: QuantScheme,
        training: TrainingConfig,
        classes: usize,
        train_seed: u64,
    ) -> Self {
        Client {
            state: ClientState {
                id,
                data,
                participation_count: 0,
                last_participation_round: None,
                local_weights: None,
            },
            key,
            quant,
            training,
            classes,
            train_seed,
        }
    }

    /// Deterministic per-round RNG: training order depends only on
    /// (seed, client, round), never on how many draws other rounds used.
    fn round_rng(&self, round: u64) -> ChaCha20Rng {
        let mut h = Sha256::new();
        h.update(b"fedmining/train/v1");
        h.update(self.train_seed.to_le_bytes());
        h.update(self.state.id.as_str().as_bytes());
        h.update(round.to_le_bytes());
        ChaCha20Rng::from_seed(h.finalize().into())
    }

    /// Stage 2 plus the weighting factor: train locally from the broadcast
    /// global model and scale by this client's alpha. Updates the
    /// participation bookkeeping.
    pub fn train_update(&mut self, broadcast: &RoundBroadcast) -> Result<TrainedUpdate> {
        let t = broadcast.meta.round_index;
        let alphas = round_weights(&broadcast.meta, broadcast.weighting)?;
        let alpha = *alphas.get(&self.state.id).ok_or_else(|| {
            Error::InvalidInput(format!(
                "client {} is not in the broadcast participant set",
                self.state.id
            ))
        })?;

        let feature_dim = self.state.data.feature_dim();
        let mut model =
            LogisticModel::from_flat(&broadcast.global.weights, self.classes, feature_dim)?;
        let mut rng = self.round_rng(t);
        model.sgd_epochs(
            &self.state.data,
            self.training.local_epochs,
            self.training.eta(t),
            self.training.batch_size,
            &mut rng,
        )?;
        let local_weights = model.to_flat();
        let weighted: Vec<f64> = local_weights.iter().map(|w| alpha * w).collect();

        self.state.participation_count += 1;
        self.state.last_participation_round = Some(t);
        self.state.local_weights = Some(local_weights.clone());

        Ok(TrainedUpdate {
            alpha,
            local_weights,
            weighted,
        })
    }

    /// Full client round: train, weight, quantize, mask, encrypt.
    pub fn run_round(&mut self, broadcast: &RoundBroadcast) -> Result<ClientRoundOutput<P>> {
        let update = self.train_update(broadcast)?;
        let quantized: QuantizedVector = quantize(&update.weighted, &self.quant);
        let clamped = quantized.clamped;
        let cipher = encrypt(&self.key, &quantized, broadcast.meta.round_index)?;
        Ok(ClientRoundOutput {
            cipher,
            update,
            clamped,
        })
    }
}

/// Outcome of one aggregation, for metrics.
#[derive(Debug, Clone)]
pub struct AggregateOutcome {
    pub k_prime: usize,
    pub dlog_queries: u64,
}

/// The aggregator role: holds only the aggregation key and the current
/// global model.
pub struct Aggregator<P: PairingSuite> {
    key: AggregationKey<P>,
    quant: QuantScheme,
    path: DecryptPath,
    pub global: GlobalModel,
}

impl<P: PairingSuite> Aggregator<P> {
    pub fn new(
        key: AggregationKey<P>,
        quant: QuantScheme,
        path: DecryptPath,
        initial: GlobalModel,
    ) -> Self {
        Aggregator {
            key,
            quant,
            path,
            global: initial,
        }
    }

    /// Stage 4: open the sum of the uploaded ciphertexts, decode it back to
    /// reals, and adopt it as the next global model.
    pub fn aggregate_round(
        &mut self,
        ciphers: &[CipherVector<P>],
        unmask: &RoundUnmask<P>,
    ) -> Result<AggregateOutcome> {
        let k_prime = unmask.participants.len();
        let bound = self.quant.dlog_bound(k_prime as u32);
        let sum = aggregate_decrypt(&self.key, unmask, ciphers, bound, self.path)?;
        let padded = sum.len();
        let aggregate = QuantizedVector {
            values: sum,
            scheme: self.quant,
            participant_count: k_prime as u32,
            clamped: 0,
        };
        let weights = dequantize_aggregate(&aggregate, k_prime as u32, &self.quant)?;
        if weights.len() != self.global.dim() {
            return Err(Error::DimensionMismatch(format!(
                "aggregate has {} coordinates, model has {}",
                weights.len(),
                self.global.dim()
            )));
        }
        self.global = GlobalModel {
            round_index: unmask.round_index,
            weights,
        };
        Ok(AggregateOutcome {
            k_prime,
            dlog_queries: padded as u64,
        })
    }

    /// Plaintext counterpart of [`Self::aggregate_round`]: adopt
    /// `sum_k alpha_k w_k` directly.
    pub fn aggregate_plaintext(&mut self, round_index: u64, weighted: &[Vec<f64>]) -> Result<()> {
        if weighted.is_empty() {
            return Err(Error::InvalidInput("no updates to aggregate".into()));
        }
        let mut acc = vec![0.0; self.global.dim()];
        for w in weighted {
            if w.len() != acc.len() {
                return Err(Error::DimensionMismatch(format!(
                    "update has {} coordinates, model has {}",
                    w.len(),
                    acc.len()
                )));
            }
            for (a, v) in acc.iter_mut().zip(w) {
                *a += v;
            }
        }
        self.global = GlobalModel {
            round_index,
            weights: acc,
        };
        Ok(())
    }
}
