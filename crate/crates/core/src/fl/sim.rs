//! Batch simulator: runs the full round protocol over a synthetic scenario,
//! in encrypted mode, plaintext mode, or both side by side.
//!
//! In `Both` mode the encrypted trajectory additionally computes, every
//! round, the plaintext weighted average of the *same* local models and
//! reports the per-coordinate divergence (pure quantization error, bounded
//! by K' * delta / 2), while an independent plaintext trajectory with
//! identical seeds provides the end-to-end accuracy comparison.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::envelope::Message;
use super::roles::{Aggregator, Client, TrainingConfig};
use super::weights::{eligibility, RoundMetadata, StalenessMode, WeightingMode};
use super::{GlobalModel, RoundBroadcast};
use crate::dfe::{fingerprint, setup, CipherVector, ClientId, DecryptPath, Kdc};
use crate::error::{Error, Result};
use crate::metrics::{
    comm_overhead_paper, evaluate_model, join_f64, ConfusionRecord, Evaluation, MetricsRow,
};
use crate::quant::QuantScheme;
use crate::scenario::{build_schedule, partition_data, test_set, Dataset, ScenarioConfig};
use crate::suite::{GroupParams, PairingSuite};

/// Which pipeline(s) a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    Encrypted,
    Plaintext,
    Both,
}

/// Baseline-comparison knobs used by the report command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    /// Measure per-parameter encryption timings as part of a run (adds a
    /// Paillier keygen plus ~timing_params encryptions of each kind).
    pub measure_timing: bool,
    /// Parameters per timing measurement; the comparison wants >= 1000.
    pub timing_params: usize,
    /// Modulus size of the Paillier baseline.
    pub paillier_bits: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            measure_timing: false,
            timing_params: 1024,
            paillier_bits: 2048,
        }
    }
}

/// Weighting and staleness policy of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightingConfig {
    pub mode: WeightingMode,
    /// Staleness tolerance; absent means gamma = t (everyone included).
    pub gamma: Option<u64>,
    pub staleness: StalenessMode,
}

impl Default for WeightingConfig {
    fn default() -> Self {
        WeightingConfig {
            mode: WeightingMode::Balanced,
            gamma: None,
            staleness: StalenessMode::Eligibility,
        }
    }
}

/// Complete description of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Pins all crypto, initialization, and training entropy.
    pub seed: u64,
    /// Total federated rounds T.
    pub rounds: u64,
    pub pipeline: Pipeline,
    pub decrypt_path: DecryptPath,
    /// Matrix dimension n; model vectors are chunked to this size.
    pub chunk_dim: usize,
    pub scenario: ScenarioConfig,
    pub quant: QuantScheme,
    pub training: TrainingConfig,
    pub weighting: WeightingConfig,
    /// Per-element byte figure used by the published-convention accounting.
    pub accounting_element_bytes: u64,
    pub baselines: BaselineConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            rounds: 30,
            pipeline: Pipeline::Both,
            decrypt_path: DecryptPath::FastNoPairing,
            chunk_dim: 16,
            scenario: ScenarioConfig::default(),
            quant: QuantScheme::default(),
            training: TrainingConfig::default(),
            weighting: WeightingConfig::default(),
            accounting_element_bytes: 56,
            baselines: BaselineConfig::default(),
        }
    }
}

impl RunConfig {
    /// Validate every field, naming all offenders in one error.
    pub fn validate<P: PairingSuite>(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.rounds == 0 {
            problems.push("rounds must be >= 1".to_string());
        }
        if self.chunk_dim == 0 {
            problems.push("chunk_dim must be >= 1".to_string());
        }
        if self.accounting_element_bytes == 0 {
            problems.push("accounting_element_bytes must be >= 1".to_string());
        }
        if self.baselines.paillier_bits < 64 || self.baselines.paillier_bits % 2 != 0 {
            problems.push(format!(
                "baselines.paillier_bits must be even and >= 64, got {}",
                self.baselines.paillier_bits
            ));
        }
        if self.baselines.timing_params == 0 {
            problems.push("baselines.timing_params must be >= 1".to_string());
        }
        if (self.scenario.clients as u32) > self.quant.max_participants {
            problems.push(format!(
                "scenario has {} clients but quant.max_participants is {}",
                self.scenario.clients, self.quant.max_participants
            ));
        }
        for result in [
            self.scenario.validate(),
            self.quant.validate_for_modulus_bits(P::modulus_bits()),
            self.training.validate(),
        ] {
            if let Err(Error::InvalidInput(msg)) = result {
                problems.push(msg);
            } else if let Err(e) = result {
                problems.push(e.to_string());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInput(problems.join("; ")))
        }
    }
}

/// Everything a finished run hands back to the caller.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<MetricsRow>,
    pub confusions: Vec<ConfusionRecord>,
    pub group_params: GroupParams,
    /// Key-file fingerprints by role/client, never key material.
    pub key_fingerprints: BTreeMap<String, String>,
    pub final_encrypted: Option<(GlobalModel, Evaluation)>,
    pub final_plaintext: Option<(GlobalModel, Evaluation)>,
    /// `Some(true)` when every both-mode round stayed within tolerance.
    pub divergence_within_tolerance: Option<bool>,
    /// Final participation counts f_k of the primary trajectory.
    pub final_frequencies: BTreeMap<ClientId, u64>,
}

fn subseed(seed: u64, label: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"fedmining/run/v1");
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    h.finalize().into()
}

/// Small random initial model, identical across both pipelines of a run.
fn initial_model(cfg: &RunConfig) -> GlobalModel {
    let mut rng = ChaCha20Rng::from_seed(subseed(cfg.seed, "init"));
    let weights = (0..cfg.scenario.model_dim())
        .map(|_| rng.gen_range(-0.01..0.01))
        .collect();
    GlobalModel {
        round_index: 0,
        weights,
    }
}

struct TrajectoryState<P: PairingSuite> {
    clients: BTreeMap<ClientId, Client<P>>,
    aggregator: Aggregator<P>,
    kdc: Kdc<P>,
}

/// Build the KDC, issue all keys, and wire up clients and aggregator.
fn build_roles<P: PairingSuite>(
    cfg: &RunConfig,
    datasets: &[Dataset],
    initial: &GlobalModel,
) -> Result<(TrajectoryState<P>, GroupParams, BTreeMap<String, String>)> {
    let (params, ms) = setup::<P>(P::SECURITY_BITS, cfg.chunk_dim, cfg.seed)?;
    let mut kdc = Kdc::new(ms);
    let mut fingerprints = BTreeMap::new();
    fingerprints.insert(
        "master".to_string(),
        fingerprint(&kdc.master_secret().to_bytes()),
    );

    let mut clients = BTreeMap::new();
    for (k, id) in cfg.scenario.client_ids().into_iter().enumerate() {
        let key = kdc.keygen_client(id.clone())?;
        fingerprints.insert(id.as_str().to_string(), fingerprint(&key.to_bytes()));
        clients.insert(
            id.clone(),
            Client::new(
                id,
                datasets[k].clone(),
                key,
                cfg.quant,
                cfg.training,
                cfg.scenario.classes,
                cfg.seed,
            ),
        );
    }
    let agg_key = kdc.keygen_aggregator();
    fingerprints.insert("aggregator".to_string(), fingerprint(&agg_key.to_bytes()));
    let aggregator = Aggregator::new(agg_key, cfg.quant, cfg.decrypt_path, initial.clone());
    Ok((
        TrajectoryState {
            clients,
            aggregator,
            kdc,
        },
        params,
        fingerprints,
    ))
}

/// Select this round's participants and assemble the metadata broadcast.
fn round_metadata<P: PairingSuite>(
    cfg: &RunConfig,
    state: &TrajectoryState<P>,
    t: u64,
    available: &std::collections::BTreeSet<ClientId>,
) -> RoundMetadata {
    let gamma = cfg.weighting.gamma.unwrap_or(t);
    let lo = t.saturating_sub(gamma).min(t.saturating_sub(1));
    let hi = t.saturating_sub(1);
    let mut participants = Vec::new();
    let mut data_sizes = Vec::new();
    let mut frequencies = Vec::new();
    for id in available {
        let client = &state.clients[id];
        let f = client.state.participation_count;
        match cfg.weighting.staleness {
            StalenessMode::Eligibility => {
                if !eligibility(f, t, gamma) {
                    continue;
                }
                frequencies.push(f);
            }
            StalenessMode::Clamp => {
                frequencies.push(f.clamp(lo, hi));
            }
        }
        participants.push(id.clone());
        data_sizes.push(client.state.data.len() as u64);
    }
    RoundMetadata {
        round_index: t,
        participants,
        data_sizes,
        frequencies,
        gamma,
    }
}

/// A round skipped for lack of participants still emits a metrics row.
fn idle_row(t: u64, eval: &Evaluation) -> MetricsRow {
    MetricsRow {
        round: t,
        k_prime: 0,
        participants: String::new(),
        macro_accuracy: eval.macro_accuracy,
        per_class_accuracy: join_f64(&eval.per_class_accuracy),
        alpha_sum: 0.0,
        clamp_count: 0,
        dlog_queries: 0,
        bytes_paper_per_client: 0,
        bytes_measured_total: 0,
        encrypt_ms: 0.0,
        decrypt_ms: 0.0,
        divergence_max: None,
        divergence_ok: None,
        plaintext_macro_accuracy: None,
    }
}

/// Run the plaintext trajectory, returning per-round macro accuracy and the
/// final model + evaluation.
fn frequencies<P: PairingSuite>(state: &TrajectoryState<P>) -> BTreeMap<ClientId, u64> {
    state
        .clients
        .iter()
        .map(|(id, c)| (id.clone(), c.state.participation_count))
        .collect()
}

fn run_plaintext<P: PairingSuite>(
    cfg: &RunConfig,
    datasets: &[Dataset],
    test: &Dataset,
    initial: &GlobalModel,
) -> Result<(Vec<f64>, GlobalModel, Evaluation, BTreeMap<ClientId, u64>)> {
    let (mut state, _, _) = build_roles::<P>(cfg, datasets, initial)?;
    let schedule = build_schedule(&cfg.scenario, cfg.rounds)?;
    let mut per_round_acc = Vec::with_capacity(cfg.rounds as usize);

    for t in 1..=cfg.rounds {
        let meta = round_metadata(cfg, &state, t, &schedule[(t - 1) as usize]);
        if meta.participants.is_empty() {
            let eval = evaluate_model(&state.aggregator.global.weights, cfg.scenario.classes, test)?;
            per_round_acc.push(eval.macro_accuracy);
            continue;
        }
        let broadcast = RoundBroadcast {
            global: state.aggregator.global.clone(),
            meta,
            weighting: cfg.weighting.mode,
        };
        let mut weighted = Vec::new();
        for id in broadcast.meta.participants.clone() {
            let client = state.clients.get_mut(&id).expect("participant exists");
            weighted.push(client.train_update(&broadcast)?.weighted);
        }
        state.aggregator.aggregate_plaintext(t, &weighted)?;
        let eval = evaluate_model(&state.aggregator.global.weights, cfg.scenario.classes, test)?;
        per_round_acc.push(eval.macro_accuracy);
    }
    let final_eval = evaluate_model(&state.aggregator.global.weights, cfg.scenario.classes, test)?;
    let freqs = frequencies(&state);
    Ok((per_round_acc, state.aggregator.global.clone(), final_eval, freqs))
}

/// Run the encrypted trajectory; `plain_acc` (when present) fills the
/// side-by-side accuracy column and activates the lockstep oracle.
#[allow(clippy::too_many_arguments)]
fn run_encrypted<P: PairingSuite>(
    cfg: &RunConfig,
    datasets: &[Dataset],
    test: &Dataset,
    initial: &GlobalModel,
    plain_acc: Option<&[f64]>,
    rows: &mut Vec<MetricsRow>,
    confusions: &mut Vec<ConfusionRecord>,
) -> Result<EncryptedOutcome> {
    let (mut state, params, fingerprints) = build_roles::<P>(cfg, datasets, initial)?;
    let schedule = build_schedule(&cfg.scenario, cfg.rounds)?;
    let model_dim = cfg.scenario.model_dim();
    let mut all_within = true;

    for t in 1..=cfg.rounds {
        let meta = round_metadata(cfg, &state, t, &schedule[(t - 1) as usize]);
        if meta.participants.is_empty() {
            let eval = evaluate_model(&state.aggregator.global.weights, cfg.scenario.classes, test)?;
            let mut row = idle_row(t, &eval);
            row.plaintext_macro_accuracy = plain_acc.map(|a| a[(t - 1) as usize]);
            rows.push(row);
            confusions.push(ConfusionRecord {
                round: t,
                matrix: eval.confusion,
            });
            continue;
        }

        // Stage 1: broadcast through the wire envelope.
        let broadcast = RoundBroadcast {
            global: state.aggregator.global.clone(),
            meta,
            weighting: cfg.weighting.mode,
        };
        let encoded = Message::<P>::Broadcast(broadcast).encode();
        let Message::Broadcast(broadcast) = Message::<P>::decode(&encoded)? else {
            unreachable!("tag round-trips");
        };

        // Stages 2-3: each participant trains and uploads.
        let mut ciphers: Vec<CipherVector<P>> = Vec::new();
        let mut weighted_updates = Vec::new();
        let mut alpha_sum = 0.0;
        let mut clamp_count = 0;
        let mut measured_bytes = 0u64;
        let encrypt_start = Instant::now();
        for id in broadcast.meta.participants.clone() {
            let client = state.clients.get_mut(&id).expect("participant exists");
            let out = client.run_round(&broadcast)?;
            alpha_sum += out.update.alpha;
            clamp_count += out.clamped;
            weighted_updates.push(out.update.weighted.clone());
            let upload = Message::<P>::Upload(out.cipher).encode();
            match Message::<P>::decode(&upload)? {
                Message::Upload(cipher) => {
                    measured_bytes += cipher.to_bytes().len() as u64;
                    ciphers.push(cipher);
                }
                _ => unreachable!("tag round-trips"),
            }
        }
        let encrypt_ms = encrypt_start.elapsed().as_secs_f64() * 1e3;

        // Stage 4: fetch the unmask value and open the aggregate.
        let declared = ciphers
            .iter()
            .map(|c| c.client_id.clone())
            .collect::<std::collections::BTreeSet<_>>();
        let request = Message::<P>::UnmaskRequest {
            round_index: t,
            participants: declared,
            vec_len: model_dim as u64,
        }
        .encode();
        let Message::UnmaskRequest {
            round_index,
            participants,
            vec_len,
        } = Message::<P>::decode(&request)?
        else {
            unreachable!("tag round-trips");
        };
        let unmask = state
            .kdc
            .round_unmask(round_index, &participants, vec_len as usize)?;
        let response = Message::<P>::UnmaskResponse(unmask).encode();
        let Message::UnmaskResponse(unmask) = Message::<P>::decode(&response)? else {
            unreachable!("tag round-trips");
        };

        let decrypt_start = Instant::now();
        let outcome = state.aggregator.aggregate_round(&ciphers, &unmask)?;
        let decrypt_ms = decrypt_start.elapsed().as_secs_f64() * 1e3;

        // Lockstep oracle: the plaintext average of the same local models.
        let (divergence_max, divergence_ok) = if plain_acc.is_some() {
            let mut oracle = vec![0.0; model_dim];
            for w in &weighted_updates {
                for (acc, v) in oracle.iter_mut().zip(w) {
                    *acc += v;
                }
            }
            let max_gap = state
                .aggregator
                .global
                .weights
                .iter()
                .zip(&oracle)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            let tolerance = outcome.k_prime as f64 * cfg.quant.delta / 2.0 + 1e-12;
            let ok = max_gap <= tolerance;
            all_within &= ok;
            (Some(max_gap), Some(ok))
        } else {
            (None, None)
        };

        let eval = evaluate_model(&state.aggregator.global.weights, cfg.scenario.classes, test)?;
        rows.push(MetricsRow {
            round: t,
            k_prime: outcome.k_prime,
            participants: broadcast
                .meta
                .participants
                .iter()
                .map(|id| id.as_str().to_string())
                .collect::<Vec<_>>()
                .join(";"),
            macro_accuracy: eval.macro_accuracy,
            per_class_accuracy: join_f64(&eval.per_class_accuracy),
            alpha_sum,
            clamp_count,
            dlog_queries: outcome.dlog_queries,
            bytes_paper_per_client: comm_overhead_paper(
                model_dim as u64,
                cfg.accounting_element_bytes,
            ),
            bytes_measured_total: measured_bytes,
            encrypt_ms,
            decrypt_ms,
            divergence_max,
            divergence_ok,
            plaintext_macro_accuracy: plain_acc.map(|a| a[(t - 1) as usize]),
        });
        confusions.push(ConfusionRecord {
            round: t,
            matrix: eval.confusion,
        });
    }

    let final_eval = evaluate_model(&state.aggregator.global.weights, cfg.scenario.classes, test)?;
    let within = plain_acc.map(|_| all_within);
    Ok(EncryptedOutcome {
        final_model: state.aggregator.global.clone(),
        final_eval,
        within,
        params,
        fingerprints,
        frequencies: frequencies(&state),
    })
}

struct EncryptedOutcome {
    final_model: GlobalModel,
    final_eval: Evaluation,
    within: Option<bool>,
    params: GroupParams,
    fingerprints: BTreeMap<String, String>,
    frequencies: BTreeMap<ClientId, u64>,
}

/// Execute a full run.
pub fn run<P: PairingSuite>(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate::<P>()?;
    let datasets = partition_data(&cfg.scenario)?;
    let test = test_set(&cfg.scenario)?;
    let initial = initial_model(cfg);

    let plain = match cfg.pipeline {
        Pipeline::Encrypted => None,
        Pipeline::Plaintext | Pipeline::Both => {
            Some(run_plaintext::<P>(cfg, &datasets, &test, &initial)?)
        }
    };

    let mut rows = Vec::new();
    let mut confusions = Vec::new();

    match cfg.pipeline {
        Pipeline::Plaintext => {
            let (per_round, final_model, final_eval, freqs) =
                plain.expect("plaintext pipeline ran");
            for (i, acc) in per_round.iter().enumerate() {
                let t = i as u64 + 1;
                rows.push(MetricsRow {
                    round: t,
                    k_prime: 0,
                    participants: String::new(),
                    macro_accuracy: *acc,
                    per_class_accuracy: String::new(),
                    alpha_sum: 0.0,
                    clamp_count: 0,
                    dlog_queries: 0,
                    bytes_paper_per_client: 0,
                    bytes_measured_total: 0,
                    encrypt_ms: 0.0,
                    decrypt_ms: 0.0,
                    divergence_max: None,
                    divergence_ok: None,
                    plaintext_macro_accuracy: Some(*acc),
                });
            }
            confusions.push(ConfusionRecord {
                round: cfg.rounds,
                matrix: final_eval.confusion.clone(),
            });
            Ok(RunOutput {
                rows,
                confusions,
                group_params: GroupParams::for_suite::<P>()?,
                key_fingerprints: BTreeMap::new(),
                final_encrypted: None,
                final_plaintext: Some((final_model, final_eval)),
                divergence_within_tolerance: None,
                final_frequencies: freqs,
            })
        }
        Pipeline::Encrypted | Pipeline::Both => {
            let plain_acc: Option<Vec<f64>> = plain.as_ref().map(|(acc, _, _, _)| acc.clone());
            let outcome = run_encrypted::<P>(
                cfg,
                &datasets,
                &test,
                &initial,
                plain_acc.as_deref(),
                &mut rows,
                &mut confusions,
            )?;
            Ok(RunOutput {
                rows,
                confusions,
                group_params: outcome.params,
                key_fingerprints: outcome.fingerprints,
                final_encrypted: Some((outcome.final_model, outcome.final_eval)),
                final_plaintext: plain.map(|(_, m, e, _)| (m, e)),
                divergence_within_tolerance: outcome.within,
                final_frequencies: outcome.frequencies,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{Availability, PartitionMode};
    use crate::toy::Toy61;

    fn tiny_cfg() -> RunConfig {
        RunConfig {
            rounds: 3,
            chunk_dim: 8,
            scenario: ScenarioConfig {
                clients: 4,
                classes: 2,
                feature_dim: 4,
                samples_per_client: 40,
                partition: PartitionMode::Iid,
                test_samples_per_class: 20,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn both_mode_divergence_stays_within_quantization_tolerance() {
        let out = run::<Toy61>(&tiny_cfg()).unwrap();
        assert_eq!(out.rows.len(), 3);
        assert_eq!(out.divergence_within_tolerance, Some(true));
        for row in &out.rows {
            assert_eq!(row.k_prime, 4);
            assert!((row.alpha_sum - 1.0).abs() < 1e-12);
            assert!(row.divergence_ok.unwrap());
            assert!(row.bytes_measured_total > 0);
        }
        assert!(out.final_encrypted.is_some());
        assert!(out.final_plaintext.is_some());
    }

    #[test]
    fn single_client_single_round_tracks_local_model() {
        let cfg = RunConfig {
            rounds: 1,
            pipeline: Pipeline::Both,
            scenario: ScenarioConfig {
                clients: 1,
                classes: 2,
                feature_dim: 4,
                samples_per_client: 30,
                partition: PartitionMode::Iid,
                test_samples_per_class: 10,
                ..Default::default()
            },
            chunk_dim: 4,
            ..Default::default()
        };
        let out = run::<Toy61>(&cfg).unwrap();
        // With one client alpha = 1, so encrypted and plaintext agree to
        // within half a quantization step per coordinate.
        let enc = &out.final_encrypted.as_ref().unwrap().0.weights;
        let plain = &out.final_plaintext.as_ref().unwrap().0.weights;
        for (a, b) in enc.iter().zip(plain) {
            assert!((a - b).abs() <= cfg.quant.delta / 2.0 + 1e-12);
        }
    }

    #[test]
    fn absent_client_with_tight_gamma_is_frozen_out() {
        // msms-0 misses round 1; with gamma = 1 a single missed round locks
        // the frequency below the threshold forever, so it never rejoins.
        let mut cfg = tiny_cfg();
        cfg.rounds = 4;
        cfg.weighting.gamma = Some(1);
        cfg.scenario.availability = Availability::Explicit {
            rounds: std::collections::BTreeMap::from([(
                "msms-0".to_string(),
                vec![2, 3, 4],
            )]),
        };
        let out = run::<Toy61>(&cfg).unwrap();
        for row in &out.rows {
            assert!(
                !row.participants.split(';').any(|p| p == "msms-0"),
                "round {}: {:?}",
                row.round,
                row.participants
            );
        }
        // The others participate every round.
        assert_eq!(out.rows.last().unwrap().k_prime, 3);
    }

    #[test]
    fn clamp_mode_admits_stale_clients_with_clamped_frequency() {
        // Same schedule as the freeze-out test, but under the clamp reading
        // the stale client is admitted once available, its frequency pulled
        // up into [t - gamma, t - 1].
        let mut cfg = tiny_cfg();
        cfg.rounds = 6;
        cfg.weighting.gamma = Some(2);
        cfg.weighting.staleness = StalenessMode::Clamp;
        cfg.scenario.availability = Availability::Explicit {
            rounds: std::collections::BTreeMap::from([("msms-0".to_string(), vec![6])]),
        };
        let out = run::<Toy61>(&cfg).unwrap();
        let last = out.rows.last().unwrap();
        assert_eq!(last.round, 6);
        assert!(last.participants.split(';').any(|p| p == "msms-0"));
        assert_eq!(last.k_prime, 4);
        assert!((last.alpha_sum - 1.0).abs() < 1e-12);

        // Under the eligibility reading the same client stays out.
        cfg.weighting.staleness = StalenessMode::Eligibility;
        let out = run::<Toy61>(&cfg).unwrap();
        assert!(!out.rows.last().unwrap().participants.contains("msms-0"));
    }

    #[test]
    fn gamma_zero_excludes_every_client() {
        // f_k <= t - 1 always, so the f_k >= t threshold at gamma = 0 can
        // never be met; every round idles and the model never moves.
        let mut cfg = tiny_cfg();
        cfg.weighting.gamma = Some(0);
        let out = run::<Toy61>(&cfg).unwrap();
        assert!(out.rows.iter().all(|r| r.k_prime == 0));
    }

    #[test]
    fn frequency_bookkeeping_matches_ciphertext_production() {
        // Under a churny schedule, f_k must equal the number of rounds in
        // which client k actually uploaded.
        let mut cfg = tiny_cfg();
        cfg.rounds = 12;
        cfg.pipeline = Pipeline::Encrypted;
        cfg.scenario.availability = Availability::Bernoulli { p: 0.6 };
        let out = run::<Toy61>(&cfg).unwrap();
        let mut produced: std::collections::BTreeMap<String, u64> = Default::default();
        for row in &out.rows {
            for id in row.participants.split(';').filter(|s| !s.is_empty()) {
                *produced.entry(id.to_string()).or_default() += 1;
            }
        }
        for (id, f) in &out.final_frequencies {
            assert_eq!(
                *f,
                produced.get(id.as_str()).copied().unwrap_or(0),
                "client {id}"
            );
        }
    }

    #[test]
    fn validation_aggregates_field_errors() {
        let mut cfg = tiny_cfg();
        cfg.rounds = 0;
        cfg.chunk_dim = 0;
        cfg.training.eta0 = -1.0;
        cfg.scenario.noise_sigma = 0.0;
        let msg = cfg.validate::<Toy61>().unwrap_err().to_string();
        for needle in ["rounds", "chunk_dim", "eta0", "noise_sigma"] {
            assert!(msg.contains(needle), "missing {needle} in: {msg}");
        }
    }

    #[test]
    fn identical_seeds_reproduce_identical_metrics() {
        let cfg = tiny_cfg();
        let a = run::<Toy61>(&cfg).unwrap();
        let b = run::<Toy61>(&cfg).unwrap();
        assert_eq!(a.rows.len(), b.rows.len());
        for (x, y) in a.rows.iter().zip(&b.rows) {
            // Wall-clock columns aside, rows must match bit for bit.
            let mut x = x.clone();
            let mut y = y.clone();
            x.encrypt_ms = 0.0;
            x.decrypt_ms = 0.0;
            y.encrypt_ms = 0.0;
            y.decrypt_ms = 0.0;
            assert_eq!(x, y);
        }
        assert_eq!(a.key_fingerprints, b.key_fingerprints);
    }
}
