//! Config loading: TOML file, optional `--seed` pin, and flag overrides.
//!
//! A config without a `seed` key gets fresh entropy, which is then recorded
//! in the run directory's config snapshot so any run can be replayed.

use std::path::Path;

use fedmining_core::fl::{Pipeline, RunConfig, WeightingMode};
use fedmining_core::DecryptPath;
use rand::RngCore;

use crate::{validation, CliError, CliResult};

/// Flag-level overrides applied after the file is parsed.
#[derive(Debug, Default)]
pub struct Overrides {
    pub rounds: Option<u64>,
    pub pipeline: Option<String>,
    pub gamma: Option<u64>,
    pub weighting: Option<String>,
    pub decrypt_path: Option<String>,
}

pub fn load(path: &Path, seed: Option<u64>, overrides: &Overrides) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let mut value: toml::Table = toml::from_str(&text).map_err(validation)?;

    // Seed resolution order: --seed flag, config key, fresh entropy.
    if let Some(s) = seed {
        value.insert("seed".into(), toml::Value::Integer(s as i64));
    } else if !value.contains_key("seed") {
        let fresh = rand::rngs::OsRng.next_u64() >> 1; // fits toml's i64
        value.insert("seed".into(), toml::Value::Integer(fresh as i64));
    }

    let mut cfg: RunConfig = value.try_into().map_err(validation)?;
    apply_overrides(&mut cfg, overrides)?;
    Ok(cfg)
}

fn apply_overrides(cfg: &mut RunConfig, o: &Overrides) -> CliResult<()> {
    if let Some(rounds) = o.rounds {
        cfg.rounds = rounds;
    }
    if let Some(p) = &o.pipeline {
        cfg.pipeline = match p.as_str() {
            "encrypted" => Pipeline::Encrypted,
            "plaintext" => Pipeline::Plaintext,
            "both" => Pipeline::Both,
            other => {
                return Err(CliError::Validation(format!(
                    "unknown pipeline {other:?}; expected encrypted | plaintext | both"
                )));
            }
        };
    }
    if o.gamma.is_some() {
        cfg.weighting.gamma = o.gamma;
    }
    if let Some(w) = &o.weighting {
        cfg.weighting.mode = match w.as_str() {
            "balanced" => WeightingMode::Balanced,
            "size-only" => WeightingMode::SizeOnly,
            other => {
                return Err(CliError::Validation(format!(
                    "unknown weighting {other:?}; expected balanced | size-only"
                )));
            }
        };
    }
    if let Some(d) = &o.decrypt_path {
        cfg.decrypt_path = match d.as_str() {
            "pairing" => DecryptPath::Pairing,
            "fast-no-pairing" | "fast" => DecryptPath::FastNoPairing,
            other => {
                return Err(CliError::Validation(format!(
                    "unknown decrypt path {other:?}; expected pairing | fast-no-pairing"
                )));
            }
        };
    }
    Ok(())
}

/// The commented template `init` writes. Parsed by the loader in tests, so
/// it can never drift from the schema.
pub const TEMPLATE: &str = r#"# fedmining run configuration.
# Every value below is the default; uncomment and edit as needed.
# Remove the seed line (or pass --seed) to pin entropy explicitly;
# without it each run draws and records a fresh seed.

seed = 42
# Total federated rounds T.
rounds = 30
# encrypted | plaintext | both ("both" adds the plaintext oracle columns).
pipeline = "both"
# pairing | fast-no-pairing (algebraically equivalent decryption routes).
decrypt_path = "fast-no-pairing"
# Matrix dimension n; model vectors are encrypted in chunks of n.
chunk_dim = 16
# Per-element bytes assumed by the published-convention byte accounting.
accounting_element_bytes = 56

[scenario]
# Number of clients K.
clients = 12
# Number of classes C.
classes = 6
feature_dim = 8
samples_per_client = 120
# iid | one-class-per-client
partition = "one-class-per-client"
# Ring radius of the class means and the within-class noise level.
class_separation = 4.0
noise_sigma = 0.8
test_samples_per_class = 50
# Scenario seed drives data generation and the availability schedule.
seed = 7

# Per-client sample-count overrides for skewed-size scenarios, e.g.:
# [scenario.samples_overrides]
# msms-0 = 1200

[scenario.availability]
# always | bernoulli | explicit
mode = "always"
# For bernoulli: participation probability per client per round.
# p = 0.8
# For explicit: 1-based round lists per client (unlisted clients always
# attend), e.g.  rounds = { msms-0 = [10, 20, 30] }

[quant]
# Fixed-point step size (2^-10) and per-client bit width.
delta = 0.0009765625
bits = 16
# Sizes the discrete-log bound: it must cover max_participants clients.
max_participants = 64

[training]
# Local epochs I per round.
local_epochs = 2
batch_size = 32
# Learning-rate schedule: eta_t = eta0 / (1 + eta_decay * (t - 1)).
eta0 = 0.05
eta_decay = 0.0

[weighting]
# balanced | size-only
mode = "balanced"
# Staleness tolerance; omit for gamma = t (every client admitted).
# gamma = 5
# eligibility | clamp (how gamma is applied).
staleness = "eligibility"

[baselines]
# Measure per-parameter encryption timings (DFE vs Paillier) during the
# run; adds a Paillier keygen plus ~timing_params encryptions of each kind.
measure_timing = false
timing_params = 1024
paillier_bits = 2048
"#;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_parses_to_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.toml");
        std::fs::write(&path, TEMPLATE).unwrap();
        let cfg = load(&path, None, &Overrides::default()).unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn missing_seed_is_filled_and_flag_wins() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.toml");
        std::fs::write(&path, "rounds = 2\n").unwrap();
        let a = load(&path, None, &Overrides::default()).unwrap();
        let b = load(&path, None, &Overrides::default()).unwrap();
        assert_ne!(a.seed, b.seed); // fresh entropy each time
        let c = load(&path, Some(9), &Overrides::default()).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.rounds, 2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.toml");
        std::fs::write(&path, "no_such_key = 1\n").unwrap();
        assert!(matches!(
            load(&path, None, &Overrides::default()),
            Err(CliError::Validation(_))
        ));
    }

    #[test]
    fn overrides_apply() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.toml");
        std::fs::write(&path, "seed = 1\n").unwrap();
        let o = Overrides {
            rounds: Some(5),
            pipeline: Some("plaintext".into()),
            gamma: Some(2),
            weighting: Some("size-only".into()),
            decrypt_path: Some("pairing".into()),
        };
        let cfg = load(&path, None, &o).unwrap();
        assert_eq!(cfg.rounds, 5);
        assert_eq!(cfg.pipeline, Pipeline::Plaintext);
        assert_eq!(cfg.weighting.gamma, Some(2));
        assert_eq!(cfg.weighting.mode, WeightingMode::SizeOnly);
        assert_eq!(cfg.decrypt_path, DecryptPath::Pairing);

        let bad = Overrides {
            pipeline: Some("bogus".into()),
            ..Default::default()
        };
        assert!(load(&path, None, &bad).is_err());
    }
}
