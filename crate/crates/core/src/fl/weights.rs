//! Staleness gating and the balanced weighting factor.
//!
//! Per participant k in round t, with participation frequency f_k (rounds
//! joined so far), data-size share S'_k = |D_k| / |D_K'|, and staleness
//! tolerance gamma:
//!
//! * a client is eligible iff `f_k >= t - gamma` (gamma = t admits everyone);
//! * `beta_k = (f_k / sum f) * S'_k` and `alpha_k = beta_k / sum beta`.
//!
//! At t = 1 every frequency is zero and the formula is undefined; round one
//! falls back to pure size weights, which is also what the plain weighted
//! average would use.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dfe::ClientId;
use crate::error::{Error, Result};

/// How the per-round weighting factor is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightingMode {
    /// Frequency-and-size balanced weights.
    Balanced,
    /// Pure data-size weights (the unbalanced default the balanced scheme is
    /// compared against).
    SizeOnly,
}

/// How the staleness tolerance is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StalenessMode {
    /// Clients with `f_k < t - gamma` sit the round out.
    Eligibility,
    /// Nobody is filtered; frequencies are clamped into `[t - gamma, t - 1]`
    /// before weighting. Provided for comparison, not the default reading.
    Clamp,
}

/// Aggregator broadcast accompanying the global model: everything each
/// participant needs to compute the identical weight vector locally.
/// `participants`, `data_sizes`, and `frequencies` are parallel and sorted
/// by client id so every recipient evaluates in the same order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundMetadata {
    pub round_index: u64,
    pub participants: Vec<ClientId>,
    pub data_sizes: Vec<u64>,
    /// Participation frequencies f_k^(t-1), after clamping when the clamp
    /// staleness mode is active.
    pub frequencies: Vec<u64>,
    pub gamma: u64,
}

impl RoundMetadata {
    pub fn validate(&self) -> Result<()> {
        if self.participants.is_empty() {
            return Err(Error::InvalidInput("round has no participants".into()));
        }
        if self.participants.len() != self.data_sizes.len()
            || self.participants.len() != self.frequencies.len()
        {
            return Err(Error::DimensionMismatch(
                "metadata vectors have differing lengths".into(),
            ));
        }
        if !self.participants.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput(
                "participants must be sorted and unique".into(),
            ));
        }
        if self.data_sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidInput("data sizes must be positive".into()));
        }
        Ok(())
    }

    pub fn total_data(&self) -> u64 {
        self.data_sizes.iter().sum()
    }
}

/// Staleness gate: may a client with frequency `f_k` join round `t`?
pub fn eligibility(f_k: u64, t: u64, gamma: u64) -> bool {
    // f_k >= t - gamma, saturating at zero.
    f_k >= t.saturating_sub(gamma)
}

/// Pure size weights `|D_k| / |D_K'|`.
pub fn size_weights(meta: &RoundMetadata) -> Result<BTreeMap<ClientId, f64>> {
    meta.validate()?;
    let total = meta.total_data() as f64;
    Ok(meta
        .participants
        .iter()
        .zip(&meta.data_sizes)
        .map(|(id, &s)| (id.clone(), s as f64 / total))
        .collect())
}

/// Balanced weights: `alpha_k` proportional to `(f_k / sum f) * S'_k`,
/// normalized to sum to one. Round one (all frequencies necessarily zero)
/// degrades to pure size weights; an all-zero frequency vector after round
/// one is an error.
pub fn balancing_weights(meta: &RoundMetadata) -> Result<BTreeMap<ClientId, f64>> {
    meta.validate()?;
    if meta.round_index <= 1 {
        return size_weights(meta);
    }
    let freq_total: u64 = meta.frequencies.iter().sum();
    if freq_total == 0 {
        return Err(Error::AllZeroFrequencies(meta.round_index));
    }
    let data_total = meta.total_data() as f64;
    let betas: Vec<f64> = meta
        .participants
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let freq_share = meta.frequencies[i] as f64 / freq_total as f64;
            let size_share = meta.data_sizes[i] as f64 / data_total;
            freq_share * size_share
        })
        .collect();
    let beta_total: f64 = betas.iter().sum();
    Ok(meta
        .participants
        .iter()
        .zip(&betas)
        .map(|(id, &b)| (id.clone(), b / beta_total))
        .collect())
}

/// Dispatch on the announced mode.
pub fn round_weights(
    meta: &RoundMetadata,
    mode: WeightingMode,
) -> Result<BTreeMap<ClientId, f64>> {
    match mode {
        WeightingMode::Balanced => balancing_weights(meta),
        WeightingMode::SizeOnly => size_weights(meta),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(t: u64, sizes: &[u64], freqs: &[u64]) -> RoundMetadata {
        RoundMetadata {
            round_index: t,
            participants: (0..sizes.len())
                .map(|i| ClientId::new(format!("msms-{i}")))
                .collect(),
            data_sizes: sizes.to_vec(),
            frequencies: freqs.to_vec(),
            gamma: t,
        }
    }

    #[test]
    fn eligibility_examples() {
        // gamma = t admits everyone, even f = 0.
        assert!(eligibility(0, 5, 5));
        // 2 < 5 - 2.
        assert!(!eligibility(2, 5, 2));
        // Boundary: 4 >= 5 - 1.
        assert!(eligibility(4, 5, 1));
    }

    #[test]
    fn gamma_monotonicity() {
        for t in 1..20u64 {
            for f in 0..t {
                for gamma in 0..t {
                    if eligibility(f, t, gamma) {
                        assert!(eligibility(f, t, gamma + 1));
                    }
                }
            }
        }
    }

    #[test]
    fn symmetric_clients_split_evenly() {
        let m = meta(5, &[100, 100, 100, 100], &[2, 2, 2, 2]);
        let alpha = balancing_weights(&m).unwrap();
        for v in alpha.values() {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn frequency_skew_example() {
        // f = (3, 1), equal sizes: beta = (0.375, 0.125), alpha = (3/4, 1/4).
        let m = meta(5, &[100, 100], &[3, 1]);
        let alpha = balancing_weights(&m).unwrap();
        assert!((alpha[&ClientId::from("msms-0")] - 0.75).abs() < 1e-12);
        assert!((alpha[&ClientId::from("msms-1")] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn size_skew_example() {
        // f = (2, 2), sizes (300, 100): beta = (0.5 * 0.75, 0.5 * 0.25).
        let m = meta(5, &[300, 100], &[2, 2]);
        let alpha = balancing_weights(&m).unwrap();
        assert!((alpha[&ClientId::from("msms-0")] - 0.75).abs() < 1e-12);
        assert!((alpha[&ClientId::from("msms-1")] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn equal_frequencies_degrade_to_size_weights_exactly() {
        let m = meta(9, &[1000, 100], &[7, 7]);
        let alpha = balancing_weights(&m).unwrap();
        let size = size_weights(&m).unwrap();
        let a = ClientId::from("msms-0");
        let b = ClientId::from("msms-1");
        assert!((alpha[&a] / alpha[&b] - size[&a] / size[&b]).abs() < 1e-12);
        assert!((alpha[&a] / alpha[&b] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn round_one_uses_size_weights() {
        let m = meta(1, &[300, 100], &[0, 0]);
        let alpha = balancing_weights(&m).unwrap();
        assert!((alpha[&ClientId::from("msms-0")] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn all_zero_frequencies_after_round_one_is_an_error() {
        let m = meta(4, &[300, 100], &[0, 0]);
        assert!(matches!(
            balancing_weights(&m),
            Err(Error::AllZeroFrequencies(4))
        ));
    }

    #[test]
    fn weights_always_sum_to_one() {
        for (sizes, freqs) in [
            (vec![5u64, 10, 1, 700], vec![1u64, 3, 2, 9]),
            (vec![1, 1], vec![0, 5]),
            (vec![9, 2, 2], vec![4, 4, 4]),
        ] {
            let m = meta(10, &sizes, &freqs);
            let alpha = balancing_weights(&m).unwrap();
            let sum: f64 = alpha.values().sum();
            assert!((sum - 1.0).abs() < 1e-12, "sum = {sum}");
        }
    }

    #[test]
    fn metadata_validation_catches_malformed_broadcasts() {
        let mut m = meta(3, &[10, 10], &[1, 1]);
        m.data_sizes[1] = 0;
        assert!(m.validate().is_err());
        let mut m = meta(3, &[10, 10], &[1, 1]);
        m.participants.swap(0, 1);
        assert!(m.validate().is_err());
        let m = meta(3, &[], &[]);
        assert!(m.validate().is_err());
    }
}
