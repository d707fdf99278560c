//! Fixed-point codec between real-valued model weights and the non-negative
//! integers the encryption scheme can recover by discrete logarithm.
//!
//! Per coordinate: `encode(x) = round_half_even(x / delta) + 2^(b-1)`, which
//! lands in `[0, 2^b)`. Sums of K encodings decode with
//! `(v - K * 2^(b-1)) * delta`, so aggregation commutes with the codec up to
//! `K * delta / 2` per coordinate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed-point parameters shared by every client of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantScheme {
    /// Step size between representable values.
    pub delta: f64,
    /// Per-client bit width b; encodings live in [0, 2^b).
    pub bits: u32,
    /// Largest participant count the discrete-log bound is sized for.
    pub max_participants: u32,
}

impl Default for QuantScheme {
    fn default() -> Self {
        // 2^-10 step, 16-bit encodings, up to 64 clients: dlog bound 2^22.
        QuantScheme {
            delta: (2.0f64).powi(-10),
            bits: 16,
            max_participants: 64,
        }
    }
}

impl QuantScheme {
    /// Offset added so negative weights map to non-negative integers.
    pub fn offset(&self) -> u64 {
        1u64 << (self.bits - 1)
    }

    /// Largest representable magnitude on the negative side.
    pub fn min_value(&self) -> f64 {
        -(self.offset() as f64) * self.delta
    }

    /// Largest representable magnitude on the positive side.
    pub fn max_value(&self) -> f64 {
        (self.offset() as f64 - 1.0) * self.delta
    }

    /// Discrete-log search bound for an aggregate of `k` clients.
    pub fn dlog_bound(&self, k: u32) -> u64 {
        (k as u64) << self.bits
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.delta.is_finite() && self.delta > 0.0) {
            problems.push(format!("delta must be a positive real, got {}", self.delta));
        }
        if self.bits < 2 || self.bits > 32 {
            problems.push(format!("bits must be in [2, 32], got {}", self.bits));
        }
        if self.max_participants == 0 {
            problems.push("max_participants must be >= 1".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInput(problems.join("; ")))
        }
    }

    /// The dlog bound must sit far below the scalar-field order or masked
    /// aggregates could wrap. Checked against the suite at run setup.
    pub fn validate_for_modulus_bits(&self, modulus_bits: u32) -> Result<()> {
        self.validate()?;
        let bound_bits = 64 - self.dlog_bound(self.max_participants).leading_zeros();
        if bound_bits + 8 > modulus_bits {
            return Err(Error::InvalidInput(format!(
                "dlog bound 2^{bound_bits} too close to the {modulus_bits}-bit field order"
            )));
        }
        Ok(())
    }
}

/// Integer image of a (weighted) real vector, plus how many clients'
/// encodings it aggregates (1 straight out of `quantize`).
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedVector {
    pub values: Vec<u64>,
    pub scheme: QuantScheme,
    pub participant_count: u32,
    /// Coordinates that fell outside the representable range and were
    /// clamped; reported in metrics, never fatal.
    pub clamped: u64,
}

/// Encode reals to offset fixed-point integers, clamping out-of-range
/// inputs and counting the clamps.
pub fn quantize(x: &[f64], s: &QuantScheme) -> QuantizedVector {
    let offset = s.offset() as i64;
    let hi = offset - 1;
    let lo = -offset;
    let mut clamped = 0u64;
    let values = x
        .iter()
        .map(|&v| {
            let step = (v / s.delta).round_ties_even();
            let step = if step < lo as f64 {
                clamped += 1;
                lo
            } else if step > hi as f64 {
                clamped += 1;
                hi
            } else {
                step as i64
            };
            (step + offset) as u64
        })
        .collect();
    QuantizedVector {
        values,
        scheme: *s,
        participant_count: 1,
        clamped,
    }
}

/// Decode an aggregate of `k_prime` client encodings back to reals.
pub fn dequantize_aggregate(
    v: &QuantizedVector,
    k_prime: u32,
    s: &QuantScheme,
) -> Result<Vec<f64>> {
    if k_prime == 0 {
        return Err(Error::InvalidInput("participant count must be >= 1".into()));
    }
    let shift = k_prime as u64 * s.offset();
    let max_agg = k_prime as u64 * ((1u64 << s.bits) - 1);
    v.values
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            if value > max_agg {
                return Err(Error::ParticipantCountMismatch { index, value, k_prime });
            }
            Ok((value as i128 - shift as i128) as f64 * s.delta)
        })
        .collect()
}
