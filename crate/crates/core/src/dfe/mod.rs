//! Decentralized functional encryption for additive model aggregation.
//!
//! The key distribution center samples three invertible matrices (B, A1, A2)
//! over the scalar field. Each client k receives the split
//! `(A1^-1 B'_k, A2^-1 B''_k)` with `B'_k + B''_k = B^-1`, plus a private
//! mask seed; the aggregator receives `(B A1, B A2)`. Because
//! `(B A1)(A1^-1 B'_k) + (B A2)(A2^-1 B''_k) = I` for every client, the
//! aggregator can open the *sum* of all submitted ciphertexts while no
//! individual ciphertext decrypts under its key alone: each one is shifted
//! by a per-client, per-round mask vector whose sum the KDC reveals only for
//! a declared participant set.
//!
//! Model vectors longer than the matrix dimension n are split into chunks of
//! n coordinates that reuse the same key material; the masks stay fresh per
//! coordinate and per round.

pub mod codec;
mod scheme;

pub use codec::{
    cipher_wire_size, fingerprint, load_aggregation_key, load_client_key, load_master_secret,
    save_aggregation_key, save_client_key, save_master_secret,
};
pub use scheme::{
    aggregate_decrypt, derive_lambda, encrypt, recover_masked_sum, setup, AggregationKey,
    CipherChunk, CipherVector, ClientKey, DecryptPath, Kdc, MasterSecret, RoundUnmask,
};

use std::fmt;

use serde::{Deserialize, Serialize};

/// Stable identifier of one client (one monitoring station).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClientId(pub String);

impl ClientId {
    pub fn new(s: impl Into<String>) -> Self {
        ClientId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ClientId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ClientId {
    fn from(s: &str) -> Self {
        ClientId(s.to_string())
    }
}

impl From<String> for ClientId {
    fn from(s: String) -> Self {
        ClientId(s)
    }
}
