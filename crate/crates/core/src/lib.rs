//! Secure-aggregation federated learning at desk scale.
//!
//! The crate is organized around three layers:
//!
//! * algebra — [`suite`] defines the field/group/pairing interface with a
//!   real curve backend ([`bls`]) and a brute-forceable small-prime backend
//!   ([`toy`]); [`matrix`] and [`bsgs`] supply the shared linear algebra and
//!   discrete-log recovery;
//! * cryptography — [`dfe`] implements the decentralized
//!   functional-encryption aggregation scheme and [`quant`] the fixed-point
//!   codec feeding it;
//! * experimentation — [`fl`] runs the four-stage training protocol with
//!   KDC/aggregator/client roles, [`scenario`] generates non-IID client
//!   data and availability schedules, [`metrics`] accounts accuracy and
//!   overhead, and [`baselines`] provides the plaintext-average oracle plus
//!   a Paillier cost/timing baseline.

pub mod baselines;
pub mod bls;
pub mod bsgs;
pub mod dfe;
pub mod error;
pub mod fl;
pub mod matrix;
pub mod metrics;
pub mod quant;
pub mod scenario;
pub mod suite;
pub mod toy;

pub use bls::Bls381;
pub use bsgs::{bsgs_dlog, BsgsTable};
pub use dfe::{
    aggregate_decrypt, encrypt, setup, AggregationKey, CipherVector, ClientId, ClientKey,
    DecryptPath, Kdc, MasterSecret, RoundUnmask,
};
pub use error::{Error, Result};
pub use matrix::{mat_vec_group, pairing_row, sample_invertible_matrix, FieldMatrix};
pub use quant::{dequantize_aggregate, quantize, QuantScheme, QuantizedVector};
pub use suite::{FieldElem, GroupElem, GroupParams, PairingSuite};
pub use toy::{Toy, Toy101, Toy61};
