//! The four-stage training round protocol.
//!
//! Stage 1: the aggregator broadcasts the current global model together
//! with the round metadata every participant needs to compute identical
//! weighting factors. Stage 2: each participating client trains locally.
//! Stage 3: the client scales its model by its weighting factor, quantizes,
//! masks, encrypts, and uploads. Stage 4: the aggregator fetches the round's
//! unmask value from the KDC and opens the weighted sum as the next global
//! model.
//!
//! Role separation is enforced by construction: the aggregator type holds an
//! [`crate::dfe::AggregationKey`] and can never be handed a client key.

pub mod envelope;
pub mod model;
pub mod roles;
pub mod sim;
pub mod weights;

pub use envelope::Message;
pub use model::LogisticModel;
pub use roles::{Aggregator, Client, ClientRoundOutput, ClientState, TrainedUpdate, TrainingConfig};
pub use sim::{run, BaselineConfig, Pipeline, RunConfig, RunOutput, WeightingConfig};
pub use weights::{
    balancing_weights, eligibility, size_weights, RoundMetadata, StalenessMode, WeightingMode,
};

use serde::{Deserialize, Serialize};

/// The global model as broadcast at the start of a round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalModel {
    /// Index of the round that produced these weights (0 = initial).
    pub round_index: u64,
    /// Flattened model weights.
    pub weights: Vec<f64>,
}

impl GlobalModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }
}

/// Everything a client receives at stage 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundBroadcast {
    pub global: GlobalModel,
    pub meta: RoundMetadata,
    /// Announced so every participant applies the same weighting rule.
    pub weighting: WeightingMode,
}
