//! Role-level protocol tests through the public API.

use std::collections::BTreeSet;

use fedmining_core::dfe::{setup, ClientId, DecryptPath, Kdc};
use fedmining_core::fl::{
    Aggregator, Client, GlobalModel, RoundBroadcast, RoundMetadata, TrainingConfig, WeightingMode,
};
use fedmining_core::quant::QuantScheme;
use fedmining_core::scenario::{partition_data, PartitionMode, ScenarioConfig};
use fedmining_core::Toy61;

/// Two clients with identical data and full-batch training submit identical
/// local models; with alpha = 1/2 each, the opened aggregate restores the
/// common model to within quantization error.
#[test]
fn identical_clients_reconstruct_their_common_model() {
    let scenario = ScenarioConfig {
        clients: 2,
        classes: 2,
        feature_dim: 4,
        samples_per_client: 24,
        partition: PartitionMode::Iid,
        test_samples_per_class: 5,
        ..Default::default()
    };
    let data = partition_data(&scenario).unwrap();
    let quant = QuantScheme::default();
    let training = TrainingConfig {
        // Full-batch: the gradient is shuffle-independent, so equal data
        // means bit-equal local models.
        batch_size: 1000,
        ..Default::default()
    };

    let (_, ms) = setup::<Toy61>(0, 8, 21).unwrap();
    let mut kdc = Kdc::new(ms);
    let mut clients: Vec<Client<Toy61>> = (0..2)
        .map(|k| {
            let id = ClientId::new(format!("msms-{k}"));
            let key = kdc.keygen_client(id.clone()).unwrap();
            // Both clients share client 0's dataset.
            Client::new(id, data[0].clone(), key, quant, training, 2, 21)
        })
        .collect();

    let dim = scenario.model_dim();
    let global = GlobalModel {
        round_index: 0,
        weights: vec![0.0; dim],
    };
    let broadcast = RoundBroadcast {
        global: global.clone(),
        meta: RoundMetadata {
            round_index: 1,
            participants: vec![ClientId::from("msms-0"), ClientId::from("msms-1")],
            data_sizes: vec![24, 24],
            frequencies: vec![0, 0],
            gamma: 1,
        },
        weighting: WeightingMode::Balanced,
    };

    let outputs: Vec<_> = clients
        .iter_mut()
        .map(|c| c.run_round(&broadcast).unwrap())
        .collect();
    assert_eq!(outputs[0].update.alpha, 0.5);
    // Equal data and full-batch gradients: the models agree to rounding
    // (summation order still differs with the per-client shuffle).
    for (a, b) in outputs[0]
        .update
        .local_weights
        .iter()
        .zip(&outputs[1].update.local_weights)
    {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    let mut aggregator = Aggregator::new(
        kdc.keygen_aggregator(),
        quant,
        DecryptPath::FastNoPairing,
        global,
    );
    let ids: BTreeSet<ClientId> =
        [ClientId::from("msms-0"), ClientId::from("msms-1")].into_iter().collect();
    let unmask = kdc.round_unmask(1, &ids, dim).unwrap();
    let ciphers: Vec<_> = outputs.iter().map(|o| o.cipher.clone()).collect();
    aggregator.aggregate_round(&ciphers, &unmask).unwrap();

    // sum_k alpha_k w = w for identical w and sum(alpha) = 1.
    let common = &outputs[0].update.local_weights;
    for (got, want) in aggregator.global.weights.iter().zip(common) {
        assert!(
            (got - want).abs() <= 2.0 * quant.delta / 2.0 + 1e-12,
            "{got} vs {want}"
        );
    }
}

/// The scalar-field order reported in the public parameters is prime, for
/// both backends.
#[test]
fn group_params_modulus_is_prime() {
    use fedmining_core::baselines::paillier::is_probable_prime;
    use fedmining_core::suite::GroupParams;
    use num_bigint::BigUint;
    use rand::SeedableRng;

    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(2);
    for order in [
        GroupParams::for_suite::<Toy61>().unwrap().order_q,
        GroupParams::for_suite::<fedmining_core::Bls381>().unwrap().order_q,
    ] {
        let q: BigUint = order.parse().unwrap();
        assert!(is_probable_prime(&q, 40, &mut rng), "{order} not prime");
    }
}
