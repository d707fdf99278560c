//! Wall-clock measurement of per-parameter encryption cost, DFE vs
//! Paillier. Reported medians feed the computation-overhead comparison.

use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::paillier;
use crate::dfe::{encrypt, setup, Kdc};
use crate::error::Result;
use crate::quant::{quantize, QuantScheme};
use crate::suite::PairingSuite;

/// Medians of per-parameter encryption time on this host.
#[derive(Debug, Clone, Copy)]
pub struct EncryptTimings {
    pub dfe_per_param: Duration,
    pub paillier_per_param: Duration,
    /// paillier / dfe; above 1 means DFE encrypts faster.
    pub ratio: f64,
    pub param_count: usize,
    pub paillier_modulus_bits: u64,
}

fn median(mut samples: Vec<Duration>) -> Duration {
    samples.sort();
    samples[samples.len() / 2]
}

/// Median per-parameter DFE encryption time over `param_count` parameters
/// encrypted in chunk-sized batches.
pub fn measure_dfe_encrypt<P: PairingSuite>(
    chunk_dim: usize,
    param_count: usize,
    seed: u64,
) -> Result<Duration> {
    let (_, ms) = setup::<P>(P::SECURITY_BITS, chunk_dim, seed)?;
    let mut kdc = Kdc::new(ms);
    let ck = kdc.keygen_client("timing-client")?;
    let scheme = QuantScheme::default();
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5eed);

    let batches = param_count.div_ceil(chunk_dim).max(1);
    let mut samples = Vec::with_capacity(batches);
    for round in 0..batches {
        let weights: Vec<f64> = (0..chunk_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let q = quantize(&weights, &scheme);
        let start = Instant::now();
        let cipher = encrypt(&ck, &q, round as u64)?;
        let elapsed = start.elapsed();
        std::hint::black_box(&cipher);
        samples.push(elapsed / chunk_dim as u32);
    }
    Ok(median(samples))
}

/// Median per-parameter Paillier encryption time over `param_count`
/// parameters at the given modulus size.
pub fn measure_paillier_encrypt(
    modulus_bits: u64,
    param_count: usize,
    seed: u64,
) -> Result<Duration> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (pk, _) = paillier::generate_keypair(modulus_bits, &mut rng)?;
    let mut samples = Vec::with_capacity(param_count);
    for _ in 0..param_count {
        let m = BigUint::from(rng.gen_range(0u64..1 << 16));
        let start = Instant::now();
        let c = pk.encrypt(&m, &mut rng)?;
        let elapsed = start.elapsed();
        std::hint::black_box(&c);
        samples.push(elapsed);
    }
    Ok(median(samples))
}

/// Run both measurements and combine them into one report.
pub fn compare_encrypt_timings<P: PairingSuite>(
    chunk_dim: usize,
    param_count: usize,
    paillier_modulus_bits: u64,
    seed: u64,
) -> Result<EncryptTimings> {
    let dfe = measure_dfe_encrypt::<P>(chunk_dim, param_count, seed)?;
    let paillier = measure_paillier_encrypt(paillier_modulus_bits, param_count, seed)?;
    Ok(EncryptTimings {
        dfe_per_param: dfe,
        paillier_per_param: paillier,
        ratio: paillier.as_secs_f64() / dfe.as_secs_f64().max(f64::MIN_POSITIVE),
        param_count,
        paillier_modulus_bits,
    })
}
