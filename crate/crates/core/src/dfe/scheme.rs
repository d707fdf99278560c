//! Setup, key generation, masked encryption, and aggregate decryption.

use std::collections::BTreeSet;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::ClientId;
use crate::bsgs::BsgsTable;
use crate::error::{Error, Result};
use crate::matrix::{mat_vec_group, pairing_row, sample_invertible_matrix, FieldMatrix};
use crate::quant::QuantizedVector;
use crate::suite::{FieldElem, GroupElem, GroupParams, PairingSuite};

/// Stop resampling the per-client matrix split after this many failures.
const MAX_SPLIT_ATTEMPTS: usize = 64;

/// The KDC's master secret: the three matrices plus the seeds every derived
/// secret comes from. Never leaves KDC-local storage.
#[derive(Clone, PartialEq)]
pub struct MasterSecret<P: PairingSuite> {
    pub(crate) b: FieldMatrix<P::Scalar>,
    pub(crate) a1: FieldMatrix<P::Scalar>,
    pub(crate) a2: FieldMatrix<P::Scalar>,
    pub(crate) b_inv: FieldMatrix<P::Scalar>,
    pub(crate) a1_inv: FieldMatrix<P::Scalar>,
    pub(crate) a2_inv: FieldMatrix<P::Scalar>,
    pub(crate) chunk_dim: usize,
    /// Root of every per-client mask seed.
    pub(crate) round_mask_seed: [u8; 32],
    /// Seeds the key-issuance RNG so a rerun with the same setup seed and
    /// issue order reproduces identical keys.
    pub(crate) issue_seed: [u8; 32],
}

impl<P: PairingSuite> std::fmt::Debug for MasterSecret<P> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // Deliberately opaque.
        write!(f, "MasterSecret(n={})", self.chunk_dim)
    }
}

impl<P: PairingSuite> MasterSecret<P> {
    /// Assemble a master secret from explicit matrices. Intended for test
    /// vectors; `setup` is the normal entry point.
    pub fn from_matrices(
        b: FieldMatrix<P::Scalar>,
        a1: FieldMatrix<P::Scalar>,
        a2: FieldMatrix<P::Scalar>,
        round_mask_seed: [u8; 32],
        issue_seed: [u8; 32],
    ) -> Result<Self> {
        let n = b.rows();
        for (name, m) in [("B", &b), ("A1", &a1), ("A2", &a2)] {
            if !m.is_square() || m.rows() != n {
                return Err(Error::DimensionMismatch(format!(
                    "{name} must be {n}x{n}, got {}x{}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        let b_inv = b.inverse()?;
        let a1_inv = a1.inverse()?;
        let a2_inv = a2.inverse()?;
        Ok(MasterSecret {
            b,
            a1,
            a2,
            b_inv,
            a1_inv,
            a2_inv,
            chunk_dim: n,
            round_mask_seed,
            issue_seed,
        })
    }

    pub fn chunk_dim(&self) -> usize {
        self.chunk_dim
    }

    /// The aggregator's key `(B A1, B A2)`.
    pub fn aggregation_key(&self) -> AggregationKey<P> {
        AggregationKey {
            half1: self.b.mul(&self.a1).expect("square matrices of equal dim"),
            half2: self.b.mul(&self.a2).expect("square matrices of equal dim"),
        }
    }

    /// Per-client mask seed, derived so the KDC can recompute any client's
    /// masks without storing per-client state.
    pub(crate) fn client_mask_seed(&self, id: &ClientId) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"fedmining/mask-seed/v1");
        h.update(self.round_mask_seed);
        h.update((id.as_str().len() as u64).to_le_bytes());
        h.update(id.as_str().as_bytes());
        h.finalize().into()
    }
}

/// One client's key material: the two matrix shares and the mask seed.
#[derive(Clone, PartialEq)]
pub struct ClientKey<P: PairingSuite> {
    pub client_id: ClientId,
    /// `A1^-1 B'_k`.
    pub half1: FieldMatrix<P::Scalar>,
    /// `A2^-1 B''_k`.
    pub half2: FieldMatrix<P::Scalar>,
    pub(crate) mask_seed: [u8; 32],
}

impl<P: PairingSuite> std::fmt::Debug for ClientKey<P> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ClientKey({}, n={})", self.client_id, self.chunk_dim())
    }
}

impl<P: PairingSuite> ClientKey<P> {
    pub fn chunk_dim(&self) -> usize {
        self.half1.rows()
    }

    /// The seed this client's per-round masks derive from. The key owner
    /// needs it to evaluate [`derive_lambda`] for itself.
    pub fn mask_seed(&self) -> &[u8; 32] {
        &self.mask_seed
    }
}

/// The aggregator's key `(B A1, B A2)`.
#[derive(Clone, PartialEq)]
pub struct AggregationKey<P: PairingSuite> {
    pub half1: FieldMatrix<P::Scalar>,
    pub half2: FieldMatrix<P::Scalar>,
}

impl<P: PairingSuite> std::fmt::Debug for AggregationKey<P> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "AggregationKey(n={})", self.chunk_dim())
    }
}

impl<P: PairingSuite> AggregationKey<P> {
    pub fn chunk_dim(&self) -> usize {
        self.half1.rows()
    }
}

/// Sum of the declared participants' mask vectors for one round, issued by
/// the KDC. This is the only unmasking information the aggregator sees.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundUnmask<P: PairingSuite> {
    pub round_index: u64,
    pub participants: BTreeSet<ClientId>,
    /// One scalar per padded coordinate.
    pub lambda_sum: Vec<P::Scalar>,
}

/// One encrypted chunk: both halves hold n group-2 elements.
#[derive(Clone, Debug, PartialEq)]
pub struct CipherChunk<P: PairingSuite> {
    pub half1: Vec<P::G2>,
    pub half2: Vec<P::G2>,
}

/// A client's encrypted, masked, quantized model for one round.
#[derive(Clone, Debug, PartialEq)]
pub struct CipherVector<P: PairingSuite> {
    pub client_id: ClientId,
    pub round_index: u64,
    /// Coordinate count before chunk padding.
    pub len: usize,
    pub chunks: Vec<CipherChunk<P>>,
}

impl<P: PairingSuite> CipherVector<P> {
    pub fn chunk_dim(&self) -> usize {
        self.chunks.first().map_or(0, |c| c.half1.len())
    }

    pub fn padded_len(&self) -> usize {
        self.chunks.len() * self.chunk_dim()
    }
}

/// Which algebraic route aggregate decryption takes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecryptPath {
    /// Pair each aggregation-key row against the summed halves and solve the
    /// discrete log in the target group.
    Pairing,
    /// Algebraically equivalent route that stays in G2: apply the key
    /// matrices to the summed halves and solve the discrete log base g2.
    FastNoPairing,
}

/// Generate public parameters and a fresh master secret.
///
/// Deterministic in `seed`: the same seed yields the same master secret.
pub fn setup<P: PairingSuite>(
    security_level: u32,
    chunk_dim: usize,
    seed: u64,
) -> Result<(GroupParams, MasterSecret<P>)> {
    if security_level != P::SECURITY_BITS {
        return Err(Error::UnsupportedSecurityLevel {
            requested: security_level,
            suite: P::NAME,
        });
    }
    if chunk_dim == 0 {
        return Err(Error::InvalidInput("chunk dimension must be >= 1".into()));
    }
    let params = GroupParams::for_suite::<P>()?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let b = sample_invertible_matrix::<P::Scalar, _>(chunk_dim, &mut rng)?;
    let a1 = sample_invertible_matrix::<P::Scalar, _>(chunk_dim, &mut rng)?;
    let a2 = sample_invertible_matrix::<P::Scalar, _>(chunk_dim, &mut rng)?;
    let mut round_mask_seed = [0u8; 32];
    rng.fill_bytes(&mut round_mask_seed);
    let mut issue_seed = [0u8; 32];
    rng.fill_bytes(&mut issue_seed);
    let ms = MasterSecret::from_matrices(b, a1, a2, round_mask_seed, issue_seed)?;
    Ok((params, ms))
}

/// The key distribution center role: owns the master secret and the
/// single-writer registry of issued client ids.
pub struct Kdc<P: PairingSuite> {
    ms: MasterSecret<P>,
    issued: BTreeSet<ClientId>,
    rng: ChaCha20Rng,
}

impl<P: PairingSuite> Kdc<P> {
    pub fn new(ms: MasterSecret<P>) -> Self {
        let rng = ChaCha20Rng::from_seed(ms.issue_seed);
        Kdc {
            ms,
            issued: BTreeSet::new(),
            rng,
        }
    }

    pub fn master_secret(&self) -> &MasterSecret<P> {
        &self.ms
    }

    pub fn issued(&self) -> &BTreeSet<ClientId> {
        &self.issued
    }

    /// Issue the key for one client: fresh invertible `B'_k`, the complement
    /// `B''_k = B^-1 - B'_k` (also invertible), and the mask seed.
    pub fn keygen_client(&mut self, id: impl Into<ClientId>) -> Result<ClientKey<P>> {
        let id = id.into();
        if self.issued.contains(&id) {
            return Err(Error::DuplicateClient(id.0));
        }
        let n = self.ms.chunk_dim;
        let mut split = None;
        for _ in 0..MAX_SPLIT_ATTEMPTS {
            let b_prime = sample_invertible_matrix::<P::Scalar, _>(n, &mut self.rng)?;
            let b_dprime = self.ms.b_inv.sub(&b_prime)?;
            if b_dprime.is_invertible() {
                split = Some((b_prime, b_dprime));
                break;
            }
        }
        let (b_prime, b_dprime) = split.ok_or(Error::RandomnessExhausted(MAX_SPLIT_ATTEMPTS))?;
        let key = ClientKey {
            mask_seed: self.ms.client_mask_seed(&id),
            half1: self.ms.a1_inv.mul(&b_prime)?,
            half2: self.ms.a2_inv.mul(&b_dprime)?,
            client_id: id.clone(),
        };
        self.issued.insert(id);
        Ok(key)
    }

    /// The aggregator's key `(B A1, B A2)`.
    pub fn keygen_aggregator(&self) -> AggregationKey<P> {
        self.ms.aggregation_key()
    }

    /// Sum of the mask vectors of exactly the declared participants for one
    /// round, covering `vec_len` (pre-padding) coordinates.
    pub fn round_unmask(
        &self,
        round_index: u64,
        participants: &BTreeSet<ClientId>,
        vec_len: usize,
    ) -> Result<RoundUnmask<P>> {
        if participants.is_empty() {
            return Err(Error::InvalidInput("participant set is empty".into()));
        }
        for id in participants {
            if !self.issued.contains(id) {
                return Err(Error::UnknownClient(id.0.clone()));
            }
        }
        let padded = padded_len(vec_len, self.ms.chunk_dim)?;
        let mut lambda_sum = vec![P::Scalar::zero(); padded];
        for id in participants {
            let seed = self.ms.client_mask_seed(id);
            for (acc, l) in lambda_sum
                .iter_mut()
                .zip(derive_lambda::<P::Scalar>(&seed, round_index, padded))
            {
                *acc += l;
            }
        }
        Ok(RoundUnmask {
            round_index,
            participants: participants.clone(),
            lambda_sum,
        })
    }
}

/// Keyed pseudorandom expansion of `(mask_seed, round)` into one scalar per
/// coordinate. Both the owning client and the KDC evaluate this; nobody
/// else can.
pub fn derive_lambda<S: FieldElem>(mask_seed: &[u8; 32], round_index: u64, len: usize) -> Vec<S> {
    let mut h = Sha256::new();
    h.update(b"fedmining/lambda/v1");
    h.update(mask_seed);
    h.update(round_index.to_le_bytes());
    let mut rng = ChaCha20Rng::from_seed(h.finalize().into());
    (0..len).map(|_| S::sample(&mut rng)).collect()
}

fn padded_len(len: usize, chunk_dim: usize) -> Result<usize> {
    if len == 0 {
        return Err(Error::InvalidInput("cannot encrypt an empty vector".into()));
    }
    Ok(len.div_ceil(chunk_dim) * chunk_dim)
}

/// Mask and encrypt one quantized vector for `round_index`.
///
/// The vector is zero-padded to a multiple of the chunk dimension, shifted
/// by the client's per-round mask, and each chunk x (an n-vector treated as
/// a column) becomes `(g2 * (half1 x), g2 * (half2 x))` element-wise.
pub fn encrypt<P: PairingSuite>(
    ck: &ClientKey<P>,
    weighted_quantized: &QuantizedVector,
    round_index: u64,
) -> Result<CipherVector<P>> {
    let n = ck.chunk_dim();
    let len = weighted_quantized.values.len();
    let padded = padded_len(len, n)?;
    let limit = 1u64 << weighted_quantized.scheme.bits;
    for (index, &value) in weighted_quantized.values.iter().enumerate() {
        if value >= limit {
            return Err(Error::CoordinateOutOfRange {
                index,
                value,
                bits: weighted_quantized.scheme.bits,
            });
        }
    }

    let lambda = derive_lambda::<P::Scalar>(&ck.mask_seed, round_index, padded);
    let masked: Vec<P::Scalar> = (0..padded)
        .map(|i| {
            let v = weighted_quantized.values.get(i).copied().unwrap_or(0);
            P::Scalar::from_u64(v) + lambda[i]
        })
        .collect();

    let g2 = P::G2::generator();
    let chunks = masked
        .par_chunks(n)
        .map(|x| {
            let e1 = ck.half1.mul_vec(x)?;
            let e2 = ck.half2.mul_vec(x)?;
            Ok(CipherChunk {
                half1: e1.into_iter().map(|s| g2 * s).collect(),
                half2: e2.into_iter().map(|s| g2 * s).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(CipherVector {
        client_id: ck.client_id.clone(),
        round_index,
        len,
        chunks,
    })
}

/// Element-wise sums of all clients' ciphertext halves, validating that the
/// set is shape-consistent.
fn sum_halves<P: PairingSuite>(ciphers: &[CipherVector<P>]) -> Result<Vec<CipherChunk<P>>> {
    let first = ciphers
        .first()
        .ok_or_else(|| Error::InvalidInput("no ciphertexts to aggregate".into()))?;
    let (round, len, chunks, dim) = (
        first.round_index,
        first.len,
        first.chunks.len(),
        first.chunk_dim(),
    );
    for c in ciphers {
        if c.round_index != round {
            return Err(Error::CipherSetMismatch(format!(
                "round {} vs {}",
                c.round_index, round
            )));
        }
        if c.len != len || c.chunks.len() != chunks || c.chunk_dim() != dim {
            return Err(Error::CipherSetMismatch(format!(
                "shape of {} differs (len {} vs {})",
                c.client_id, c.len, len
            )));
        }
    }
    let mut summed: Vec<CipherChunk<P>> = first.chunks.clone();
    for c in &ciphers[1..] {
        for (acc, chunk) in summed.iter_mut().zip(&c.chunks) {
            for (a, x) in acc.half1.iter_mut().zip(&chunk.half1) {
                *a += *x;
            }
            for (a, x) in acc.half2.iter_mut().zip(&chunk.half2) {
                *a += *x;
            }
        }
    }
    Ok(summed)
}

/// Open the coordinate-wise sum of the submitted ciphertexts.
///
/// Refuses up front when the ciphertext senders are not exactly the
/// unmask's declared participant set (a mismatched mask sum cannot cancel).
/// Every recovered coordinate must lie below `dlog_bound`.
pub fn aggregate_decrypt<P: PairingSuite>(
    ak: &AggregationKey<P>,
    unmask: &RoundUnmask<P>,
    ciphers: &[CipherVector<P>],
    dlog_bound: u64,
    path: DecryptPath,
) -> Result<Vec<u64>> {
    let senders: BTreeSet<ClientId> = ciphers.iter().map(|c| c.client_id.clone()).collect();
    if senders != unmask.participants || senders.len() != ciphers.len() {
        return Err(Error::ParticipantSetMismatch);
    }
    if ciphers
        .first()
        .is_some_and(|c| c.round_index != unmask.round_index)
    {
        return Err(Error::ParticipantSetMismatch);
    }
    decrypt_inner(ak, Some(&unmask.lambda_sum), ciphers, dlog_bound, path)
}

/// Apply the aggregation key to ciphertexts *without* any unmasking. What
/// comes out is the mask-shifted sum: useful to demonstrate that a single
/// ciphertext does not open to its plaintext under the aggregation key
/// alone, and as the collusion-arithmetic identity check.
pub fn recover_masked_sum<P: PairingSuite>(
    ak: &AggregationKey<P>,
    ciphers: &[CipherVector<P>],
    dlog_bound: u64,
    path: DecryptPath,
) -> Result<Vec<u64>> {
    decrypt_inner(ak, None, ciphers, dlog_bound, path)
}

fn decrypt_inner<P: PairingSuite>(
    ak: &AggregationKey<P>,
    lambda_sum: Option<&[P::Scalar]>,
    ciphers: &[CipherVector<P>],
    dlog_bound: u64,
    path: DecryptPath,
) -> Result<Vec<u64>> {
    let summed = sum_halves(ciphers)?;
    let n = ak.chunk_dim();
    let len = ciphers[0].len;
    let padded = summed.len() * n;
    if ciphers[0].chunk_dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "ciphertext chunk dim {} vs key dim {n}",
            ciphers[0].chunk_dim()
        )));
    }
    if let Some(l) = lambda_sum {
        if l.len() != padded {
            return Err(Error::DimensionMismatch(format!(
                "unmask covers {} coordinates, ciphertexts have {padded}",
                l.len()
            )));
        }
    }

    let exponents = match path {
        DecryptPath::FastNoPairing => {
            let g2 = P::G2::generator();
            let table = BsgsTable::new(g2, dlog_bound)?;
            let combined: Vec<P::G2> = summed
                .par_iter()
                .map(|chunk| {
                    let r1 = mat_vec_group(&ak.half1, &chunk.half1)?;
                    let r2 = mat_vec_group(&ak.half2, &chunk.half2)?;
                    Ok(r1
                        .into_iter()
                        .zip(r2)
                        .map(|(a, b)| a + b)
                        .collect::<Vec<_>>())
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .flatten()
                .collect();
            combined
                .into_par_iter()
                .enumerate()
                .map(|(i, y)| {
                    let unmasked = match lambda_sum {
                        Some(l) => y - g2 * l[i],
                        None => y,
                    };
                    table.solve(&unmasked)
                })
                .collect::<Result<Vec<u64>>>()?
        }
        DecryptPath::Pairing => {
            let g1 = P::G1::generator();
            let g2 = P::G2::generator();
            let table = BsgsTable::new(P::gt_generator(), dlog_bound)?;
            (0..padded)
                .into_par_iter()
                .map(|i| {
                    let (c, j) = (i / n, i % n);
                    let t1 = pairing_row::<P>(ak.half1.row(j), &summed[c].half1)?;
                    let t2 = pairing_row::<P>(ak.half2.row(j), &summed[c].half2)?;
                    // Product of the two pairing results collapses
                    // B'_k + B''_k to B^-1, leaving the masked sum.
                    let mut t = t1 + t2;
                    if let Some(l) = lambda_sum {
                        // Division by e(lambda * g1, g2): multiply by inverse.
                        t -= P::pairing(&(g1 * l[i]), &g2);
                    }
                    table.solve(&t)
                })
                .collect::<Result<Vec<u64>>>()?
        }
    };

    Ok(exponents.into_iter().take(len).collect())
}
