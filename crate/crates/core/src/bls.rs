//! BLS12-381 suite backed by the arkworks curve implementation.
//!
//! The curve provides ~128-bit security. Byte accounting for the overhead
//! reports is configured separately (see [`crate::metrics`]); this module
//! only fixes the real on-wire element sizes (48-byte G1, 96-byte G2,
//! compressed).

use std::sync::LazyLock;

use ark_bls12_381::{g1, g2, Bls12_381, Fr};
use ark_ec::pairing::{Pairing, PairingOutput};
use ark_ec::short_weierstrass::Projective;
use ark_ec::{CurveGroup, PrimeGroup, VariableBaseMSM};
use ark_ff::{Field, One, PrimeField, UniformRand, Zero};
use ark_serialize::{CanonicalDeserialize, CanonicalSerialize};
use rand::RngCore;

use crate::error::{Error, Result};
use crate::suite::{FieldElem, GroupElem, PairingSuite};

// Spell the projective types with their concrete curve configs; coherence
// cannot reason about the associated-type aliases ark exposes.
type G1Projective = Projective<g1::Config>;
type G2Projective = Projective<g2::Config>;
type Gt = PairingOutput<Bls12_381>;

impl FieldElem for Fr {
    const ENCODED_LEN: usize = 32;

    fn zero() -> Self {
        <Fr as Zero>::zero()
    }

    fn one() -> Self {
        <Fr as One>::one()
    }

    fn from_u64(v: u64) -> Self {
        Fr::from(v)
    }

    fn inverse(&self) -> Option<Self> {
        Field::inverse(self)
    }

    fn sample<R: RngCore>(rng: &mut R) -> Self {
        Fr::rand(rng)
    }

    fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::ENCODED_LEN);
        self.serialize_compressed(&mut out)
            .expect("scalar serialization cannot fail");
        out
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Fr::deserialize_compressed(bytes)
            .map_err(|e| Error::Decode(format!("bls scalar: {e}")))
    }
}

macro_rules! impl_group_for_projective {
    ($proj:ty, $len:expr) => {
        impl GroupElem for $proj {
            type Scalar = Fr;
            const ENCODED_LEN: usize = $len;

            fn identity() -> Self {
                <$proj as Zero>::zero()
            }

            fn generator() -> Self {
                <$proj as PrimeGroup>::generator()
            }

            fn to_bytes(&self) -> Vec<u8> {
                let mut out = Vec::with_capacity(Self::ENCODED_LEN);
                self.into_affine()
                    .serialize_compressed(&mut out)
                    .expect("point serialization cannot fail");
                out
            }

            fn from_bytes(bytes: &[u8]) -> Result<Self> {
                let affine = <$proj as CurveGroup>::Affine::deserialize_compressed(bytes)
                    .map_err(|e| Error::Decode(format!("bls point: {e}")))?;
                Ok(affine.into())
            }

            fn msm(points: &[Self], scalars: &[Self::Scalar]) -> Result<Self> {
                if points.len() != scalars.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "msm: {} points vs {} scalars",
                        points.len(),
                        scalars.len()
                    )));
                }
                let affine = <$proj as CurveGroup>::normalize_batch(points);
                VariableBaseMSM::msm(&affine, scalars)
                    .map_err(|_| Error::DimensionMismatch("msm length mismatch".into()))
            }
        }
    };
}

impl_group_for_projective!(G1Projective, 48);
impl_group_for_projective!(G2Projective, 96);

impl GroupElem for Gt {
    type Scalar = Fr;
    // Full target-field element; Gt never travels on the protocol wire.
    const ENCODED_LEN: usize = 576;

    fn identity() -> Self {
        <Gt as Zero>::zero()
    }

    fn generator() -> Self {
        *GT_GENERATOR
    }

    fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::ENCODED_LEN);
        self.serialize_compressed(&mut out)
            .expect("target element serialization cannot fail");
        out
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Gt::deserialize_compressed(bytes)
            .map_err(|e| Error::Decode(format!("bls target element: {e}")))
    }
}

static GT_GENERATOR: LazyLock<Gt> = LazyLock::new(|| {
    Bls12_381::pairing(
        <G1Projective as PrimeGroup>::generator(),
        <G2Projective as PrimeGroup>::generator(),
    )
});

/// The production suite: BLS12-381 with its full pairing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bls381;

impl PairingSuite for Bls381 {
    type Scalar = Fr;
    type G1 = G1Projective;
    type G2 = G2Projective;
    type Gt = Gt;

    const NAME: &'static str = "bls12-381";
    const SECURITY_BITS: u32 = 128;

    fn pairing(a: &Self::G1, b: &Self::G2) -> Self::Gt {
        Bls12_381::pairing(a, b)
    }

    fn multi_pairing(a: &[Self::G1], b: &[Self::G2]) -> Result<Self::Gt> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch(format!(
                "multi_pairing: {} vs {} elements",
                a.len(),
                b.len()
            )));
        }
        Ok(Bls12_381::multi_pairing(a.iter(), b.iter()))
    }

    fn gt_generator() -> Self::Gt {
        *GT_GENERATOR
    }

    fn modulus_bits() -> u32 {
        Fr::MODULUS_BIT_SIZE
    }

    fn modulus_string() -> String {
        Fr::MODULUS.to_string()
    }
}
