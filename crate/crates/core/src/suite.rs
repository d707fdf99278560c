//! Algebraic substrate: a prime scalar field, two source groups, a target
//! group, and an asymmetric bilinear pairing between them.
//!
//! Two suites implement this interface: [`crate::bls::Bls381`] wraps a real
//! pairing-friendly curve, and [`crate::toy::Toy`] runs the same algebra over
//! a small prime without any curve so tests can brute-force every value.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use rand::RngCore;

use crate::error::{Error, Result};

/// An element of the prime scalar field Z_q.
pub trait FieldElem:
    Copy
    + Eq
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    /// Serialized size in bytes (little-endian canonical encoding).
    const ENCODED_LEN: usize;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_u64(v: u64) -> Self;
    /// Multiplicative inverse, `None` for zero.
    fn inverse(&self) -> Option<Self>;
    /// Uniform sample from [0, q).
    fn sample<R: RngCore>(rng: &mut R) -> Self;
    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }
    fn to_bytes(&self) -> Vec<u8>;
    fn from_bytes(bytes: &[u8]) -> Result<Self>;
}

/// An element of a cyclic group of prime order q, written additively.
///
/// Covers the two source groups and the target group alike; the target
/// group's "addition" is the multiplication of the underlying extension
/// field, which is irrelevant at this level of abstraction.
pub trait GroupElem:
    Copy
    + Eq
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + Mul<Self::Scalar, Output = Self>
{
    type Scalar: FieldElem;

    /// Serialized size in bytes (canonical compressed encoding).
    const ENCODED_LEN: usize;

    fn identity() -> Self;
    fn generator() -> Self;
    fn is_identity(&self) -> bool {
        *self == Self::identity()
    }
    /// Canonical encoding; equal elements encode identically.
    fn to_bytes(&self) -> Vec<u8>;
    fn from_bytes(bytes: &[u8]) -> Result<Self>;

    /// Multi-scalar multiplication: `sum_i scalars[i] * points[i]`.
    ///
    /// Backends override this with something faster than the schoolbook
    /// loop where the underlying library provides one.
    fn msm(points: &[Self], scalars: &[Self::Scalar]) -> Result<Self> {
        if points.len() != scalars.len() {
            return Err(Error::DimensionMismatch(format!(
                "msm: {} points vs {} scalars",
                points.len(),
                scalars.len()
            )));
        }
        let mut acc = Self::identity();
        for (p, s) in points.iter().zip(scalars) {
            acc += *p * *s;
        }
        Ok(acc)
    }
}

/// A full pairing configuration: scalar field, both source groups, target
/// group, and the pairing map.
pub trait PairingSuite: Clone + Debug + Send + Sync + 'static {
    type Scalar: FieldElem;
    type G1: GroupElem<Scalar = Self::Scalar>;
    type G2: GroupElem<Scalar = Self::Scalar>;
    type Gt: GroupElem<Scalar = Self::Scalar>;

    /// Identifier stored in serialized headers ("q-identifier").
    const NAME: &'static str;
    /// Security level this suite actually provides; 0 for the toy field.
    const SECURITY_BITS: u32;

    fn pairing(a: &Self::G1, b: &Self::G2) -> Self::Gt;

    /// Product of pairings `prod_i e(a[i], b[i])`; backends override with a
    /// shared-final-exponentiation version where available.
    fn multi_pairing(a: &[Self::G1], b: &[Self::G2]) -> Result<Self::Gt> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch(format!(
                "multi_pairing: {} vs {} elements",
                a.len(),
                b.len()
            )));
        }
        let mut acc = Self::Gt::identity();
        for (x, y) in a.iter().zip(b) {
            acc += Self::pairing(x, y);
        }
        Ok(acc)
    }

    /// e(g1, g2), the canonical target-group generator.
    fn gt_generator() -> Self::Gt {
        Self::pairing(&Self::G1::generator(), &Self::G2::generator())
    }

    /// Bit length of the scalar-field modulus q.
    fn modulus_bits() -> u32;
    /// Decimal rendering of q, used in parameter reports.
    fn modulus_string() -> String;
}

/// Public group parameters, as distributed to every protocol role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupParams {
    /// Suite identifier (doubles as the q-identifier in file headers).
    pub suite: String,
    /// Decimal rendering of the prime scalar-field order q.
    pub order_q: String,
    /// Canonical encoding of the G1 generator.
    pub gen_1: Vec<u8>,
    /// Canonical encoding of the G2 generator.
    pub gen_2: Vec<u8>,
    /// Serialized size of one source-group (G2) element, the unit the
    /// ciphertext wire format is made of.
    pub element_size_bytes: usize,
}

impl GroupParams {
    /// Derive the public parameters of a suite, verifying the generator and
    /// pairing non-degeneracy invariants.
    pub fn for_suite<S: PairingSuite>() -> Result<Self> {
        let g1 = S::G1::generator();
        let g2 = S::G2::generator();
        if g1.is_identity() || g2.is_identity() {
            return Err(Error::InvalidInput(format!(
                "suite {}: source-group generator is the identity",
                S::NAME
            )));
        }
        if S::pairing(&g1, &g2).is_identity() {
            return Err(Error::InvalidInput(format!(
                "suite {}: pairing of the generators is degenerate",
                S::NAME
            )));
        }
        Ok(GroupParams {
            suite: S::NAME.to_string(),
            order_q: S::modulus_string(),
            gen_1: g1.to_bytes(),
            gen_2: g2.to_bytes(),
            element_size_bytes: S::G2::ENCODED_LEN,
        })
    }
}

/// Encode a scalar vector into a group: `out[i] = x[i] * gen`.
pub fn encode_vector<G: GroupElem>(x: &[G::Scalar], gen: &G) -> Vec<G> {
    x.iter().map(|s| *gen * *s).collect()
}
