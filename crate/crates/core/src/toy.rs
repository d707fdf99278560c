//! Curve-free suite over a small prime field.
//!
//! "Points" of all three groups are residues mod Q; scalar multiplication is
//! field multiplication and the pairing is `e(x, y) = x * y mod Q`, which is
//! bilinear and non-degenerate. This gives no security whatsoever; it exists
//! so every exponent in the scheme can be brute-forced and cross-checked by
//! tests, and so CI can run the full pipeline in milliseconds.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use rand::RngCore;

use crate::error::{Error, Result};
use crate::suite::{FieldElem, GroupElem, PairingSuite};

/// Scalar in Z_Q. Q must be prime and at least 7.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ToyScalar<const Q: u64>(u64);

impl<const Q: u64> ToyScalar<Q> {
    pub fn new(v: u64) -> Self {
        ToyScalar(v % Q)
    }

    pub fn value(&self) -> u64 {
        self.0
    }

    fn mul_mod(a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % Q as u128) as u64
    }

    fn pow_mod(mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1u64;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = Self::mul_mod(acc, base);
            }
            base = Self::mul_mod(base, base);
            exp >>= 1;
        }
        acc
    }
}

impl<const Q: u64> fmt::Debug for ToyScalar<Q> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.0, Q)
    }
}

impl<const Q: u64> Add for ToyScalar<Q> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        ToyScalar((self.0 + rhs.0) % Q)
    }
}

impl<const Q: u64> Sub for ToyScalar<Q> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        ToyScalar((self.0 + Q - rhs.0) % Q)
    }
}

impl<const Q: u64> Mul for ToyScalar<Q> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        ToyScalar(Self::mul_mod(self.0, rhs.0))
    }
}

impl<const Q: u64> Neg for ToyScalar<Q> {
    type Output = Self;
    fn neg(self) -> Self {
        ToyScalar((Q - self.0) % Q)
    }
}

impl<const Q: u64> AddAssign for ToyScalar<Q> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<const Q: u64> SubAssign for ToyScalar<Q> {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl<const Q: u64> MulAssign for ToyScalar<Q> {
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl<const Q: u64> FieldElem for ToyScalar<Q> {
    const ENCODED_LEN: usize = 8;

    fn zero() -> Self {
        ToyScalar(0)
    }

    fn one() -> Self {
        ToyScalar(1)
    }

    fn from_u64(v: u64) -> Self {
        ToyScalar(v % Q)
    }

    fn inverse(&self) -> Option<Self> {
        if self.0 == 0 {
            None
        } else {
            // Fermat: v^(Q-2) mod Q for prime Q.
            Some(ToyScalar(Self::pow_mod(self.0, Q - 2)))
        }
    }

    fn sample<R: RngCore>(rng: &mut R) -> Self {
        // Rejection sampling to avoid modulo bias.
        let zone = u64::MAX - (u64::MAX % Q);
        loop {
            let v = rng.next_u64();
            if v < zone {
                return ToyScalar(v % Q);
            }
        }
    }

    fn to_bytes(&self) -> Vec<u8> {
        self.0.to_le_bytes().to_vec()
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let arr: [u8; 8] = bytes
            .try_into()
            .map_err(|_| Error::Decode(format!("toy scalar wants 8 bytes, got {}", bytes.len())))?;
        let v = u64::from_le_bytes(arr);
        if v >= Q {
            return Err(Error::Decode(format!("toy scalar {v} not reduced mod {Q}")));
        }
        Ok(ToyScalar(v))
    }
}

/// Group element: a residue mod Q, in one of three disjoint groups
/// distinguished by `TAG` (1 = G1, 2 = G2, 3 = Gt) so the type system keeps
/// mismatched elements apart exactly as it does for a real curve.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ToyPoint<const Q: u64, const TAG: u8>(u64);

impl<const Q: u64, const TAG: u8> ToyPoint<Q, TAG> {
    pub fn value(&self) -> u64 {
        self.0
    }
}

impl<const Q: u64, const TAG: u8> fmt::Debug for ToyPoint<Q, TAG> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "G{TAG}:{} (mod {})", self.0, Q)
    }
}

impl<const Q: u64, const TAG: u8> Add for ToyPoint<Q, TAG> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        ToyPoint((self.0 + rhs.0) % Q)
    }
}

impl<const Q: u64, const TAG: u8> Sub for ToyPoint<Q, TAG> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        ToyPoint((self.0 + Q - rhs.0) % Q)
    }
}

impl<const Q: u64, const TAG: u8> Neg for ToyPoint<Q, TAG> {
    type Output = Self;
    fn neg(self) -> Self {
        ToyPoint((Q - self.0) % Q)
    }
}

impl<const Q: u64, const TAG: u8> AddAssign for ToyPoint<Q, TAG> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<const Q: u64, const TAG: u8> SubAssign for ToyPoint<Q, TAG> {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl<const Q: u64, const TAG: u8> Mul<ToyScalar<Q>> for ToyPoint<Q, TAG> {
    type Output = Self;
    fn mul(self, rhs: ToyScalar<Q>) -> Self {
        ToyPoint(ToyScalar::<Q>::mul_mod(self.0, rhs.value()))
    }
}

impl<const Q: u64, const TAG: u8> GroupElem for ToyPoint<Q, TAG> {
    type Scalar = ToyScalar<Q>;
    const ENCODED_LEN: usize = 8;

    fn identity() -> Self {
        ToyPoint(0)
    }

    fn generator() -> Self {
        // Fixed non-identity generators; 15 = 3 * 5 makes e(g1, g2) the Gt
        // generator by construction.
        let g = match TAG {
            1 => 3,
            2 => 5,
            _ => 15,
        };
        ToyPoint(g % Q)
    }

    fn to_bytes(&self) -> Vec<u8> {
        self.0.to_le_bytes().to_vec()
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let arr: [u8; 8] = bytes
            .try_into()
            .map_err(|_| Error::Decode(format!("toy point wants 8 bytes, got {}", bytes.len())))?;
        let v = u64::from_le_bytes(arr);
        if v >= Q {
            return Err(Error::Decode(format!("toy point {v} not reduced mod {Q}")));
        }
        Ok(ToyPoint(v))
    }
}

/// The toy suite over Z_Q.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Toy<const Q: u64>;

impl<const Q: u64> PairingSuite for Toy<Q> {
    type Scalar = ToyScalar<Q>;
    type G1 = ToyPoint<Q, 1>;
    type G2 = ToyPoint<Q, 2>;
    type Gt = ToyPoint<Q, 3>;

    const NAME: &'static str = "toy";
    const SECURITY_BITS: u32 = 0;

    fn pairing(a: &Self::G1, b: &Self::G2) -> Self::Gt {
        ToyPoint(ToyScalar::<Q>::mul_mod(a.value(), b.value()))
    }

    fn modulus_bits() -> u32 {
        64 - Q.leading_zeros()
    }

    fn modulus_string() -> String {
        Q.to_string()
    }
}

/// Tiny prime for exhaustive brute-force tests.
pub type Toy101 = Toy<101>;

/// Mersenne prime 2^61 - 1: big enough for the default quantizer ranges,
/// still single-word arithmetic. This is what `--toy-field` runs select.
pub const TOY_FIELD_PRIME: u64 = 2_305_843_009_213_693_951;
pub type Toy61 = Toy<TOY_FIELD_PRIME>;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn field_axioms_mod_101() {
        for a in 0..101u64 {
            let x = ToyScalar::<101>::new(a);
            assert_eq!(x + -x, ToyScalar::zero());
            if a != 0 {
                let inv = x.inverse().unwrap();
                assert_eq!(x * inv, ToyScalar::one());
            } else {
                assert!(x.inverse().is_none());
            }
        }
    }

    #[test]
    fn pairing_is_bilinear_and_nondegenerate() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let g1 = <Toy101 as PairingSuite>::G1::generator();
        let g2 = <Toy101 as PairingSuite>::G2::generator();
        let gt = Toy101::gt_generator();
        assert!(!gt.is_identity());
        for _ in 0..100 {
            let a = ToyScalar::<101>::sample(&mut rng);
            let b = ToyScalar::<101>::sample(&mut rng);
            assert_eq!(Toy101::pairing(&(g1 * a), &(g2 * b)), gt * (a * b));
        }
    }

    #[test]
    fn sampling_is_uniform_enough_to_hit_every_residue() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let mut seen = [false; 101];
        for _ in 0..5_000 {
            seen[ToyScalar::<101>::sample(&mut rng).value() as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn encoding_round_trips_and_rejects_unreduced() {
        let x = ToyScalar::<101>::new(77);
        assert_eq!(ToyScalar::<101>::from_bytes(&x.to_bytes()).unwrap(), x);
        assert!(ToyScalar::<101>::from_bytes(&200u64.to_le_bytes()).is_err());
        assert!(ToyScalar::<101>::from_bytes(&[1, 2, 3]).is_err());
    }
}
