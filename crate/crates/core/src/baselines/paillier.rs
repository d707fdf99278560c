//! Textbook Paillier, here purely as the computation/communication baseline
//! the comparison reports measure against. Additively homomorphic:
//! `dec(enc(a) * enc(b) mod n^2) = a + b`.

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::RngCore;

use crate::error::{Error, Result};

/// Miller-Rabin rounds; error probability below 4^-40.
const MR_ROUNDS: u32 = 40;

const SMALL_PRIMES: [u64; 20] = [
    3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73,
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaillierPublicKey {
    pub n: BigUint,
    pub n_squared: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaillierSecretKey {
    /// lcm(p - 1, q - 1).
    lambda: BigUint,
    /// lambda^-1 mod n (valid for the generator g = n + 1).
    mu: BigUint,
    pub public: PaillierPublicKey,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaillierCiphertext(pub BigUint);

impl PaillierPublicKey {
    /// Serialized ciphertext size: one value mod n^2.
    pub fn ciphertext_bytes(&self) -> u64 {
        self.n_squared.bits().div_ceil(8)
    }

    pub fn encrypt<R: RngCore>(&self, m: &BigUint, rng: &mut R) -> Result<PaillierCiphertext> {
        if m >= &self.n {
            return Err(Error::InvalidInput(format!(
                "plaintext has {} bits, modulus only {}",
                m.bits(),
                self.n.bits()
            )));
        }
        let r = loop {
            let candidate = rng.gen_biguint_below(&self.n);
            if !candidate.is_zero() && candidate.gcd(&self.n).is_one() {
                break candidate;
            }
        };
        // g = n + 1, so g^m = 1 + m n (mod n^2) without an exponentiation.
        let g_m = (BigUint::one() + m * &self.n) % &self.n_squared;
        let c = (g_m * r.modpow(&self.n, &self.n_squared)) % &self.n_squared;
        Ok(PaillierCiphertext(c))
    }

    /// Homomorphic addition: ciphertext multiplication mod n^2.
    pub fn add(
        &self,
        a: &PaillierCiphertext,
        b: &PaillierCiphertext,
    ) -> PaillierCiphertext {
        PaillierCiphertext((&a.0 * &b.0) % &self.n_squared)
    }
}

impl PaillierSecretKey {
    pub fn decrypt(&self, c: &PaillierCiphertext) -> BigUint {
        let n = &self.public.n;
        let u = c.0.modpow(&self.lambda, &self.public.n_squared);
        let l = (u - BigUint::one()) / n;
        (l * &self.mu) % n
    }
}

/// Generate a keypair with an (approximately) `modulus_bits`-bit modulus
/// from two `modulus_bits / 2`-bit probable primes.
pub fn generate_keypair<R: RngCore>(
    modulus_bits: u64,
    rng: &mut R,
) -> Result<(PaillierPublicKey, PaillierSecretKey)> {
    if modulus_bits < 64 || modulus_bits % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "modulus bits must be even and >= 64, got {modulus_bits}"
        )));
    }
    let half = modulus_bits / 2;
    let p = generate_prime(half, rng);
    let q = loop {
        let q = generate_prime(half, rng);
        if q != p {
            break q;
        }
    };
    let n = &p * &q;
    let n_squared = &n * &n;
    let lambda = (&p - BigUint::one()).lcm(&(&q - BigUint::one()));
    let mu = mod_inverse(&lambda, &n).ok_or_else(|| {
        Error::InvalidInput("degenerate prime pair: lambda not invertible mod n".into())
    })?;
    let public = PaillierPublicKey { n, n_squared };
    Ok((
        public.clone(),
        PaillierSecretKey { lambda, mu, public },
    ))
}

/// Random probable prime with the top two bits set (so products of two
/// half-size primes reach the full modulus size).
fn generate_prime<R: RngCore>(bits: u64, rng: &mut R) -> BigUint {
    loop {
        let mut candidate = rng.gen_biguint(bits);
        candidate.set_bit(bits - 1, true);
        candidate.set_bit(bits - 2, true);
        candidate.set_bit(0, true);
        if SMALL_PRIMES
            .iter()
            .any(|&sp| (&candidate % sp).is_zero() && candidate != BigUint::from(sp))
        {
            continue;
        }
        if is_probable_prime(&candidate, MR_ROUNDS, rng) {
            return candidate;
        }
    }
}

/// Miller-Rabin with random bases.
pub fn is_probable_prime<R: RngCore>(n: &BigUint, rounds: u32, rng: &mut R) -> bool {
    let one = BigUint::one();
    let two = BigUint::from(2u8);
    if n < &two {
        return false;
    }
    if n.is_even() {
        return *n == two;
    }
    if *n == BigUint::from(3u8) {
        return true;
    }
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    'witness: for _ in 0..rounds {
        let a = rng.gen_biguint_range(&two, &n_minus_1);
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn mod_inverse(a: &BigUint, m: &BigUint) -> Option<BigUint> {
    use num_bigint::BigInt;
    let a = BigInt::from(a.clone());
    let m_signed = BigInt::from(m.clone());
    let e = a.extended_gcd(&m_signed);
    if !e.gcd.is_one() {
        return None;
    }
    let x = ((e.x % &m_signed) + &m_signed) % &m_signed;
    x.try_into().ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn keypair() -> (PaillierPublicKey, PaillierSecretKey) {
        // Small modulus keeps unit tests fast; sizes are exercised in the
        // cost-model tests.
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        generate_keypair(512, &mut rng).unwrap()
    }

    #[test]
    fn zero_round_trips() {
        let (pk, sk) = keypair();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let c = pk.encrypt(&BigUint::zero(), &mut rng).unwrap();
        assert_eq!(sk.decrypt(&c), BigUint::zero());
    }

    #[test]
    fn homomorphic_addition_small() {
        let (pk, sk) = keypair();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let c5 = pk.encrypt(&BigUint::from(5u8), &mut rng).unwrap();
        let c7 = pk.encrypt(&BigUint::from(7u8), &mut rng).unwrap();
        assert_eq!(sk.decrypt(&pk.add(&c5, &c7)), BigUint::from(12u8));
    }

    #[test]
    fn homomorphic_addition_random_pairs() {
        let (pk, sk) = keypair();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..100 {
            let a: u64 = rng.gen();
            let b: u64 = rng.gen();
            let ca = pk.encrypt(&BigUint::from(a), &mut rng).unwrap();
            let cb = pk.encrypt(&BigUint::from(b), &mut rng).unwrap();
            let sum = sk.decrypt(&pk.add(&ca, &cb));
            assert_eq!(sum, BigUint::from(a as u128 + b as u128));
        }
    }

    #[test]
    fn rejects_oversized_plaintext() {
        let (pk, _) = keypair();
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        assert!(pk.encrypt(&pk.n, &mut rng).is_err());
    }

    #[test]
    fn ciphertext_size_matches_published_figure_at_2048() {
        // Don't generate a real 2048-bit key here; the size only depends on
        // the modulus width.
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let mut n = rng.gen_biguint(2048);
        n.set_bit(2047, true);
        n.set_bit(2046, true);
        let pk = PaillierPublicKey {
            n_squared: &n * &n,
            n,
        };
        assert_eq!(pk.ciphertext_bytes(), 512);
    }

    #[test]
    fn miller_rabin_agrees_with_trial_division_below_2000() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let naive = |n: u64| -> bool {
            if n < 2 {
                return false;
            }
            (2..=n.isqrt()).all(|d| n % d != 0)
        };
        for n in 2u64..2000 {
            assert_eq!(
                is_probable_prime(&BigUint::from(n), 20, &mut rng),
                naive(n),
                "disagree at {n}"
            );
        }
    }
}
