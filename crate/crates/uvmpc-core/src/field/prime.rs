//! Primality testing, prime generation, and modular square roots.

use super::{FieldError, FieldParams};
use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Miller-Rabin with a deterministic witness schedule (fixed-seed RNG).
/// `rounds` = 64 gives error probability at most 4^-64.
pub fn miller_rabin(n: &BigUint, rounds: u32) -> bool {
    let mut rng = ChaCha20Rng::seed_from_u64(0x6d72);
    miller_rabin_with(n, rounds, &mut rng)
}

pub(crate) fn miller_rabin_with<R: RngCore>(n: &BigUint, rounds: u32, rng: &mut R) -> bool {
    let two = BigUint::from(2u32);
    let three = BigUint::from(3u32);
    if n < &two {
        return false;
    }
    if n == &two || n == &three {
        return true;
    }
    if !n.bit(0) {
        return false;
    }
    // n - 1 = d * 2^s with d odd.
    let n_minus_1 = n - 1u32;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;

    // Witnesses uniform in [2, n-2].
    let span = n - 3u32;
    'witness: for _ in 0..rounds {
        let a = FieldParams::rand_below(&span, rng) + 2u32;
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 0..s.saturating_sub(1) {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Samples lambda-bit candidates with both leading bits and the low bit set
/// until one passes Miller-Rabin.
pub(crate) fn gen_prime<R: RngCore>(
    lambda: u32,
    budget: u32,
    rng: &mut R,
) -> Result<BigUint, FieldError> {
    let width = (lambda as usize + 7) / 8;
    for _ in 0..budget {
        let mut buf = vec![0u8; width];
        rng.fill_bytes(&mut buf);
        let mut cand = BigUint::from_bytes_be(&buf);
        cand >>= width as u64 * 8 - lambda as u64; // trim to lambda bits
        cand.set_bit(lambda as u64 - 1, true);
        cand.set_bit(lambda as u64 - 2, true);
        cand.set_bit(0, true);
        if miller_rabin_with(&cand, super::MR_ROUNDS, rng) {
            return Ok(cand);
        }
    }
    Err(FieldError::GenExhausted(budget))
}

/// Square root mod an odd prime, or `None` for non-residues. Uses the
/// `(p+1)/4` shortcut when `p = 3 mod 4`, Tonelli-Shanks otherwise.
/// Returns either root; the caller canonicalizes.
pub(crate) fn sqrt_mod(a: &BigUint, p: &BigUint) -> Option<BigUint> {
    if a.is_zero() {
        return Some(BigUint::zero());
    }
    let one = BigUint::one();
    let legendre_exp = (p - 1u32) >> 1;
    if a.modpow(&legendre_exp, p) != one {
        return None;
    }
    if p % 4u32 == BigUint::from(3u32) {
        let e = (p + 1u32) >> 2;
        return Some(a.modpow(&e, p));
    }

    // Tonelli-Shanks. p - 1 = q * 2^s, q odd.
    let p_minus_1 = p - 1u32;
    let s = p_minus_1.trailing_zeros().unwrap_or(0);
    let q = &p_minus_1 >> s;

    // Deterministic non-residue search; density 1/2 so this is short.
    let mut z = BigUint::from(2u32);
    while z.modpow(&legendre_exp, p) == one {
        z += 1u32;
    }

    let mut m = s;
    let mut c = z.modpow(&q, p);
    let mut t = a.modpow(&q, p);
    let mut r = a.modpow(&((&q + 1u32) >> 1), p);
    while !t.is_one() {
        // Least i with t^(2^i) = 1.
        let mut i = 0u64;
        let mut t2 = t.clone();
        while !t2.is_one() {
            t2 = (&t2 * &t2) % p;
            i += 1;
        }
        let b = c.modpow(&(BigUint::one() << (m - i - 1)), p);
        m = i;
        c = (&b * &b) % p;
        t = (&t * &c) % p;
        r = (&r * &b) % p;
    }
    Some(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn small_primes_and_composites() {
        for p in [2u64, 3, 5, 7, 11, 13, 61, 2147483647] {
            assert!(miller_rabin(&b(p), 64), "{p} should be prime");
        }
        for c in [0u64, 1, 4, 9, 15, 21, 25, 561, 1105, 2147483649] {
            assert!(!miller_rabin(&b(c), 64), "{c} should be composite");
        }
    }

    #[test]
    fn sqrt_mod_large_prime_roundtrip() {
        // 61-bit prime with both leading bits set: 2^61 - 1 is Mersenne.
        let p = (BigUint::one() << 61) - 1u32;
        assert!(miller_rabin(&p, 64));
        for x in [2u64, 3, 12345, 987654321] {
            let sq = (b(x) * b(x)) % &p;
            let r = sqrt_mod(&sq, &p).unwrap();
            assert_eq!((&r * &r) % &p, sq);
        }
    }
}
