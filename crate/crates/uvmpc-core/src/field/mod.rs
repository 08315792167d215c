//! Prime-field arithmetic over arbitrary-precision integers.
//!
//! A [`FieldParams`] pins the modulus `p`, the security parameter `lambda`
//! (bit length of `p`), and the fixed encoding width. Elements are plain
//! [`BigUint`] values kept reduced mod `p`; all operations go through the
//! params so there is never ambiguity about which field a value lives in.
//!
//! Generated primes always occupy the top quarter of the `lambda`-bit range
//! (both leading bits set), which the threshold circuit in
//! [`crate::bitconv`] relies on for its sign test. Fields built from a
//! caller-supplied prime skip that shape requirement; operations that need
//! it check [`FieldParams::has_msb_shape`] up front.

mod meter;
mod prime;

pub use meter::{OpCounts, OpMeter};
pub use prime::miller_rabin;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::RngCore;
use rand_chacha::ChaCha20Rng;
use rand_chacha::rand_core::SeedableRng;

/// Miller-Rabin rounds used everywhere a primality decision is made.
/// Error probability is at most 4^-64.
pub const MR_ROUNDS: u32 = 64;

/// Attempt budget for prime generation, per call. By the prime number
/// theorem a random lambda-bit odd number is prime with probability about
/// 2/(lambda ln 2), so this bound is never reached in practice.
const GEN_ATTEMPTS: u32 = 100_000;

#[derive(Debug, thiserror::Error)]
pub enum FieldError {
    #[error("field size must be at least 3 bits, got {0}")]
    LambdaTooSmall(u32),
    #[error("modulus {0} is not prime")]
    NotPrime(String),
    #[error("prime generation gave up after {0} attempts")]
    GenExhausted(u32),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("encoded element is {got} bytes, field encoding is {want}")]
    DecodeLength { got: usize, want: usize },
    #[error("encoded value is >= the field modulus")]
    DecodeRange,
}

/// An element of the prime field, always reduced mod `p`.
///
/// Ordering and equality compare the integer representative; this is what
/// the canonical-square-root convention and the encoding rely on.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FieldElem(BigUint);

impl FieldElem {
    pub fn from_u64(v: u64) -> Self {
        FieldElem(BigUint::from(v))
    }

    pub fn as_uint(&self) -> &BigUint {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    /// Bit `i` of the integer representative (LSB is bit 0).
    pub fn bit(&self, i: u64) -> bool {
        self.0.bit(i)
    }

    pub fn to_u64(&self) -> Option<u64> {
        u64::try_from(&self.0).ok()
    }
}

impl std::fmt::Debug for FieldElem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::fmt::Display for FieldElem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for FieldElem {
    fn from(v: u64) -> Self {
        FieldElem::from_u64(v)
    }
}

/// Field description shared by every participant of a session.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FieldParams {
    p: BigUint,
    lambda: u32,
    enc_width: usize,
}

impl FieldParams {
    /// Generates a fresh prime field. The prime is sampled uniformly from the
    /// lambda-bit integers with both leading bits set (so `3*2^(lambda-2) <=
    /// p < 2^lambda`) and tested with 64 Miller-Rabin rounds. A seed makes
    /// the outcome reproducible; `None` draws from OS entropy.
    pub fn generate(lambda: u32, seed: Option<u64>) -> Result<Self, FieldError> {
        let mut rng = match seed {
            Some(s) => ChaCha20Rng::seed_from_u64(s),
            None => ChaCha20Rng::from_entropy(),
        };
        Self::generate_with(lambda, &mut rng)
    }

    /// Same as [`generate`](Self::generate) with a caller-owned RNG.
    pub fn generate_with<R: RngCore>(lambda: u32, rng: &mut R) -> Result<Self, FieldError> {
        if lambda < 3 {
            return Err(FieldError::LambdaTooSmall(lambda));
        }
        let p = prime::gen_prime(lambda, GEN_ATTEMPTS, rng)?;
        Ok(Self::from_parts(p, lambda))
    }

    /// Wraps a caller-supplied prime. Primality is checked (deterministic
    /// witness schedule); the top-two-bits shape is not required here, so
    /// small test primes like 11 are accepted.
    pub fn from_prime(p: BigUint) -> Result<Self, FieldError> {
        let lambda = p.bits() as u32;
        if lambda < 3 {
            return Err(FieldError::LambdaTooSmall(lambda));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(0x7031);
        if !prime::miller_rabin_with(&p, MR_ROUNDS, &mut rng) {
            return Err(FieldError::NotPrime(p.to_string()));
        }
        Ok(Self::from_parts(p, lambda))
    }

    fn from_parts(p: BigUint, lambda: u32) -> Self {
        let enc_width = (lambda as usize + 7) / 8;
        FieldParams { p, lambda, enc_width }
    }

    pub fn prime(&self) -> &BigUint {
        &self.p
    }

    pub fn lambda(&self) -> u32 {
        self.lambda
    }

    /// Fixed byte width of one encoded element: ceil(lambda / 8).
    pub fn enc_width(&self) -> usize {
        self.enc_width
    }

    /// Whether `p >= 3*2^(lambda-2)`, i.e. both leading bits are set.
    /// Fields from [`generate`](Self::generate) always satisfy this;
    /// the threshold circuit refuses to run without it.
    pub fn has_msb_shape(&self) -> bool {
        self.p.bit(self.lambda as u64 - 1) && self.p.bit(self.lambda as u64 - 2)
    }

    pub fn zero(&self) -> FieldElem {
        FieldElem(BigUint::zero())
    }

    pub fn one(&self) -> FieldElem {
        FieldElem(BigUint::one())
    }

    /// Reduces an arbitrary integer into the field.
    pub fn elem<T: Into<BigUint>>(&self, v: T) -> FieldElem {
        FieldElem(v.into() % &self.p)
    }

    pub fn contains(&self, x: &FieldElem) -> bool {
        x.0 < self.p
    }

    pub fn add(&self, a: &FieldElem, b: &FieldElem) -> FieldElem {
        let mut s = &a.0 + &b.0;
        if s >= self.p {
            s -= &self.p;
        }
        FieldElem(s)
    }

    pub fn sub(&self, a: &FieldElem, b: &FieldElem) -> FieldElem {
        if a.0 >= b.0 {
            FieldElem(&a.0 - &b.0)
        } else {
            FieldElem(&self.p - &b.0 + &a.0)
        }
    }

    pub fn neg(&self, a: &FieldElem) -> FieldElem {
        if a.0.is_zero() {
            self.zero()
        } else {
            FieldElem(&self.p - &a.0)
        }
    }

    pub fn mul(&self, a: &FieldElem, b: &FieldElem) -> FieldElem {
        FieldElem(&a.0 * &b.0 % &self.p)
    }

    /// Multiplication, tallied on `meter`.
    pub fn mul_m(&self, a: &FieldElem, b: &FieldElem, meter: &OpMeter) -> FieldElem {
        meter.tick_mul();
        self.mul(a, b)
    }

    /// Square-and-multiply exponentiation, left to right.
    pub fn pow(&self, base: &FieldElem, exp: &BigUint) -> FieldElem {
        self.pow_inner(base, exp, None)
    }

    pub fn pow_u64(&self, base: &FieldElem, exp: u64) -> FieldElem {
        self.pow(base, &BigUint::from(exp))
    }

    /// Exponentiation tallied on `meter`: one exp tick, plus a mult tick for
    /// every squaring and multiplication the ladder performs.
    pub fn pow_m(&self, base: &FieldElem, exp: &BigUint, meter: &OpMeter) -> FieldElem {
        meter.tick_exp();
        self.pow_inner(base, exp, Some(meter))
    }

    fn pow_inner(&self, base: &FieldElem, exp: &BigUint, meter: Option<&OpMeter>) -> FieldElem {
        if exp.is_zero() {
            return self.one();
        }
        let mut acc = FieldElem(&base.0 % &self.p);
        for i in (0..exp.bits() - 1).rev() {
            acc = self.mul(&acc, &acc);
            if let Some(m) = meter {
                m.tick_mul();
            }
            if exp.bit(i) {
                acc = self.mul(&acc, base);
                if let Some(m) = meter {
                    m.tick_mul();
                }
            }
        }
        acc
    }

    /// Multiplicative inverse via Fermat: `x^(p-2)`. Zero is rejected.
    pub fn inv(&self, x: &FieldElem) -> Result<FieldElem, FieldError> {
        if x.is_zero() {
            return Err(FieldError::ZeroInverse);
        }
        let e = &self.p - 2u32;
        Ok(self.pow(x, &e))
    }

    /// Metered inverse: counts as one exponentiation plus its ladder mults.
    pub fn inv_m(&self, x: &FieldElem, meter: &OpMeter) -> Result<FieldElem, FieldError> {
        if x.is_zero() {
            return Err(FieldError::ZeroInverse);
        }
        let e = &self.p - 2u32;
        Ok(self.pow_m(x, &e, meter))
    }

    /// Uniform element of `[0, p)`. Rejection-samples lambda-bit strings, so
    /// the acceptance probability is `p / 2^lambda > 1/2`.
    pub fn rand_elem<R: RngCore>(&self, rng: &mut R) -> FieldElem {
        loop {
            let mut buf = vec![0u8; self.enc_width];
            rng.fill_bytes(&mut buf);
            let excess = (self.enc_width * 8) as u32 - self.lambda;
            if excess > 0 {
                buf[0] &= 0xFF >> excess;
            }
            let v = BigUint::from_bytes_be(&buf);
            if v < self.p {
                return FieldElem(v);
            }
        }
    }

    /// Uniform element of `[1, p)`. Blinding randomness comes from here:
    /// the verification predicates need every blinded sum invertible.
    pub fn rand_nonzero<R: RngCore>(&self, rng: &mut R) -> FieldElem {
        loop {
            let v = self.rand_elem(rng);
            if !v.is_zero() {
                return v;
            }
        }
    }

    /// Uniform integer in `[0, bound)`.
    pub(crate) fn rand_below<R: RngCore>(bound: &BigUint, rng: &mut R) -> BigUint {
        let bits = bound.bits();
        let width = ((bits + 7) / 8) as usize;
        loop {
            let mut buf = vec![0u8; width];
            rng.fill_bytes(&mut buf);
            let excess = (width as u64 * 8 - bits) as u32;
            if excess > 0 {
                buf[0] &= 0xFF >> excess;
            }
            let v = BigUint::from_bytes_be(&buf);
            if &v < bound {
                return v;
            }
        }
    }

    /// Canonical square root: the root in `[1, (p-1)/2]` if `x` is a nonzero
    /// quadratic residue, `0` for `x = 0`, `None` for non-residues.
    pub fn sqrt(&self, x: &FieldElem) -> Option<FieldElem> {
        let r = prime::sqrt_mod(&x.0, &self.p)?;
        let half = (&self.p - 1u32) >> 1;
        if r > half {
            Some(FieldElem(&self.p - r))
        } else {
            Some(FieldElem(r))
        }
    }

    /// Fixed-width big-endian encoding, exactly [`enc_width`](Self::enc_width)
    /// bytes.
    pub fn encode(&self, x: &FieldElem) -> Vec<u8> {
        let raw = x.0.to_bytes_be();
        let mut out = vec![0u8; self.enc_width];
        out[self.enc_width - raw.len()..].copy_from_slice(&raw);
        out
    }

    /// Inverse of [`encode`](Self::encode). Rejects wrong lengths and
    /// non-canonical values (`>= p`), so decode(encode(x)) = x and nothing
    /// else parses.
    pub fn decode(&self, bytes: &[u8]) -> Result<FieldElem, FieldError> {
        if bytes.len() != self.enc_width {
            return Err(FieldError::DecodeLength { got: bytes.len(), want: self.enc_width });
        }
        let v = BigUint::from_bytes_be(bytes);
        if v >= self.p {
            return Err(FieldError::DecodeRange);
        }
        Ok(FieldElem(v))
    }

    /// Concatenation of fixed-width encodings; the protocol payload format
    /// for element vectors whose length the receiver already knows.
    pub fn encode_slice(&self, xs: &[FieldElem]) -> Vec<u8> {
        let mut out = Vec::with_capacity(xs.len() * self.enc_width);
        for x in xs {
            out.extend_from_slice(&self.encode(x));
        }
        out
    }

    /// Decodes exactly `count` elements; any other payload size is an error.
    pub fn decode_slice(&self, bytes: &[u8], count: usize) -> Result<Vec<FieldElem>, FieldError> {
        if bytes.len() != count * self.enc_width {
            return Err(FieldError::DecodeLength {
                got: bytes.len(),
                want: count * self.enc_width,
            });
        }
        bytes.chunks_exact(self.enc_width).map(|c| self.decode(c)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::ScriptedRng;
    use num_bigint::BigUint;

    fn f(p: u64) -> FieldParams {
        FieldParams::from_prime(BigUint::from(p)).unwrap()
    }

    #[test]
    fn generate_4_bits_is_13() {
        // Only 13 survives in [12, 16): 15 = 3 * 5.
        for seed in 0..20 {
            let fp = FieldParams::generate(4, Some(seed)).unwrap();
            assert_eq!(fp.prime(), &BigUint::from(13u32));
            assert_eq!(fp.enc_width(), 1);
            assert!(fp.has_msb_shape());
        }
    }

    #[test]
    fn generate_3_bits_is_7() {
        for seed in 0..20 {
            let fp = FieldParams::generate(3, Some(seed)).unwrap();
            assert_eq!(fp.prime(), &BigUint::from(7u32));
        }
    }

    #[test]
    fn generate_large_has_shape_and_passes_mr() {
        let fp = FieldParams::generate(256, Some(7)).unwrap();
        assert_eq!(fp.prime().bits(), 256);
        assert!(fp.has_msb_shape());
        assert!(miller_rabin(fp.prime(), MR_ROUNDS));
        // Reproducible for a fixed seed.
        let again = FieldParams::generate(256, Some(7)).unwrap();
        assert_eq!(fp, again);
    }

    #[test]
    fn generate_rejects_tiny_lambda() {
        assert!(matches!(
            FieldParams::generate(2, Some(1)),
            Err(FieldError::LambdaTooSmall(2))
        ));
    }

    #[test]
    fn from_prime_rejects_composite() {
        assert!(matches!(
            FieldParams::from_prime(BigUint::from(15u32)),
            Err(FieldError::NotPrime(_))
        ));
    }

    #[test]
    fn eleven_lacks_msb_shape_but_thirteen_has_it() {
        assert!(!f(11).has_msb_shape());
        assert!(f(13).has_msb_shape());
    }

    #[test]
    fn pow_worked_values() {
        let fp = f(11);
        assert_eq!(fp.pow_u64(&fp.elem(3u32), 5), fp.elem(1u32));
        assert_eq!(fp.pow_u64(&fp.elem(7u32), 0), fp.one());
        assert_eq!(fp.pow_u64(&fp.elem(7u32), 1), fp.elem(7u32));
        assert_eq!(fp.pow_u64(&fp.zero(), 3), fp.zero());
    }

    #[test]
    fn fermat_exhaustive_small_primes() {
        for p in [7u64, 11, 13] {
            let fp = f(p);
            for x in 1..p {
                let e = fp.elem(x);
                assert_eq!(fp.pow_u64(&e, p - 1), fp.one(), "x={x} p={p}");
            }
        }
    }

    #[test]
    fn inverse_worked_values() {
        let fp = f(11);
        assert_eq!(fp.inv(&fp.elem(4u32)).unwrap(), fp.elem(3u32));
        assert_eq!(fp.inv(&fp.one()).unwrap(), fp.one());
        assert!(matches!(fp.inv(&fp.zero()), Err(FieldError::ZeroInverse)));
    }

    #[test]
    fn inverse_times_self_is_one_exhaustive() {
        let fp = f(13);
        for x in 1..13u64 {
            let e = fp.elem(x);
            let i = fp.inv(&e).unwrap();
            assert_eq!(fp.mul(&e, &i), fp.one());
        }
    }

    #[test]
    fn add_sub_neg_wrap() {
        let fp = f(11);
        assert_eq!(fp.add(&fp.elem(7u32), &fp.elem(8u32)), fp.elem(4u32));
        assert_eq!(fp.sub(&fp.elem(3u32), &fp.elem(8u32)), fp.elem(6u32));
        assert_eq!(fp.neg(&fp.elem(4u32)), fp.elem(7u32));
        assert_eq!(fp.neg(&fp.zero()), fp.zero());
    }

    #[test]
    fn encode_example_and_rejections() {
        let fp = FieldParams::generate(16, Some(3)).unwrap();
        assert_eq!(fp.enc_width(), 2);
        assert_eq!(fp.encode(&fp.elem(5u32)), vec![0x00, 0x05]);

        let f13 = f(13);
        assert_eq!(f13.enc_width(), 1);
        assert!(matches!(f13.decode(&[0x0D]), Err(FieldError::DecodeRange)));
        assert!(matches!(
            f13.decode(&[0x00, 0x05]),
            Err(FieldError::DecodeLength { got: 2, want: 1 })
        ));
        assert_eq!(f13.decode(&[0x0C]).unwrap(), f13.elem(12u32));
    }

    #[test]
    fn rand_elem_uniform_at_small_p() {
        // 10^4 draws at p = 11; every residue within 5 sigma of uniform.
        let fp = f(11);
        let mut rng = ChaCha20Rng::seed_from_u64(42);
        let n = 10_000usize;
        let mut hist = [0u32; 11];
        for _ in 0..n {
            let v = fp.rand_elem(&mut rng).to_u64().unwrap();
            hist[v as usize] += 1;
        }
        let q = 1.0 / 11.0;
        let mean = n as f64 * q;
        let sigma = (n as f64 * q * (1.0 - q)).sqrt();
        for (v, &c) in hist.iter().enumerate() {
            assert!(
                (c as f64 - mean).abs() < 5.0 * sigma,
                "residue {v} count {c} outside 5 sigma of {mean:.1}"
            );
        }
    }

    #[test]
    fn rand_nonzero_never_zero_and_uniform() {
        let fp = f(11);
        let mut rng = ChaCha20Rng::seed_from_u64(43);
        let n = 10_000usize;
        let mut hist = [0u32; 11];
        for _ in 0..n {
            let v = fp.rand_nonzero(&mut rng).to_u64().unwrap();
            hist[v as usize] += 1;
        }
        assert_eq!(hist[0], 0);
        let q = 1.0 / 10.0;
        let mean = n as f64 * q;
        let sigma = (n as f64 * q * (1.0 - q)).sqrt();
        for &c in &hist[1..] {
            assert!((c as f64 - mean).abs() < 5.0 * sigma);
        }
    }

    #[test]
    fn scripted_rng_drives_rand_elem_directly() {
        // At 4-bit width each accepted draw consumes exactly one byte.
        let fp = f(11);
        let mut rng = ScriptedRng::new(&[0x04, 0x07, 0x05, 0x03]);
        let vals: Vec<u64> = (0..4).map(|_| fp.rand_elem(&mut rng).to_u64().unwrap()).collect();
        assert_eq!(vals, vec![4, 7, 5, 3]);
    }

    #[test]
    fn sqrt_canonical_root() {
        let fp = f(11);
        // 9 has roots {3, 8}; canonical is 3 (the one <= (p-1)/2).
        assert_eq!(fp.sqrt(&fp.elem(9u32)).unwrap(), fp.elem(3u32));
        assert_eq!(fp.sqrt(&fp.zero()).unwrap(), fp.zero());
        // 2 is a non-residue mod 11.
        assert!(fp.sqrt(&fp.elem(2u32)).is_none());
    }

    #[test]
    fn sqrt_exhaustive_both_prime_classes() {
        // 13 = 1 mod 4 exercises Tonelli-Shanks, 11 = 3 mod 4 the fast path.
        for p in [11u64, 13] {
            let fp = f(p);
            let half = (p - 1) / 2;
            for x in 0..p {
                let sq = fp.mul(&fp.elem(x), &fp.elem(x));
                let r = fp.sqrt(&sq).unwrap();
                assert_eq!(fp.mul(&r, &r), sq);
                let rv = r.to_u64().unwrap();
                assert!(rv <= half, "root {rv} not canonical for {x}^2 mod {p}");
            }
        }
    }

    #[test]
    fn metered_ops_tally() {
        let fp = f(13);
        let m = OpMeter::new();
        fp.mul_m(&fp.elem(3u32), &fp.elem(5u32), &m);
        assert_eq!(m.snapshot().mults, 1);
        // 3^5: bits 101 -> square, square+mul -> 3 ladder mults.
        fp.pow_m(&fp.elem(3u32), &BigUint::from(5u32), &m);
        let c = m.snapshot();
        assert_eq!(c.exps, 1);
        assert_eq!(c.mults, 4);
        fp.inv_m(&fp.elem(4u32), &m).unwrap();
        assert_eq!(m.snapshot().exps, 2);
    }
}
