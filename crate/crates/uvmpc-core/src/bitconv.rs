//! Bit decomposition of shared values and the threshold-gated release
//! circuit.
//!
//! Everything here is built from one interactive primitive, the engine's
//! multiplication, arranged into ripple circuits over shared bits. Bits are
//! LSB-first everywhere. The multiplication budget is part of each
//! operation's contract (the harness asserts it):
//!
//! * public + shared addition: `width` muls
//! * shared + shared addition: `2 * width` muls
//! * shared < public comparison: `width` muls
//!
//! Independent instances (the coordinates of an aggregate, the bits of many
//! candidates) batch into the same rounds; the `_vec` forms are the real
//! implementations and the scalar names are one-element wrappers.
//!
//! The threshold circuit's sign test reads the top bit of `sum - thresh`,
//! which distinguishes "small positive" from "wrapped negative" only when
//! `p >= 3 * 2^(lambda-2)` and both operands stay below `2^(lambda-2)`:
//! subtraction then lands either in `[0, 2^(lambda-2))` (top bit clear) or
//! in `[p - 2^(lambda-2), p)`, which sits above `2^(lambda-1)` (top bit
//! set). [`AggregationConfig::validate`] refuses fields and parameters
//! outside that window before a single message is sent.

use crate::field::{FieldElem, FieldParams};
use crate::shamir::{Engine, ShamirShare};
use crate::transport::{reveal, Channel};
use crate::{Error, Result};
use num_bigint::BigUint;
use num_traits::One;
use rand::{CryptoRng, RngCore};

/// A value held as one share per bit, LSB first.
#[derive(Debug, Clone)]
pub struct BitShares {
    pub bits: Vec<ShamirShare>,
}

impl BitShares {
    pub fn width(&self) -> usize {
        self.bits.len()
    }

    /// Local linear combination `sum 2^i * bit_i`: this party's share of
    /// the represented value.
    pub fn value_share(&self, f: &FieldParams) -> Result<ShamirShare> {
        let first = self
            .bits
            .first()
            .ok_or_else(|| Error::Param("empty bit vector has no value".into()))?;
        let mut acc = f.zero();
        let mut degree = 0;
        let mut pow = BigUint::one();
        for b in &self.bits {
            acc = f.add(&acc, &f.mul(&f.elem(pow.clone()), &b.value));
            degree = degree.max(b.degree);
            pow <<= 1;
        }
        Ok(ShamirShare { party: first.party, value: acc, degree })
    }
}

/// Public parameters of one aggregation run.
#[derive(Debug, Clone)]
pub struct AggregationConfig {
    /// Release threshold; outputs below it open as zero.
    pub thresh: FieldElem,
    /// Number of client submissions the aggregate may contain. Bounds every
    /// coordinate of the sum, which is what makes the sign test sound.
    pub user_count: u64,
}

impl AggregationConfig {
    /// Checks the soundness window: field shape, and both the threshold and
    /// the largest possible coordinate below `2^(lambda-2)`.
    pub fn validate(&self, f: &FieldParams) -> Result<()> {
        if !f.has_msb_shape() {
            return Err(Error::Param(
                "threshold release needs a field with both leading bits of p set".into(),
            ));
        }
        let window = BigUint::one() << (f.lambda() - 2);
        if *self.thresh.as_uint() >= window {
            return Err(Error::Param(format!(
                "threshold {} outside the sound window [0, 2^{})",
                self.thresh,
                f.lambda() - 2
            )));
        }
        if BigUint::from(self.user_count) >= window {
            return Err(Error::Param(format!(
                "user count {} outside the sound window [0, 2^{})",
                self.user_count,
                f.lambda() - 2
            )));
        }
        Ok(())
    }
}

/// Bits of `v`, LSB first, exactly `width` of them.
fn pub_bits(v: &BigUint, width: usize) -> Result<Vec<bool>> {
    if v.bits() > width as u64 {
        return Err(Error::Param(format!("{v} does not fit in {width} bits")));
    }
    Ok((0..width as u64).map(|i| v.bit(i)).collect())
}

fn uniform_width(xs: &[BitShares]) -> Result<usize> {
    let w = xs
        .first()
        .ok_or_else(|| Error::Param("no bit-vector instances given".into()))?
        .width();
    if w == 0 || xs.iter().any(|x| x.width() != w) {
        return Err(Error::Param("bit vectors must share one nonzero width".into()));
    }
    Ok(w)
}

/// `c + b` for public bit vectors `c` and shared `b`, all of one width.
/// Output is one bit wider (carry included). Exactly `width` muls per
/// instance: the carry chain is the only interactive part, and the
/// carry-times-u product it needs also yields the sum bit.
pub fn bitadd_pub_shared_vec<C, R>(
    eng: &mut Engine<'_, C, R>,
    cs: &[Vec<bool>],
    bs: &[BitShares],
) -> Result<Vec<BitShares>>
where
    C: Channel,
    R: RngCore + CryptoRng,
{
    let w = uniform_width(bs)?;
    if cs.len() != bs.len() || cs.iter().any(|c| c.len() != w) {
        return Err(Error::Param("public addend widths disagree with the shared ones".into()));
    }
    let f = eng.field().clone();
    let one = f.one();
    let two = f.elem(2u32);
    let k = bs.len();
    let mut carries: Vec<ShamirShare> = (0..k).map(|_| eng.constant(f.zero())).collect();
    let mut sums: Vec<Vec<ShamirShare>> = vec![Vec::with_capacity(w + 1); k];
    for i in 0..w {
        // u = c_i XOR b_i, linear in the share when c_i is public.
        let u: Vec<ShamirShare> = (0..k)
            .map(|j| {
                if cs[j][i] {
                    eng.public_minus(&one, &bs[j].bits[i])
                } else {
                    bs[j].bits[i].clone()
                }
            })
            .collect();
        let m = eng.mul_vec(&carries, &u)?;
        for j in 0..k {
            let sum_bit = eng.sub(&eng.add(&u[j], &carries[j]), &eng.scale(&two, &m[j]));
            // carry' = c_i * b_i + carry * u; the first term is linear.
            let xy = if cs[j][i] {
                bs[j].bits[i].clone()
            } else {
                eng.constant(f.zero())
            };
            carries[j] = eng.add(&xy, &m[j]);
            sums[j].push(sum_bit);
        }
    }
    Ok(sums
        .into_iter()
        .zip(carries)
        .map(|(mut bits, carry)| {
            bits.push(carry);
            BitShares { bits }
        })
        .collect())
}

/// `x + y` for shared bit vectors of one width. Output is one bit wider.
/// Exactly `2 * width` muls per instance: the pairwise bit products all
/// batch into one round, then the carry chain ripples.
pub fn bitadd_shared_shared_vec<C, R>(
    eng: &mut Engine<'_, C, R>,
    xs: &[BitShares],
    ys: &[BitShares],
) -> Result<Vec<BitShares>>
where
    C: Channel,
    R: RngCore + CryptoRng,
{
    let w = uniform_width(xs)?;
    if ys.len() != xs.len() || ys.iter().any(|y| y.width() != w) {
        return Err(Error::Param("addend widths disagree".into()));
    }
    let f = eng.field().clone();
    let two = f.elem(2u32);
    let k = xs.len();

    // All k*w bit products are independent: one round.
    let x_flat: Vec<ShamirShare> =
        xs.iter().flat_map(|x| x.bits.iter().cloned()).collect();
    let y_flat: Vec<ShamirShare> =
        ys.iter().flat_map(|y| y.bits.iter().cloned()).collect();
    let xy_flat = eng.mul_vec(&x_flat, &y_flat)?;

    let mut carries: Vec<ShamirShare> = (0..k).map(|_| eng.constant(f.zero())).collect();
    let mut sums: Vec<Vec<ShamirShare>> = vec![Vec::with_capacity(w + 1); k];
    for i in 0..w {
        let u: Vec<ShamirShare> = (0..k)
            .map(|j| {
                let xy = &xy_flat[j * w + i];
                let lin = eng.add(&xs[j].bits[i], &ys[j].bits[i]);
                eng.sub(&lin, &eng.scale(&two, xy))
            })
            .collect();
        let m = eng.mul_vec(&carries, &u)?;
        for j in 0..k {
            let sum_bit = eng.sub(&eng.add(&u[j], &carries[j]), &eng.scale(&two, &m[j]));
            carries[j] = eng.add(&xy_flat[j * w + i], &m[j]);
            sums[j].push(sum_bit);
        }
    }
    Ok(sums
        .into_iter()
        .zip(carries)
        .map(|(mut bits, carry)| {
            bits.push(carry);
            BitShares { bits }
        })
        .collect())
}

/// Shared bit `[x < q]` for public `q`, via the borrow chain of `x - q`.
/// Exactly `width` muls per instance.
pub fn bitlt_shared_pub_vec<C, R>(
    eng: &mut Engine<'_, C, R>,
    xs: &[BitShares],
    q: &BigUint,
) -> Result<Vec<ShamirShare>>
where
    C: Channel,
    R: RngCore + CryptoRng,
{
    let w = uniform_width(xs)?;
    let q_bits = pub_bits(q, w)?;
    let f = eng.field().clone();
    let one = f.one();
    let k = xs.len();
    let mut borrows: Vec<ShamirShare> = (0..k).map(|_| eng.constant(f.zero())).collect();
    for i in 0..w {
        // borrow' = (1-x)*q_i + borrow * (1 - x - q_i + 2*x*q_i); with
        // public q_i the second factor collapses to x (q_i set) or 1-x.
        let factor: Vec<ShamirShare> = (0..k)
            .map(|j| {
                if q_bits[i] {
                    xs[j].bits[i].clone()
                } else {
                    eng.public_minus(&one, &xs[j].bits[i])
                }
            })
            .collect();
        let m = eng.mul_vec(&borrows, &factor)?;
        for j in 0..k {
            let fresh = if q_bits[i] {
                eng.public_minus(&one, &xs[j].bits[i])
            } else {
                eng.constant(f.zero())
            };
            borrows[j] = eng.add(&fresh, &m[j]);
        }
    }
    Ok(borrows)
}

/// Rejections tolerated per instance before giving up. Each rejection has
/// probability at most 1/4 in a well-shaped field.
const REJECT_LIMIT: u32 = 64;

/// `k` bitwise sharings of uniform values in `[0, p)`. Draws lambda shared
/// bits per candidate and opens a single accept flag `[candidate < p]`;
/// the flag's distribution does not depend on the accepted value, so
/// opening it leaks nothing about the output.
pub fn bitwise_random_vec<C, R>(eng: &mut Engine<'_, C, R>, k: usize) -> Result<Vec<BitShares>>
where
    C: Channel,
    R: RngCore + CryptoRng,
{
    let f = eng.field().clone();
    let lam = f.lambda() as usize;
    let p = f.prime().clone();
    let mut out: Vec<Option<BitShares>> = vec![None; k];
    let mut rejections = vec![0u32; k];
    while out.iter().any(Option::is_none) {
        let pending: Vec<usize> = (0..k).filter(|&i| out[i].is_none()).collect();
        let mut bits = eng.rand_bits(pending.len() * lam)?;
        let candidates: Vec<BitShares> = pending
            .iter()
            .map(|_| BitShares { bits: bits.drain(..lam).collect() })
            .collect();
        let flags = bitlt_shared_pub_vec(eng, &candidates, &p)?;
        let opened = eng.reveal_vec(&flags, reveal::ACCEPT_FLAG)?;
        for ((&slot, cand), flag) in pending.iter().zip(candidates).zip(&opened) {
            if flag.is_one() {
                out[slot] = Some(cand);
            } else {
                rejections[slot] += 1;
                if rejections[slot] >= REJECT_LIMIT {
                    return Err(Error::Exhausted(format!(
                        "{REJECT_LIMIT} rejections drawing a bitwise random value below p"
                    )));
                }
            }
        }
    }
    Ok(out.into_iter().map(Option::unwrap).collect())
}

/// Bit decomposition of shared field elements, width lambda.
///
/// For each input `a`: draw a bitwise-shared random `b`, open the uniform
/// offset `c = a - b`, add `c` back onto the bits of `b`, and correct the
/// result mod p (compare with p, conditionally add `2^(lambda+1) - p`).
/// Only `c`, the squares inside the bit draws, and the accept flags are
/// ever opened; no bit of `a` is.
pub fn bit_decompose_vec<C, R>(
    eng: &mut Engine<'_, C, R>,
    a: &[ShamirShare],
) -> Result<Vec<BitShares>>
where
    C: Channel,
    R: RngCore + CryptoRng,
{
    if a.is_empty() {
        return Ok(Vec::new());
    }
    let f = eng.field().clone();
    let lam = f.lambda() as usize;
    let p = f.prime().clone();
    let k = a.len();

    let b = bitwise_random_vec(eng, k)?;
    let diffs: Vec<ShamirShare> = a
        .iter()
        .zip(&b)
        .map(|(ai, bi)| Ok(eng.sub(ai, &bi.value_share(&f)?)))
        .collect::<Result<_>>()?;
    let cs = eng.reveal_vec(&diffs, reveal::DECOMP_OFFSET)?;

    // d = c + b as an integer: less than 2p, fits in lambda + 1 bits.
    let c_bits: Vec<Vec<bool>> =
        cs.iter().map(|c| pub_bits(c.as_uint(), lam)).collect::<Result<_>>()?;
    let d = bitadd_pub_shared_vec(eng, &c_bits, &b)?;

    // s = [d >= p], kept shared. Adding s * (2^(lambda+1) - p) modulo
    // 2^(lambda+1) subtracts p exactly when d overflowed.
    let lt = bitlt_shared_pub_vec(eng, &d, &p)?;
    let one = f.one();
    let corr = (BigUint::one() << (lam + 1)) - &p;
    let corr_bits = pub_bits(&corr, lam + 1)?;
    let gated: Vec<BitShares> = lt
        .iter()
        .map(|ltj| {
            let s = eng.public_minus(&one, ltj);
            BitShares {
                bits: corr_bits
                    .iter()
                    .map(|&kb| if kb { s.clone() } else { eng.constant(f.zero()) })
                    .collect(),
            }
        })
        .collect();
    let r = bitadd_shared_shared_vec(eng, &d, &gated)?;
    Ok(r
        .into_iter()
        .map(|mut v| {
            v.bits.truncate(lam);
            v
        })
        .collect())
}

/// Threshold-gated release of shared sums: opens `sum` where
/// `sum >= thresh`, `0` elsewhere, and nothing more. The decision is the
/// top bit of the decomposition of `sum - thresh`, which stays shared.
pub fn threshold_release_vec<C, R>(
    eng: &mut Engine<'_, C, R>,
    sums: &[ShamirShare],
    cfg: &AggregationConfig,
) -> Result<Vec<FieldElem>>
where
    C: Channel,
    R: RngCore + CryptoRng,
{
    let f = eng.field().clone();
    cfg.validate(&f)?;
    if sums.is_empty() {
        return Ok(Vec::new());
    }
    let lam = f.lambda() as usize;
    let one = f.one();
    let difs: Vec<ShamirShare> =
        sums.iter().map(|s| eng.sub_public(s, &cfg.thresh)).collect();
    let bits = bit_decompose_vec(eng, &difs)?;
    let gates: Vec<ShamirShare> =
        bits.iter().map(|b| eng.public_minus(&one, &b.bits[lam - 1])).collect();
    let gated = eng.mul_vec(&gates, sums)?;
    eng.reveal_vec(&gated, reveal::FINAL_OUTPUT)
}

pub fn bitadd_pub_shared<C, R>(
    eng: &mut Engine<'_, C, R>,
    c: &[bool],
    b: &BitShares,
) -> Result<BitShares>
where
    C: Channel,
    R: RngCore + CryptoRng,
{
    Ok(bitadd_pub_shared_vec(eng, &[c.to_vec()], std::slice::from_ref(b))?.pop().unwrap())
}

pub fn bitadd_shared_shared<C, R>(
    eng: &mut Engine<'_, C, R>,
    x: &BitShares,
    y: &BitShares,
) -> Result<BitShares>
where
    C: Channel,
    R: RngCore + CryptoRng,
{
    Ok(bitadd_shared_shared_vec(eng, std::slice::from_ref(x), std::slice::from_ref(y))?
        .pop()
        .unwrap())
}

pub fn bitlt_shared_pub<C, R>(
    eng: &mut Engine<'_, C, R>,
    x: &BitShares,
    q: &BigUint,
) -> Result<ShamirShare>
where
    C: Channel,
    R: RngCore + CryptoRng,
{
    Ok(bitlt_shared_pub_vec(eng, std::slice::from_ref(x), q)?.pop().unwrap())
}

pub fn bitwise_random<C, R>(eng: &mut Engine<'_, C, R>) -> Result<BitShares>
where
    C: Channel,
    R: RngCore + CryptoRng,
{
    Ok(bitwise_random_vec(eng, 1)?.pop().unwrap())
}

pub fn bit_decompose<C, R>(eng: &mut Engine<'_, C, R>, a: &ShamirShare) -> Result<BitShares>
where
    C: Channel,
    R: RngCore + CryptoRng,
{
    Ok(bit_decompose_vec(eng, std::slice::from_ref(a))?.pop().unwrap())
}

pub fn threshold_release<C, R>(
    eng: &mut Engine<'_, C, R>,
    sum: &ShamirShare,
    cfg: &AggregationConfig,
) -> Result<FieldElem>
where
    C: Channel,
    R: RngCore + CryptoRng,
{
    Ok(threshold_release_vec(eng, std::slice::from_ref(sum), cfg)?.pop().unwrap())
}
