//! Shamir sharing and the multiplication engine built on it.
//!
//! Party `i` evaluates the dealer's polynomial at `x = i`, so ids double as
//! evaluation points and the secret sits at `x = 0`. Degree `t` tolerates
//! `t` curious parties; multiplication needs `2t < P`, which is where the
//! honest-majority bound comes from.
//!
//! [`Engine`] wraps a channel with the interactive pieces every protocol
//! above this layer leans on:
//!
//! * `deal_and_sum`: everyone shares a local value, everyone sums the
//!   received shares. Yields a sharing of the sum of all inputs; with
//!   random inputs it is a shared random element nobody knows, and with
//!   additive shares as inputs it converts them to Shamir in one round.
//! * `mul_vec`: pointwise products of shared values. Local share products
//!   live on a degree-2t polynomial, so each party re-shares its product at
//!   degree t and everyone recombines with Lagrange weights. One round per
//!   batch, one `bgw_muls` tick per pair.
//! * `rand_bits`: shared uniform bits. Square a shared random value, open
//!   the square, divide by the public canonical root: the survivor is a
//!   shared sign, shifted into {0, 1}. The only thing opened is the square,
//!   which says nothing about the sign.
//! * `reveal_vec`: opens values under a declared purpose tag; the tag ends
//!   up in the transcript where the audit can see it.

use crate::field::{FieldElem, FieldParams};
use crate::transport::{msg, Channel, PartyId};
use crate::{Error, Result};
use rand::{CryptoRng, RngCore};

/// One party's point on a dealt polynomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShamirShare {
    pub party: PartyId,
    pub value: FieldElem,
    /// Degree bound of the underlying polynomial.
    pub degree: usize,
}

/// Largest tolerable degree for `p_count` parties: floor((P-1)/2).
pub fn max_degree(p_count: usize) -> usize {
    (p_count - 1) / 2
}

fn check_degree(degree: usize, p_count: usize) -> Result<()> {
    if p_count == 0 {
        return Err(Error::Param("party count must be positive".into()));
    }
    if p_count == 1 {
        if degree != 0 {
            return Err(Error::Param("a single party can only hold degree-0 shares".into()));
        }
        return Ok(());
    }
    if degree < 1 || degree > max_degree(p_count) {
        return Err(Error::Param(format!(
            "degree {degree} out of range [1, {}] for {p_count} parties",
            max_degree(p_count)
        )));
    }
    Ok(())
}

/// Deals `secret` to parties `1..=p_count` on a fresh degree-`degree`
/// polynomial.
pub fn share<R: RngCore + CryptoRng>(
    secret: &FieldElem,
    degree: usize,
    p_count: usize,
    f: &FieldParams,
    rng: &mut R,
) -> Result<Vec<ShamirShare>> {
    check_degree(degree, p_count)?;
    if *f.prime() <= (p_count as u64).into() {
        return Err(Error::Param(format!(
            "field of size {} cannot seat {p_count} evaluation points",
            f.prime()
        )));
    }
    let coeffs: Vec<FieldElem> = (0..degree).map(|_| f.rand_elem(rng)).collect();
    Ok((1..=p_count as PartyId)
        .map(|party| {
            // Horner, highest coefficient first, constant term last.
            let x = FieldElem::from_u64(party as u64);
            let mut acc = f.zero();
            for c in coeffs.iter().rev() {
                acc = f.add(&f.mul(&acc, &x), c);
            }
            acc = f.add(&f.mul(&acc, &x), secret);
            ShamirShare { party, value: acc, degree }
        })
        .collect())
}

/// Lagrange weights for interpolating at `x = 0` from the given points.
pub fn lagrange_at_zero(points: &[PartyId], f: &FieldParams) -> Result<Vec<FieldElem>> {
    let mut weights = Vec::with_capacity(points.len());
    for (i, &xi) in points.iter().enumerate() {
        let xi_e = FieldElem::from_u64(xi as u64);
        let mut num = f.one();
        let mut den = f.one();
        for (j, &xj) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            let xj_e = FieldElem::from_u64(xj as u64);
            num = f.mul(&num, &f.neg(&xj_e));
            den = f.mul(&den, &f.sub(&xi_e, &xj_e));
        }
        let den_inv = f.inv(&den).map_err(|_| {
            Error::Param("duplicate evaluation points in interpolation".into())
        })?;
        weights.push(f.mul(&num, &den_inv));
    }
    Ok(weights)
}

/// Interpolates the secret from any `degree + 1` or more consistent shares.
pub fn reconstruct(shares: &[ShamirShare], f: &FieldParams) -> Result<FieldElem> {
    if shares.is_empty() {
        return Err(Error::Param("cannot reconstruct from no shares".into()));
    }
    let degree = shares[0].degree;
    if shares.iter().any(|s| s.degree != degree) {
        return Err(Error::Param("shares disagree on polynomial degree".into()));
    }
    if shares.len() <= degree {
        return Err(Error::Param(format!(
            "{} shares cannot determine a degree-{degree} polynomial",
            shares.len()
        )));
    }
    let points: Vec<PartyId> = shares.iter().map(|s| s.party).collect();
    {
        let mut seen = points.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Param("duplicate party ids among shares".into()));
        }
    }
    let weights = lagrange_at_zero(&points, f)?;
    let mut acc = f.zero();
    for (s, w) in shares.iter().zip(&weights) {
        acc = f.add(&acc, &f.mul(&s.value, w));
    }
    Ok(acc)
}

/// Counted element vector: 4-byte BE length, then fixed-width elements.
/// Protocol payloads use this wherever the count is not implied.
pub(crate) fn encode_counted(f: &FieldParams, xs: &[FieldElem]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + xs.len() * f.enc_width());
    out.extend_from_slice(&(xs.len() as u32).to_be_bytes());
    out.extend_from_slice(&f.encode_slice(xs));
    out
}

pub(crate) fn decode_counted(f: &FieldParams, bytes: &[u8]) -> Result<Vec<FieldElem>> {
    if bytes.len() < 4 {
        return Err(Error::Param("counted vector shorter than its header".into()));
    }
    let count = u32::from_be_bytes(bytes[0..4].try_into().unwrap()) as usize;
    f.decode_slice(&bytes[4..], count).map_err(Error::Field)
}

/// Per-engine protocol counters and the reveal log.
#[derive(Debug, Clone, Default)]
pub struct EngineStats {
    /// Interactive multiplications performed (one per pair, batched or not).
    pub bgw_muls: u64,
    /// Every value this party opened, in order, with its purpose tag.
    pub reveals: Vec<(u8, FieldElem)>,
}

/// Interactive Shamir arithmetic over one session channel.
pub struct Engine<'a, C, R>
where
    C: Channel,
    R: RngCore + CryptoRng,
{
    chan: &'a mut C,
    f: &'a FieldParams,
    t: usize,
    rng: &'a mut R,
    /// Lagrange weights at 0 for the full roster, fixed per session.
    weights: Vec<FieldElem>,
    pub stats: EngineStats,
}

/// Give up on a shared random bit after this many all-zero squares in a
/// row. Each has probability 1/p, so hitting this means a broken field.
const BIT_RETRY_LIMIT: u32 = 128;

impl<'a, C, R> Engine<'a, C, R>
where
    C: Channel,
    R: RngCore + CryptoRng,
{
    pub fn new(chan: &'a mut C, f: &'a FieldParams, t: usize, rng: &'a mut R) -> Result<Self> {
        let p_count = chan.party_count();
        // t <= floor((P-1)/2) is exactly the 2t < P multiplication bound.
        check_degree(t, p_count)?;
        if *f.prime() <= (p_count as u64).into() {
            return Err(Error::Param("field too small for the roster".into()));
        }
        let roster: Vec<PartyId> = (1..=p_count as PartyId).collect();
        let weights = lagrange_at_zero(&roster, f)?;
        Ok(Engine { chan, f, t, rng, weights, stats: EngineStats::default() })
    }

    pub fn party_id(&self) -> PartyId {
        self.chan.party_id()
    }

    pub fn party_count(&self) -> usize {
        self.chan.party_count()
    }

    pub fn degree(&self) -> usize {
        self.t
    }

    pub fn field(&self) -> &FieldParams {
        self.f
    }

    pub fn channel_stats(&self) -> crate::transport::ChannelStats {
        self.chan.stats()
    }

    /// Share of a public constant: the constant polynomial, same value at
    /// every party.
    pub fn constant(&self, v: FieldElem) -> ShamirShare {
        ShamirShare { party: self.party_id(), value: v, degree: 0 }
    }

    pub fn add(&self, a: &ShamirShare, b: &ShamirShare) -> ShamirShare {
        debug_assert_eq!(a.party, b.party);
        ShamirShare {
            party: a.party,
            value: self.f.add(&a.value, &b.value),
            degree: a.degree.max(b.degree),
        }
    }

    pub fn sub(&self, a: &ShamirShare, b: &ShamirShare) -> ShamirShare {
        debug_assert_eq!(a.party, b.party);
        ShamirShare {
            party: a.party,
            value: self.f.sub(&a.value, &b.value),
            degree: a.degree.max(b.degree),
        }
    }

    /// `a - c` for public `c`.
    pub fn sub_public(&self, a: &ShamirShare, c: &FieldElem) -> ShamirShare {
        ShamirShare { party: a.party, value: self.f.sub(&a.value, c), degree: a.degree }
    }

    /// `c - a` for public `c`.
    pub fn public_minus(&self, c: &FieldElem, a: &ShamirShare) -> ShamirShare {
        ShamirShare { party: a.party, value: self.f.sub(c, &a.value), degree: a.degree }
    }

    /// `c * a` for public `c`.
    pub fn scale(&self, c: &FieldElem, a: &ShamirShare) -> ShamirShare {
        ShamirShare { party: a.party, value: self.f.mul(c, &a.value), degree: a.degree }
    }

    /// Everyone deals its `inputs[k]`, everyone ends with shares of the
    /// partywise sums. This is both randomness generation (random inputs)
    /// and additive-to-Shamir conversion (additive shares as inputs).
    pub fn deal_and_sum(&mut self, inputs: &[FieldElem]) -> Result<Vec<ShamirShare>> {
        let p = self.party_count();
        let k = inputs.len();
        // per-recipient columns of my dealt shares
        let mut columns: Vec<Vec<FieldElem>> = vec![Vec::with_capacity(k); p];
        for secret in inputs {
            let dealt = share(secret, self.t, p, self.f, self.rng)?;
            for (col, s) in columns.iter_mut().zip(dealt) {
                col.push(s.value);
            }
        }
        let outbound = columns.iter().map(|col| encode_counted(self.f, col)).collect();
        let received = self.chan.exchange(msg::SHAMIR_DEAL, outbound)?;

        let me = self.party_id();
        let mut acc = vec![self.f.zero(); k];
        for payload in &received {
            let col = decode_counted(self.f, payload)?;
            if col.len() != k {
                return Err(Error::Param(format!(
                    "dealer sent {} shares, expected {k}",
                    col.len()
                )));
            }
            for (a, v) in acc.iter_mut().zip(&col) {
                *a = self.f.add(a, v);
            }
        }
        Ok(acc
            .into_iter()
            .map(|value| ShamirShare { party: me, value, degree: self.t })
            .collect())
    }

    /// Shares of uniform random elements no party knows.
    pub fn rand_elems(&mut self, k: usize) -> Result<Vec<ShamirShare>> {
        let inputs: Vec<FieldElem> = (0..k).map(|_| self.f.rand_elem(self.rng)).collect();
        self.deal_and_sum(&inputs)
    }

    /// Converts this party's additive shares into Shamir sharings of the
    /// summed secrets.
    pub fn additive_to_shamir(&mut self, addends: &[FieldElem]) -> Result<Vec<ShamirShare>> {
        self.deal_and_sum(addends)
    }

    /// Pointwise products under re-sharing degree reduction. One round.
    pub fn mul_vec(&mut self, a: &[ShamirShare], b: &[ShamirShare]) -> Result<Vec<ShamirShare>> {
        if a.len() != b.len() {
            return Err(Error::Param("mul_vec operand lengths differ".into()));
        }
        let p = self.party_count();
        let k = a.len();
        let mut columns: Vec<Vec<FieldElem>> = vec![Vec::with_capacity(k); p];
        for (x, y) in a.iter().zip(b) {
            let local = self.f.mul(&x.value, &y.value);
            let dealt = share(&local, self.t, p, self.f, self.rng)?;
            for (col, s) in columns.iter_mut().zip(dealt) {
                col.push(s.value);
            }
        }
        let outbound = columns.iter().map(|col| encode_counted(self.f, col)).collect();
        let received = self.chan.exchange(msg::MULT_RESHARE, outbound)?;

        let me = self.party_id();
        let mut acc = vec![self.f.zero(); k];
        for (idx, payload) in received.iter().enumerate() {
            let col = decode_counted(self.f, payload)?;
            if col.len() != k {
                return Err(Error::Param("reshare batch size mismatch".into()));
            }
            let w = &self.weights[idx];
            for (a, v) in acc.iter_mut().zip(&col) {
                *a = self.f.add(a, &self.f.mul(w, v));
            }
        }
        self.stats.bgw_muls += k as u64;
        Ok(acc
            .into_iter()
            .map(|value| ShamirShare { party: me, value, degree: self.t })
            .collect())
    }

    pub fn mul(&mut self, a: &ShamirShare, b: &ShamirShare) -> Result<ShamirShare> {
        Ok(self.mul_vec(std::slice::from_ref(a), std::slice::from_ref(b))?.pop().unwrap())
    }

    /// Opens shared values to all parties under a purpose tag. The tag is
    /// the first payload byte of every REVEAL_SHARE frame; the audit trail
    /// keys off it.
    pub fn reveal_vec(&mut self, shares: &[ShamirShare], purpose: u8) -> Result<Vec<FieldElem>> {
        let values: Vec<FieldElem> = shares.iter().map(|s| s.value.clone()).collect();
        let mut payload = vec![purpose];
        payload.extend_from_slice(&encode_counted(self.f, &values));
        let received = self.chan.broadcast(msg::REVEAL_SHARE, payload)?;

        let k = shares.len();
        let mut per_party: Vec<Vec<FieldElem>> = Vec::with_capacity(received.len());
        for (idx, frame) in received.iter().enumerate() {
            if frame.first() != Some(&purpose) {
                return Err(Error::Transport(crate::transport::TransportError::ProtocolViolation {
                    peer: (idx + 1) as PartyId,
                    what: "reveal purpose tag mismatch".into(),
                }));
            }
            let col = decode_counted(self.f, &frame[1..])?;
            if col.len() != k {
                return Err(Error::Param("reveal batch size mismatch".into()));
            }
            per_party.push(col);
        }
        let mut opened = Vec::with_capacity(k);
        for i in 0..k {
            let mut acc = self.f.zero();
            for (idx, col) in per_party.iter().enumerate() {
                acc = self.f.add(&acc, &self.f.mul(&self.weights[idx], &col[i]));
            }
            self.stats.reveals.push((purpose, acc.clone()));
            opened.push(acc);
        }
        Ok(opened)
    }

    pub fn reveal(&mut self, share: &ShamirShare, purpose: u8) -> Result<FieldElem> {
        Ok(self.reveal_vec(std::slice::from_ref(share), purpose)?.pop().unwrap())
    }

    /// `k` shared uniform bits. Draws shared randoms, opens only their
    /// squares, and maps each hidden sign onto {0, 1}:
    /// `b = (r / sqrt(r^2) + 1) / 2`. Zero squares are redrawn; all parties
    /// see the same opened square, so the retry schedule stays in lockstep.
    pub fn rand_bits(&mut self, k: usize) -> Result<Vec<ShamirShare>> {
        let inv2 = self
            .f
            .inv(&self.f.elem(2u32))
            .map_err(|_| Error::Param("binary fields are not supported".into()))?;
        let mut out: Vec<Option<ShamirShare>> = vec![None; k];
        let mut consecutive_failures = 0u32;
        while out.iter().any(Option::is_none) {
            let pending: Vec<usize> =
                (0..k).filter(|&i| out[i].is_none()).collect();
            let r = self.rand_elems(pending.len())?;
            let squares = self.mul_vec(&r, &r)?;
            let opened = self.reveal_vec(&squares, crate::transport::reveal::RAND_SQUARE)?;
            let mut progressed = false;
            for ((slot, r_share), s2) in pending.iter().zip(&r).zip(&opened) {
                if s2.is_zero() {
                    continue;
                }
                progressed = true;
                let root = self
                    .f
                    .sqrt(s2)
                    .expect("opened square of a shared value is a residue");
                let root_inv = self.f.inv(&root).expect("canonical root is nonzero");
                // (r / root + 1) / 2, all public factors: local arithmetic.
                let sign = self.scale(&root_inv, r_share);
                let shifted = ShamirShare {
                    party: sign.party,
                    value: self.f.add(&sign.value, &self.f.one()),
                    degree: sign.degree,
                };
                out[*slot] = Some(self.scale(&inv2, &shifted));
            }
            if progressed {
                consecutive_failures = 0;
            } else {
                consecutive_failures += 1;
                if consecutive_failures >= BIT_RETRY_LIMIT {
                    return Err(Error::Exhausted(format!(
                        "{BIT_RETRY_LIMIT} consecutive zero squares drawing shared bits"
                    )));
                }
            }
        }
        Ok(out.into_iter().map(Option::unwrap).collect())
    }

    pub fn rand_bit(&mut self) -> Result<ShamirShare> {
        Ok(self.rand_bits(1)?.pop().unwrap())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{assert_uniform, ScriptedRng};
    use crate::transport::sim::{SimConfig, SimNet};
    use crate::transport::Network;
    use num_bigint::BigUint;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn f11() -> FieldParams {
        FieldParams::from_prime(BigUint::from(11u32)).unwrap()
    }

    #[test]
    fn share_worked_example() {
        // Forced coefficient 2: polynomial 5 + 2x over F_11.
        let f = f11();
        let mut rng = ScriptedRng::new(&[2]);
        let shares = share(&f.elem(5u32), 1, 3, &f, &mut rng).unwrap();
        let values: Vec<u64> = shares.iter().map(|s| s.value.to_u64().unwrap()).collect();
        assert_eq!(values, vec![7, 9, 0]);
        assert_eq!(shares[0].party, 1);
        assert_eq!(shares[0].degree, 1);
    }

    #[test]
    fn zero_polynomial_gives_constant_shares() {
        let f = f11();
        let mut rng = ScriptedRng::new(&[0]);
        let shares = share(&f.elem(4u32), 1, 3, &f, &mut rng).unwrap();
        assert!(shares.iter().all(|s| s.value == f.elem(4u32)));
    }

    #[test]
    fn degree_bounds_enforced() {
        let f = f11();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let s = f.elem(5u32);
        assert!(share(&s, 2, 3, &f, &mut rng).is_err()); // floor((3-1)/2) = 1
        assert!(share(&s, 0, 3, &f, &mut rng).is_err());
        assert!(share(&s, 2, 5, &f, &mut rng).is_ok());
        assert!(share(&s, 3, 5, &f, &mut rng).is_err());
        assert!(share(&s, 0, 1, &f, &mut rng).is_ok()); // degenerate single party
    }

    #[test]
    fn reconstruct_worked_example_and_subsets() {
        let f = f11();
        let mk = |party: PartyId, v: u64| ShamirShare { party, value: f.elem(v), degree: 1 };
        let all = vec![mk(1, 7), mk(2, 9), mk(3, 0)];
        assert_eq!(reconstruct(&all, &f).unwrap(), f.elem(5u32));
        for pair in [[0, 1], [0, 2], [1, 2]] {
            let subset = vec![all[pair[0]].clone(), all[pair[1]].clone()];
            assert_eq!(reconstruct(&subset, &f).unwrap(), f.elem(5u32));
        }
        assert!(reconstruct(&all[..1], &f).is_err()); // below threshold
        let dup = vec![all[0].clone(), all[0].clone()];
        assert!(reconstruct(&dup, &f).is_err());
    }

    #[test]
    fn reconstruct_degree_zero_constant() {
        let f = f11();
        let shares =
            vec![ShamirShare { party: 2, value: f.elem(6u32), degree: 0 }];
        assert_eq!(reconstruct(&shares, &f).unwrap(), f.elem(6u32));
    }

    #[test]
    fn lagrange_worked_coefficients() {
        let f = f11();
        let w = lagrange_at_zero(&[1, 2, 3], &f).unwrap();
        let vals: Vec<u64> = w.iter().map(|e| e.to_u64().unwrap()).collect();
        assert_eq!(vals, vec![3, 8, 1]);
    }

    #[test]
    fn share_hides_secret_exhaustively() {
        // p = 13, P = 3, t = 1: over all polynomials, each party's share
        // takes every field value equally often, for every secret.
        let f = FieldParams::from_prime(BigUint::from(13u32)).unwrap();
        for secret in 0..13u64 {
            let mut hist = [[0u64; 13]; 3];
            for coeff in 0..13u8 {
                let mut rng = ScriptedRng::new(&[coeff]);
                let shares = share(&f.elem(secret), 1, 3, &f, &mut rng).unwrap();
                for (pi, s) in shares.iter().enumerate() {
                    hist[pi][s.value.to_u64().unwrap() as usize] += 1;
                }
            }
            for pi in 0..3 {
                assert!(hist[pi].iter().all(|&c| c == 1), "secret {secret} party {pi}");
            }
        }
    }

    /// Runs one engine closure per party over the simulator.
    fn engine_run<T, F>(f: &FieldParams, p: usize, t: usize, scripts: Option<Vec<Vec<u8>>>, body: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut Engine<'_, crate::transport::sim::SimChannel, ScriptedOrSeeded>) -> Result<T>
            + Sync,
    {
        let net = SimNet::new(p, SimConfig::default());
        net.run(|ep| {
            let id = ep.my_id();
            let mut rng = match &scripts {
                Some(s) => ScriptedOrSeeded::Scripted(ScriptedRng::new(&s[id as usize - 1])),
                None => ScriptedOrSeeded::Seeded(Box::new(ChaCha20Rng::seed_from_u64(
                    9000 + id as u64,
                ))),
            };
            let mut chan = ep.session([4u8; 16]);
            let mut eng = Engine::new(&mut chan, f, t, &mut rng)?;
            body(&mut eng)
        })
        .unwrap()
    }

    /// Either a byte script or a real seeded RNG, so forced-randomness tests
    /// and statistical tests share the harness.
    enum ScriptedOrSeeded {
        Scripted(ScriptedRng),
        Seeded(Box<ChaCha20Rng>),
    }

    impl RngCore for ScriptedOrSeeded {
        fn next_u32(&mut self) -> u32 {
            match self {
                Self::Scripted(r) => r.next_u32(),
                Self::Seeded(r) => r.next_u32(),
            }
        }
        fn next_u64(&mut self) -> u64 {
            match self {
                Self::Scripted(r) => r.next_u64(),
                Self::Seeded(r) => r.next_u64(),
            }
        }
        fn fill_bytes(&mut self, dest: &mut [u8]) {
            match self {
                Self::Scripted(r) => r.fill_bytes(dest),
                Self::Seeded(r) => r.fill_bytes(dest),
            }
        }
        fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
            self.fill_bytes(dest);
            Ok(())
        }
    }

    impl CryptoRng for ScriptedOrSeeded {}

    #[test]
    fn bgw_mul_worked_example() {
        // a = 2 on 2 + 3x, b = 3 on 3 + x. Party i's local product sits on a
        // degree-2 curve through (1,9), (2,7), (3,0); the engine reduces and
        // the result still opens to 6.
        let f = f11();
        // Scripts: [value-deal coeff a, value-deal coeff b, reshare coeff].
        // Dealing happens via deal_and_sum with party 1 contributing the
        // secret and others zero, so every party consumes one coefficient
        // per deal plus one for the reshare.
        let scripts = vec![vec![3, 1, 4], vec![0, 0, 5], vec![0, 0, 6]];
        let results = engine_run(&f, 3, 1, Some(scripts), |eng| {
            let me = eng.party_id();
            let a_in = if me == 1 { f.elem(2u32) } else { f.zero() };
            let b_in = if me == 1 { f.elem(3u32) } else { f.zero() };
            let a = eng.deal_and_sum(&[a_in])?.pop().unwrap();
            let b = eng.deal_and_sum(&[b_in])?.pop().unwrap();
            // With the forced coefficients these are exactly the textbook
            // sharings.
            let prod = eng.mul(&a, &b)?;
            Ok((a.value.clone(), b.value.clone(), prod))
        });
        let a_vals: Vec<u64> = results.iter().map(|r| r.0.to_u64().unwrap()).collect();
        let b_vals: Vec<u64> = results.iter().map(|r| r.1.to_u64().unwrap()).collect();
        assert_eq!(a_vals, vec![5, 8, 0]);
        assert_eq!(b_vals, vec![4, 5, 6]);
        let shares: Vec<ShamirShare> = results.into_iter().map(|r| r.2).collect();
        assert_eq!(reconstruct(&shares, &f).unwrap(), f.elem(6u32));
        // Every pair of shares agrees.
        for i in 0..3 {
            for j in (i + 1)..3 {
                let pair = vec![shares[i].clone(), shares[j].clone()];
                assert_eq!(reconstruct(&pair, &f).unwrap(), f.elem(6u32));
            }
        }
    }

    #[test]
    fn mul_identity_and_zero() {
        let f = f11();
        let results = engine_run(&f, 3, 1, None, |eng| {
            let me = eng.party_id();
            let x = eng.deal_and_sum(&[if me == 1 { f.elem(7u32) } else { f.zero() }])?;
            let one = eng.deal_and_sum(&[if me == 1 { f.one() } else { f.zero() }])?;
            let zero = eng.deal_and_sum(&[f.zero()])?;
            let x1 = eng.mul(&x[0], &one[0])?;
            let x0 = eng.mul(&x[0], &zero[0])?;
            assert_eq!(eng.stats.bgw_muls, 2);
            Ok((x1, x0))
        });
        let (a, b): (Vec<_>, Vec<_>) = results.into_iter().unzip();
        assert_eq!(reconstruct(&a, &f).unwrap(), f.elem(7u32));
        assert_eq!(reconstruct(&b, &f).unwrap(), f.zero());
    }

    #[test]
    fn deal_and_sum_forced_contributions() {
        // Contributions 3, 5, 4 sum to 12 = 1 mod 11.
        let f = f11();
        let scripts = vec![vec![3, 1], vec![5, 2], vec![4, 3]];
        let shares = engine_run(&f, 3, 1, Some(scripts), |eng| {
            let c = f.rand_elem(eng.rng_for_test());
            Ok(eng.deal_and_sum(&[c])?.pop().unwrap())
        });
        assert_eq!(reconstruct(&shares, &f).unwrap(), f.one());
    }

    #[test]
    fn additive_to_shamir_converts() {
        let f = f11();
        let results = engine_run(&f, 3, 1, None, |eng| {
            let addend = f.elem(eng.party_id() as u64 * 3); // 3 + 6 + 9 = 7 mod 11
            let zeros = f.zero();
            let shares = eng.additive_to_shamir(&[addend, zeros])?;
            Ok(shares)
        });
        let first: Vec<ShamirShare> = results.iter().map(|r| r[0].clone()).collect();
        let second: Vec<ShamirShare> = results.iter().map(|r| r[1].clone()).collect();
        assert_eq!(reconstruct(&first, &f).unwrap(), f.elem(7u32));
        assert_eq!(reconstruct(&second, &f).unwrap(), f.zero());
    }

    #[test]
    fn single_party_engine_is_identity() {
        let f = f11();
        let results = engine_run(&f, 1, 0, None, |eng| {
            let s = eng.deal_and_sum(&[f.elem(9u32)])?.pop().unwrap();
            assert_eq!(s.value, f.elem(9u32));
            let sq = eng.mul(&s, &s)?;
            let opened = eng.reveal(&sq, crate::transport::reveal::FINAL_OUTPUT)?;
            Ok(opened)
        });
        assert_eq!(results[0], f.elem(4u32));
    }

    #[test]
    fn rand_elems_are_uniform() {
        let f = f11();
        let per_party = engine_run(&f, 3, 1, None, |eng| eng.rand_elems(4000));
        let mut hist = [0u64; 11];
        for i in 0..4000 {
            let shares: Vec<ShamirShare> =
                per_party.iter().map(|v| v[i].clone()).collect();
            let val = reconstruct(&shares, &f).unwrap();
            hist[val.to_u64().unwrap() as usize] += 1;
        }
        assert_uniform(&hist, 4000, 5.0);
    }

    #[test]
    fn rand_bit_worked_values() {
        let f = f11();
        // Contributions sum to r = 3: squares open to 9, canonical root 3,
        // r/root = 1, bit = 1.
        let scripts = vec![vec![1, 1, 5], vec![1, 2, 6], vec![1, 3, 7]];
        let shares = engine_run(&f, 3, 1, Some(scripts), |eng| eng.rand_bit());
        assert_eq!(reconstruct(&shares, &f).unwrap(), f.one());

        // r = 8: square still 9, but 8/3 = -1, bit = 0.
        let scripts = vec![vec![2, 1, 5], vec![3, 2, 6], vec![3, 3, 7]];
        let shares = engine_run(&f, 3, 1, Some(scripts), |eng| eng.rand_bit());
        assert_eq!(reconstruct(&shares, &f).unwrap(), f.zero());
    }

    #[test]
    fn rand_bit_retries_zero_squares() {
        // First draw sums to 0 (square opens to 0), second to 3.
        let f = f11();
        let scripts = vec![
            vec![0, 1, 5, 1, 1, 5],
            vec![0, 2, 6, 1, 2, 6],
            vec![0, 3, 7, 1, 3, 7],
        ];
        let shares = engine_run(&f, 3, 1, Some(scripts), |eng| eng.rand_bit());
        assert_eq!(reconstruct(&shares, &f).unwrap(), f.one());
    }

    #[test]
    fn rand_bits_are_unbiased() {
        let f = f11();
        let per_party = engine_run(&f, 3, 1, None, |eng| eng.rand_bits(2000));
        let mut ones = 0u64;
        for i in 0..2000 {
            let shares: Vec<ShamirShare> =
                per_party.iter().map(|v| v[i].clone()).collect();
            let bit = reconstruct(&shares, &f).unwrap();
            assert!(bit.is_zero() || bit.is_one());
            if bit.is_one() {
                ones += 1;
            }
        }
        // 5 sigma around 1000 for 2000 fair flips.
        let dev = (ones as f64 - 1000.0).abs();
        assert!(dev < 5.0 * (2000.0f64 * 0.25).sqrt(), "ones = {ones}");
    }

    #[test]
    fn reveal_logs_purpose_and_value() {
        let f = f11();
        let logged = engine_run(&f, 3, 1, None, |eng| {
            let s = eng.deal_and_sum(&[if eng.party_id() == 1 {
                f.elem(6u32)
            } else {
                f.zero()
            }])?;
            let v = eng.reveal(&s[0], crate::transport::reveal::FINAL_OUTPUT)?;
            assert_eq!(v, f.elem(6u32));
            Ok(eng.stats.reveals.clone())
        });
        for log in logged {
            assert_eq!(log, vec![(crate::transport::reveal::FINAL_OUTPUT, f.elem(6u32))]);
        }
    }

    #[test]
    fn engine_rejects_bad_degrees() {
        let f = f11();
        let net = SimNet::new(4, SimConfig::default());
        let results = net.run_each(|ep| {
            let mut rng = ChaCha20Rng::seed_from_u64(1);
            let mut chan = ep.session([2u8; 16]);
            // 2t = 4 >= P: multiplication impossible.
            Engine::new(&mut chan, &f, 2, &mut rng).map(|_| ())
        });
        assert!(results.iter().all(|r| matches!(r, Err(Error::Param(_)))));
    }

    impl<'a, C, R> Engine<'a, C, R>
    where
        C: Channel,
        R: RngCore + CryptoRng,
    {
        fn rng_for_test(&mut self) -> &mut R {
            self.rng
        }
    }
}
