//! Joint verification of blinded submissions.
//!
//! Each verifier holds one column of a client's blind matrix. The parties
//! compute the row sums of that matrix without exposing the columns
//! (`secure_sum`: every party resplits its values into fresh additive
//! addends, scatters them, and only the re-randomized partial sums are
//! broadcast), then check a per-mode algebraic relation on the sums. For a
//! well-formed unit vector the sums equal one column of the client's `L`
//! matrix, whose rows were built to satisfy the relation; for anything else
//! the relation fails except with probability on the order of `P / p`.
//!
//! A zero anywhere in the sums is rejected outright in every mode. All
//! three relations are trivially satisfied by zeroes, so the guard is part
//! of soundness, not hygiene. The client only ever produces nonzero sums
//! for honest inputs, so completeness is unaffected.

use crate::client::{BlindMode, Submission};
use crate::field::{FieldElem, FieldParams};
use crate::transport::{msg, Channel, TransportError};
use crate::{Error, Result};
use rand::{CryptoRng, RngCore};

/// Jointly computes, per index `k`, the sum over all parties of their
/// `values[k]`, revealing nothing but the totals. Two rounds: scatter
/// resplit addends, then broadcast re-randomized partials.
pub fn secure_sum<C, R>(
    chan: &mut C,
    f: &FieldParams,
    values: &[FieldElem],
    rng: &mut R,
) -> Result<Vec<FieldElem>>
where
    C: Channel,
    R: RngCore + CryptoRng,
{
    let p = chan.party_count();
    let k = values.len();
    if k == 0 {
        return Err(Error::Param("secure_sum needs at least one value".into()));
    }

    // Resplit: value -> p addends, one per party (the last closes the sum).
    let mut addends: Vec<Vec<FieldElem>> = vec![Vec::with_capacity(k); p];
    for v in values {
        let mut acc = f.zero();
        for slot in addends.iter_mut().take(p - 1) {
            let a = f.rand_elem(rng);
            acc = f.add(&acc, &a);
            slot.push(a);
        }
        addends[p - 1].push(f.sub(v, &acc));
    }

    let outbound = addends.iter().map(|col| f.encode_slice(col)).collect();
    let received = chan.exchange(msg::RESPLIT_ADDEND, outbound)?;

    let mut partials = vec![f.zero(); k];
    for payload in &received {
        let col = f.decode_slice(payload, k).map_err(Error::Field)?;
        for (acc, a) in partials.iter_mut().zip(&col) {
            *acc = f.add(acc, a);
        }
    }

    let broadcasts = chan.broadcast(msg::PARTIALS_BROADCAST, f.encode_slice(&partials))?;
    let mut sums = vec![f.zero(); k];
    for payload in &broadcasts {
        let part = f.decode_slice(payload, k).map_err(Error::Field)?;
        for (acc, a) in sums.iter_mut().zip(&part) {
            *acc = f.add(acc, a);
        }
    }
    Ok(sums)
}

/// Checks the blinded sums against the relation `mode` promises. Purely
/// local; every verifier evaluates the same sums and reaches the same
/// answer.
pub fn validate(mode: BlindMode, sums: &[FieldElem], f: &FieldParams) -> bool {
    if sums.len() < 2 {
        return false;
    }
    if sums.iter().any(FieldElem::is_zero) {
        return false;
    }
    match mode {
        BlindMode::Square => {
            // sums[0]^i = sums[i-1] for every i up to P.
            let mut acc = sums[0].clone();
            for expect in &sums[1..] {
                acc = f.mul(&acc, &sums[0]);
                if &acc != expect {
                    return false;
                }
            }
            true
        }
        BlindMode::Product => {
            let mut prod = f.one();
            for s in &sums[..sums.len() - 1] {
                prod = f.mul(&prod, s);
            }
            prod == sums[sums.len() - 1]
        }
        BlindMode::Inverse => {
            let mut prod = f.one();
            for s in sums {
                prod = f.mul(&prod, s);
            }
            prod.is_one()
        }
    }
}

/// Result of one joint verification, as seen by one party.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyOutcome {
    pub accepted: bool,
    pub sums: Vec<FieldElem>,
}

/// Runs one verification session for one submission: secure-sum the blind
/// columns, validate locally, then cross-check verdicts. Three rounds.
pub fn run_verify_party<C, R>(
    chan: &mut C,
    f: &FieldParams,
    submission: &Submission,
    rng: &mut R,
) -> Result<VerifyOutcome>
where
    C: Channel,
    R: RngCore + CryptoRng,
{
    let p = chan.party_count();
    if submission.p_count as usize != p {
        return Err(Error::Param(format!(
            "submission names {} parties, session has {p}",
            submission.p_count
        )));
    }
    if submission.share_column.len() != p {
        return Err(Error::Param("share column length must equal the party count".into()));
    }

    let sums = secure_sum(chan, f, &submission.share_column, rng)?;
    let accepted = validate(submission.mode, &sums, f);

    let verdicts = chan.broadcast(msg::VERDICT, vec![accepted as u8])?;
    for (idx, v) in verdicts.iter().enumerate() {
        let peer = (idx + 1) as crate::PartyId;
        if peer == chan.party_id() {
            continue;
        }
        if v.as_slice() != [accepted as u8] {
            return Err(Error::Transport(TransportError::ProtocolViolation {
                peer,
                what: "verdict disagrees after identical sums".into(),
            }));
        }
    }
    Ok(VerifyOutcome { accepted, sums })
}
