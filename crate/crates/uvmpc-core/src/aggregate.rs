//! The full server-side pipeline: verify every client submission, sum the
//! accepted ones, and release per-coordinate totals through the threshold
//! gate.
//!
//! Each party runs [`run_aggregation`] with its own slice of the clients'
//! submissions (submission `j` everywhere must come from the same client,
//! in the same order). The parties verify each submission in its own
//! session, locally accumulate the additive aggregation rows of the
//! accepted ones, convert the accumulated vector to Shamir sharings in one
//! round, and open only what the threshold circuit allows.
//!
//! Nothing about a rejected submission beyond its verdict, and nothing
//! about an accepted one beyond its contribution to the gated totals, is
//! ever revealed.

use crate::bitconv::{threshold_release_vec, AggregationConfig};
use crate::client::Submission;
use crate::field::{FieldElem, FieldParams};
use crate::shamir::Engine;
use crate::transport::{open_session, Channel, ChannelStats, Network};
use crate::verify::run_verify_party;
use crate::{Error, Result};
use rand::{CryptoRng, RngCore};

/// Protocol tag for the aggregation session's handshake. Verification
/// sessions use the submission's mode tag instead.
pub const AGG_PROTOCOL_TAG: u8 = 0x0A;

/// One party's view of a finished aggregation run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggOutcome {
    /// Per-submission verdicts, in submission order.
    pub verdicts: Vec<bool>,
    /// Released value per coordinate: the column sum where it met the
    /// threshold, zero elsewhere.
    pub released: Vec<FieldElem>,
    /// Every value this party opened during aggregation, with purpose tags,
    /// in order. Verification sums are not reveals and do not appear.
    pub reveals: Vec<(u8, FieldElem)>,
    /// Interactive multiplications spent in the threshold circuit.
    pub bgw_muls: u64,
    /// Rounds and wire bytes across the verification and aggregation
    /// sessions (handshake traffic excluded).
    pub stats: ChannelStats,
}

/// Runs verification and threshold-gated aggregation over `net`.
///
/// `submissions[j]` is this party's share of client `j`'s input; every
/// party must pass the same clients in the same order. `t` is the Shamir
/// degree for the aggregation phase.
pub fn run_aggregation<N, R>(
    net: &N,
    f: &FieldParams,
    t: usize,
    cfg: &AggregationConfig,
    submissions: &[Submission],
    rng: &mut R,
) -> Result<AggOutcome>
where
    N: Network,
    R: RngCore + CryptoRng,
{
    cfg.validate(f)?;
    let first = submissions
        .first()
        .ok_or_else(|| Error::Param("no submissions to aggregate".into()))?;
    let n = first.n as usize;
    if submissions.iter().any(|s| s.n as usize != n) {
        return Err(Error::Param("submissions disagree on the vector length".into()));
    }
    if submissions.len() as u64 > cfg.user_count {
        return Err(Error::Param(format!(
            "{} submissions exceed the configured user count {}",
            submissions.len(),
            cfg.user_count
        )));
    }

    let mut verdicts = Vec::with_capacity(submissions.len());
    let mut additive = vec![f.zero(); n];
    let mut stats = ChannelStats::default();
    for sub in submissions {
        let mut chan = open_session(net, f, sub.mode.tag(), &mut *rng)?;
        let outcome = run_verify_party(&mut chan, f, sub, &mut *rng)?;
        stats.rounds += chan.stats().rounds;
        stats.bytes_sent += chan.stats().bytes_sent;
        verdicts.push(outcome.accepted);
        if outcome.accepted {
            for (acc, v) in additive.iter_mut().zip(&sub.agg_row) {
                *acc = f.add(acc, v);
            }
        }
    }

    let mut chan = open_session(net, f, AGG_PROTOCOL_TAG, &mut *rng)?;
    let mut eng = Engine::new(&mut chan, f, t, rng)?;
    let sums = eng.additive_to_shamir(&additive)?;
    let released = threshold_release_vec(&mut eng, &sums, cfg)?;
    let bgw_muls = eng.stats.bgw_muls;
    let reveals = std::mem::take(&mut eng.stats.reveals);
    let agg = eng.channel_stats();
    stats.rounds += agg.rounds;
    stats.bytes_sent += agg.bytes_sent;

    Ok(AggOutcome { verdicts, released, reveals, bgw_muls, stats })
}
