//! Deterministic in-process network.
//!
//! All parties share a hub keyed by (session, round, sender, receiver).
//! `exchange` posts the caller's outbound payloads, then blocks on a condvar
//! until every peer's payload for the same round is present. Slots are
//! consumed on read, so round numbers can restart (the control session does
//! this on every handshake) without cross-talk.
//!
//! Every frame is also appended to a transcript. Records carry a per-sender
//! sequence number assigned in program order, which makes the canonicalized
//! transcript a pure function of the protocol run: two runs with the same
//! seeds produce byte-identical transcripts regardless of thread scheduling.

use super::{
    Channel, ChannelStats, Frame, Network, PartyId, SessionId, Transcript, TranscriptRecord,
    TransportError, CLIENT_SENDER,
};
use std::collections::HashMap;
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

#[derive(Debug, Clone)]
pub struct SimConfig {
    /// How long `exchange` waits for peers before declaring one silent.
    pub timeout: Duration,
    /// Optional fixed latency added to every exchange, for latency studies.
    pub per_message_delay: Option<Duration>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { timeout: Duration::from_secs(10), per_message_delay: None }
    }
}

type SlotKey = (SessionId, u32, PartyId, PartyId);

#[derive(Default)]
struct HubState {
    slots: HashMap<SlotKey, (u8, Vec<u8>)>,
    transcript: Vec<TranscriptRecord>,
    sender_seq: HashMap<PartyId, u64>,
}

struct SimInner {
    p: usize,
    cfg: SimConfig,
    state: Mutex<HubState>,
    cv: Condvar,
}

/// Factory for one simulated network of `p` parties.
pub struct SimNet {
    inner: Arc<SimInner>,
}

impl SimNet {
    pub fn new(p: usize, cfg: SimConfig) -> Self {
        assert!(p >= 1, "a network needs at least one party");
        SimNet {
            inner: Arc::new(SimInner {
                p,
                cfg,
                state: Mutex::new(HubState::default()),
                cv: Condvar::new(),
            }),
        }
    }

    pub fn party_count(&self) -> usize {
        self.inner.p
    }

    pub fn endpoint(&self, id: PartyId) -> SimEndpoint {
        assert!(id >= 1 && (id as usize) <= self.inner.p, "party id out of range");
        SimEndpoint { inner: self.inner.clone(), id }
    }

    /// Copy of the transcript so far, in canonical order.
    pub fn transcript(&self) -> Transcript {
        let st = self.inner.state.lock().unwrap();
        let mut records = st.transcript.clone();
        drop(st);
        records.sort_by(|a, b| {
            (a.frame.session, a.frame.sender, a.seq, a.to)
                .cmp(&(b.frame.session, b.frame.sender, b.seq, b.to))
        });
        Transcript::new(records)
    }

    /// Records client submission frames (sender 0) so transcripts cover the
    /// full session. Payloads are indexed by receiving party - 1.
    pub fn record_submission(&self, session: SessionId, payloads: &[Vec<u8>]) {
        let mut st = self.inner.state.lock().unwrap();
        for (idx, payload) in payloads.iter().enumerate() {
            let seq = st.sender_seq.entry(CLIENT_SENDER).or_insert(0);
            let s = *seq;
            *seq += 1;
            st.transcript.push(TranscriptRecord {
                round: 0,
                seq: s,
                to: (idx + 1) as PartyId,
                frame: Frame::new(super::msg::SUBMIT, session, CLIENT_SENDER, payload.clone()),
            });
        }
    }

    /// Runs one closure per party on its own thread and collects the results
    /// in party order. Panics in a party propagate.
    pub fn run_each<T, F>(&self, f: F) -> Vec<crate::Result<T>>
    where
        T: Send,
        F: Fn(SimEndpoint) -> crate::Result<T> + Sync,
    {
        let p = self.inner.p;
        std::thread::scope(|scope| {
            let handles: Vec<_> = (1..=p as PartyId)
                .map(|id| {
                    let ep = self.endpoint(id);
                    let f = &f;
                    scope.spawn(move || f(ep))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|e| std::panic::resume_unwind(e)))
                .collect()
        })
    }

    /// Like [`run_each`](Self::run_each) but demands success everywhere;
    /// the first failing party's error is returned.
    pub fn run<T, F>(&self, f: F) -> crate::Result<Vec<T>>
    where
        T: Send,
        F: Fn(SimEndpoint) -> crate::Result<T> + Sync,
    {
        self.run_each(f).into_iter().collect()
    }
}

/// One party's handle on the simulated network.
pub struct SimEndpoint {
    inner: Arc<SimInner>,
    id: PartyId,
}

impl Network for SimEndpoint {
    type Chan = SimChannel;

    fn my_id(&self) -> PartyId {
        self.id
    }

    fn party_count(&self) -> usize {
        self.inner.p
    }

    fn session(&self, id: SessionId) -> SimChannel {
        SimChannel {
            inner: self.inner.clone(),
            me: self.id,
            session: id,
            round: 0,
            stats: ChannelStats::default(),
        }
    }
}

pub struct SimChannel {
    inner: Arc<SimInner>,
    me: PartyId,
    session: SessionId,
    round: u32,
    stats: ChannelStats,
}

impl Channel for SimChannel {
    fn party_id(&self) -> PartyId {
        self.me
    }

    fn party_count(&self) -> usize {
        self.inner.p
    }

    fn exchange(
        &mut self,
        msg_type: u8,
        mut outbound: Vec<Vec<u8>>,
    ) -> Result<Vec<Vec<u8>>, TransportError> {
        let p = self.inner.p;
        assert_eq!(outbound.len(), p, "one outbound payload per party");
        if let Some(d) = self.inner.cfg.per_message_delay {
            std::thread::sleep(d);
        }
        let round = self.round;
        let loopback = std::mem::take(&mut outbound[self.me as usize - 1]);

        let mut st = self.inner.state.lock().unwrap();
        for (idx, payload) in outbound.into_iter().enumerate() {
            let to = (idx + 1) as PartyId;
            if to == self.me {
                continue;
            }
            let frame = Frame::new(msg_type, self.session, self.me, payload);
            self.stats.bytes_sent += frame.wire_len() as u64;
            let seq = st.sender_seq.entry(self.me).or_insert(0);
            let s = *seq;
            *seq += 1;
            let key = (self.session, round, self.me, to);
            st.transcript.push(TranscriptRecord { round, seq: s, to, frame: frame.clone() });
            st.slots.insert(key, (msg_type, frame.payload));
        }
        self.inner.cv.notify_all();

        let deadline = Instant::now() + self.inner.cfg.timeout;
        let mut inbound: Vec<Vec<u8>> = vec![Vec::new(); p];
        inbound[self.me as usize - 1] = loopback;
        loop {
            let missing = (1..=p as PartyId)
                .find(|&from| from != self.me && !st.slots.contains_key(&(self.session, round, from, self.me)));
            match missing {
                None => break,
                Some(silent) => {
                    let now = Instant::now();
                    if now >= deadline {
                        return Err(TransportError::Timeout { silent, round });
                    }
                    let (guard, _) = self.inner.cv.wait_timeout(st, deadline - now).unwrap();
                    st = guard;
                }
            }
        }
        for from in 1..=p as PartyId {
            if from == self.me {
                continue;
            }
            let (got_type, payload) =
                st.slots.remove(&(self.session, round, from, self.me)).unwrap();
            if got_type != msg_type {
                return Err(TransportError::WrongMsgType {
                    peer: from,
                    expected: msg_type,
                    got: got_type,
                });
            }
            inbound[from as usize - 1] = payload;
        }
        self.round += 1;
        self.stats.rounds += 1;
        Ok(inbound)
    }

    fn stats(&self) -> ChannelStats {
        self.stats
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::msg;

    #[test]
    fn exchange_routes_distinct_payloads() {
        let net = SimNet::new(3, SimConfig::default());
        let out = net
            .run(|ep| {
                let me = ep.my_id();
                let mut chan = ep.session([1u8; 16]);
                let outbound: Vec<Vec<u8>> =
                    (1..=3u8).map(|to| vec![me as u8 * 10 + to]).collect();
                let inbound = chan.exchange(msg::SHAMIR_DEAL, outbound)?;
                Ok(inbound)
            })
            .unwrap();
        // Party 2 hears 1->2 as [12], its own loopback [22], and 3->2 as [32].
        assert_eq!(out[1], vec![vec![12], vec![22], vec![32]]);
        assert_eq!(out[0], vec![vec![11], vec![21], vec![31]]);
    }

    #[test]
    fn timeout_names_the_silent_party() {
        let cfg = SimConfig { timeout: Duration::from_millis(100), per_message_delay: None };
        let net = SimNet::new(3, cfg);
        let results = net.run_each(|ep| {
            if ep.my_id() == 2 {
                return Ok(()); // never shows up
            }
            let mut chan = ep.session([1u8; 16]);
            chan.broadcast(msg::VERDICT, vec![1])?;
            Ok(())
        });
        assert!(results[1].is_ok());
        for idx in [0usize, 2] {
            match &results[idx] {
                Err(crate::Error::Transport(TransportError::Timeout { silent, .. })) => {
                    assert_eq!(*silent, 2)
                }
                other => panic!("party {} expected timeout, got {:?}", idx + 1, other.is_ok()),
            }
        }
    }

    #[test]
    fn stats_count_rounds_and_wire_bytes() {
        let net = SimNet::new(3, SimConfig::default());
        let stats = net
            .run(|ep| {
                let mut chan = ep.session([2u8; 16]);
                chan.broadcast(msg::VERDICT, vec![0xAA; 5])?;
                chan.broadcast(msg::VERDICT, Vec::new())?;
                Ok(chan.stats())
            })
            .unwrap();
        for s in stats {
            assert_eq!(s.rounds, 2);
            // Two peers per round: (23 + 5) * 2 + 23 * 2.
            assert_eq!(s.bytes_sent, 2 * 28 + 2 * 23);
        }
    }

    #[test]
    fn transcript_is_deterministic_across_runs() {
        let run = || {
            let net = SimNet::new(4, SimConfig::default());
            net.run(|ep| {
                let mut chan = ep.session([3u8; 16]);
                for r in 0..5u8 {
                    let outbound: Vec<Vec<u8>> = (1..=4u8)
                        .map(|to| vec![ep.my_id() as u8, to, r])
                        .collect();
                    chan.exchange(msg::MULT_RESHARE, outbound)?;
                }
                Ok(())
            })
            .unwrap();
            net.transcript().encode()
        };
        assert_eq!(run(), run());
    }
}
