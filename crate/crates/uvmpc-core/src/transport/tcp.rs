//! TCP mesh transport.
//!
//! Every party listens on its roster address, dials every lower-numbered
//! party, and accepts connections from the higher-numbered ones, so each
//! pair ends up with exactly one duplex stream. A 7-byte preamble (magic,
//! connection kind, sender id) claims each connection before any frame
//! flows; clients submitting inputs use the same listener with their own
//! kind byte and party id 0.
//!
//! One reader thread per peer feeds a shared inbox keyed by (session,
//! sender). Delivery per key is FIFO, which is what makes rounds implicit:
//! an `exchange` sends one frame per peer, then pops exactly one inbound
//! frame per peer for its session. Sessions multiplex freely over the same
//! streams as long as each session handle stays on one thread.

use super::{
    Channel, ChannelStats, Frame, Network, PartyId, SessionId, TransportError, CLIENT_SENDER,
};
use std::collections::{HashMap, VecDeque};
use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex, OnceLock};
use std::time::{Duration, Instant};

const PREAMBLE_MAGIC: [u8; 4] = *b"UVMP";
const KIND_PARTY: u8 = 0x01;
const KIND_CLIENT: u8 = 0x02;

#[derive(Debug, Clone)]
pub struct TcpConfig {
    /// Budget for assembling the full mesh (dial retries included).
    pub connect_timeout: Duration,
    /// How long `exchange` waits for a peer's frame.
    pub round_timeout: Duration,
    /// Pause between dial attempts while a peer's listener is not up yet.
    pub retry_interval: Duration,
}

impl Default for TcpConfig {
    fn default() -> Self {
        TcpConfig {
            connect_timeout: Duration::from_secs(10),
            round_timeout: Duration::from_secs(30),
            retry_interval: Duration::from_millis(50),
        }
    }
}

/// Why a peer stopped producing frames.
enum DeadReason {
    Disconnected,
    BadFrame(String),
}

#[derive(Default)]
struct MeshState {
    /// Frames awaiting pickup, FIFO per (session, sender).
    inbox: HashMap<(SessionId, PartyId), VecDeque<(u8, Vec<u8>)>>,
    dead: HashMap<PartyId, DeadReason>,
    /// Party connections accepted but not yet claimed by setup.
    pending_parties: HashMap<PartyId, TcpStream>,
    /// Client connections awaiting `accept_client`.
    clients: VecDeque<TcpStream>,
}

struct MeshInner {
    me: PartyId,
    p: usize,
    cfg: TcpConfig,
    state: Mutex<MeshState>,
    cv: Condvar,
    /// Write halves, indexed by party - 1; `None` at our own slot. Set
    /// exactly once when the mesh finishes assembling.
    writers: OnceLock<Vec<Option<Mutex<TcpStream>>>>,
    shutdown: AtomicBool,
    /// Clones of every stream, kept so drop can unblock the readers.
    raw_streams: Mutex<Vec<TcpStream>>,
}

impl MeshInner {
    fn begin_shutdown(&self) {
        self.shutdown.store(true, Ordering::SeqCst);
        for s in self.raw_streams.lock().unwrap().iter() {
            let _ = s.shutdown(std::net::Shutdown::Both);
        }
        self.cv.notify_all();
    }
}

/// One party's handle on a live TCP mesh. Dropping it tears the mesh down.
pub struct TcpNet {
    inner: Arc<MeshInner>,
}

impl Drop for TcpNet {
    fn drop(&mut self) {
        self.inner.begin_shutdown();
    }
}

/// Binds ephemeral listeners for an in-process roster of `p` parties.
/// Returns the roster addresses and the listeners in party order.
pub fn local_roster(p: usize) -> std::io::Result<(Vec<SocketAddr>, Vec<TcpListener>)> {
    let mut addrs = Vec::with_capacity(p);
    let mut listeners = Vec::with_capacity(p);
    for _ in 0..p {
        let l = TcpListener::bind("127.0.0.1:0")?;
        addrs.push(l.local_addr()?);
        listeners.push(l);
    }
    Ok((addrs, listeners))
}

fn write_preamble(stream: &mut TcpStream, kind: u8, id: PartyId) -> std::io::Result<()> {
    let mut buf = [0u8; 7];
    buf[..4].copy_from_slice(&PREAMBLE_MAGIC);
    buf[4] = kind;
    buf[5..7].copy_from_slice(&id.to_be_bytes());
    stream.write_all(&buf)?;
    stream.flush()
}

fn read_preamble(stream: &mut TcpStream) -> std::io::Result<(u8, PartyId)> {
    let mut buf = [0u8; 7];
    stream.read_exact(&mut buf)?;
    if buf[..4] != PREAMBLE_MAGIC {
        return Err(std::io::Error::new(std::io::ErrorKind::InvalidData, "bad preamble magic"));
    }
    Ok((buf[4], PartyId::from_be_bytes([buf[5], buf[6]])))
}

impl TcpNet {
    /// Joins the mesh as party `my_id` of `roster` (addresses in party
    /// order), using an already-bound listener for `roster[my_id-1]`.
    /// Blocks until every pairwise connection is up or the connect budget
    /// runs out.
    pub fn connect(
        my_id: PartyId,
        roster: &[SocketAddr],
        listener: TcpListener,
        cfg: TcpConfig,
    ) -> Result<TcpNet, TransportError> {
        let p = roster.len();
        if p == 0 {
            return Err(TransportError::RosterSize { got: 0, want: 1 });
        }
        if my_id < 1 || my_id as usize > p {
            return Err(TransportError::Handshake {
                peer: my_id,
                reason: format!("party id out of range for a roster of {p}"),
            });
        }

        let inner = Arc::new(MeshInner {
            me: my_id,
            p,
            cfg: cfg.clone(),
            state: Mutex::new(MeshState::default()),
            cv: Condvar::new(),
            writers: OnceLock::new(),
            shutdown: AtomicBool::new(false),
            raw_streams: Mutex::new(Vec::new()),
        });

        listener.set_nonblocking(true).map_err(TransportError::Io)?;
        {
            let accept_inner = inner.clone();
            std::thread::spawn(move || accept_loop(accept_inner, listener));
        }

        let deadline = Instant::now() + cfg.connect_timeout;
        let mut streams: Vec<Option<TcpStream>> = (0..p).map(|_| None).collect();

        // Dial every lower id; they are accepting.
        for peer in 1..my_id {
            let addr = roster[peer as usize - 1];
            let mut stream = loop {
                match TcpStream::connect(addr) {
                    Ok(s) => break s,
                    Err(e) => {
                        if Instant::now() >= deadline {
                            return Err(TransportError::Handshake {
                                peer,
                                reason: format!("could not reach {addr}: {e}"),
                            });
                        }
                        std::thread::sleep(cfg.retry_interval);
                    }
                }
            };
            write_preamble(&mut stream, KIND_PARTY, my_id).map_err(TransportError::Io)?;
            streams[peer as usize - 1] = Some(stream);
        }

        // Higher ids dial us; the accept loop parks them in pending.
        let mut st = inner.state.lock().unwrap();
        for peer in (my_id + 1)..=(p as PartyId) {
            loop {
                if let Some(s) = st.pending_parties.remove(&peer) {
                    streams[peer as usize - 1] = Some(s);
                    break;
                }
                let now = Instant::now();
                if now >= deadline {
                    return Err(TransportError::Handshake {
                        peer,
                        reason: "party never connected".into(),
                    });
                }
                let (guard, _) = inner.cv.wait_timeout(st, deadline - now).unwrap();
                st = guard;
            }
        }
        drop(st);

        // Mesh complete: split each stream into a locked writer and a
        // reader thread.
        let mut writers: Vec<Option<Mutex<TcpStream>>> = Vec::with_capacity(p);
        for (idx, slot) in streams.into_iter().enumerate() {
            let peer = (idx + 1) as PartyId;
            match slot {
                None => writers.push(None), // self
                Some(stream) => {
                    let read_half = stream.try_clone().map_err(TransportError::Io)?;
                    inner
                        .raw_streams
                        .lock()
                        .unwrap()
                        .push(stream.try_clone().map_err(TransportError::Io)?);
                    writers.push(Some(Mutex::new(stream)));
                    let reader_inner = inner.clone();
                    std::thread::spawn(move || reader_loop(reader_inner, peer, read_half));
                }
            }
        }
        inner
            .writers
            .set(writers)
            .unwrap_or_else(|_| unreachable!("mesh assembles once"));

        Ok(TcpNet { inner })
    }

    /// Convenience form binding the listener from the roster entry.
    pub fn bind_and_connect(
        my_id: PartyId,
        roster: &[SocketAddr],
        cfg: TcpConfig,
    ) -> Result<TcpNet, TransportError> {
        let idx = my_id
            .checked_sub(1)
            .map(usize::from)
            .filter(|i| *i < roster.len())
            .ok_or(TransportError::Handshake {
                peer: my_id,
                reason: "party id out of range for the roster".into(),
            })?;
        let listener = TcpListener::bind(roster[idx]).map_err(TransportError::Io)?;
        TcpNet::connect(my_id, roster, listener, cfg)
    }

    /// Waits for a client (kind 0x02) connection on our listener. The
    /// returned stream is past its preamble; frames flow directly.
    pub fn accept_client(&self, timeout: Duration) -> Result<TcpStream, TransportError> {
        let deadline = Instant::now() + timeout;
        let mut st = self.inner.state.lock().unwrap();
        loop {
            if let Some(s) = st.clients.pop_front() {
                return Ok(s);
            }
            if self.inner.shutdown.load(Ordering::SeqCst) {
                return Err(TransportError::PeerGone { peer: CLIENT_SENDER });
            }
            let now = Instant::now();
            if now >= deadline {
                return Err(TransportError::Timeout { silent: CLIENT_SENDER, round: 0 });
            }
            let (guard, _) = self.inner.cv.wait_timeout(st, deadline - now).unwrap();
            st = guard;
        }
    }
}

fn accept_loop(inner: Arc<MeshInner>, listener: TcpListener) {
    while !inner.shutdown.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((mut stream, _)) => {
                // Bounded preamble read so a silent connection cannot wedge
                // the acceptor.
                let _ = stream.set_read_timeout(Some(Duration::from_secs(2)));
                let claim = read_preamble(&mut stream);
                let _ = stream.set_read_timeout(None);
                match claim {
                    Ok((KIND_PARTY, id))
                        if id >= 1 && (id as usize) <= inner.p && id != inner.me =>
                    {
                        let mut st = inner.state.lock().unwrap();
                        st.pending_parties.entry(id).or_insert(stream);
                        inner.cv.notify_all();
                    }
                    Ok((KIND_CLIENT, _)) => {
                        if let Ok(c) = stream.try_clone() {
                            inner.raw_streams.lock().unwrap().push(c);
                        }
                        let mut st = inner.state.lock().unwrap();
                        st.clients.push_back(stream);
                        inner.cv.notify_all();
                    }
                    _ => {} // garbage or duplicate claim: drop the stream
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                std::thread::sleep(Duration::from_millis(20));
            }
            Err(_) => break,
        }
    }
}

fn reader_loop(inner: Arc<MeshInner>, peer: PartyId, mut stream: TcpStream) {
    loop {
        match Frame::read_from(&mut stream) {
            Ok(frame) => {
                let reason = if frame.sender != peer {
                    Some(DeadReason::BadFrame(format!(
                        "frame claims sender {}, connection belongs to {peer}",
                        frame.sender
                    )))
                } else {
                    None
                };
                let mut st = inner.state.lock().unwrap();
                match reason {
                    Some(r) => {
                        st.dead.insert(peer, r);
                        inner.cv.notify_all();
                        return;
                    }
                    None => {
                        st.inbox
                            .entry((frame.session, peer))
                            .or_default()
                            .push_back((frame.msg_type, frame.payload));
                        inner.cv.notify_all();
                    }
                }
            }
            Err(e) => {
                let mut st = inner.state.lock().unwrap();
                let reason = match e {
                    TransportError::Io(ref io)
                        if io.kind() == std::io::ErrorKind::UnexpectedEof =>
                    {
                        DeadReason::Disconnected
                    }
                    TransportError::Io(_) => DeadReason::Disconnected,
                    other => DeadReason::BadFrame(other.to_string()),
                };
                st.dead.insert(peer, reason);
                inner.cv.notify_all();
                return;
            }
        }
    }
}

impl Network for TcpNet {
    type Chan = TcpChannel;

    fn my_id(&self) -> PartyId {
        self.inner.me
    }

    fn party_count(&self) -> usize {
        self.inner.p
    }

    fn session(&self, id: SessionId) -> TcpChannel {
        TcpChannel {
            inner: self.inner.clone(),
            session: id,
            round: 0,
            stats: ChannelStats::default(),
        }
    }
}

/// One session handle over the mesh. Single-owner: drive it from one
/// thread; distinct sessions may run on distinct threads concurrently.
pub struct TcpChannel {
    inner: Arc<MeshInner>,
    session: SessionId,
    round: u32,
    stats: ChannelStats,
}

impl Channel for TcpChannel {
    fn party_id(&self) -> PartyId {
        self.inner.me
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
        let me = self.inner.me;
        assert_eq!(outbound.len(), p, "one outbound payload per party");
        let loopback = std::mem::take(&mut outbound[me as usize - 1]);

        let writers = self.inner.writers.get().expect("mesh is assembled");
        for (idx, payload) in outbound.into_iter().enumerate() {
            let to = (idx + 1) as PartyId;
            if to == me {
                continue;
            }
            let frame = Frame::new(msg_type, self.session, me, payload);
            let writer = writers[idx].as_ref().expect("writer exists for every peer");
            let mut guard = writer.lock().unwrap();
            // A failed write means the connection is dead; name the peer
            // instead of surfacing a bare io error.
            let n = frame
                .write_to(&mut *guard)
                .map_err(|_| TransportError::PeerGone { peer: to })?;
            self.stats.bytes_sent += n as u64;
        }

        let deadline = Instant::now() + self.inner.cfg.round_timeout;
        let mut inbound: Vec<Vec<u8>> = vec![Vec::new(); p];
        inbound[me as usize - 1] = loopback;
        let mut st = self.inner.state.lock().unwrap();
        for from in 1..=p as PartyId {
            if from == me {
                continue;
            }
            let (got_type, payload) = loop {
                if let Some(queue) = st.inbox.get_mut(&(self.session, from)) {
                    if let Some(entry) = queue.pop_front() {
                        break entry;
                    }
                }
                match st.dead.get(&from) {
                    Some(DeadReason::Disconnected) => {
                        return Err(TransportError::PeerGone { peer: from });
                    }
                    Some(DeadReason::BadFrame(what)) => {
                        return Err(TransportError::ProtocolViolation {
                            peer: from,
                            what: what.clone(),
                        });
                    }
                    None => {}
                }
                if self.inner.shutdown.load(Ordering::SeqCst) {
                    return Err(TransportError::PeerGone { peer: from });
                }
                let now = Instant::now();
                if now >= deadline {
                    return Err(TransportError::Timeout { silent: from, round: self.round });
                }
                let (guard, _) = self.inner.cv.wait_timeout(st, deadline - now).unwrap();
                st = guard;
            };
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

/// Client side of a submission connection: dials a verifier, claims the
/// connection with the client preamble, and returns the ready stream.
pub fn client_connect(addr: SocketAddr, timeout: Duration) -> Result<TcpStream, TransportError> {
    let deadline = Instant::now() + timeout;
    let mut stream = loop {
        match TcpStream::connect(addr) {
            Ok(s) => break s,
            Err(e) => {
                if Instant::now() >= deadline {
                    return Err(TransportError::Io(e));
                }
                std::thread::sleep(Duration::from_millis(50));
            }
        }
    };
    write_preamble(&mut stream, KIND_CLIENT, CLIENT_SENDER).map_err(TransportError::Io)?;
    Ok(stream)
}
