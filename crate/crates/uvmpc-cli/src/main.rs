//! Command-line frontend: prime generation, a live verifier daemon, client
//! submission, local end-to-end aggregation, benchmark sweeps, and the
//! transcript audit.
//!
//! Errors go to stderr as one JSON object. Exit codes: 0 success, 2 usage
//! error, 3 protocol abort, 1 other runtime failures (including a failed
//! audit).

use clap::{Args, Parser, Subcommand};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Deserialize;
use serde_json::json;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;
use uvmpc_core::aggregate::{run_aggregation, AggOutcome};
use uvmpc_core::bitconv::{threshold_release_vec, AggregationConfig};
use uvmpc_core::client::{prepare_input, BlindMode, Submission};
use uvmpc_core::field::OpMeter;
use uvmpc_core::harness::{
    run_bitconv_bench, run_verify_bench, write_csv, BenchFixed, BenchSpec, SweepVar,
};
use uvmpc_core::shamir::Engine;
use uvmpc_core::transport::sim::{SimConfig, SimNet};
use uvmpc_core::transport::tcp::{client_connect, local_roster, TcpConfig, TcpNet};
use uvmpc_core::transport::{
    audit_reveals, msg, open_session, Frame, Network, Transcript, CLIENT_SENDER,
};
use uvmpc_core::verify::run_verify_party;
use uvmpc_core::{Channel, FieldElem, FieldParams, PartyId, SessionId};

#[derive(Parser)]
#[command(name = "uvmpc", version, about = "Unit-vector validation and threshold aggregation")]
struct Cli {
    /// JSON config file; explicit flags win over its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a field prime and print it as hex.
    PrimeGen(PrimeGenArgs),
    /// Client-side operations.
    #[command(subcommand)]
    Client(ClientCmd),
    /// Run one verification party as a TCP daemon.
    Verifier(VerifierArgs),
    /// Run a full aggregation locally, on the simulator or a TCP roster.
    Aggregate(AggregateArgs),
    /// Benchmark sweeps.
    #[command(subcommand)]
    Bench(BenchCmd),
    /// Audits over recorded artifacts.
    #[command(subcommand)]
    Audit(AuditCmd),
}

#[derive(Args)]
struct PrimeGenArgs {
    /// Prime width in bits.
    #[arg(long)]
    bits: u32,
    /// Deterministic generation seed; omitted means a random prime.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum ClientCmd {
    /// Blind a unit vector and submit one share column to every verifier.
    Submit(SubmitArgs),
}

#[derive(Args)]
struct SubmitArgs {
    #[command(flatten)]
    field: FieldArgs,
    /// Verifier addresses, comma-separated host:port in party order.
    #[arg(long, value_delimiter = ',')]
    parties: Vec<String>,
    /// Input vector, comma-separated entries, e.g. 0,0,1,0.
    #[arg(long, conflicts_with_all = ["index", "n"])]
    vector: Option<String>,
    /// Unit coordinate to encode (with --n).
    #[arg(long, requires = "n")]
    index: Option<usize>,
    /// Vector length (with --index).
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    mode: Option<String>,
    /// Session id as 32 hex chars; omitted means random.
    #[arg(long)]
    session: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    timeout_ms: Option<u64>,
}

#[derive(Args)]
struct VerifierArgs {
    /// This party's id, 1-based position in the roster.
    #[arg(long)]
    id: PartyId,
    /// Roster addresses, comma-separated host:port in party order.
    #[arg(long, value_delimiter = ',')]
    parties: Vec<String>,
    #[command(flatten)]
    field: FieldArgs,
    /// Listen address override; defaults to the roster entry.
    #[arg(long)]
    listen: Option<String>,
    /// Client submissions to serve before exiting.
    #[arg(long, default_value_t = 1)]
    sessions: u32,
    /// Shamir degree; defaults to the honest-majority maximum.
    #[arg(long)]
    t: Option<usize>,
    /// Release threshold; enables the aggregation phase after the last
    /// session.
    #[arg(long)]
    thresh: Option<u64>,
    /// Configured user cap for the aggregation phase.
    #[arg(long)]
    user_count: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    timeout_ms: Option<u64>,
}

#[derive(Args)]
struct AggregateArgs {
    /// Client vectors: semicolon-separated, comma-delimited entries,
    /// e.g. "1,0,0;0,0,1".
    #[arg(long)]
    clients: String,
    #[command(flatten)]
    field: FieldArgs,
    /// Party count.
    #[arg(long)]
    parties: Option<usize>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    thresh: Option<u64>,
    #[arg(long)]
    user_count: Option<u64>,
    /// sim or tcp (in-process localhost roster).
    #[arg(long, default_value = "sim")]
    transport: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the simulator transcript here (sim transport only).
    #[arg(long)]
    transcript_out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BenchCmd {
    /// Sweep the client+verifier pipeline.
    Verify(BenchArgs),
    /// Sweep the threshold-release circuit over bit widths.
    Bitconv(BenchArgs),
}

#[derive(Args)]
struct BenchArgs {
    /// Sweep variable: field_bits, mode, queries, vector_len, parties
    /// (verify) or bit_width (bitconv).
    #[arg(long)]
    sweep: Option<String>,
    /// Sweep points, comma-separated.
    #[arg(long, value_delimiter = ',')]
    values: Vec<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    field_bits: Option<u32>,
    #[arg(long)]
    parties: Option<usize>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    queries: Option<usize>,
    #[arg(long, default_value_t = 1)]
    reps: u32,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Use the exponentiation form of the Square construction.
    #[arg(long, default_value_t = false)]
    naive_square: bool,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum AuditCmd {
    /// Check a recorded transcript for disallowed reveals.
    Transcript { file: PathBuf },
}

#[derive(Args)]
struct FieldArgs {
    /// Prime width in bits; the prime is derived deterministically from
    /// --field-seed so every participant lands on the same field.
    #[arg(long)]
    field_bits: Option<u32>,
    #[arg(long, default_value_t = 1)]
    field_seed: u64,
    /// Explicit prime (hex), overriding --field-bits.
    #[arg(long)]
    prime: Option<String>,
}

/// Optional values from --config, merged under explicit flags.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    parties: Option<Vec<String>>,
    field_bits: Option<u32>,
    mode: Option<String>,
    t: Option<usize>,
    thresh: Option<u64>,
    timeout_ms: Option<u64>,
}

enum CliError {
    Usage(String),
    Abort(String),
    Runtime(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Abort(_) => "abort",
            CliError::Runtime(_) => "runtime",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Abort(m) | CliError::Runtime(m) => m,
        }
    }

    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Abort(_) => 3,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<uvmpc_core::Error> for CliError {
    fn from(e: uvmpc_core::Error) -> Self {
        if e.is_protocol_abort() || matches!(e, uvmpc_core::Error::Exhausted(_)) {
            CliError::Abort(e.to_string())
        } else if matches!(e, uvmpc_core::Error::Param(_)) {
            CliError::Usage(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

impl From<uvmpc_core::transport::TransportError> for CliError {
    fn from(e: uvmpc_core::transport::TransportError) -> Self {
        CliError::from(uvmpc_core::Error::from(e))
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                std::process::exit(0);
            }
            eprintln!(
                "{}",
                json!({"error": e.to_string(), "kind": "usage"})
            );
            std::process::exit(2);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("{}", json!({"error": e.message(), "kind": e.kind()}));
        std::process::exit(e.exit_code());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = load_config(cli.config.as_deref())?;
    match cli.cmd {
        Cmd::PrimeGen(a) => prime_gen(a),
        Cmd::Client(ClientCmd::Submit(a)) => client_submit(a, &config),
        Cmd::Verifier(a) => verifier(a, &config),
        Cmd::Aggregate(a) => aggregate(a, &config),
        Cmd::Bench(b) => bench(b, &config),
        Cmd::Audit(AuditCmd::Transcript { file }) => audit_transcript(&file),
    }
}

fn load_config(path: Option<&std::path::Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else { return Ok(FileConfig::default()) };
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| usage(format!("bad config {}: {e}", path.display())))
}

fn parse_mode(flag: Option<&str>, config: &FileConfig) -> Result<BlindMode, CliError> {
    let name = flag
        .or(config.mode.as_deref())
        .ok_or_else(|| usage("no blinding mode given (flag --mode or config)"))?;
    name.parse::<BlindMode>().map_err(usage)
}

fn resolve_field(args: &FieldArgs, config: &FileConfig) -> Result<FieldParams, CliError> {
    if let Some(hexstr) = &args.prime {
        let digits = hexstr.trim_start_matches("0x");
        let bytes = hex::decode(digits)
            .map_err(|e| usage(format!("--prime is not hex: {e}")))?;
        let p = num_bigint_from_bytes(&bytes);
        return FieldParams::from_prime(p).map_err(|e| usage(e.to_string()));
    }
    let bits = args
        .field_bits
        .or(config.field_bits)
        .ok_or_else(|| usage("no field given (flag --field-bits/--prime or config)"))?;
    FieldParams::generate(bits, Some(args.field_seed)).map_err(|e| usage(e.to_string()))
}

fn num_bigint_from_bytes(bytes: &[u8]) -> num_bigint::BigUint {
    num_bigint::BigUint::from_bytes_be(bytes)
}

fn parse_roster(
    flags: &[String],
    config: &FileConfig,
) -> Result<Vec<SocketAddr>, CliError> {
    let list: Vec<String> = if !flags.is_empty() {
        flags.to_vec()
    } else {
        config.parties.clone().unwrap_or_default()
    };
    if list.is_empty() {
        return Err(usage("no roster given (flag --parties or config)"));
    }
    list.iter()
        .map(|s| {
            s.parse::<SocketAddr>()
                .map_err(|e| usage(format!("bad address {s:?}: {e}")))
        })
        .collect()
}

fn parse_vector(f: &FieldParams, text: &str) -> Result<Vec<FieldElem>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .map(|v| f.elem(v))
                .map_err(|e| usage(format!("bad vector entry {s:?}: {e}")))
        })
        .collect()
}

fn parse_session(text: Option<&str>) -> Result<SessionId, CliError> {
    match text {
        None => {
            let mut id = [0u8; 16];
            rand::rngs::OsRng.fill_bytes(&mut id);
            Ok(id)
        }
        Some(hexstr) => {
            let bytes = hex::decode(hexstr)
                .map_err(|e| usage(format!("--session is not hex: {e}")))?;
            bytes
                .try_into()
                .map_err(|_| usage("--session must be 32 hex chars"))
        }
    }
}

fn seeded_rng(seed: Option<u64>, lane: u64) -> ChaCha20Rng {
    match seed {
        Some(s) => ChaCha20Rng::seed_from_u64(s.wrapping_add(lane)),
        None => ChaCha20Rng::from_rng(rand::rngs::OsRng).expect("system entropy"),
    }
}

fn elem_strings(f: &FieldParams, elems: &[FieldElem]) -> Vec<String> {
    let _ = f;
    elems.iter().map(|e| e.as_uint().to_string()).collect()
}

fn prime_gen(a: PrimeGenArgs) -> Result<(), CliError> {
    let f = FieldParams::generate(a.bits, a.seed).map_err(|e| usage(e.to_string()))?;
    println!("{:x}", f.prime());
    Ok(())
}

fn client_submit(a: SubmitArgs, config: &FileConfig) -> Result<(), CliError> {
    let f = resolve_field(&a.field, config)?;
    let roster = parse_roster(&a.parties, config)?;
    let mode = parse_mode(a.mode.as_deref(), config)?;
    let timeout =
        Duration::from_millis(a.timeout_ms.or(config.timeout_ms).unwrap_or(10_000));
    let vector = match (&a.vector, a.index, a.n) {
        (Some(text), _, _) => parse_vector(&f, text)?,
        (None, Some(i), Some(n)) => {
            if i >= n as usize {
                return Err(usage(format!("--index {i} outside a vector of {n}")));
            }
            (0..n as usize)
                .map(|j| if j == i { f.one() } else { f.zero() })
                .collect()
        }
        _ => return Err(usage("give --vector, or --index with --n")),
    };

    let session = parse_session(a.session.as_deref())?;
    let mut rng = seeded_rng(a.seed, 0);
    let meter = OpMeter::new();
    let out = prepare_input(&vector, mode, false, roster.len(), &f, &mut rng, &meter)?;

    // One connection per verifier; each gets its own column, then reports
    // its verdict back on the same stream.
    let mut streams = Vec::with_capacity(roster.len());
    for (i, addr) in roster.iter().enumerate() {
        let mut stream = client_connect(*addr, timeout)?;
        stream
            .set_read_timeout(Some(timeout))
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        let payload = out.submissions[i].encode(&f);
        Frame::new(msg::SUBMIT, session, CLIENT_SENDER, payload).write_to(&mut stream)?;
        streams.push(stream);
    }
    let mut verdicts = Vec::with_capacity(streams.len());
    for mut stream in streams {
        let frame = Frame::read_from(&mut stream)?;
        if frame.msg_type != msg::VERDICT {
            return Err(CliError::Abort(format!(
                "verifier answered message type {:#04x}, wanted a verdict",
                frame.msg_type
            )));
        }
        verdicts.push(frame.payload.first().copied() == Some(1));
    }
    let accepted = verdicts.iter().all(|&v| v);
    println!(
        "{}",
        json!({
            "session": hex::encode(session),
            "verdicts": verdicts,
            "accepted": accepted,
        })
    );
    Ok(())
}

fn verifier(a: VerifierArgs, config: &FileConfig) -> Result<(), CliError> {
    let f = resolve_field(&a.field, config)?;
    let roster = parse_roster(&a.parties, config)?;
    let p = roster.len();
    let t = a.t.or(config.t).unwrap_or_else(|| p.saturating_sub(1) / 2);
    let timeout =
        Duration::from_millis(a.timeout_ms.or(config.timeout_ms).unwrap_or(30_000));
    let thresh = a.thresh.or(config.thresh);

    let idx = a
        .id
        .checked_sub(1)
        .map(usize::from)
        .filter(|i| *i < p)
        .ok_or_else(|| usage(format!("--id {} outside a roster of {p}", a.id)))?;
    let listen = match &a.listen {
        Some(addr) => addr
            .parse::<SocketAddr>()
            .map_err(|e| usage(format!("bad --listen {addr:?}: {e}")))?,
        None => roster[idx],
    };
    let listener = std::net::TcpListener::bind(listen)
        .map_err(|e| CliError::Runtime(format!("cannot listen on {listen}: {e}")))?;
    let cfg = TcpConfig {
        connect_timeout: timeout,
        round_timeout: timeout,
        ..TcpConfig::default()
    };
    let net = TcpNet::connect(a.id, &roster, listener, cfg)?;
    let mut rng = seeded_rng(a.seed, a.id as u64);

    let mut additive: Option<Vec<FieldElem>> = None;
    let mut accepted_count = 0u64;
    for _ in 0..a.sessions {
        let mut conn = net.accept_client(timeout)?;
        conn.set_read_timeout(Some(timeout))
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        let frame = Frame::read_from(&mut conn)?;
        if frame.msg_type != msg::SUBMIT {
            return Err(CliError::Abort(format!(
                "client sent message type {:#04x}, wanted a submission",
                frame.msg_type
            )));
        }
        let sub = Submission::decode(&frame.payload, &f)?;
        if sub.p_count as usize != p {
            return Err(usage(format!(
                "submission built for {} parties, roster has {p}",
                sub.p_count
            )));
        }

        let mut chan = open_session(&net, &f, sub.mode.tag(), &mut rng)?;
        // All parties must be serving the same client before mixing shares.
        let echoes = chan.broadcast(msg::SUBMIT, frame.session.to_vec())?;
        if echoes.iter().any(|e| e[..] != frame.session[..]) {
            return Err(CliError::Abort(
                "parties are serving different clients in the same slot".into(),
            ));
        }
        let outcome = run_verify_party(&mut chan, &f, &sub, &mut rng)?;

        let verdict = Frame::new(
            msg::VERDICT,
            frame.session,
            a.id,
            vec![outcome.accepted as u8],
        );
        verdict.write_to(&mut conn)?;
        println!(
            "{}",
            json!({
                "session": hex::encode(frame.session),
                "accepted": outcome.accepted,
            })
        );
        if outcome.accepted {
            accepted_count += 1;
            let acc = additive.get_or_insert_with(|| vec![f.zero(); sub.n as usize]);
            if acc.len() != sub.n as usize {
                return Err(usage("clients disagree on the vector length"));
            }
            for (a, v) in acc.iter_mut().zip(&sub.agg_row) {
                *a = f.add(a, v);
            }
        }
    }

    if let Some(thresh) = thresh {
        let Some(additive) = additive else {
            println!("{}", json!({"released": [], "accepted_count": 0}));
            return Ok(());
        };
        let cfg = AggregationConfig {
            thresh: f.elem(thresh),
            user_count: a.user_count.unwrap_or(accepted_count),
        };
        let mut chan = open_session(&net, &f, uvmpc_core::aggregate::AGG_PROTOCOL_TAG, &mut rng)?;
        let mut eng = Engine::new(&mut chan, &f, t, &mut rng)?;
        let sums = eng.additive_to_shamir(&additive)?;
        let released = threshold_release_vec(&mut eng, &sums, &cfg)?;
        println!(
            "{}",
            json!({
                "released": elem_strings(&f, &released),
                "accepted_count": accepted_count,
            })
        );
    }
    Ok(())
}

fn aggregate(a: AggregateArgs, config: &FileConfig) -> Result<(), CliError> {
    let f = resolve_field(&a.field, config)?;
    let p = a
        .parties
        .or_else(|| config.parties.as_ref().map(|v| v.len()))
        .ok_or_else(|| usage("no party count given (flag --parties or config)"))?;
    let mode = parse_mode(a.mode.as_deref(), config)?;
    let t = a.t.or(config.t).unwrap_or_else(|| p.saturating_sub(1) / 2);
    let thresh = a.thresh.or(config.thresh).unwrap_or(1);

    let vectors: Vec<Vec<FieldElem>> = a
        .clients
        .split(';')
        .map(|v| parse_vector(&f, v))
        .collect::<Result<_, _>>()?;
    if vectors.is_empty() {
        return Err(usage("no client vectors given"));
    }
    let n = vectors[0].len();
    if vectors.iter().any(|v| v.len() != n) {
        return Err(usage("client vectors must share one length"));
    }
    let cfg = AggregationConfig {
        thresh: f.elem(thresh),
        user_count: a.user_count.unwrap_or(vectors.len() as u64),
    };

    let meter = OpMeter::new();
    let outs: Vec<_> = vectors
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut rng = ChaCha20Rng::seed_from_u64(a.seed.wrapping_add(1000 + i as u64));
            prepare_input(v, mode, false, p, &f, &mut rng, &meter)
        })
        .collect::<Result<_, _>>()?;

    let outcomes: Vec<AggOutcome> = match a.transport.as_str() {
        "sim" => {
            let net = SimNet::new(p, SimConfig::default());
            for c in &outs {
                let payloads: Vec<Vec<u8>> =
                    c.submissions.iter().map(|s| s.encode(&f)).collect();
                net.record_submission([0u8; 16], &payloads);
            }
            let outcomes = net.run(|ep| {
                let id = ep.my_id();
                let mut rng = ChaCha20Rng::seed_from_u64(a.seed.wrapping_add(id as u64));
                let subs: Vec<Submission> = outs
                    .iter()
                    .map(|c| c.submissions[id as usize - 1].clone())
                    .collect();
                run_aggregation(&ep, &f, t, &cfg, &subs, &mut rng)
            })?;
            if let Some(path) = &a.transcript_out {
                net.transcript().write_file(path)?;
            }
            outcomes
        }
        "tcp" => {
            if a.transcript_out.is_some() {
                return Err(usage("transcript capture works on the simulator only"));
            }
            let (addrs, listeners) =
                local_roster(p).map_err(|e| CliError::Runtime(e.to_string()))?;
            let joined: Vec<Result<AggOutcome, uvmpc_core::Error>> =
                std::thread::scope(|scope| {
                    let handles: Vec<_> = listeners
                        .into_iter()
                        .enumerate()
                        .map(|(idx, l)| {
                            let (f, addrs, cfg, outs) = (&f, &addrs, &cfg, &outs);
                            let seed = a.seed;
                            scope.spawn(move || {
                                let id = (idx + 1) as PartyId;
                                let net =
                                    TcpNet::connect(id, addrs, l, TcpConfig::default())?;
                                let mut rng = ChaCha20Rng::seed_from_u64(
                                    seed.wrapping_add(id as u64),
                                );
                                let subs: Vec<Submission> = outs
                                    .iter()
                                    .map(|c| c.submissions[idx].clone())
                                    .collect();
                                run_aggregation(&net, f, t, cfg, &subs, &mut rng)
                            })
                        })
                        .collect();
                    handles.into_iter().map(|h| h.join().unwrap()).collect()
                });
            joined.into_iter().collect::<Result<_, _>>()?
        }
        other => return Err(usage(format!("unknown transport {other:?}"))),
    };

    let first = &outcomes[0];
    if outcomes.iter().any(|o| o.released != first.released) {
        return Err(CliError::Abort("parties released different values".into()));
    }
    println!(
        "{}",
        json!({
            "verdicts": first.verdicts,
            "released": elem_strings(&f, &first.released),
            "bgw_mults": first.bgw_muls,
            "rounds": first.stats.rounds,
            "bytes_sent": first.stats.bytes_sent,
        })
    );
    Ok(())
}

fn bench(cmd: BenchCmd, config: &FileConfig) -> Result<(), CliError> {
    let (args, bitconv) = match &cmd {
        BenchCmd::Verify(a) => (a, false),
        BenchCmd::Bitconv(a) => (a, true),
    };
    let sweep: SweepVar = if bitconv {
        match args.sweep.as_deref() {
            None | Some("bit_width") => SweepVar::BitWidth,
            Some(other) => {
                return Err(usage(format!("bitconv sweeps bit_width, not {other:?}")))
            }
        }
    } else {
        args.sweep
            .as_deref()
            .ok_or_else(|| usage("give --sweep"))?
            .parse()
            .map_err(usage)?
    };
    if args.values.is_empty() {
        return Err(usage("give --values"));
    }
    let mut fixed = BenchFixed {
        seed: args.seed,
        naive_square: args.naive_square,
        ..BenchFixed::default()
    };
    if let Some(m) = args.mode.as_deref().or(config.mode.as_deref()) {
        fixed.mode = m.parse::<BlindMode>().map_err(usage)?;
    }
    if let Some(b) = args.field_bits.or(config.field_bits) {
        fixed.field_bits = b;
    }
    if let Some(p) = args.parties.or_else(|| config.parties.as_ref().map(|v| v.len())) {
        fixed.parties = p;
    }
    if let Some(n) = args.n {
        fixed.n = n;
    }
    if let Some(t) = args.t.or(config.t) {
        fixed.t = t;
    }
    if let Some(q) = args.queries {
        fixed.queries = q;
    }
    if let Some(w) = args.workers {
        fixed.workers = w;
    }

    let spec = BenchSpec { sweep, values: args.values.clone(), fixed, reps: args.reps };
    let records = if bitconv { run_bitconv_bench(&spec)? } else { run_verify_bench(&spec)? };
    write_csv(&records, &args.out)?;
    let failed = records.iter().filter(|r| r.status != "ok").count();
    println!(
        "{}",
        json!({
            "out": args.out.display().to_string(),
            "records": records.len(),
            "failed": failed,
        })
    );
    Ok(())
}

fn audit_transcript(path: &std::path::Path) -> Result<(), CliError> {
    let transcript = Transcript::read_file(path)?;
    let report = audit_reveals(&transcript);
    let violations: Vec<_> = report
        .violations
        .iter()
        .map(|v| {
            json!({
                "record": v.record_index,
                "sender": v.sender,
                "purpose": v.purpose,
            })
        })
        .collect();
    println!(
        "{}",
        json!({
            "frames": report.frames,
            "reveal_frames": report.reveal_frames,
            "violations": violations,
        })
    );
    if report.ok() {
        Ok(())
    } else {
        Err(CliError::Runtime(format!(
            "{} reveal frame(s) with disallowed purposes",
            report.violations.len()
        )))
    }
}
