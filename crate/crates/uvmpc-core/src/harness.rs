//! Benchmark harness: parameter sweeps over the verification pipeline and
//! the threshold-release circuit, with exact operation counters, emitted
//! as CSV.
//!
//! Wall-clock columns are environment-bound context; the load-bearing
//! outputs are the instrumented counters (client field mults/exps,
//! interactive mults, rounds, wire bytes), which are exact rather than
//! sampled. Sessions at one parameter point run concurrently up to a
//! configured worker count, each with private counters that are merged
//! after the joins, so measurement never shares mutable state.

use crate::client::{prepare_input, BlindMode, ClientOutput};
use crate::field::{FieldParams, OpMeter};
use crate::shamir::Engine;
use crate::bitconv::{threshold_release, AggregationConfig};
use crate::transport::sim::{SimConfig, SimNet};
use crate::transport::{open_session, Channel, Network};
use crate::verify::run_verify_party;
use crate::{Error, Result};
use num_bigint::BigUint;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Instant;

/// The one parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    FieldBits,
    Mode,
    Queries,
    VectorLen,
    Parties,
    BitWidth,
}

impl SweepVar {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVar::FieldBits => "field_bits",
            SweepVar::Mode => "mode",
            SweepVar::Queries => "queries",
            SweepVar::VectorLen => "vector_len",
            SweepVar::Parties => "parties",
            SweepVar::BitWidth => "bit_width",
        }
    }
}

impl std::str::FromStr for SweepVar {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "field_bits" => Ok(SweepVar::FieldBits),
            "mode" => Ok(SweepVar::Mode),
            "queries" => Ok(SweepVar::Queries),
            "vector_len" => Ok(SweepVar::VectorLen),
            "parties" => Ok(SweepVar::Parties),
            "bit_width" => Ok(SweepVar::BitWidth),
            other => Err(format!(
                "unknown sweep variable {other:?} (expected field_bits, mode, queries, \
                 vector_len, parties, or bit_width)"
            )),
        }
    }
}

/// Parameters held fixed while one variable sweeps.
#[derive(Debug, Clone)]
pub struct BenchFixed {
    pub mode: BlindMode,
    /// Prime width λ in bits.
    pub field_bits: u32,
    pub parties: usize,
    /// Input vector length N.
    pub n: u32,
    /// Shamir degree for circuit phases.
    pub t: usize,
    /// Simultaneous sessions per record.
    pub queries: usize,
    /// Use the naive (exponentiation) Square construction.
    pub naive_square: bool,
    /// Worker threads driving simultaneous sessions.
    pub workers: usize,
    pub seed: u64,
}

impl Default for BenchFixed {
    fn default() -> Self {
        BenchFixed {
            mode: BlindMode::Product,
            field_bits: 64,
            parties: 3,
            n: 100,
            t: 1,
            queries: 1,
            naive_square: false,
            workers: 4,
            seed: 1,
        }
    }
}

/// One sweep request: vary `sweep` over `values`, `reps` runs per point.
#[derive(Debug, Clone)]
pub struct BenchSpec {
    pub sweep: SweepVar,
    /// Sweep points, as strings so mode and numeric sweeps share a shape.
    pub values: Vec<String>,
    pub fixed: BenchFixed,
    pub reps: u32,
}

impl BenchSpec {
    /// Checks shape and that every sweep point parses for the variable.
    pub fn validate(&self) -> Result<()> {
        if self.reps < 1 {
            return Err(Error::Param("repetitions must be at least 1".into()));
        }
        if self.values.is_empty() {
            return Err(Error::Param("sweep needs at least one value".into()));
        }
        for v in &self.values {
            match self.sweep {
                SweepVar::Mode => {
                    v.parse::<BlindMode>().map_err(Error::Param)?;
                }
                _ => {
                    v.parse::<u64>().map_err(|_| {
                        Error::Param(format!(
                            "sweep value {v:?} is not a number for {}",
                            self.sweep.as_str()
                        ))
                    })?;
                }
            }
        }
        if self.fixed.workers < 1 {
            return Err(Error::Param("worker count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Fixed CSV header; every record row parses back into a [`BenchRecord`].
pub const CSV_HEADER: &str = "sweep,value,mode,field_bits,parties,n,t,queries,rep,\
client_ms,server_ms,field_mults,field_exps,bgw_mults,rounds,bytes_sent,status";

/// One measured run at one sweep point. Counter columns are exact; the
/// millisecond columns are wall-clock context.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub sweep: String,
    pub value: String,
    pub mode: String,
    pub field_bits: u32,
    pub parties: usize,
    pub n: u32,
    pub t: usize,
    pub queries: usize,
    pub rep: u32,
    /// Total client-side blinding wall time over the record's sessions.
    pub client_ms: f64,
    /// Wall time of the concurrent server phase.
    pub server_ms: f64,
    /// Client field multiplications (metered, summed over sessions).
    pub field_mults: u64,
    /// Client field exponentiations.
    pub field_exps: u64,
    /// Interactive multiplications in circuit phases.
    pub bgw_mults: u64,
    /// Protocol rounds per party, summed over sessions.
    pub rounds: u64,
    /// Wire bytes one party sends (lockstep makes every party equal),
    /// summed over the record's sessions.
    pub bytes_sent: u64,
    /// "ok", or "failed" when any session in the run aborted.
    pub status: String,
}

impl BenchRecord {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{:.3},{:.3},{},{},{},{},{},{}",
            self.sweep,
            self.value,
            self.mode,
            self.field_bits,
            self.parties,
            self.n,
            self.t,
            self.queries,
            self.rep,
            self.client_ms,
            self.server_ms,
            self.field_mults,
            self.field_exps,
            self.bgw_mults,
            self.rounds,
            self.bytes_sent,
            self.status
        )
    }

    pub fn parse_csv_row(line: &str) -> Result<BenchRecord> {
        let cols: Vec<&str> = line.split(',').collect();
        let want = CSV_HEADER.split(',').count();
        if cols.len() != want {
            return Err(Error::Param(format!(
                "record has {} columns, expected {want}",
                cols.len()
            )));
        }
        fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
            s.parse::<T>()
                .map_err(|_| Error::Param(format!("bad {what} column: {s:?}")))
        }
        Ok(BenchRecord {
            sweep: cols[0].to_string(),
            value: cols[1].to_string(),
            mode: cols[2].to_string(),
            field_bits: num(cols[3], "field_bits")?,
            parties: num(cols[4], "parties")?,
            n: num(cols[5], "n")?,
            t: num(cols[6], "t")?,
            queries: num(cols[7], "queries")?,
            rep: num(cols[8], "rep")?,
            client_ms: num(cols[9], "client_ms")?,
            server_ms: num(cols[10], "server_ms")?,
            field_mults: num(cols[11], "field_mults")?,
            field_exps: num(cols[12], "field_exps")?,
            bgw_mults: num(cols[13], "bgw_mults")?,
            rounds: num(cols[14], "rounds")?,
            bytes_sent: num(cols[15], "bytes_sent")?,
            status: cols[16].to_string(),
        })
    }
}

/// Renders records under the fixed header.
pub fn records_to_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.to_csv_row());
        out.push('\n');
    }
    out
}

pub fn write_csv(records: &[BenchRecord], path: &std::path::Path) -> Result<()> {
    std::fs::write(path, records_to_csv(records))
        .map_err(|e| Error::Param(format!("cannot write {}: {e}", path.display())))
}

/// Point in the sweep after substituting one value into the fixed set.
#[derive(Debug, Clone)]
struct Point {
    value: String,
    mode: BlindMode,
    field_bits: u32,
    parties: usize,
    n: u32,
    queries: usize,
}

fn sweep_points(spec: &BenchSpec) -> Result<Vec<Point>> {
    spec.validate()?;
    let fx = &spec.fixed;
    spec.values
        .iter()
        .map(|v| {
            let mut p = Point {
                value: v.clone(),
                mode: fx.mode,
                field_bits: fx.field_bits,
                parties: fx.parties,
                n: fx.n,
                queries: fx.queries,
            };
            match spec.sweep {
                SweepVar::Mode => p.mode = v.parse::<BlindMode>().map_err(Error::Param)?,
                SweepVar::FieldBits | SweepVar::BitWidth => {
                    p.field_bits = v.parse::<u64>().unwrap() as u32
                }
                SweepVar::Queries => p.queries = v.parse::<u64>().unwrap() as usize,
                SweepVar::VectorLen => p.n = v.parse::<u64>().unwrap() as u32,
                SweepVar::Parties => p.parties = v.parse::<u64>().unwrap() as usize,
            }
            Ok(p)
        })
        .collect()
}

/// Deterministic per-session seed stream.
fn mix_seed(seed: u64, a: u64, b: u64, c: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ b.wrapping_mul(0xBF58_476D_1CE4_E5B9)
        ^ c.wrapping_mul(0x94D0_49BB_1331_11EB);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fields are reused across points sharing a width; generation is
/// deterministic in (width, seed).
struct FieldCache {
    seed: u64,
    fields: HashMap<u32, FieldParams>,
}

impl FieldCache {
    fn new(seed: u64) -> Self {
        FieldCache { seed, fields: HashMap::new() }
    }

    fn get(&mut self, bits: u32) -> Result<&FieldParams> {
        if !self.fields.contains_key(&bits) {
            let f = FieldParams::generate(bits, Some(self.seed))?;
            self.fields.insert(bits, f);
        }
        Ok(&self.fields[&bits])
    }
}

struct SessionOut {
    client_ms: f64,
    field_mults: u64,
    field_exps: u64,
    rounds: u64,
    bytes_sent: u64,
}

/// One verification session: a fresh client blinds a unit vector, every
/// party checks its share, all verdicts must come back accepting.
fn verify_session(
    f: &FieldParams,
    p: usize,
    n: u32,
    mode: BlindMode,
    naive_square: bool,
    seed: u64,
) -> Result<SessionOut> {
    if n == 0 {
        return Err(Error::Param("vector length must be positive".into()));
    }
    let unit_at = (seed % n as u64) as usize;
    let vector: Vec<_> = (0..n as usize)
        .map(|i| if i == unit_at { f.one() } else { f.zero() })
        .collect();

    let meter = OpMeter::new();
    let started = Instant::now();
    let mut crng = ChaCha20Rng::seed_from_u64(mix_seed(seed, 1, 0, 0));
    let out = prepare_input(&vector, mode, naive_square, p, f, &mut crng, &meter)?;
    let client_ms = started.elapsed().as_secs_f64() * 1e3;
    let counts = meter.snapshot();

    let net = SimNet::new(p, SimConfig::default());
    let results = run_sessions_on(&net, f, &out, seed)?;
    let mut rounds = 0;
    let mut bytes = 0;
    for (i, (accepted, stats)) in results.iter().enumerate() {
        if !accepted {
            return Err(Error::Param(format!("party {} rejected an honest client", i + 1)));
        }
        bytes = bytes.max(stats.bytes_sent);
        rounds = rounds.max(stats.rounds);
    }
    Ok(SessionOut {
        client_ms,
        field_mults: counts.mults,
        field_exps: counts.exps,
        rounds,
        bytes_sent: bytes,
    })
}

type PartyVerify = (bool, crate::transport::ChannelStats);

fn run_sessions_on(
    net: &SimNet,
    f: &FieldParams,
    out: &ClientOutput,
    seed: u64,
) -> Result<Vec<PartyVerify>> {
    net.run(|ep| {
        let id = ep.my_id();
        let mut rng = ChaCha20Rng::seed_from_u64(mix_seed(seed, 2, id as u64, 0));
        let sub = &out.submissions[id as usize - 1];
        let mut chan = open_session(&ep, f, sub.mode.tag(), &mut rng)?;
        let outcome = run_verify_party(&mut chan, f, sub, &mut rng)?;
        Ok((outcome.accepted, chan.stats()))
    })
}

/// Spreads `count` sessions over up to `workers` threads and merges each
/// session's private counters afterwards.
fn run_pool<G>(count: usize, workers: usize, job: G) -> Vec<Result<SessionOut>>
where
    G: Fn(usize) -> Result<SessionOut> + Sync,
{
    let slots: Mutex<Vec<Option<Result<SessionOut>>>> =
        Mutex::new((0..count).map(|_| None).collect());
    let workers = workers.clamp(1, count.max(1));
    std::thread::scope(|scope| {
        for w in 0..workers {
            let job = &job;
            let slots = &slots;
            scope.spawn(move || {
                let mut i = w;
                while i < count {
                    let r = job(i);
                    slots.lock().unwrap()[i] = Some(r);
                    i += workers;
                }
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|s| s.expect("every session slot filled"))
        .collect()
}

/// Runs the client+verifier sweep on the simulator: one record per sweep
/// point per repetition. A session abort marks that record `failed` and
/// the sweep continues.
pub fn run_verify_bench(spec: &BenchSpec) -> Result<Vec<BenchRecord>> {
    let points = sweep_points(spec)?;
    if spec.sweep == SweepVar::BitWidth {
        return Err(Error::Param("bit_width sweeps belong to the bitconv bench".into()));
    }
    let mut cache = FieldCache::new(spec.fixed.seed);
    let mut records = Vec::new();
    for (pi, point) in points.iter().enumerate() {
        let f = cache.get(point.field_bits)?.clone();
        for rep in 0..spec.reps {
            let started = Instant::now();
            let outs = run_pool(point.queries, spec.fixed.workers, |si| {
                let seed =
                    mix_seed(spec.fixed.seed, pi as u64 + 3, rep as u64, si as u64);
                verify_session(
                    &f,
                    point.parties,
                    point.n,
                    point.mode,
                    spec.fixed.naive_square,
                    seed,
                )
            });
            let server_ms = started.elapsed().as_secs_f64() * 1e3;
            let mut rec = BenchRecord {
                sweep: spec.sweep.as_str().to_string(),
                value: point.value.clone(),
                mode: point.mode.name().to_string(),
                field_bits: point.field_bits,
                parties: point.parties,
                n: point.n,
                t: spec.fixed.t,
                queries: point.queries,
                rep,
                client_ms: 0.0,
                server_ms,
                field_mults: 0,
                field_exps: 0,
                bgw_mults: 0,
                rounds: 0,
                bytes_sent: 0,
                status: "ok".into(),
            };
            for out in outs {
                match out {
                    Ok(s) => {
                        rec.client_ms += s.client_ms;
                        rec.field_mults += s.field_mults;
                        rec.field_exps += s.field_exps;
                        rec.rounds += s.rounds;
                        rec.bytes_sent += s.bytes_sent;
                    }
                    Err(_) => rec.status = "failed".into(),
                }
            }
            records.push(rec);
        }
    }
    Ok(records)
}

/// Runs the threshold-release circuit once per width value: parties turn a
/// shared additive total into Shamir sharings and release it through the
/// comparison gate, recording interactive-multiplication counts and wall
/// clock.
pub fn run_bitconv_bench(spec: &BenchSpec) -> Result<Vec<BenchRecord>> {
    if spec.sweep != SweepVar::BitWidth {
        return Err(Error::Param("bitconv bench sweeps bit_width only".into()));
    }
    let points = sweep_points(spec)?;
    let mut cache = FieldCache::new(spec.fixed.seed);
    let mut records = Vec::new();
    for (pi, point) in points.iter().enumerate() {
        let f = cache.get(point.field_bits)?.clone();
        let p = point.parties;
        let t = spec.fixed.t;
        for rep in 0..spec.reps {
            let seed = mix_seed(spec.fixed.seed, pi as u64 + 101, rep as u64, 0);
            let started = Instant::now();
            let run = bitconv_session(&f, p, t, seed);
            let server_ms = started.elapsed().as_secs_f64() * 1e3;
            let (bgw, rounds, bytes, status) = match run {
                Ok(v) => (v.0, v.1, v.2, "ok".to_string()),
                Err(_) => (0, 0, 0, "failed".to_string()),
            };
            records.push(BenchRecord {
                sweep: spec.sweep.as_str().to_string(),
                value: point.value.clone(),
                mode: "-".into(),
                field_bits: point.field_bits,
                parties: p,
                n: 1,
                t,
                queries: 1,
                rep,
                client_ms: 0.0,
                server_ms,
                field_mults: 0,
                field_exps: 0,
                bgw_mults: bgw,
                rounds,
                bytes_sent: bytes,
                status,
            });
        }
    }
    Ok(records)
}

fn bitconv_session(f: &FieldParams, p: usize, t: usize, seed: u64) -> Result<(u64, u64, u64)> {
    // Keep the shared total inside the release window so the run exercises
    // the same path as real aggregation.
    let window = BigUint::from(1u32) << (f.lambda() - 2);
    let cap = &window / p as u64;
    if cap.bits() == 0 {
        return Err(Error::Param("release window too small for this many parties".into()));
    }
    let contribution = |id: u64| {
        let share = BigUint::from(mix_seed(seed, 7, id, 0)) % &cap;
        f.elem(share)
    };
    let thresh = f.elem(BigUint::from(mix_seed(seed, 8, 0, 0)) % &window);
    let cfg = AggregationConfig { thresh, user_count: p as u64 };

    let net = SimNet::new(p, SimConfig::default());
    let results = net.run(|ep| {
        let id = ep.my_id();
        let mut rng = ChaCha20Rng::seed_from_u64(mix_seed(seed, 9, id as u64, 0));
        let mut chan = ep.session([0x42; 16]);
        let mut eng = Engine::new(&mut chan, f, t, &mut rng)?;
        let sum = eng.additive_to_shamir(&[contribution(id as u64)])?[0].clone();
        threshold_release(&mut eng, &sum, &cfg)?;
        let muls = eng.stats.bgw_muls;
        let stats = eng.channel_stats();
        Ok((muls, stats))
    })?;
    let bgw = results[0].0;
    let rounds = results.iter().map(|r| r.1.rounds).max().unwrap_or(0);
    let bytes = results.iter().map(|r| r.1.bytes_sent).max().unwrap_or(0);
    Ok((bgw, rounds, bytes))
}

/// Total bytes a client puts on the wire for one submission set: the
/// encoded submission to each of the `p` parties. Grows linearly in `p`
/// (one share column each) and in the vector length.
pub fn client_submission_bytes(
    f: &FieldParams,
    n: u32,
    mode: BlindMode,
    p: usize,
    seed: u64,
) -> Result<u64> {
    if n == 0 {
        return Err(Error::Param("vector length must be positive".into()));
    }
    let vector: Vec<_> = (0..n as usize)
        .map(|i| if i == 0 { f.one() } else { f.zero() })
        .collect();
    let meter = OpMeter::new();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let out = prepare_input(&vector, mode, false, p, f, &mut rng, &meter)?;
    Ok(out.submissions.iter().map(|s| s.encode(f).len() as u64).sum())
}

/// Least-squares polynomial fit, lowest coefficient first. Degree must be
/// below the sample count.
pub fn fit_poly(xs: &[f64], ys: &[f64], degree: usize) -> Result<Vec<f64>> {
    let k = degree + 1;
    if xs.len() != ys.len() || xs.len() < k {
        return Err(Error::Param("not enough samples for the requested degree".into()));
    }
    // Normal equations: (VᵀV) c = Vᵀy with V the Vandermonde matrix.
    let mut ata = vec![vec![0.0; k]; k];
    let mut aty = vec![0.0; k];
    for (&x, &y) in xs.iter().zip(ys) {
        let mut powers = Vec::with_capacity(2 * k - 1);
        let mut acc = 1.0;
        for _ in 0..(2 * k - 1) {
            powers.push(acc);
            acc *= x;
        }
        for i in 0..k {
            for (j, row) in ata.iter_mut().enumerate().take(k) {
                row[i] += powers[i + j];
            }
            aty[i] += powers[i] * y;
        }
    }
    // Gaussian elimination with partial pivoting.
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&a, &b| ata[a][col].abs().partial_cmp(&ata[b][col].abs()).unwrap())
            .unwrap();
        if ata[pivot][col].abs() < 1e-12 {
            return Err(Error::Param("degenerate fit system".into()));
        }
        ata.swap(col, pivot);
        aty.swap(col, pivot);
        for row in (col + 1)..k {
            let factor = ata[row][col] / ata[col][col];
            for c in col..k {
                ata[row][c] -= factor * ata[col][c];
            }
            aty[row] -= factor * aty[col];
        }
    }
    let mut coeffs = vec![0.0; k];
    for row in (0..k).rev() {
        let mut v = aty[row];
        for c in (row + 1)..k {
            v -= ata[row][c] * coeffs[c];
        }
        coeffs[row] = v / ata[row][row];
    }
    Ok(coeffs)
}

pub fn eval_poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Largest relative deviation of the fit from the samples.
pub fn max_rel_residual(xs: &[f64], ys: &[f64], coeffs: &[f64]) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let predicted = eval_poly(coeffs, x);
            if y == 0.0 {
                predicted.abs()
            } else {
                ((y - predicted) / y).abs()
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_fixed() -> BenchFixed {
        BenchFixed { field_bits: 16, n: 12, workers: 2, seed: 9, ..BenchFixed::default() }
    }

    fn spec(sweep: SweepVar, values: &[&str], fixed: BenchFixed, reps: u32) -> BenchSpec {
        BenchSpec {
            sweep,
            values: values.iter().map(|s| s.to_string()).collect(),
            fixed,
            reps,
        }
    }

    #[test]
    fn mode_sweep_emits_one_ok_record_per_mode() {
        let s = spec(SweepVar::Mode, &["square", "product", "inverse"], small_fixed(), 1);
        let records = run_verify_bench(&s).unwrap();
        assert_eq!(records.len(), 3);
        assert!(records.iter().all(|r| r.status == "ok"));
        let by_mode = |m: &str| records.iter().find(|r| r.mode == m).unwrap();
        // The product construction multiplies; the inverse construction
        // pays an inversion per row on top of it.
        assert!(by_mode("product").field_mults < by_mode("inverse").field_mults);
        // Verification is two sum rounds plus the verdict exchange.
        assert!(records.iter().all(|r| r.rounds == 3));
    }

    #[test]
    fn records_roundtrip_through_csv() {
        let s = spec(SweepVar::VectorLen, &["4", "9"], small_fixed(), 2);
        let records = run_verify_bench(&s).unwrap();
        assert_eq!(records.len(), 4);
        let csv = records_to_csv(&records);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let parsed: Vec<BenchRecord> = lines
            .map(|l| BenchRecord::parse_csv_row(l).unwrap())
            .collect();
        // Float columns go through fixed-precision text, so compare the
        // exact columns and the row rendering.
        for (a, b) in records.iter().zip(&parsed) {
            assert_eq!(a.to_csv_row(), b.to_csv_row());
            assert_eq!(a.bytes_sent, b.bytes_sent);
            assert_eq!(a.field_mults, b.field_mults);
        }
    }

    #[test]
    fn party_sweep_bytes_fit_a_quadratic_and_client_bytes_a_line() {
        let s = spec(SweepVar::Parties, &["3", "5", "7", "9"], small_fixed(), 1);
        let records = run_verify_bench(&s).unwrap();
        let xs: Vec<f64> = records.iter().map(|r| r.parties as f64).collect();
        let ys: Vec<f64> = records.iter().map(|r| r.bytes_sent as f64).collect();
        let fit = fit_poly(&xs, &ys, 2).unwrap();
        assert!(
            max_rel_residual(&xs, &ys, &fit) < 0.05,
            "verifier bytes not quadratic: {ys:?}"
        );

        // The submission carries a share column of P entries next to an
        // aggregation row of N entries, so the linear-in-P trend needs the
        // realistic regime N >> P.
        let f = FieldParams::generate(16, Some(9)).unwrap();
        let cs: Vec<f64> = [3usize, 5, 7, 9]
            .iter()
            .map(|&p| {
                client_submission_bytes(&f, 100, BlindMode::Product, p, 5).unwrap() as f64
            })
            .collect();
        let cfit = fit_poly(&xs, &cs, 1).unwrap();
        assert!(
            max_rel_residual(&xs, &cs, &cfit) < 0.05,
            "client bytes not linear: {cs:?}"
        );
    }

    #[test]
    fn rounds_do_not_depend_on_vector_length() {
        let s = spec(SweepVar::VectorLen, &["4", "16", "64"], small_fixed(), 1);
        let records = run_verify_bench(&s).unwrap();
        assert!(records.windows(2).all(|w| w[0].rounds == w[1].rounds));
        // Verifiers exchange blinded columns sized by the party count, so
        // their traffic is flat in N too; the client does the N-scaling.
        assert!(records.windows(2).all(|w| w[0].bytes_sent == w[1].bytes_sent));
        assert!(records[0].field_mults < records[2].field_mults);
    }

    #[test]
    fn aborted_sessions_mark_the_record_failed_and_the_sweep_continues() {
        // Length zero cannot be blinded; the record fails, the next value
        // still runs.
        let s = spec(SweepVar::VectorLen, &["0", "6"], small_fixed(), 1);
        let records = run_verify_bench(&s).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].status, "failed");
        assert_eq!(records[1].status, "ok");
        assert!(records[1].bytes_sent > 0);
    }

    #[test]
    fn bitconv_sweep_counts_interactive_mults_per_width() {
        let s = spec(SweepVar::BitWidth, &["8", "16"], small_fixed(), 2);
        let records = run_bitconv_bench(&s).unwrap();
        assert_eq!(records.len(), 4);
        assert!(records.iter().all(|r| r.status == "ok"));
        assert!(records.iter().all(|r| r.bgw_mults > 0 && r.rounds > 0));
        // Twice the width should cost roughly twice the mults; allow for
        // per-run randomness in the bit-draw rejections.
        let mean = |v: &str| {
            let rows: Vec<&BenchRecord> =
                records.iter().filter(|r| r.value == v).collect();
            rows.iter().map(|r| r.bgw_mults as f64).sum::<f64>() / rows.len() as f64
        };
        let ratio = mean("16") / mean("8");
        assert!((1.4..=2.6).contains(&ratio), "scaling ratio {ratio}");
    }

    #[test]
    fn invalid_specs_are_usage_errors() {
        let mut s = spec(SweepVar::Mode, &["product"], small_fixed(), 0);
        assert!(matches!(run_verify_bench(&s), Err(Error::Param(_))));
        s.reps = 1;
        s.values = vec!["triangle".into()];
        assert!(matches!(run_verify_bench(&s), Err(Error::Param(_))));
        s.values = vec![];
        assert!(matches!(run_verify_bench(&s), Err(Error::Param(_))));

        let wrong = spec(SweepVar::Parties, &["3"], small_fixed(), 1);
        assert!(matches!(run_bitconv_bench(&wrong), Err(Error::Param(_))));
        let also_wrong = spec(SweepVar::BitWidth, &["8"], small_fixed(), 1);
        assert!(matches!(run_verify_bench(&also_wrong), Err(Error::Param(_))));
    }

    #[test]
    fn fit_recovers_exact_polynomials() {
        let xs = [3.0, 5.0, 7.0, 9.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x * x + 3.0 * x + 4.0).collect();
        let fit = fit_poly(&xs, &ys, 2).unwrap();
        assert!(max_rel_residual(&xs, &ys, &fit) < 1e-9);
        assert!((fit[2] - 2.0).abs() < 1e-6);
        // A line through quadratic data leaves a visible residual.
        let bad = fit_poly(&xs, &ys, 1).unwrap();
        assert!(max_rel_residual(&xs, &ys, &bad) > 0.05);
    }
}
