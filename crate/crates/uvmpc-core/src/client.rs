//! Client-side input preparation.
//!
//! The client never reveals its vector. It additively splits the input into
//! `P` rows, builds a structured random blinding matrix `L`, and multiplies:
//! `Blind = L * Split^T` (P x P). Verifier `i` receives column `i` of the
//! blind matrix plus row `i` of the split matrix; the columns feed
//! verification, the rows feed aggregation once verification accepts.
//!
//! The three `L` constructions trade client cost for verification cost:
//!
//! * `Square`: row 1 is fresh randomness `r`, row `i` is `r` raised
//!   elementwise to the `i`-th power. Iterative building costs one
//!   multiplication per entry; the naive variant exponentiates each entry
//!   independently and exists for cost comparison.
//! * `Product`: rows `1..P-1` are fresh randomness, row `P` is their
//!   columnwise product. Cheapest for the client.
//! * `Inverse`: like `Product` but row `P` is the inverse of the product,
//!   so the expected blinded sums multiply to exactly 1.
//!
//! Blinding randomness is drawn from the nonzero elements: the predicates
//! the verifiers check divide by these values, and a zero anywhere would let
//! malformed inputs slip through as trivially satisfied relations.

use crate::field::{FieldElem, FieldParams, OpMeter};
use crate::transport::PartyId;
use crate::{Error, Result};
use rand::{CryptoRng, RngCore};

/// Blinding construction selector. The discriminants are the wire tags used
/// in submissions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum BlindMode {
    Square = 0x01,
    Product = 0x02,
    Inverse = 0x03,
}

impl BlindMode {
    pub const ALL: [BlindMode; 3] = [BlindMode::Square, BlindMode::Product, BlindMode::Inverse];

    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0x01 => Some(BlindMode::Square),
            0x02 => Some(BlindMode::Product),
            0x03 => Some(BlindMode::Inverse),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BlindMode::Square => "square",
            BlindMode::Product => "product",
            BlindMode::Inverse => "inverse",
        }
    }
}

impl std::str::FromStr for BlindMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "square" => Ok(BlindMode::Square),
            "product" => Ok(BlindMode::Product),
            "inverse" => Ok(BlindMode::Inverse),
            other => Err(format!("unknown blind mode '{other}' (square|product|inverse)")),
        }
    }
}

impl std::fmt::Display for BlindMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Additive sharing of the input vector: `P` rows of `N` entries whose
/// columnwise sums equal the vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMatrix {
    rows: Vec<Vec<FieldElem>>,
}

/// Blinding matrix, same shape as the split matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LMatrix {
    mode: BlindMode,
    rows: Vec<Vec<FieldElem>>,
}

/// `L * Split^T`, a `P x P` matrix. Column `i` is what verifier `i` sees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlindMatrix {
    rows: Vec<Vec<FieldElem>>,
}

/// Verification share handed to one verifier: one column of the blind
/// matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareColumn {
    pub verifier: PartyId,
    pub values: Vec<FieldElem>,
}

/// Aggregation share handed to one verifier: one row of the split matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggShareRow {
    pub verifier: PartyId,
    pub values: Vec<FieldElem>,
}

impl SplitMatrix {
    pub fn rows(&self) -> &[Vec<FieldElem>] {
        &self.rows
    }

    pub fn p_count(&self) -> usize {
        self.rows.len()
    }

    pub fn n(&self) -> usize {
        self.rows[0].len()
    }

    /// Columnwise sums; equals the original vector.
    pub fn column_sums(&self, f: &FieldParams) -> Vec<FieldElem> {
        let mut sums = vec![f.zero(); self.n()];
        for row in &self.rows {
            for (s, v) in sums.iter_mut().zip(row) {
                *s = f.add(s, v);
            }
        }
        sums
    }
}

impl LMatrix {
    pub fn mode(&self) -> BlindMode {
        self.mode
    }

    pub fn rows(&self) -> &[Vec<FieldElem>] {
        &self.rows
    }

    /// `L * v` for a plain vector; row sums of the blind matrix equal this
    /// applied to the split's column sums.
    pub fn apply(&self, v: &[FieldElem], f: &FieldParams) -> Result<Vec<FieldElem>> {
        if v.len() != self.rows[0].len() {
            return Err(Error::Param(format!(
                "vector length {} does not match matrix width {}",
                v.len(),
                self.rows[0].len()
            )));
        }
        Ok(self
            .rows
            .iter()
            .map(|row| {
                let mut acc = f.zero();
                for (l, x) in row.iter().zip(v) {
                    acc = f.add(&acc, &f.mul(l, x));
                }
                acc
            })
            .collect())
    }
}

impl BlindMatrix {
    pub fn rows(&self) -> &[Vec<FieldElem>] {
        &self.rows
    }

    pub fn p_count(&self) -> usize {
        self.rows.len()
    }

    pub fn column(&self, i: usize) -> Vec<FieldElem> {
        self.rows.iter().map(|row| row[i].clone()).collect()
    }
}

/// The standard basis vector `e_k` (0-based `k`) of length `n`.
pub fn unit_vector(n: usize, k: usize, f: &FieldParams) -> Result<Vec<FieldElem>> {
    if k >= n {
        return Err(Error::Param(format!("unit index {k} out of range for length {n}")));
    }
    let mut v = vec![f.zero(); n];
    v[k] = f.one();
    Ok(v)
}

/// Splits `v` into `p_count` additive rows: the first `p_count - 1` rows are
/// uniform, the last makes every column sum to `v`.
pub fn split_vector<R: RngCore + CryptoRng>(
    v: &[FieldElem],
    p_count: usize,
    f: &FieldParams,
    rng: &mut R,
) -> Result<SplitMatrix> {
    if p_count < 2 {
        return Err(Error::Param(format!("need at least 2 parties to split, got {p_count}")));
    }
    if v.is_empty() {
        return Err(Error::Param("cannot split an empty vector".into()));
    }
    let n = v.len();
    let mut rows: Vec<Vec<FieldElem>> = (0..p_count - 1)
        .map(|_| (0..n).map(|_| f.rand_elem(rng)).collect())
        .collect();
    let last: Vec<FieldElem> = (0..n)
        .map(|j| {
            let mut acc = f.zero();
            for row in &rows {
                acc = f.add(&acc, &row[j]);
            }
            f.sub(&v[j], &acc)
        })
        .collect();
    rows.push(last);
    Ok(SplitMatrix { rows })
}

/// Builds the blinding matrix for `mode`. `naive_square` switches the
/// Square construction from the iterative running product to independent
/// exponentiations; it has no effect on the other modes.
pub fn build_l_matrix<R: RngCore + CryptoRng>(
    mode: BlindMode,
    naive_square: bool,
    p_count: usize,
    n: usize,
    f: &FieldParams,
    rng: &mut R,
    meter: &OpMeter,
) -> Result<LMatrix> {
    if p_count < 2 {
        return Err(Error::Param(format!("need at least 2 rows, got {p_count}")));
    }
    if n == 0 {
        return Err(Error::Param("matrix width must be positive".into()));
    }
    let rows = match mode {
        BlindMode::Square => {
            let base: Vec<FieldElem> = (0..n).map(|_| f.rand_nonzero(rng)).collect();
            let mut rows = Vec::with_capacity(p_count);
            rows.push(base.clone());
            if naive_square {
                for i in 2..=p_count as u64 {
                    rows.push(
                        base.iter()
                            .map(|r| f.pow_m(r, &i.into(), meter))
                            .collect(),
                    );
                }
            } else {
                for _ in 2..=p_count {
                    let prev = rows.last().unwrap();
                    let next =
                        prev.iter().zip(&base).map(|(a, r)| f.mul_m(a, r, meter)).collect();
                    rows.push(next);
                }
            }
            rows
        }
        BlindMode::Product | BlindMode::Inverse => {
            let mut rows: Vec<Vec<FieldElem>> = (0..p_count - 1)
                .map(|_| (0..n).map(|_| f.rand_nonzero(rng)).collect())
                .collect();
            let mut last: Vec<FieldElem> = (0..n)
                .map(|j| {
                    let mut acc = f.one();
                    for row in rows.iter() {
                        acc = f.mul_m(&acc, &row[j], meter);
                    }
                    acc
                })
                .collect();
            if mode == BlindMode::Inverse {
                // Nonzero by construction, so inversion cannot fail.
                for x in last.iter_mut() {
                    *x = f.inv_m(x, meter).expect("product of nonzero values");
                }
            }
            rows.push(last);
            rows
        }
    };
    Ok(LMatrix { mode, rows })
}

/// `Blind = L * Split^T`. Entry `(j, i)` is the dot product of `L` row `j`
/// with split row `i`.
pub fn blind(l: &LMatrix, split: &SplitMatrix, f: &FieldParams, meter: &OpMeter) -> Result<BlindMatrix> {
    let p = split.p_count();
    if l.rows.len() != p || l.rows[0].len() != split.n() {
        return Err(Error::Param(format!(
            "blinding matrix is {}x{}, split is {}x{}",
            l.rows.len(),
            l.rows[0].len(),
            p,
            split.n()
        )));
    }
    let rows = l
        .rows
        .iter()
        .map(|lrow| {
            split
                .rows
                .iter()
                .map(|srow| {
                    let mut acc = f.zero();
                    for (a, b) in lrow.iter().zip(srow) {
                        acc = f.add(&acc, &f.mul_m(a, b, meter));
                    }
                    acc
                })
                .collect()
        })
        .collect();
    Ok(BlindMatrix { rows })
}

/// Slices the blind matrix into per-verifier columns.
pub fn package_shares(b: &BlindMatrix) -> Vec<ShareColumn> {
    (0..b.p_count())
        .map(|i| ShareColumn { verifier: (i + 1) as PartyId, values: b.column(i) })
        .collect()
}

/// Slices the split matrix into per-verifier aggregation rows.
pub fn package_agg_shares(s: &SplitMatrix) -> Vec<AggShareRow> {
    s.rows
        .iter()
        .enumerate()
        .map(|(i, row)| AggShareRow { verifier: (i + 1) as PartyId, values: row.clone() })
        .collect()
}

/// Everything one verifier receives from one client.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Submission {
    pub mode: BlindMode,
    pub n: u32,
    pub p_count: u16,
    /// Column of the blind matrix for this verifier (`p_count` entries).
    pub share_column: Vec<FieldElem>,
    /// Row of the split matrix for this verifier (`n` entries).
    pub agg_row: Vec<FieldElem>,
}

impl Submission {
    /// Wire layout: mode tag (1B) | N (4B BE) | P (2B BE) | share column
    /// elements | aggregation row elements, all elements fixed-width.
    pub fn encode(&self, f: &FieldParams) -> Vec<u8> {
        let w = f.enc_width();
        let mut out = Vec::with_capacity(7 + w * (self.p_count as usize + self.n as usize));
        out.push(self.mode.tag());
        out.extend_from_slice(&self.n.to_be_bytes());
        out.extend_from_slice(&self.p_count.to_be_bytes());
        for e in self.share_column.iter().chain(&self.agg_row) {
            out.extend_from_slice(&f.encode(e));
        }
        out
    }

    pub fn decode(bytes: &[u8], f: &FieldParams) -> Result<Submission> {
        if bytes.len() < 7 {
            return Err(Error::Param("submission shorter than its fixed header".into()));
        }
        let mode = BlindMode::from_tag(bytes[0])
            .ok_or_else(|| Error::Param(format!("unknown mode tag 0x{:02x}", bytes[0])))?;
        let n = u32::from_be_bytes(bytes[1..5].try_into().unwrap());
        let p_count = u16::from_be_bytes(bytes[5..7].try_into().unwrap());
        if n == 0 || p_count < 2 {
            return Err(Error::Param(format!("degenerate dimensions n={n} p={p_count}")));
        }
        let w = f.enc_width() as u64;
        let want = 7u64 + w * (p_count as u64 + n as u64);
        if bytes.len() as u64 != want {
            return Err(Error::Param(format!(
                "submission is {} bytes, dimensions demand {want}",
                bytes.len()
            )));
        }
        let mut off = 7usize;
        let mut take = |count: usize| -> Result<Vec<FieldElem>> {
            let mut out = Vec::with_capacity(count);
            for _ in 0..count {
                let e = f.decode(&bytes[off..off + w as usize]).map_err(Error::Field)?;
                off += w as usize;
                out.push(e);
            }
            Ok(out)
        };
        let share_column = take(p_count as usize)?;
        let agg_row = take(n as usize)?;
        Ok(Submission { mode, n, p_count, share_column, agg_row })
    }
}

/// Full client pipeline output.
#[derive(Debug, Clone)]
pub struct ClientOutput {
    pub split: SplitMatrix,
    pub l: LMatrix,
    pub blind: BlindMatrix,
    pub submissions: Vec<Submission>,
}

/// Runs the whole client side for one input vector and packages one
/// submission per verifier.
pub fn prepare_input<R: RngCore + CryptoRng>(
    v: &[FieldElem],
    mode: BlindMode,
    naive_square: bool,
    p_count: usize,
    f: &FieldParams,
    rng: &mut R,
    meter: &OpMeter,
) -> Result<ClientOutput> {
    let split = split_vector(v, p_count, f, rng)?;
    let l = build_l_matrix(mode, naive_square, p_count, v.len(), f, rng, meter)?;
    let blinded = blind(&l, &split, f, meter)?;
    let submissions = package_shares(&blinded)
        .into_iter()
        .zip(package_agg_shares(&split))
        .map(|(col, row)| Submission {
            mode,
            n: v.len() as u32,
            p_count: p_count as u16,
            share_column: col.values,
            agg_row: row.values,
        })
        .collect();
    Ok(ClientOutput { split, l, blind: blinded, submissions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{assert_uniform, ScriptedRng};
    use num_bigint::BigUint;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn f11() -> FieldParams {
        FieldParams::from_prime(BigUint::from(11u32)).unwrap()
    }

    fn elems(f: &FieldParams, vals: &[u64]) -> Vec<FieldElem> {
        vals.iter().map(|&v| f.elem(v)).collect()
    }

    #[test]
    fn split_worked_example() {
        // Rows (4,7) and (5,3) forced through the sampler; the closing row
        // must be (2,2) so columns sum to (0,1).
        let f = f11();
        let mut rng = ScriptedRng::new(&[4, 7, 5, 3]);
        let v = elems(&f, &[0, 1]);
        let split = split_vector(&v, 3, &f, &mut rng).unwrap();
        assert_eq!(split.rows()[0], elems(&f, &[4, 7]));
        assert_eq!(split.rows()[1], elems(&f, &[5, 3]));
        assert_eq!(split.rows()[2], elems(&f, &[2, 2]));
        assert_eq!(split.column_sums(&f), v);
    }

    #[test]
    fn split_zero_vector_still_sums_to_zero() {
        let f = f11();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let v = vec![f.zero(); 4];
        let split = split_vector(&v, 3, &f, &mut rng).unwrap();
        assert_eq!(split.column_sums(&f), v);
    }

    #[test]
    fn split_rejects_degenerate_shapes() {
        let f = f11();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        assert!(split_vector(&elems(&f, &[1]), 1, &f, &mut rng).is_err());
        assert!(split_vector(&[], 3, &f, &mut rng).is_err());
    }

    #[test]
    fn split_rows_marginally_uniform() {
        // Fixed input, many splits: first and last row entries should both
        // be indistinguishable from uniform draws over the whole field.
        let f = f11();
        let mut rng = ChaCha20Rng::seed_from_u64(77);
        let v = elems(&f, &[0, 1, 5]);
        let mut first = [0u64; 11];
        let mut last = [0u64; 11];
        let trials = 4000;
        for _ in 0..trials {
            let split = split_vector(&v, 3, &f, &mut rng).unwrap();
            for e in &split.rows()[0] {
                first[e.to_u64().unwrap() as usize] += 1;
            }
            for e in &split.rows()[2] {
                last[e.to_u64().unwrap() as usize] += 1;
            }
        }
        assert_uniform(&first, trials * 3, 5.0);
        assert_uniform(&last, trials * 3, 5.0);
    }

    #[test]
    fn l_matrix_square_worked_example() {
        let f = f11();
        let meter = OpMeter::new();
        let mut rng = ScriptedRng::new(&[3, 5]);
        let l = build_l_matrix(BlindMode::Square, false, 3, 2, &f, &mut rng, &meter).unwrap();
        assert_eq!(l.rows()[0], elems(&f, &[3, 5]));
        assert_eq!(l.rows()[1], elems(&f, &[9, 3]));
        assert_eq!(l.rows()[2], elems(&f, &[5, 4]));
        // Iterative build: one multiplication per derived entry.
        assert_eq!(meter.snapshot().mults, 4);
        assert_eq!(meter.snapshot().exps, 0);
    }

    #[test]
    fn l_matrix_square_naive_matches_iterative() {
        let f = FieldParams::generate(16, Some(9)).unwrap();
        let meter = OpMeter::new();
        for seed in 0..5 {
            let mut r1 = ChaCha20Rng::seed_from_u64(seed);
            let mut r2 = ChaCha20Rng::seed_from_u64(seed);
            let a = build_l_matrix(BlindMode::Square, false, 4, 3, &f, &mut r1, &meter).unwrap();
            let b = build_l_matrix(BlindMode::Square, true, 4, 3, &f, &mut r2, &meter).unwrap();
            assert_eq!(a.rows(), b.rows());
        }
    }

    #[test]
    fn l_matrix_product_and_inverse_worked_examples() {
        let f = f11();
        let meter = OpMeter::new();
        let mut rng = ScriptedRng::new(&[3, 5]);
        let l = build_l_matrix(BlindMode::Product, false, 3, 1, &f, &mut rng, &meter).unwrap();
        assert_eq!(l.rows()[0], elems(&f, &[3]));
        assert_eq!(l.rows()[1], elems(&f, &[5]));
        assert_eq!(l.rows()[2], elems(&f, &[4])); // 15 mod 11
        // Fold from one: exactly (P-1)*N multiplications.
        assert_eq!(meter.snapshot(), crate::field::OpCounts { mults: 2, exps: 0 });

        let mut rng = ScriptedRng::new(&[3, 5]);
        let l = build_l_matrix(BlindMode::Inverse, false, 3, 1, &f, &mut rng, &meter).unwrap();
        assert_eq!(l.rows()[2], elems(&f, &[3])); // 4^-1 mod 11
        let after = meter.snapshot();
        assert_eq!(after.exps, 1); // the single inversion
    }

    #[test]
    fn product_mode_never_produces_zero_rows() {
        let f = f11();
        let meter = OpMeter::new();
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for _ in 0..50 {
            let l = build_l_matrix(BlindMode::Product, false, 4, 3, &f, &mut rng, &meter).unwrap();
            for row in l.rows() {
                assert!(row.iter().all(|e| !e.is_zero()));
            }
        }
    }

    #[test]
    fn blind_worked_example() {
        let f = f11();
        let meter = OpMeter::new();
        let mut rng = ScriptedRng::new(&[4, 7, 5, 3]);
        let split = split_vector(&elems(&f, &[0, 1]), 3, &f, &mut rng).unwrap();
        let mut rng = ScriptedRng::new(&[3, 5]);
        let l = build_l_matrix(BlindMode::Square, false, 3, 2, &f, &mut rng, &meter).unwrap();
        let b = blind(&l, &split, &f, &meter).unwrap();
        assert_eq!(b.rows()[0], elems(&f, &[3, 8, 5]));
        assert_eq!(b.rows()[1], elems(&f, &[2, 10, 2]));
        assert_eq!(b.rows()[2], elems(&f, &[4, 4, 7]));
        assert_eq!(b.column(0), elems(&f, &[3, 2, 4]));
        assert_eq!(b.column(1), elems(&f, &[8, 10, 4]));
        assert_eq!(b.column(2), elems(&f, &[5, 2, 7]));
    }

    #[test]
    fn blind_zero_split_is_zero() {
        let f = f11();
        let meter = OpMeter::new();
        let zero_split = SplitMatrix { rows: vec![vec![f.zero(); 2]; 3] };
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let l = build_l_matrix(BlindMode::Product, false, 3, 2, &f, &mut rng, &meter).unwrap();
        let b = blind(&l, &zero_split, &f, &meter).unwrap();
        assert!(b.rows().iter().all(|r| r.iter().all(|e| e.is_zero())));
    }

    #[test]
    fn blind_rejects_dimension_mismatch() {
        let f = f11();
        let meter = OpMeter::new();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let split = split_vector(&elems(&f, &[1, 0]), 3, &f, &mut rng).unwrap();
        let l = build_l_matrix(BlindMode::Product, false, 3, 5, &f, &mut rng, &meter).unwrap();
        assert!(blind(&l, &split, &f, &meter).is_err());
    }

    #[test]
    fn blind_row_sums_equal_l_applied_to_vector() {
        let f = f11();
        let meter = OpMeter::new();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..30 {
            let v: Vec<FieldElem> = (0..4).map(|_| f.rand_elem(&mut rng)).collect();
            let split = split_vector(&v, 3, &f, &mut rng).unwrap();
            let l = build_l_matrix(BlindMode::Square, false, 3, 4, &f, &mut rng, &meter).unwrap();
            let b = blind(&l, &split, &f, &meter).unwrap();
            let row_sums: Vec<FieldElem> = b
                .rows()
                .iter()
                .map(|row| {
                    let mut acc = f.zero();
                    for e in row {
                        acc = f.add(&acc, e);
                    }
                    acc
                })
                .collect();
            assert_eq!(row_sums, l.apply(&v, &f).unwrap());
        }
    }

    #[test]
    fn packaging_partitions_the_matrices() {
        let f = f11();
        let meter = OpMeter::new();
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let v = unit_vector(3, 1, &f).unwrap();
        let out = prepare_input(&v, BlindMode::Product, false, 3, &f, &mut rng, &meter).unwrap();
        let cols = package_shares(&out.blind);
        let rows = package_agg_shares(&out.split);
        assert_eq!(cols.len(), 3);
        assert_eq!(rows.len(), 3);
        for (i, c) in cols.iter().enumerate() {
            assert_eq!(c.verifier, (i + 1) as PartyId);
            assert_eq!(c.values, out.blind.column(i));
            assert_eq!(c.values.len(), 3);
        }
        // Aggregation rows still sum to the input.
        let mut sums = vec![f.zero(); 3];
        for r in &rows {
            for (s, e) in sums.iter_mut().zip(&r.values) {
                *s = f.add(s, e);
            }
        }
        assert_eq!(sums, v);
    }

    #[test]
    fn submission_wire_layout_and_roundtrip() {
        let f = FieldParams::generate(16, Some(3)).unwrap();
        let sub = Submission {
            mode: BlindMode::Product,
            n: 2,
            p_count: 3,
            share_column: elems(&f, &[1, 2, 3]),
            agg_row: elems(&f, &[4, 5]),
        };
        let bytes = sub.encode(&f);
        assert_eq!(bytes.len(), 7 + 2 * 5);
        assert_eq!(&bytes[..7], &[0x02, 0, 0, 0, 2, 0, 3]);
        assert_eq!(&bytes[7..9], &[0, 1]);
        assert_eq!(Submission::decode(&bytes, &f).unwrap(), sub);

        // Unknown tag, truncation, and out-of-field elements all refuse.
        let mut bad = bytes.clone();
        bad[0] = 0x04;
        assert!(Submission::decode(&bad, &f).is_err());
        assert!(Submission::decode(&bytes[..bytes.len() - 1], &f).is_err());
        let mut oob = bytes.clone();
        let p_bytes = f.prime().to_bytes_be();
        oob[7..9].copy_from_slice(&p_bytes);
        assert!(Submission::decode(&oob, &f).is_err());
    }

    #[test]
    fn oversized_length_fields_refuse_before_allocating() {
        let f = FieldParams::generate(16, Some(3)).unwrap();
        let mut bytes = vec![0x01];
        bytes.extend_from_slice(&u32::MAX.to_be_bytes());
        bytes.extend_from_slice(&3u16.to_be_bytes());
        bytes.extend_from_slice(&[0u8; 10]);
        assert!(Submission::decode(&bytes, &f).is_err());
    }

    #[test]
    fn op_counts_per_mode() {
        let f = FieldParams::generate(64, Some(1)).unwrap();
        let (p, n) = (5usize, 7usize);
        let mut rng = ChaCha20Rng::seed_from_u64(8);

        let product = OpMeter::new();
        build_l_matrix(BlindMode::Product, false, p, n, &f, &mut rng, &product).unwrap();
        assert_eq!(product.snapshot(), crate::field::OpCounts {
            mults: ((p - 1) * n) as u64,
            exps: 0
        });

        let square = OpMeter::new();
        build_l_matrix(BlindMode::Square, false, p, n, &f, &mut rng, &square).unwrap();
        assert_eq!(square.snapshot(), crate::field::OpCounts {
            mults: ((p - 1) * n) as u64,
            exps: 0
        });

        let naive = OpMeter::new();
        build_l_matrix(BlindMode::Square, true, p, n, &f, &mut rng, &naive).unwrap();
        assert_eq!(naive.snapshot().exps, ((p - 1) * n) as u64);
        assert!(naive.snapshot().mults > 0);

        let inverse = OpMeter::new();
        build_l_matrix(BlindMode::Inverse, false, p, n, &f, &mut rng, &inverse).unwrap();
        let inv_counts = inverse.snapshot();
        assert_eq!(inv_counts.exps, n as u64);
        assert!(inv_counts.mults > product.snapshot().mults);
    }
}
