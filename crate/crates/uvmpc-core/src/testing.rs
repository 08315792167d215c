//! Test support: deterministic byte-script RNG and histogram checks.
//!
//! `ScriptedRng` replays a fixed byte sequence through the `RngCore`
//! interface. Sampling at small field widths consumes exactly one byte per
//! draw, which lets tests force the worked-example values through the real
//! sampling path instead of constructing matrices by hand.

use rand::{CryptoRng, RngCore};

pub struct ScriptedRng {
    bytes: Vec<u8>,
    pos: usize,
}

impl ScriptedRng {
    pub fn new(bytes: &[u8]) -> Self {
        ScriptedRng { bytes: bytes.to_vec(), pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

impl RngCore for ScriptedRng {
    fn next_u32(&mut self) -> u32 {
        let mut buf = [0u8; 4];
        self.fill_bytes(&mut buf);
        u32::from_be_bytes(buf)
    }

    fn next_u64(&mut self) -> u64 {
        let mut buf = [0u8; 8];
        self.fill_bytes(&mut buf);
        u64::from_be_bytes(buf)
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        assert!(
            self.pos + dest.len() <= self.bytes.len(),
            "scripted rng exhausted: wanted {} more bytes, have {}",
            dest.len(),
            self.remaining()
        );
        dest.copy_from_slice(&self.bytes[self.pos..self.pos + dest.len()]);
        self.pos += dest.len();
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}

// Protocol code bounds its RNG by CryptoRng; the script stands in for tests.
impl CryptoRng for ScriptedRng {}

/// Asserts every bucket of `hist` lies within `sigmas` standard deviations
/// of the uniform expectation over `hist.len()` outcomes.
pub fn assert_uniform(hist: &[u64], total: u64, sigmas: f64) {
    let q = 1.0 / hist.len() as f64;
    let mean = total as f64 * q;
    let sigma = (total as f64 * q * (1.0 - q)).sqrt();
    for (i, &c) in hist.iter().enumerate() {
        let dev = (c as f64 - mean).abs();
        assert!(
            dev < sigmas * sigma,
            "bucket {i}: count {c}, expected {mean:.1} +- {:.1} ({sigmas} sigma)",
            sigmas * sigma
        );
    }
}
