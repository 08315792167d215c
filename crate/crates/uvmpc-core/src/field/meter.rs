//! Operation tallies for cost accounting.
//!
//! The bench harness compares blinding constructions by how many field
//! multiplications and exponentiations the client actually performs, so the
//! hot paths take an explicit meter instead of guessing analytically.
//! An exponentiation ticks the exp counter once and ticks the mult counter
//! for every squaring/multiplication inside the ladder.

use std::cell::Cell;

/// Shared tally handle. Interior-mutable so borrowing stays simple in code
/// that is already threading field params and RNGs around; one meter belongs
/// to one thread.
#[derive(Debug, Default)]
pub struct OpMeter {
    mults: Cell<u64>,
    exps: Cell<u64>,
}

/// Plain snapshot of an [`OpMeter`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OpCounts {
    pub mults: u64,
    pub exps: u64,
}

impl OpMeter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn tick_mul(&self) {
        self.mults.set(self.mults.get() + 1);
    }

    pub fn tick_exp(&self) {
        self.exps.set(self.exps.get() + 1);
    }

    pub fn snapshot(&self) -> OpCounts {
        OpCounts { mults: self.mults.get(), exps: self.exps.get() }
    }

    pub fn reset(&self) {
        self.mults.set(0);
        self.exps.set(0);
    }
}

impl OpCounts {
    /// Difference against an earlier snapshot.
    pub fn since(&self, earlier: &OpCounts) -> OpCounts {
        OpCounts { mults: self.mults - earlier.mults, exps: self.exps - earlier.exps }
    }
}
