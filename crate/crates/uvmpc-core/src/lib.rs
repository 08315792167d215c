//! MPC toolkit for validating secret-shared unit vectors and aggregating
//! them under a threshold gate.
//!
//! A client splits its input vector into additive shares, blinds the shares
//! with a structured random matrix, and hands one column to each verification
//! party. The parties jointly compute blinded column sums and check an
//! algebraic relation that holds exactly when the input was a unit vector.
//! Accepted inputs are aggregated under Shamir sharing; per-column totals are
//! released only when they clear a public threshold, decided inside the MPC
//! via bit decomposition of the difference.
//!
//! Protocols are written against the [`transport::Channel`] trait and run
//! unchanged on the in-process simulator ([`transport::sim`]) or over TCP
//! ([`transport::tcp`]).

pub mod aggregate;
pub mod bitconv;
pub mod client;
pub mod field;
pub mod harness;
pub mod shamir;
pub mod testing;
pub mod transport;
pub mod verify;

pub use field::{FieldElem, FieldParams};
pub use transport::{Channel, PartyId, SessionId};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("protocol gave up: {0}")]
    Exhausted(String),
    #[error(transparent)]
    Field(#[from] field::FieldError),
    #[error(transparent)]
    Transport(#[from] transport::TransportError),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures that mean a running protocol died (timeout, peer
    /// abort, handshake mismatch) rather than bad local arguments.
    pub fn is_protocol_abort(&self) -> bool {
        matches!(self, Error::Transport(e) if e.is_abort())
    }
}
