//! Transcript capture and the reveal audit.
//!
//! A transcript is every frame a run put on the wire, plus enough ordering
//! metadata (round, per-sender sequence) to make the serialized form
//! canonical. The audit walks it and flags any REVEAL_SHARE frame whose
//! purpose byte is not one of the four sanctioned openings: everything else
//! the protocols touch must stay blinded or shared.

use super::{reveal, Frame, PartyId, TransportError};
use std::io::{Read, Write};

const MAGIC: &[u8; 4] = b"UVT1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptRecord {
    pub round: u32,
    /// Position in the sender's outgoing frame stream (program order).
    pub seq: u64,
    pub to: PartyId,
    pub frame: Frame,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    records: Vec<TranscriptRecord>,
}

impl Transcript {
    pub fn new(records: Vec<TranscriptRecord>) -> Self {
        Transcript { records }
    }

    pub fn records(&self) -> &[TranscriptRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = MAGIC.to_vec();
        for r in &self.records {
            out.extend_from_slice(&r.round.to_be_bytes());
            out.extend_from_slice(&r.seq.to_be_bytes());
            out.extend_from_slice(&r.to.to_be_bytes());
            // Frames already carry their own length prefix.
            out.extend_from_slice(&r.frame.encode().expect("payload within wire limit"));
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, TransportError> {
        let mut cursor = std::io::Cursor::new(bytes);
        let mut magic = [0u8; 4];
        cursor.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(TransportError::LengthMismatch);
        }
        let mut records = Vec::new();
        loop {
            let mut head = [0u8; 14];
            match cursor.read_exact(&mut head) {
                Ok(()) => {}
                Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
                Err(e) => return Err(e.into()),
            }
            let round = u32::from_be_bytes(head[0..4].try_into().unwrap());
            let seq = u64::from_be_bytes(head[4..12].try_into().unwrap());
            let to = PartyId::from_be_bytes(head[12..14].try_into().unwrap());
            let frame = Frame::read_from(&mut cursor)?;
            records.push(TranscriptRecord { round, seq, to, frame });
        }
        Ok(Transcript { records })
    }

    pub fn write_file(&self, path: &std::path::Path) -> Result<(), TransportError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.encode())?;
        Ok(())
    }

    pub fn read_file(path: &std::path::Path) -> Result<Self, TransportError> {
        let bytes = std::fs::read(path)?;
        Self::decode(&bytes)
    }
}

/// One audit finding: a reveal frame with a purpose outside the allowed set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditViolation {
    pub record_index: usize,
    pub sender: PartyId,
    pub purpose: Option<u8>,
}

#[derive(Debug, Clone, Default)]
pub struct AuditReport {
    pub frames: usize,
    pub reveal_frames: usize,
    pub violations: Vec<AuditViolation>,
}

impl AuditReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that every REVEAL_SHARE frame opens one of the four sanctioned
/// values: a squared random sharing, a decomposition offset, an accept
/// flag, or a final gated output.
pub fn audit_reveals(t: &Transcript) -> AuditReport {
    let mut report = AuditReport { frames: t.len(), ..Default::default() };
    for (idx, rec) in t.records().iter().enumerate() {
        if rec.frame.msg_type != super::msg::REVEAL_SHARE {
            continue;
        }
        report.reveal_frames += 1;
        let purpose = rec.frame.payload.first().copied();
        let allowed = purpose.map(reveal::is_allowed).unwrap_or(false);
        if !allowed {
            report.violations.push(AuditViolation {
                record_index: idx,
                sender: rec.frame.sender,
                purpose,
            });
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::msg;

    fn rec(seq: u64, msg_type: u8, payload: Vec<u8>) -> TranscriptRecord {
        TranscriptRecord {
            round: seq as u32,
            seq,
            to: 2,
            frame: Frame::new(msg_type, [5u8; 16], 1, payload),
        }
    }

    #[test]
    fn file_roundtrip() {
        let t = Transcript::new(vec![
            rec(0, msg::RESPLIT_ADDEND, vec![1, 2, 3]),
            rec(1, msg::REVEAL_SHARE, vec![reveal::FINAL_OUTPUT, 0x09]),
        ]);
        let decoded = Transcript::decode(&t.encode()).unwrap();
        assert_eq!(decoded, t);
    }

    #[test]
    fn decode_rejects_bad_magic() {
        assert!(Transcript::decode(b"nope").is_err());
    }

    #[test]
    fn audit_flags_unsanctioned_purposes() {
        let t = Transcript::new(vec![
            rec(0, msg::REVEAL_SHARE, vec![reveal::RAND_SQUARE, 3]),
            rec(1, msg::REVEAL_SHARE, vec![0x07, 3]),
            rec(2, msg::REVEAL_SHARE, Vec::new()),
            rec(3, msg::PARTIALS_BROADCAST, vec![0x07]),
        ]);
        let report = audit_reveals(&t);
        assert_eq!(report.reveal_frames, 3);
        assert_eq!(report.violations.len(), 2);
        assert_eq!(report.violations[0].purpose, Some(0x07));
        assert_eq!(report.violations[1].purpose, None);
        assert!(!report.ok());
    }
}
