//! Typed payloads for HELLO, ACK and CONTROL messages.

use serde::{Deserialize, Serialize};

use super::{MessageKind, ProtocolError};
use crate::mapping::{ResolvedSequence, Resolution};

fn bad(kind: MessageKind, reason: impl Into<String>) -> ProtocolError {
    ProtocolError::BadPayload {
        kind,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HelloStatus {
    Ok = 0,
    Incompatible = 1,
    /// Another session holds the exclusive writer slot.
    Busy = 2,
}

/// Handshake body, sent by the local agent and echoed back by the remote.
///
/// `seq_mark` is the highest CONTROL seq the sender considers settled. The
/// remote answers with the highest seq it has applied for the session, so a
/// reconnecting client knows which pending items to resend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HelloPayload {
    pub version: u16,
    pub resolution: Resolution,
    pub seq_mark: u64,
    pub status: HelloStatus,
}

impl HelloPayload {
    pub const LEN: usize = 2 + 4 + 4 + 8 + 1;

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::LEN);
        out.extend_from_slice(&self.version.to_be_bytes());
        out.extend_from_slice(&self.resolution.width.to_be_bytes());
        out.extend_from_slice(&self.resolution.height.to_be_bytes());
        out.extend_from_slice(&self.seq_mark.to_be_bytes());
        out.push(self.status as u8);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ProtocolError> {
        let k = MessageKind::Hello;
        if bytes.len() != Self::LEN {
            return Err(bad(k, format!("expected {} bytes, got {}", Self::LEN, bytes.len())));
        }
        let version = u16::from_be_bytes([bytes[0], bytes[1]]);
        let width = u32::from_be_bytes(bytes[2..6].try_into().unwrap());
        let height = u32::from_be_bytes(bytes[6..10].try_into().unwrap());
        let seq_mark = u64::from_be_bytes(bytes[10..18].try_into().unwrap());
        let status = match bytes[18] {
            0 => HelloStatus::Ok,
            1 => HelloStatus::Incompatible,
            2 => HelloStatus::Busy,
            other => return Err(bad(k, format!("unknown status {other}"))),
        };
        let resolution =
            Resolution::new(width, height).map_err(|e| bad(k, e.to_string()))?;
        Ok(HelloPayload {
            version,
            resolution,
            seq_mark,
            status,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AckStatus {
    Ok = 0,
    /// Replay stopped at `index`; earlier events stay applied.
    ReplayError = 1,
    /// Seq was not the next expected one for the session.
    DuplicateOrStale = 2,
}

/// Acknowledgement of one CONTROL message. The message carrying it reuses
/// the CONTROL seq.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AckPayload {
    pub status: AckStatus,
    pub index: u32,
}

impl AckPayload {
    pub const LEN: usize = 5;

    pub fn ok() -> Self {
        AckPayload {
            status: AckStatus::Ok,
            index: 0,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = vec![self.status as u8];
        out.extend_from_slice(&self.index.to_be_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ProtocolError> {
        let k = MessageKind::Ack;
        if bytes.len() != Self::LEN {
            return Err(bad(k, format!("expected {} bytes, got {}", Self::LEN, bytes.len())));
        }
        let status = match bytes[0] {
            0 => AckStatus::Ok,
            1 => AckStatus::ReplayError,
            2 => AckStatus::DuplicateOrStale,
            other => return Err(bad(k, format!("unknown status {other}"))),
        };
        Ok(AckPayload {
            status,
            index: u32::from_be_bytes(bytes[1..5].try_into().unwrap()),
        })
    }
}

/// CONTROL body: a sequence already resolved to the receiver's resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPayload {
    pub interface_id: String,
    pub click_delay_ms: u64,
    pub sequence: ResolvedSequence,
}

impl ControlPayload {
    pub fn encode(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("control payload serializes")
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, ProtocolError> {
        serde_json::from_slice(bytes).map_err(|e| bad(MessageKind::Control, e.to_string()))
    }
}
