//! Canonical binary layout of a [`Message`].
//!
//! ```text
//! kind (1) | session_id (16) | seq (8, BE) | payload_len (4, BE) | payload
//! ```

use std::fmt;

use super::ProtocolError;

/// Fixed header size preceding the payload.
pub const HEADER_LEN: usize = 1 + 16 + 8 + 4;

/// Largest payload a message may carry.
pub const MAX_PAYLOAD_LEN: usize = (1 << 24) - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MessageKind {
    Hello = 0x01,
    Control = 0x02,
    Ping = 0x03,
    Pong = 0x04,
    Ack = 0x05,
}

impl TryFrom<u8> for MessageKind {
    type Error = ProtocolError;

    fn try_from(byte: u8) -> Result<Self, Self::Error> {
        Ok(match byte {
            0x01 => MessageKind::Hello,
            0x02 => MessageKind::Control,
            0x03 => MessageKind::Ping,
            0x04 => MessageKind::Pong,
            0x05 => MessageKind::Ack,
            other => return Err(ProtocolError::UnknownKind(other)),
        })
    }
}

/// Opaque 16-byte identifier shared by every message of one session.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct SessionId(pub [u8; 16]);

impl SessionId {
    pub fn random() -> Self {
        SessionId(uuid::Uuid::new_v4().into_bytes())
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SessionId({self})")
    }
}

/// Wire envelope exchanged between local and remote agents.
///
/// For CONTROL messages `seq` is the per-session control counter. PING and
/// PONG carry their own keepalive counter in the same field, and ACK echoes
/// the acknowledged CONTROL seq.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub kind: MessageKind,
    pub session_id: SessionId,
    pub seq: u64,
    pub payload: Vec<u8>,
}

impl Message {
    pub fn new(kind: MessageKind, session_id: SessionId, seq: u64, payload: Vec<u8>) -> Self {
        Message {
            kind,
            session_id,
            seq,
            payload,
        }
    }
}

pub fn serialize_message(msg: &Message) -> Result<Vec<u8>, ProtocolError> {
    let len = msg.payload.len();
    if len > MAX_PAYLOAD_LEN {
        return Err(ProtocolError::OversizePayload {
            len,
            max: MAX_PAYLOAD_LEN,
        });
    }
    let mut out = Vec::with_capacity(HEADER_LEN + len);
    out.push(msg.kind as u8);
    out.extend_from_slice(&msg.session_id.0);
    out.extend_from_slice(&msg.seq.to_be_bytes());
    out.extend_from_slice(&(len as u32).to_be_bytes());
    out.extend_from_slice(&msg.payload);
    Ok(out)
}

/// Inverse of [`serialize_message`]. Total over arbitrary input: never
/// panics and never allocates more than `bytes.len()`.
pub fn deserialize_message(bytes: &[u8]) -> Result<Message, ProtocolError> {
    if bytes.len() < HEADER_LEN {
        return Err(ProtocolError::Truncated {
            needed: HEADER_LEN,
            got: bytes.len(),
        });
    }
    let kind = MessageKind::try_from(bytes[0])?;
    let mut session = [0u8; 16];
    session.copy_from_slice(&bytes[1..17]);
    let seq = u64::from_be_bytes(bytes[17..25].try_into().expect("8-byte slice"));
    let declared = u32::from_be_bytes(bytes[25..29].try_into().expect("4-byte slice")) as usize;
    let remaining = bytes.len() - HEADER_LEN;
    if declared > MAX_PAYLOAD_LEN {
        return Err(ProtocolError::OversizePayload {
            len: declared,
            max: MAX_PAYLOAD_LEN,
        });
    }
    if declared > remaining {
        return Err(ProtocolError::Truncated {
            needed: HEADER_LEN + declared,
            got: bytes.len(),
        });
    }
    if declared != remaining {
        return Err(ProtocolError::LengthMismatch {
            declared,
            actual: remaining,
        });
    }
    Ok(Message {
        kind,
        session_id: SessionId(session),
        seq,
        payload: bytes[HEADER_LEN..].to_vec(),
    })
}
