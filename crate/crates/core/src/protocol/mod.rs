//! Wire format shared by the local and remote agents.
//!
//! A message travels as `serialize_message` → `encrypt_frame` → length prefix,
//! and is read back in the reverse order. All functions here are pure.

mod cipher;
mod frame;
mod message;
mod payload;

pub use cipher::{decrypt_frame, encrypt_frame, pkcs7_pad, pkcs7_unpad, SessionKey, BLOCK_LEN};
pub use frame::{bytes_needed, decode_frame, Frame, LENGTH_PREFIX_LEN, MAX_FRAME_LEN};
pub use message::{
    deserialize_message, serialize_message, Message, MessageKind, SessionId, HEADER_LEN,
    MAX_PAYLOAD_LEN,
};
pub use payload::{AckPayload, AckStatus, ControlPayload, HelloPayload, HelloStatus};

use thiserror::Error;

pub const PROTOCOL_VERSION: u16 = 1;

/// Default keepalive period.
pub const DEFAULT_KEEPALIVE_MS: u64 = 5000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("payload of {len} bytes exceeds the {max}-byte cap")]
    OversizePayload { len: usize, max: usize },
    #[error("truncated input: needed {needed} bytes, got {got}")]
    Truncated { needed: usize, got: usize },
    #[error("unknown message kind 0x{0:02x}")]
    UnknownKind(u8),
    #[error("declared payload length {declared} but {actual} bytes follow")]
    LengthMismatch { declared: usize, actual: usize },
    #[error("invalid padding (wrong key or corrupted frame)")]
    BadPadding,
    #[error("bad frame: {0}")]
    BadFrame(String),
    #[error("bad session key: {0}")]
    BadKey(String),
    #[error("malformed {kind:?} payload: {reason}")]
    BadPayload { kind: MessageKind, reason: String },
}

/// True once at least `interval_ms` has elapsed since the last send.
pub fn keepalive_due(last_send_ms: u64, now_ms: u64, interval_ms: u64) -> bool {
    now_ms.saturating_sub(last_send_ms) >= interval_ms
}

/// Serializes and encrypts `msg` into one frame.
pub fn seal(msg: &Message, key: &SessionKey) -> Result<Frame, ProtocolError> {
    encrypt_frame(&serialize_message(msg)?, key)
}

/// Decrypts and deserializes one frame.
pub fn open(frame: &Frame, key: &SessionKey) -> Result<Message, ProtocolError> {
    deserialize_message(&decrypt_frame(frame, key)?)
}
