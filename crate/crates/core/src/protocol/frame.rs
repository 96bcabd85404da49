//! Length-prefixed framing: a 4-byte big-endian length followed by that many
//! ciphertext bytes. The length is always a positive multiple of the AES
//! block size and at most [`MAX_FRAME_LEN`].

use super::cipher::BLOCK_LEN;
use super::ProtocolError;

pub const LENGTH_PREFIX_LEN: usize = 4;
pub const MAX_FRAME_LEN: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    ciphertext: Vec<u8>,
}

impl Frame {
    pub fn new(ciphertext: Vec<u8>) -> Result<Self, ProtocolError> {
        check_length(ciphertext.len())?;
        Ok(Frame { ciphertext })
    }

    /// Skips the length checks; [`decrypt_frame`](super::decrypt_frame) still validates.
    pub fn from_ciphertext_unchecked(ciphertext: Vec<u8>) -> Self {
        Frame { ciphertext }
    }

    pub fn ciphertext(&self) -> &[u8] {
        &self.ciphertext
    }

    pub fn len(&self) -> usize {
        self.ciphertext.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ciphertext.is_empty()
    }

    /// Length prefix followed by the ciphertext.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(LENGTH_PREFIX_LEN + self.ciphertext.len());
        self.write_to(&mut out);
        out
    }

    pub fn write_to(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.ciphertext.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.ciphertext);
    }
}

fn check_length(len: usize) -> Result<(), ProtocolError> {
    if len == 0 || len % BLOCK_LEN != 0 || len > MAX_FRAME_LEN {
        return Err(ProtocolError::BadFrame(format!(
            "frame length {len} is not a positive multiple of {BLOCK_LEN} up to {MAX_FRAME_LEN}"
        )));
    }
    Ok(())
}

/// Attempts to cut one frame off the front of `buf`.
///
/// Returns `Ok(None)` when more bytes are needed, otherwise the frame and the
/// number of bytes consumed. A bad length prefix is rejected before any
/// buffering for its body happens.
pub fn decode_frame(buf: &[u8]) -> Result<Option<(Frame, usize)>, ProtocolError> {
    if buf.len() < LENGTH_PREFIX_LEN {
        return Ok(None);
    }
    let len = u32::from_be_bytes(buf[..LENGTH_PREFIX_LEN].try_into().expect("4 bytes")) as usize;
    check_length(len)?;
    let total = LENGTH_PREFIX_LEN + len;
    if buf.len() < total {
        return Ok(None);
    }
    let frame = Frame {
        ciphertext: buf[LENGTH_PREFIX_LEN..total].to_vec(),
    };
    Ok(Some((frame, total)))
}

/// Upper bound on bytes a partial frame at the front of `buf` still needs.
pub fn bytes_needed(buf: &[u8]) -> usize {
    if buf.len() < LENGTH_PREFIX_LEN {
        return LENGTH_PREFIX_LEN - buf.len();
    }
    let len = u32::from_be_bytes(buf[..LENGTH_PREFIX_LEN].try_into().expect("4 bytes")) as usize;
    (LENGTH_PREFIX_LEN + len).saturating_sub(buf.len())
}
