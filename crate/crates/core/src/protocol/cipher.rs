//! AES-128 in ECB mode with PKCS#7 padding.
//!
//! ECB encrypts equal 16-byte blocks to equal ciphertext blocks, so it leaks
//! plaintext structure. It is kept here for wire compatibility with the
//! original middleware; everything outside this module only sees
//! [`encrypt_frame`] / [`decrypt_frame`].

use std::fmt;
use std::str::FromStr;

use aes::cipher::generic_array::GenericArray;
use aes::cipher::{BlockDecrypt, BlockEncrypt, KeyInit};
use aes::Aes128;

use super::frame::{Frame, MAX_FRAME_LEN};
use super::ProtocolError;

pub const BLOCK_LEN: usize = 16;

/// Pre-shared AES-128 key. Never serialized onto the wire.
#[derive(Clone, PartialEq, Eq)]
pub struct SessionKey([u8; 16]);

impl SessionKey {
    pub fn new(bytes: [u8; 16]) -> Self {
        SessionKey(bytes)
    }

    pub fn from_hex(text: &str) -> Result<Self, ProtocolError> {
        let text = text.trim();
        if text.len() != 32 || !text.is_ascii() {
            return Err(ProtocolError::BadKey(format!(
                "expected 32 hex characters, got {}",
                text.chars().count()
            )));
        }
        let mut key = [0u8; 16];
        for (i, chunk) in text.as_bytes().chunks(2).enumerate() {
            let pair = std::str::from_utf8(chunk).expect("ascii");
            key[i] = u8::from_str_radix(pair, 16)
                .map_err(|_| ProtocolError::BadKey(format!("invalid hex digit pair {pair:?}")))?;
        }
        Ok(SessionKey(key))
    }

    pub fn as_bytes(&self) -> &[u8; 16] {
        &self.0
    }
}

impl FromStr for SessionKey {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SessionKey::from_hex(s)
    }
}

impl fmt::Debug for SessionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SessionKey(..)")
    }
}

/// Pads to the next multiple of `BLOCK_LEN`; block-aligned input gains a full block.
pub fn pkcs7_pad(data: &[u8]) -> Vec<u8> {
    let pad = BLOCK_LEN - data.len() % BLOCK_LEN;
    let mut out = Vec::with_capacity(data.len() + pad);
    out.extend_from_slice(data);
    out.resize(data.len() + pad, pad as u8);
    out
}

pub fn pkcs7_unpad(data: &[u8]) -> Result<&[u8], ProtocolError> {
    if data.is_empty() || data.len() % BLOCK_LEN != 0 {
        return Err(ProtocolError::BadPadding);
    }
    let pad = *data.last().expect("non-empty") as usize;
    if pad == 0 || pad > BLOCK_LEN {
        return Err(ProtocolError::BadPadding);
    }
    let (body, tail) = data.split_at(data.len() - pad);
    if tail.iter().any(|&b| b as usize != pad) {
        return Err(ProtocolError::BadPadding);
    }
    Ok(body)
}

pub fn encrypt_frame(plain: &[u8], key: &SessionKey) -> Result<Frame, ProtocolError> {
    let padded_len = plain.len() + (BLOCK_LEN - plain.len() % BLOCK_LEN);
    if padded_len > MAX_FRAME_LEN {
        return Err(ProtocolError::OversizePayload {
            len: plain.len(),
            max: MAX_FRAME_LEN - 1,
        });
    }
    let mut buf = pkcs7_pad(plain);
    let cipher = Aes128::new(GenericArray::from_slice(key.as_bytes()));
    for block in buf.chunks_exact_mut(BLOCK_LEN) {
        cipher.encrypt_block(GenericArray::from_mut_slice(block));
    }
    Ok(Frame::from_ciphertext_unchecked(buf))
}

pub fn decrypt_frame(frame: &Frame, key: &SessionKey) -> Result<Vec<u8>, ProtocolError> {
    let ct = frame.ciphertext();
    if ct.is_empty() || ct.len() % BLOCK_LEN != 0 {
        return Err(ProtocolError::BadFrame(format!(
            "ciphertext length {} is not a positive multiple of {BLOCK_LEN}",
            ct.len()
        )));
    }
    let mut buf = ct.to_vec();
    let cipher = Aes128::new(GenericArray::from_slice(key.as_bytes()));
    for block in buf.chunks_exact_mut(BLOCK_LEN) {
        cipher.decrypt_block(GenericArray::from_mut_slice(block));
    }
    let len = pkcs7_unpad(&buf)?.len();
    buf.truncate(len);
    Ok(buf)
}
