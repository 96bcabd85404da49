//! Stream framing for tokio: length-prefixed ciphertext frames.

use bytes::{Buf, BufMut, BytesMut};
use sink_core::protocol::{bytes_needed, decode_frame, Frame, ProtocolError, LENGTH_PREFIX_LEN};
use thiserror::Error;
use tokio_util::codec::{Decoder, Encoder};

#[derive(Debug, Error)]
pub enum CodecError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

#[derive(Debug, Default, Clone, Copy)]
pub struct FrameCodec;

impl Decoder for FrameCodec {
    type Item = Frame;
    type Error = CodecError;

    fn decode(&mut self, src: &mut BytesMut) -> Result<Option<Frame>, CodecError> {
        match decode_frame(src)? {
            Some((frame, used)) => {
                src.advance(used);
                Ok(Some(frame))
            }
            None => {
                src.reserve(bytes_needed(src));
                Ok(None)
            }
        }
    }
}

impl Encoder<Frame> for FrameCodec {
    type Error = CodecError;

    fn encode(&mut self, frame: Frame, dst: &mut BytesMut) -> Result<(), CodecError> {
        dst.reserve(LENGTH_PREFIX_LEN + frame.len());
        dst.put_u32(frame.len() as u32);
        dst.put_slice(frame.ciphertext());
        Ok(())
    }
}
