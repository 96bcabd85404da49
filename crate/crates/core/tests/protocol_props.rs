use proptest::prelude::*;
use rand::{rngs::StdRng, Rng, SeedableRng};
use sink_core::protocol::{
    decode_frame, decrypt_frame, deserialize_message, encrypt_frame, open, seal, serialize_message,
    Frame, Message, MessageKind, ProtocolError, SessionId, SessionKey, HEADER_LEN,
};

fn kind() -> impl Strategy<Value = MessageKind> {
    prop_oneof![
        Just(MessageKind::Hello),
        Just(MessageKind::Control),
        Just(MessageKind::Ping),
        Just(MessageKind::Pong),
        Just(MessageKind::Ack),
    ]
}

fn message() -> impl Strategy<Value = Message> {
    (
        kind(),
        any::<[u8; 16]>(),
        any::<u64>(),
        prop::collection::vec(any::<u8>(), 0..300),
    )
        .prop_map(|(k, s, seq, p)| Message::new(k, SessionId(s), seq, p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn serialize_round_trip(msg in message()) {
        let bytes = serialize_message(&msg).unwrap();
        prop_assert_eq!(bytes.len(), HEADER_LEN + msg.payload.len());
        prop_assert_eq!(deserialize_message(&bytes).unwrap(), msg);
    }

    #[test]
    fn seal_open_round_trip(msg in message(), key in any::<[u8; 16]>()) {
        let key = SessionKey::new(key);
        let frame = seal(&msg, &key).unwrap();
        prop_assert_eq!(frame.len() % 16, 0);
        prop_assert_eq!(open(&frame, &key).unwrap(), msg);
    }

    #[test]
    fn encrypt_round_trip(plain in prop::collection::vec(any::<u8>(), 0..200), key in any::<[u8; 16]>()) {
        let key = SessionKey::new(key);
        let frame = encrypt_frame(&plain, &key).unwrap();
        prop_assert_eq!(frame.len(), (plain.len() / 16 + 1) * 16);
        prop_assert_eq!(decrypt_frame(&frame, &key).unwrap(), plain);
    }

    #[test]
    fn trailing_bytes_are_rejected(msg in message(), extra in 1usize..8) {
        let mut bytes = serialize_message(&msg).unwrap();
        bytes.extend(std::iter::repeat_n(0u8, extra));
        let is_mismatch = matches!(deserialize_message(&bytes), Err(ProtocolError::LengthMismatch { .. }));
        prop_assert!(is_mismatch);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Frames written back to back and re-read with arbitrary chunking come
    /// out exactly as written.
    #[test]
    fn concatenated_frames_resplit(
        msgs in prop::collection::vec(message(), 1..12),
        cuts in prop::collection::vec(1usize..64, 1..40),
    ) {
        let key = SessionKey::new([3; 16]);
        let mut stream = Vec::new();
        for m in &msgs {
            seal(m, &key).unwrap().write_to(&mut stream);
        }
        let mut buf = Vec::new();
        let mut out = Vec::new();
        let mut pos = 0;
        let mut cut = cuts.iter().cycle();
        while pos < stream.len() {
            let n = (*cut.next().unwrap()).min(stream.len() - pos);
            buf.extend_from_slice(&stream[pos..pos + n]);
            pos += n;
            while let Some((frame, used)) = decode_frame(&buf).unwrap() {
                buf.drain(..used);
                out.push(open(&frame, &key).unwrap());
            }
        }
        prop_assert!(buf.is_empty());
        prop_assert_eq!(out, msgs);
    }
}

/// 10^5 random and mutated inputs through every decoder; any panic fails.
#[test]
fn decoders_survive_fuzzing() {
    let mut rng = StdRng::seed_from_u64(0xf022);
    let key = SessionKey::new([9; 16]);
    let valid = seal(
        &Message::new(MessageKind::Control, SessionId([1; 16]), 5, b"{\"x\":1}".to_vec()),
        &key,
    )
    .unwrap()
    .to_bytes();
    let (mut ok, mut err) = (0u32, 0u32);
    for i in 0..100_000 {
        let input: Vec<u8> = if i % 2 == 0 {
            let len = rng.gen_range(0..96);
            (0..len).map(|_| rng.gen()).collect()
        } else {
            let mut v = valid.clone();
            for _ in 0..rng.gen_range(1..4) {
                let j = rng.gen_range(0..v.len());
                v[j] ^= rng.gen::<u8>() | 1;
            }
            v.truncate(rng.gen_range(0..=v.len()));
            v
        };
        let _ = deserialize_message(&input);
        match decode_frame(&input) {
            Ok(Some((frame, _))) => match open(&frame, &key) {
                Ok(_) => ok += 1,
                Err(_) => err += 1,
            },
            Ok(None) => {}
            Err(_) => err += 1,
        }
        if input.len() % 16 == 0 && !input.is_empty() {
            let _ = decrypt_frame(&Frame::from_ciphertext_unchecked(input), &key);
        }
    }
    assert!(err > 0);
    assert!(ok + err > 0);
}
