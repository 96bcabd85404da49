mod common;

use common::*;
use sink_core::mapping::{MouseButton, PixelCoord, ResolvedSequence, UiEvent};
use sink_core::protocol::{
    AckStatus, ControlPayload, Frame, HelloStatus, MessageKind, SessionKey, PROTOCOL_VERSION,
};

#[tokio::test]
async fn ping_gets_pong_and_leaves_screen_alone() {
    let server = server(spec_1080(), |_| {}).await;
    let before = server.state().snapshot;
    let mut peer = RawPeer::connect(server.local_addr(), key()).await;
    let hello = peer.hello().await;
    assert_eq!(hello.status, HelloStatus::Ok);
    assert_eq!(hello.resolution.to_string(), "1920x1080");
    peer.send(MessageKind::Ping, 41, Vec::new()).await;
    let pong = peer.recv().await;
    assert_eq!((pong.kind, pong.seq), (MessageKind::Pong, 41));
    assert_eq!(server.state().snapshot, before);
    server.shutdown().await;
}

#[tokio::test]
async fn type_chain_commits_and_acks() {
    let server = server(spec_1080(), |_| {}).await;
    let mut peer = RawPeer::connect(server.local_addr(), key()).await;
    peer.hello().await;
    let ack = peer.control(1, &control_for("local", "hr_field", "set_value", Some("72"))).await;
    assert_eq!(ack.status, AckStatus::Ok);
    assert_eq!(field(&server, "hr", "committed"), "72");
    assert_eq!(field(&server, "hr", "focused"), "false");
    let state = server.state();
    assert_eq!((state.controls_applied, state.last_seq), (1, 1));
    assert_eq!(state.peers.len(), 1);
    assert_eq!(state.peers[0].last_seq, 1);
    server.shutdown().await;
}

#[tokio::test]
async fn out_of_order_seq_is_stale_and_ignored() {
    let server = server(spec_1080(), |_| {}).await;
    let mut peer = RawPeer::connect(server.local_addr(), key()).await;
    peer.hello().await;
    let click = control_for("local", "apply_button", "click", None);
    assert_eq!(peer.control(1, &click).await.status, AckStatus::Ok);
    assert_eq!(peer.control(2, &click).await.status, AckStatus::Ok);
    let before = server.state();
    assert_eq!(peer.control(1, &click).await.status, AckStatus::DuplicateOrStale);
    assert_eq!(peer.control(2, &click).await.status, AckStatus::DuplicateOrStale);
    // A gap is rejected too, and does not consume the seq.
    assert_eq!(peer.control(4, &click).await.status, AckStatus::DuplicateOrStale);
    let after = server.state();
    assert_eq!(after.snapshot, before.snapshot);
    assert_eq!(after.controls_applied, 2);
    assert_eq!(field(&server, "apply", "click_count"), "2");
    assert_eq!(peer.control(3, &click).await.status, AckStatus::Ok);
    assert_eq!(field(&server, "apply", "click_count"), "3");
    server.shutdown().await;
}

#[tokio::test]
async fn wrong_key_gets_reject_frame_and_server_keeps_serving() {
    let server = server(spec_1080(), |_| {}).await;
    let before = server.state().snapshot;

    let mut intruder = RawPeer::connect(server.local_addr(), SessionKey::new([7; 16])).await;
    intruder.send(MessageKind::Hello, 0, vec![0; 19]).await;
    let reject = intruder.recv_frame().await.expect("reject frame");
    assert!(sink_core::protocol::open(&reject, &key()).is_err());
    assert!(sink_core::protocol::open(&reject, &SessionKey::new([7; 16])).is_err());
    assert!(intruder.recv_frame().await.is_none(), "connection closed after reject");

    let mut peer = RawPeer::connect(server.local_addr(), key()).await;
    assert_eq!(peer.hello().await.status, HelloStatus::Ok);
    assert_eq!(server.state().snapshot, before);
    server.shutdown().await;
}

#[tokio::test]
async fn version_mismatch_is_incompatible() {
    let server = server(spec_1080(), |_| {}).await;
    let mut peer = RawPeer::connect(server.local_addr(), key()).await;
    let reply = peer.hello_with(PROTOCOL_VERSION + 1, 0).await;
    assert_eq!(reply.status, HelloStatus::Incompatible);
    assert_eq!(reply.version, PROTOCOL_VERSION);
    assert!(peer.recv_frame().await.is_none());
    server.shutdown().await;
}

#[tokio::test]
async fn garbage_after_handshake_drops_only_that_connection() {
    let server = server(spec_1080(), |c| c.multi_writer = true).await;
    let mut good = RawPeer::connect(server.local_addr(), key()).await;
    good.hello().await;
    let click = control_for("local", "apply_button", "click", None);
    good.control(1, &click).await;
    let before = server.state().snapshot;

    // Well framed, wrong contents.
    let mut bad = RawPeer::connect(server.local_addr(), key()).await;
    bad.hello().await;
    bad.send_frame(Frame::new(vec![0xAB; 48]).unwrap()).await;
    assert!(bad.recv_frame().await.is_none());
    assert_eq!(server.state().snapshot, before);

    // Broken length prefix.
    let mut raw = tokio::net::TcpStream::connect(server.local_addr()).await.unwrap();
    tokio::io::AsyncWriteExt::write_all(&mut raw, &[0, 0, 0, 5, 1, 2, 3, 4, 5]).await.unwrap();
    let mut buf = [0u8; 8];
    let n = tokio::io::AsyncReadExt::read(&mut raw, &mut buf).await.unwrap_or(0);
    assert_eq!(n, 0, "closed without a reply");
    assert_eq!(server.state().snapshot, before);

    assert_eq!(good.control(2, &click).await.status, AckStatus::Ok);
    assert_eq!(field(&server, "apply", "click_count"), "2");
    server.shutdown().await;
}

#[tokio::test]
async fn undecodable_control_is_acked_with_replay_error() {
    let server = server(spec_1080(), |_| {}).await;
    let mut peer = RawPeer::connect(server.local_addr(), key()).await;
    peer.hello().await;
    let before = server.state().snapshot;
    peer.send(MessageKind::Control, 1, b"{not json".to_vec()).await;
    let ack = sink_core::protocol::AckPayload::decode(&peer.recv().await.payload).unwrap();
    assert_eq!((ack.status, ack.index), (AckStatus::ReplayError, 0));
    assert_eq!(server.state().snapshot, before);
    // The seq is consumed, so the session carries on at 2.
    let click = control_for("local", "apply_button", "click", None);
    assert_eq!(peer.control(2, &click).await.status, AckStatus::Ok);
    server.shutdown().await;
}

#[tokio::test]
async fn replay_error_keeps_prefix_and_reports_index() {
    let server = server(spec_1080(), |_| {}).await;
    let mut peer = RawPeer::connect(server.local_addr(), key()).await;
    peer.hello().await;
    let res = "1920x1080".parse().unwrap();
    let payload = ControlPayload {
        interface_id: "monitor".into(),
        click_delay_ms: 200,
        sequence: ResolvedSequence::new(
            res,
            vec![
                UiEvent::MouseMove(PixelCoord::new(1600, 940)),
                UiEvent::MouseClick(MouseButton::Left),
                UiEvent::MouseMove(PixelCoord::new(5000, 10)),
                UiEvent::MouseClick(MouseButton::Left),
            ],
        ),
    };
    let ack = peer.control(1, &payload).await;
    assert_eq!((ack.status, ack.index), (AckStatus::ReplayError, 2));
    assert_eq!(field(&server, "apply", "click_count"), "1");
    assert_eq!(server.state().controls_applied, 1);
    server.shutdown().await;
}

#[tokio::test]
async fn every_well_formed_frame_gets_one_reply() {
    let server = server(spec_1080(), |_| {}).await;
    let mut peer = RawPeer::connect(server.local_addr(), key()).await;
    peer.hello().await;
    let click = control_for("local", "apply_button", "click", None);
    let mut expected = Vec::new();
    for i in 1..=20u64 {
        if i % 3 == 0 {
            peer.send(MessageKind::Ping, 100 + i, Vec::new()).await;
            expected.push((MessageKind::Pong, 100 + i));
        } else {
            // Every other CONTROL is a resend of the previous seq.
            let seq = i.div_ceil(2);
            peer.send(MessageKind::Control, seq, click.encode()).await;
            expected.push((MessageKind::Ack, seq));
        }
    }
    for want in expected {
        let got = peer.recv().await;
        assert_eq!((got.kind, got.seq), want);
    }
    assert!(peer.silent_for(100).await);
    server.shutdown().await;
}

#[tokio::test]
async fn exclusive_writer_turns_away_a_second_session() {
    let server = server(spec_1080(), |_| {}).await;
    let mut first = RawPeer::connect(server.local_addr(), key()).await;
    assert_eq!(first.hello().await.status, HelloStatus::Ok);
    let mut second = RawPeer::connect(server.local_addr(), key()).await;
    assert_eq!(second.hello().await.status, HelloStatus::Busy);
    assert!(second.recv_frame().await.is_none());

    // The same session may come back on a new connection.
    let mut again = RawPeer::connect(server.local_addr(), key()).await;
    again.session = first.session;
    assert_eq!(again.hello().await.status, HelloStatus::Ok);

    drop(first);
    drop(again);
    // Once the holder is gone the slot frees up.
    let mut third = RawPeer::connect(server.local_addr(), key()).await;
    let mut status = third.hello().await.status;
    for _ in 0..50 {
        if status == HelloStatus::Ok {
            break;
        }
        tokio::time::sleep(std::time::Duration::from_millis(20)).await;
        third = RawPeer::connect(server.local_addr(), key()).await;
        status = third.hello().await.status;
    }
    assert_eq!(status, HelloStatus::Ok);
    server.shutdown().await;
}

#[tokio::test]
async fn multi_writer_serializes_sessions() {
    let server = server(spec_1080(), |c| c.multi_writer = true).await;
    let click = control_for("local", "apply_button", "click", None);
    let mut peers = Vec::new();
    for _ in 0..3 {
        let mut p = RawPeer::connect(server.local_addr(), key()).await;
        assert_eq!(p.hello().await.status, HelloStatus::Ok);
        peers.push(p);
    }
    for seq in 1..=5 {
        for p in &mut peers {
            assert_eq!(p.control(seq, &click).await.status, AckStatus::Ok);
        }
    }
    assert_eq!(field(&server, "apply", "click_count"), "15");
    assert_eq!(server.state().peers.len(), 3);
    server.shutdown().await;
}

#[tokio::test]
async fn hello_seq_mark_resumes_a_session() {
    let server = server(spec_1080(), |_| {}).await;
    let mut peer = RawPeer::connect(server.local_addr(), key()).await;
    peer.hello().await;
    let click = control_for("local", "apply_button", "click", None);
    for seq in 1..=3 {
        peer.control(seq, &click).await;
    }
    let session = peer.session;
    drop(peer);

    // The remote remembers more than the client claims.
    let mut back = RawPeer::connect(server.local_addr(), key()).await;
    back.session = session;
    let mut reply = back.hello_with(PROTOCOL_VERSION, 1).await;
    for _ in 0..50 {
        if reply.status == HelloStatus::Ok {
            break;
        }
        tokio::time::sleep(std::time::Duration::from_millis(20)).await;
        back = RawPeer::connect(server.local_addr(), key()).await;
        back.session = session;
        reply = back.hello_with(PROTOCOL_VERSION, 1).await;
    }
    assert_eq!((reply.status, reply.seq_mark), (HelloStatus::Ok, 3));
    assert_eq!(back.control(4, &click).await.status, AckStatus::Ok);
    drop(back);

    // A client that knows it settled more moves the mark forward.
    let mut fresh = RawPeer::connect(server.local_addr(), key()).await;
    let mut reply = fresh.hello_with(PROTOCOL_VERSION, 10).await;
    for _ in 0..50 {
        if reply.status == HelloStatus::Ok {
            break;
        }
        tokio::time::sleep(std::time::Duration::from_millis(20)).await;
        fresh = RawPeer::connect(server.local_addr(), key()).await;
        reply = fresh.hello_with(PROTOCOL_VERSION, 10).await;
    }
    assert_eq!(reply.seq_mark, 10);
    assert_eq!(fresh.control(10, &click).await.status, AckStatus::DuplicateOrStale);
    assert_eq!(fresh.control(11, &click).await.status, AckStatus::Ok);
    server.shutdown().await;
}

#[tokio::test]
async fn no_ack_mode_stays_silent_on_control() {
    let server = server(spec_1080(), |c| c.ack = false).await;
    let mut peer = RawPeer::connect(server.local_addr(), key()).await;
    peer.hello().await;
    let click = control_for("local", "apply_button", "click", None);
    peer.send(MessageKind::Control, 1, click.encode()).await;
    peer.send(MessageKind::Ping, 9, Vec::new()).await;
    // The PONG is the next thing on the wire, so the CONTROL got no reply.
    let reply = peer.recv().await;
    assert_eq!((reply.kind, reply.seq), (MessageKind::Pong, 9));
    assert_eq!(field(&server, "apply", "click_count"), "1");
    server.shutdown().await;
}

#[tokio::test]
async fn real_time_mode_sleeps_through_delays() {
    let server = server(spec_1080(), |c| c.real_time = true).await;
    let mut peer = RawPeer::connect(server.local_addr(), key()).await;
    peer.hello().await;
    let start = tokio::time::Instant::now();
    // Three clicks at 200 ms each, plus the 800 ms long press.
    peer.control(1, &control_for("local", "apply_button", "click", None)).await;
    peer.control(2, &control_for("local", "apply_button", "click", None)).await;
    peer.control(3, &control_for("local", "apply_button", "click", None)).await;
    peer.control(4, &control_for("local", "alarm_button", "click", None)).await;
    let elapsed = start.elapsed().as_millis();
    assert!((1400..4000).contains(&elapsed), "elapsed {elapsed} ms");
    assert_eq!(server.state().snapshot.clock_ms, 1400);
    server.shutdown().await;
}
