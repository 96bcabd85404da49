#![allow(dead_code)]

use std::sync::Arc;
use std::time::Duration;

use futures::{SinkExt, StreamExt};
use sink_agent::codec::FrameCodec;
use sink_agent::remote::{RemoteConfig, RemoteServer};
use sink_core::mapping::{load_mapping, Mapping};
use sink_core::protocol::{
    open, seal, AckPayload, ControlPayload, Frame, HelloPayload, HelloStatus, Message, MessageKind,
    SessionId, SessionKey, PROTOCOL_VERSION,
};
use sink_core::screen::ScreenSpec;
use tokio::net::TcpStream;
use tokio::time::timeout;
use tokio_util::codec::Framed;

pub const SPEC_1080: &str = include_str!("../../../../fixtures/demo_remote_1080.toml");
pub const SPEC_800: &str = include_str!("../../../../fixtures/demo_remote_800.toml");
pub const MAPPING: &str = include_str!("../../../../fixtures/demo_mapping.toml");

pub fn key() -> SessionKey {
    SessionKey::new(*b"sixteen byte key")
}

pub fn spec_1080() -> ScreenSpec {
    ScreenSpec::from_toml(SPEC_1080).unwrap()
}

pub fn spec_800() -> ScreenSpec {
    ScreenSpec::from_toml(SPEC_800).unwrap()
}

pub fn mapping() -> Arc<Mapping> {
    Arc::new(load_mapping(MAPPING).unwrap())
}

pub async fn server(spec: ScreenSpec, tweak: impl FnOnce(&mut RemoteConfig)) -> RemoteServer {
    let mut cfg = RemoteConfig::new(key(), spec);
    tweak(&mut cfg);
    RemoteServer::bind("127.0.0.1:0", cfg).await.unwrap()
}

pub fn quiet_logs() {
    let _ = tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_test_writer()
        .try_init();
}

/// A hand-driven protocol peer for poking the remote agent directly.
pub struct RawPeer {
    pub io: Framed<TcpStream, FrameCodec>,
    pub key: SessionKey,
    pub session: SessionId,
}

impl RawPeer {
    pub async fn connect(addr: std::net::SocketAddr, key: SessionKey) -> RawPeer {
        let stream = TcpStream::connect(addr).await.unwrap();
        RawPeer {
            io: Framed::new(stream, FrameCodec),
            key,
            session: SessionId::random(),
        }
    }

    pub async fn send(&mut self, kind: MessageKind, seq: u64, payload: Vec<u8>) {
        let msg = Message::new(kind, self.session, seq, payload);
        self.io.send(seal(&msg, &self.key).unwrap()).await.unwrap();
    }

    pub async fn send_frame(&mut self, frame: Frame) {
        self.io.send(frame).await.unwrap();
    }

    /// Next frame, or `None` if the remote closed the connection.
    pub async fn recv_frame(&mut self) -> Option<Frame> {
        match timeout(Duration::from_secs(5), self.io.next()).await.expect("remote answered in time") {
            Some(Ok(frame)) => Some(frame),
            _ => None,
        }
    }

    pub async fn recv(&mut self) -> Message {
        let frame = self.recv_frame().await.expect("connection open");
        open(&frame, &self.key).expect("reply decrypts")
    }

    /// Whether nothing arrives within `ms`.
    pub async fn silent_for(&mut self, ms: u64) -> bool {
        timeout(Duration::from_millis(ms), self.io.next()).await.is_err()
    }

    pub async fn hello_with(&mut self, version: u16, seq_mark: u64) -> HelloPayload {
        let body = HelloPayload {
            version,
            resolution: "1920x1080".parse().unwrap(),
            seq_mark,
            status: HelloStatus::Ok,
        };
        self.send(MessageKind::Hello, 0, body.encode()).await;
        let reply = self.recv().await;
        assert_eq!(reply.kind, MessageKind::Hello);
        HelloPayload::decode(&reply.payload).unwrap()
    }

    pub async fn hello(&mut self) -> HelloPayload {
        self.hello_with(PROTOCOL_VERSION, 0).await
    }

    pub async fn control(&mut self, seq: u64, payload: &ControlPayload) -> AckPayload {
        self.send(MessageKind::Control, seq, payload.encode()).await;
        let reply = self.recv().await;
        assert_eq!(reply.kind, MessageKind::Ack);
        assert_eq!(reply.seq, seq, "ACK echoes the CONTROL seq");
        AckPayload::decode(&reply.payload).unwrap()
    }
}

/// Resolves a demo mapping input for the 1080p screen.
pub fn control_for(interface: &str, widget: &str, action: &str, payload: Option<&str>) -> ControlPayload {
    let key = sink_core::api::encode_input(&sink_core::api::RawAction::new(interface, widget, action, payload)).unwrap();
    let m = mapping();
    ControlPayload {
        interface_id: "monitor".into(),
        click_delay_ms: m.click_delay_ms,
        sequence: m.resolve(&key, "1920x1080".parse().unwrap()).unwrap(),
    }
}

pub fn field(server: &RemoteServer, widget: &str, name: &str) -> String {
    server.state().snapshot.widget(widget).unwrap().field(name).unwrap()
}
