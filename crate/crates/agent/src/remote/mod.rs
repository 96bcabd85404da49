//! Control server: owns a virtual screen and replays the CONTROL messages
//! sent by local agents onto it.
//!
//! Each TCP connection starts with an encrypted HELLO exchange. After that
//! the connection may send CONTROL and PING messages; CONTROLs are forwarded
//! to the screen task, which is the only code that touches the screen.
//!
//! A HELLO that cannot be decrypted is answered with a 16-byte frame that no
//! key decrypts to a valid message, and the connection is closed.

pub mod http;
mod screen;

pub use screen::{replay_guard, GuardDecision};

use std::io;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use futures::{SinkExt, StreamExt};
use sink_core::api::{StateDocument, StateEvent};
use sink_core::mapping::Resolution;
use sink_core::protocol::{
    open, seal, AckPayload, Frame, HelloPayload, HelloStatus, Message, MessageKind, SessionId,
    SessionKey, BLOCK_LEN, PROTOCOL_VERSION,
};
use sink_core::screen::{ScreenSpec, ScreenState};
use tokio::io::{AsyncRead, AsyncWrite};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{broadcast, mpsc, oneshot, watch};
use tokio::task::{JoinHandle, JoinSet};
use tokio::time::{timeout, Instant};
use tokio_util::codec::{FramedRead, FramedWrite};
use tokio_util::sync::CancellationToken;
use tracing::{debug, info, warn};

use crate::codec::FrameCodec;
use screen::{ScreenCmd, ScreenTask};

/// How long a new connection has to send its HELLO.
pub const HELLO_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    pub key: SessionKey,
    pub spec: ScreenSpec,
    /// Sleep through `Delay` events instead of only advancing the screen clock.
    pub real_time: bool,
    /// Answer every CONTROL with an ACK.
    pub ack: bool,
    /// Let several sessions control the screen at once.
    pub multi_writer: bool,
}

impl RemoteConfig {
    pub fn new(key: SessionKey, spec: ScreenSpec) -> Self {
        RemoteConfig {
            key,
            spec,
            real_time: false,
            ack: true,
            multi_writer: false,
        }
    }
}

/// Read-only view of a running server, shared with the HTTP side.
#[derive(Clone)]
pub struct RemoteHandle {
    state: watch::Receiver<StateDocument>,
    events: broadcast::Sender<StateEvent>,
    started: Instant,
}

impl RemoteHandle {
    /// Current state, with a fresh uptime.
    pub fn state(&self) -> StateDocument {
        let mut doc = self.state.borrow().clone();
        doc.uptime_ms = self.started.elapsed().as_millis() as u64;
        doc
    }

    pub fn watch(&self) -> watch::Receiver<StateDocument> {
        self.state.clone()
    }

    /// One event per accepted CONTROL from now on.
    pub fn subscribe(&self) -> broadcast::Receiver<StateEvent> {
        self.events.subscribe()
    }
}

struct Shared {
    key: SessionKey,
    resolution: Resolution,
    ack: bool,
    multi_writer: bool,
    /// The session allowed to write, and the connection it arrived on.
    writer: Mutex<Option<(SessionId, u64)>>,
    next_conn: AtomicU64,
    screen: mpsc::Sender<ScreenCmd>,
}

pub struct RemoteServer {
    local_addr: SocketAddr,
    handle: RemoteHandle,
    cancel: CancellationToken,
    accept: JoinHandle<()>,
    screen: JoinHandle<()>,
}

impl RemoteServer {
    pub async fn bind(addr: &str, config: RemoteConfig) -> io::Result<Self> {
        let listener = TcpListener::bind(addr).await?;
        Self::start(listener, config)
    }

    pub fn start(listener: TcpListener, config: RemoteConfig) -> io::Result<Self> {
        let local_addr = listener.local_addr()?;
        let resolution = config.spec.resolution;
        let state = ScreenState::new(config.spec);
        let events = broadcast::Sender::new(4096);
        let (task, state_rx) = ScreenTask::new(state, config.real_time, events.clone());
        let started = task.started;
        let (cmd_tx, cmd_rx) = mpsc::channel(256);
        let screen = tokio::spawn(task.run(cmd_rx));
        let shared = Arc::new(Shared {
            key: config.key,
            resolution,
            ack: config.ack,
            multi_writer: config.multi_writer,
            writer: Mutex::new(None),
            next_conn: AtomicU64::new(1),
            screen: cmd_tx,
        });
        let cancel = CancellationToken::new();
        let accept = tokio::spawn(accept_loop(listener, shared, cancel.clone()));
        info!(%local_addr, %resolution, "remote agent listening");
        Ok(RemoteServer {
            local_addr,
            handle: RemoteHandle {
                state: state_rx,
                events,
                started,
            },
            cancel,
            accept,
            screen,
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    pub fn handle(&self) -> RemoteHandle {
        self.handle.clone()
    }

    pub fn state(&self) -> StateDocument {
        self.handle.state()
    }

    pub fn subscribe(&self) -> broadcast::Receiver<StateEvent> {
        self.handle.subscribe()
    }

    /// Fires when the server starts shutting down.
    pub fn cancel_token(&self) -> CancellationToken {
        self.cancel.clone()
    }

    /// Closes the listener and every connection, then stops the screen task.
    pub async fn shutdown(self) {
        self.cancel.cancel();
        let _ = self.accept.await;
        let _ = self.screen.await;
    }
}

async fn accept_loop(listener: TcpListener, shared: Arc<Shared>, cancel: CancellationToken) {
    let mut conns = JoinSet::new();
    loop {
        tokio::select! {
            _ = cancel.cancelled() => break,
            accepted = listener.accept() => match accepted {
                Ok((stream, peer)) => {
                    let _ = stream.set_nodelay(true);
                    conns.spawn(connection(stream, peer, shared.clone(), cancel.clone()));
                }
                Err(e) => {
                    warn!(error = %e, "accept failed");
                    tokio::time::sleep(Duration::from_millis(50)).await;
                }
            },
            Some(_) = conns.join_next(), if !conns.is_empty() => {}
        }
    }
    drop(listener);
    while conns.join_next().await.is_some() {}
}

async fn connection(stream: TcpStream, peer: SocketAddr, shared: Arc<Shared>, cancel: CancellationToken) {
    let conn = shared.next_conn.fetch_add(1, Ordering::Relaxed);
    tokio::select! {
        _ = cancel.cancelled() => {}
        end = serve(stream, peer.to_string(), conn, &shared) => match end {
            Ok(()) => debug!(%peer, conn, "connection closed"),
            Err(reason) => warn!(%peer, conn, %reason, "connection dropped"),
        },
    }
    let _ = shared.screen.send(ScreenCmd::Detach { conn }).await;
    let mut writer = shared.writer.lock().expect("writer slot lock");
    if writer.is_some_and(|(_, c)| c == conn) {
        *writer = None;
    }
}

/// A frame no key opens: it is one block long, shorter than any message.
fn reject_frame() -> Frame {
    Frame::from_ciphertext_unchecked(vec![0; BLOCK_LEN])
}

async fn serve<S: AsyncRead + AsyncWrite>(stream: S, addr: String, conn: u64, shared: &Shared) -> Result<(), String> {
    let (r, w) = tokio::io::split(stream);
    let mut reader = FramedRead::new(r, FrameCodec);
    let mut writer = FramedWrite::new(w, FrameCodec);
    let send = |msg: Message| seal(&msg, &shared.key).map_err(|e| e.to_string());

    let first = match timeout(HELLO_TIMEOUT, reader.next()).await {
        Err(_) => return Err("no HELLO in time".into()),
        Ok(None) => return Ok(()),
        Ok(Some(frame)) => frame.map_err(|e| e.to_string())?,
    };
    let hello = match open(&first, &shared.key) {
        Ok(msg) if msg.kind == MessageKind::Hello => msg,
        Ok(msg) => {
            let _ = writer.send(reject_frame()).await;
            return Err(format!("expected HELLO, got {:?}", msg.kind));
        }
        Err(e) => {
            let _ = writer.send(reject_frame()).await;
            return Err(format!("undecryptable HELLO (wrong key?): {e}"));
        }
    };
    let session = hello.session_id;
    let reply = |status: HelloStatus, seq_mark: u64| {
        let body = HelloPayload {
            version: PROTOCOL_VERSION,
            resolution: shared.resolution,
            seq_mark,
            status,
        };
        send(Message::new(MessageKind::Hello, session, 0, body.encode()))
    };
    let theirs = match HelloPayload::decode(&hello.payload) {
        Ok(h) => h,
        Err(e) => {
            let _ = writer.send(reply(HelloStatus::Incompatible, 0)?).await;
            return Err(format!("bad HELLO payload: {e}"));
        }
    };
    if theirs.version != PROTOCOL_VERSION {
        let _ = writer.send(reply(HelloStatus::Incompatible, 0)?).await;
        return Err(format!("peer speaks version {}", theirs.version));
    }
    if !shared.multi_writer {
        let busy_with = {
            let mut slot = shared.writer.lock().expect("writer slot lock");
            match *slot {
                Some((holder, _)) if holder != session => Some(holder),
                _ => {
                    *slot = Some((session, conn));
                    None
                }
            }
        };
        if let Some(holder) = busy_with {
            let _ = writer.send(reply(HelloStatus::Busy, 0)?).await;
            return Err(format!("busy; screen is controlled by session {holder}"));
        }
    }
    let (tx, rx) = oneshot::channel();
    shared
        .screen
        .send(ScreenCmd::Hello {
            conn,
            session,
            addr: addr.clone(),
            seq_mark: theirs.seq_mark,
            reply: tx,
        })
        .await
        .map_err(|_| "screen stopped".to_string())?;
    let last = rx.await.map_err(|_| "screen stopped".to_string())?;
    writer.send(reply(HelloStatus::Ok, last)?).await.map_err(|e| e.to_string())?;
    info!(%addr, %session, last_applied = last, "session attached");

    while let Some(frame) = reader.next().await {
        let frame = frame.map_err(|e| e.to_string())?;
        let msg = open(&frame, &shared.key).map_err(|e| format!("bad frame: {e}"))?;
        if msg.session_id != session {
            warn!(%addr, got = %msg.session_id, "message for another session ignored");
            continue;
        }
        match msg.kind {
            MessageKind::Ping => {
                writer
                    .send(send(Message::new(MessageKind::Pong, session, msg.seq, Vec::new()))?)
                    .await
                    .map_err(|e| e.to_string())?;
            }
            MessageKind::Control => {
                let (tx, rx) = oneshot::channel();
                shared
                    .screen
                    .send(ScreenCmd::Control {
                        session,
                        seq: msg.seq,
                        payload: msg.payload,
                        reply: tx,
                    })
                    .await
                    .map_err(|_| "screen stopped".to_string())?;
                let ack: AckPayload = rx.await.map_err(|_| "screen stopped".to_string())?;
                if shared.ack {
                    writer
                        .send(send(Message::new(MessageKind::Ack, session, msg.seq, ack.encode()))?)
                        .await
                        .map_err(|e| e.to_string())?;
                }
            }
            other => debug!(%addr, kind = ?other, "ignored"),
        }
    }
    Ok(())
}
