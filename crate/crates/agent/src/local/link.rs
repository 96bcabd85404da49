//! One persistent connection to one remote agent.
//!
//! A link task owns the write side of its connection. A spawned reader
//! forwards decrypted messages back to it, so a blocked write never stalls
//! ACK or PONG processing. Items that were written but not acknowledged are
//! kept and resent, in order, after the next successful handshake.

use std::collections::VecDeque;
use std::future::Future;
use std::io;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use futures::{SinkExt, StreamExt};
use sink_core::api::{DeliveryOutcome, DeliveryReport, LinkState};
use sink_core::mapping::Resolution;
use sink_core::protocol::{
    open, seal, AckPayload, AckStatus, HelloPayload, HelloStatus, Message, MessageKind,
    ProtocolError, SessionId, SessionKey, PROTOCOL_VERSION,
};
use thiserror::Error;
use tokio::io::{AsyncRead, AsyncWrite, ReadHalf, WriteHalf};
use tokio::net::TcpStream;
use tokio::sync::{broadcast, mpsc, watch, OwnedSemaphorePermit};
use tokio::time::{sleep, sleep_until, timeout, Instant};
use tokio_util::codec::{FramedRead, FramedWrite};
use tokio_util::sync::CancellationToken;
use tracing::{debug, error, info, warn};

use super::config::AgentOptions;
use crate::codec::{CodecError, FrameCodec};

/// Delays before reconnect attempts 1, 2, 3, ...; later attempts use [`BACKOFF_CAP`].
pub const BACKOFF_SCHEDULE: [Duration; 6] = [
    Duration::from_millis(500),
    Duration::from_secs(1),
    Duration::from_secs(2),
    Duration::from_secs(4),
    Duration::from_secs(8),
    Duration::from_secs(16),
];
pub const BACKOFF_CAP: Duration = Duration::from_secs(30);

/// Delay after the `failures`-th consecutive failed attempt (1-based).
pub fn backoff_delay(failures: u32) -> Duration {
    BACKOFF_SCHEDULE
        .get(failures.saturating_sub(1) as usize)
        .copied()
        .unwrap_or(BACKOFF_CAP)
}

/// Opens byte streams to one remote. Tests substitute in-memory streams.
pub trait Connector: Send + Sync + 'static {
    type Stream: AsyncRead + AsyncWrite + Send + Unpin + 'static;
    fn connect(&self) -> impl Future<Output = io::Result<Self::Stream>> + Send;
}

#[derive(Debug, Clone)]
pub struct TcpConnector {
    pub addr: String,
}

impl Connector for TcpConnector {
    type Stream = TcpStream;

    async fn connect(&self) -> io::Result<TcpStream> {
        let stream = TcpStream::connect(&self.addr).await?;
        stream.set_nodelay(true)?;
        Ok(stream)
    }
}

#[derive(Debug, Error)]
pub enum LinkError {
    #[error("remote rejected the session key")]
    KeyMismatch,
    #[error("incompatible remote: {0}")]
    Incompatible(String),
    #[error("remote is busy with another controller")]
    Busy,
    #[error("connect timed out")]
    Timeout,
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

impl LinkError {
    fn is_fatal(&self) -> bool {
        matches!(self, LinkError::KeyMismatch | LinkError::Incompatible(_))
    }
}

impl From<CodecError> for LinkError {
    fn from(e: CodecError) -> Self {
        match e {
            CodecError::Io(e) => LinkError::Io(e),
            CodecError::Protocol(e) => LinkError::Protocol(e),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkStatus {
    pub state: LinkState,
    /// Resolution reported by the remote in its last HELLO.
    pub resolution: Option<Resolution>,
}

/// Per-endpoint state visible to the dispatcher.
#[derive(Debug)]
pub(crate) struct LinkShared {
    pub interface_id: String,
    pub addr: String,
    pub status: watch::Sender<LinkStatus>,
    /// Items routed to this link and not yet settled.
    pub pending: AtomicUsize,
}

impl LinkShared {
    pub fn new(interface_id: String, addr: String) -> Self {
        LinkShared {
            interface_id,
            addr,
            status: watch::Sender::new(LinkStatus {
                state: LinkState::Connecting,
                resolution: None,
            }),
            pending: AtomicUsize::new(0),
        }
    }

    fn set_state(&self, state: LinkState) {
        self.status.send_modify(|s| s.state = state);
    }
}

/// One CONTROL message on its way to one endpoint.
#[derive(Debug)]
pub(crate) struct Outbound {
    pub seq: u64,
    pub key: String,
    pub payload: Vec<u8>,
    pub dispatched_at: Instant,
    /// Send-queue slot, released when the item settles.
    pub permit: Option<OwnedSemaphorePermit>,
}

/// Where settled items are reported.
#[derive(Debug)]
pub(crate) struct Hub {
    pub reports: broadcast::Sender<DeliveryReport>,
    pub inflight: watch::Sender<usize>,
}

impl Hub {
    pub fn settle(&self, link: &LinkShared, item: Outbound, outcome: DeliveryOutcome) {
        let latency_ms = item.dispatched_at.elapsed().as_secs_f64() * 1000.0;
        let _ = self.reports.send(DeliveryReport {
            interface_id: link.interface_id.clone(),
            seq: item.seq,
            key: item.key,
            outcome,
            latency_ms,
        });
        drop(item.permit);
        link.pending.fetch_sub(1, Ordering::SeqCst);
        self.inflight.send_modify(|n| *n = n.saturating_sub(1));
    }
}

pub(crate) struct LinkCtx<C> {
    pub connector: C,
    pub key: SessionKey,
    pub session: SessionId,
    /// Resolution announced in our HELLO.
    pub hello_resolution: Resolution,
    pub opts: AgentOptions,
    pub shared: Arc<LinkShared>,
    pub hub: Arc<Hub>,
    pub cancel: CancellationToken,
}

struct Sent {
    item: Outbound,
    sent_at: Instant,
}

enum SessionEnd {
    Lost(String),
    Shutdown,
}

type Reader<S> = FramedRead<ReadHalf<S>, FrameCodec>;
type Writer<S> = FramedWrite<WriteHalf<S>, FrameCodec>;

struct Link<C> {
    ctx: LinkCtx<C>,
    rx: mpsc::UnboundedReceiver<Outbound>,
    /// Written (or failed to write) and not yet acknowledged, in seq order.
    pending: VecDeque<Sent>,
    /// Highest seq that needs no resend.
    settled_seq: u64,
    ping_seq: u64,
}

pub(crate) async fn run_link<C: Connector>(ctx: LinkCtx<C>, rx: mpsc::UnboundedReceiver<Outbound>) {
    let mut link = Link {
        ctx,
        rx,
        pending: VecDeque::new(),
        settled_seq: 0,
        ping_seq: 0,
    };
    link.run().await;
}

impl<C: Connector> Link<C> {
    fn id(&self) -> &str {
        &self.ctx.shared.interface_id
    }

    async fn run(&mut self) {
        let mut failures: u32 = 0;
        loop {
            self.ctx.shared.set_state(LinkState::Connecting);
            let seq_mark = self.pending.front().map(|s| s.item.seq - 1).unwrap_or(self.settled_seq);
            let attempt = tokio::select! {
                _ = self.ctx.cancel.cancelled() => return,
                r = self.handshake(seq_mark) => r,
            };
            match attempt {
                Ok((reader, writer, reply)) => {
                    failures = 0;
                    info!(endpoint = self.id(), resolution = %reply.resolution, "connected");
                    self.ctx.shared.status.send_replace(LinkStatus {
                        state: LinkState::Up,
                        resolution: Some(reply.resolution),
                    });
                    self.skip_applied(reply.seq_mark);
                    match self.session(reader, writer).await {
                        SessionEnd::Shutdown => return,
                        SessionEnd::Lost(reason) => {
                            // Pause one backoff step so a remote that accepts
                            // and then drops us cannot spin this loop.
                            let delay = backoff_delay(1);
                            warn!(endpoint = self.id(), %reason, ?delay, "connection lost; reconnecting");
                            self.ctx.shared.set_state(LinkState::Connecting);
                            tokio::select! {
                                _ = self.ctx.cancel.cancelled() => return,
                                _ = sleep(delay) => {}
                            }
                        }
                    }
                }
                Err(e) if e.is_fatal() => {
                    error!(endpoint = self.id(), error = %e, "giving up on endpoint");
                    self.go_down(&e.to_string()).await;
                    return;
                }
                Err(e) => {
                    failures += 1;
                    if self.ctx.opts.max_retries.is_some_and(|max| failures > max) {
                        error!(endpoint = self.id(), error = %e, failures, "retries exhausted");
                        self.go_down(&format!("retries exhausted: {e}")).await;
                        return;
                    }
                    let delay = backoff_delay(failures);
                    warn!(endpoint = self.id(), error = %e, ?delay, "connect failed");
                    tokio::select! {
                        _ = self.ctx.cancel.cancelled() => return,
                        _ = sleep(delay) => {}
                    }
                }
            }
        }
    }

    async fn handshake(&self, seq_mark: u64) -> Result<(Reader<C::Stream>, Writer<C::Stream>, HelloPayload), LinkError> {
        let limit = self.ctx.opts.connect_timeout;
        let deadline = Instant::now() + limit;
        let stream = timeout(limit, self.ctx.connector.connect())
            .await
            .map_err(|_| LinkError::Timeout)??;
        let (r, w) = tokio::io::split(stream);
        let mut reader = FramedRead::new(r, FrameCodec);
        let mut writer = FramedWrite::new(w, FrameCodec);
        let hello = HelloPayload {
            version: PROTOCOL_VERSION,
            resolution: self.ctx.hello_resolution,
            seq_mark,
            status: HelloStatus::Ok,
        };
        let msg = Message::new(MessageKind::Hello, self.ctx.session, 0, hello.encode());
        writer.send(seal(&msg, &self.ctx.key)?).await?;
        let frame = match tokio::time::timeout_at(deadline, reader.next()).await {
            Err(_) => return Err(LinkError::Timeout),
            Ok(None) => {
                return Err(LinkError::Io(io::Error::new(
                    io::ErrorKind::UnexpectedEof,
                    "closed during handshake",
                )))
            }
            Ok(Some(frame)) => frame?,
        };
        // The remote answers an undecryptable HELLO with a frame we cannot
        // decrypt either.
        let reply = open(&frame, &self.ctx.key).map_err(|_| LinkError::KeyMismatch)?;
        if reply.kind != MessageKind::Hello {
            return Err(LinkError::Protocol(ProtocolError::BadPayload {
                kind: reply.kind,
                reason: "expected HELLO".into(),
            }));
        }
        let reply = HelloPayload::decode(&reply.payload)?;
        if reply.version != PROTOCOL_VERSION || reply.status == HelloStatus::Incompatible {
            return Err(LinkError::Incompatible(format!(
                "remote speaks version {}, we speak {PROTOCOL_VERSION}",
                reply.version
            )));
        }
        if reply.status == HelloStatus::Busy {
            return Err(LinkError::Busy);
        }
        Ok((reader, writer, reply))
    }

    /// Drops pending items the remote reports as already applied.
    fn skip_applied(&mut self, remote_last: u64) {
        while self.pending.front().is_some_and(|s| s.item.seq <= remote_last) {
            let sent = self.pending.pop_front().expect("front exists");
            debug!(endpoint = self.id(), seq = sent.item.seq, "already applied before reconnect");
            self.settled_seq = self.settled_seq.max(sent.item.seq);
            self.ctx.hub.settle(&self.ctx.shared, sent.item, DeliveryOutcome::AlreadyApplied);
        }
    }

    async fn session(&mut self, reader: Reader<C::Stream>, mut writer: Writer<C::Stream>) -> SessionEnd {
        let (in_tx, mut in_rx) = mpsc::channel::<Result<Message, LinkError>>(64);
        let key = self.ctx.key.clone();
        let reader_task = tokio::spawn(read_loop(reader, key, in_tx));
        let _abort = AbortOnDrop(reader_task);

        let keepalive = self.ctx.opts.keepalive;
        let ack_timeout = self.ctx.opts.ack_timeout;
        let mut last_send = Instant::now();
        let mut last_recv = Instant::now();
        let mut last_ack = Instant::now();

        // Resend whatever was unacknowledged when the last connection died.
        let resend: Vec<Sent> = self.pending.drain(..).collect();
        let mut failed = None;
        for mut sent in resend {
            if failed.is_none() {
                match self.write_control(&mut writer, &sent.item).await {
                    Ok(()) => {
                        last_send = Instant::now();
                        sent.sent_at = last_send;
                        if !self.ctx.opts.expect_ack {
                            self.settle_sent(sent.item);
                            continue;
                        }
                    }
                    Err(e) => failed = Some(e),
                }
            }
            self.pending.push_back(sent);
        }
        if let Some(e) = failed {
            return SessionEnd::Lost(format!("resend failed: {e}"));
        }

        let mut rx_open = true;
        loop {
            let ping_at = last_send + keepalive;
            let dead_at = last_recv + keepalive * 3;
            // Measured from the later of the front item's send and the last
            // ACK, so a long backlog on a slow remote is not a timeout.
            let ack_deadline = self.pending.front().map(|s| s.sent_at.max(last_ack) + ack_timeout);
            tokio::select! {
                biased;
                _ = self.ctx.cancel.cancelled() => return SessionEnd::Shutdown,
                incoming = in_rx.recv() => match incoming {
                    Some(Ok(msg)) => {
                        last_recv = Instant::now();
                        if msg.kind == MessageKind::Ack {
                            last_ack = last_recv;
                        }
                        self.handle_incoming(msg);
                    }
                    Some(Err(e)) => return SessionEnd::Lost(e.to_string()),
                    None => return SessionEnd::Lost("connection closed by remote".into()),
                },
                item = self.rx.recv(), if rx_open => match item {
                    Some(item) => {
                        let result = self.write_control(&mut writer, &item).await;
                        last_send = Instant::now();
                        match result {
                            Ok(()) if !self.ctx.opts.expect_ack => self.settle_sent(item),
                            Ok(()) => self.pending.push_back(Sent { item, sent_at: last_send }),
                            Err(e) => {
                                self.pending.push_back(Sent { item, sent_at: last_send });
                                return SessionEnd::Lost(format!("write failed: {e}"));
                            }
                        }
                    }
                    None => {
                        rx_open = false;
                        if self.pending.is_empty() {
                            return SessionEnd::Shutdown;
                        }
                    }
                },
                _ = sleep_until(ping_at) => {
                    self.ping_seq += 1;
                    let ping = Message::new(MessageKind::Ping, self.ctx.session, self.ping_seq, Vec::new());
                    debug!(endpoint = self.id(), seq = self.ping_seq, "ping");
                    if let Err(e) = self.write(&mut writer, &ping).await {
                        return SessionEnd::Lost(format!("ping failed: {e}"));
                    }
                    last_send = Instant::now();
                }
                _ = sleep_until(dead_at) => {
                    return SessionEnd::Lost("read timeout".into());
                }
                _ = sleep_until(ack_deadline.unwrap_or(dead_at)), if ack_deadline.is_some() => {
                    return SessionEnd::Lost("acknowledgement timeout".into());
                }
            }
        }
    }

    async fn write(&self, writer: &mut Writer<C::Stream>, msg: &Message) -> Result<(), LinkError> {
        writer.send(seal(msg, &self.ctx.key)?).await?;
        Ok(())
    }

    async fn write_control(&self, writer: &mut Writer<C::Stream>, item: &Outbound) -> Result<(), LinkError> {
        let msg = Message::new(MessageKind::Control, self.ctx.session, item.seq, item.payload.clone());
        self.write(writer, &msg).await
    }

    fn settle_sent(&mut self, item: Outbound) {
        self.settled_seq = self.settled_seq.max(item.seq);
        self.ctx.hub.settle(&self.ctx.shared, item, DeliveryOutcome::Sent);
    }

    fn handle_incoming(&mut self, msg: Message) {
        match msg.kind {
            MessageKind::Ack => {
                let ack = match AckPayload::decode(&msg.payload) {
                    Ok(a) => a,
                    Err(e) => {
                        warn!(endpoint = self.id(), error = %e, "bad ACK ignored");
                        return;
                    }
                };
                let Some(pos) = self.pending.iter().position(|s| s.item.seq == msg.seq) else {
                    debug!(endpoint = self.id(), seq = msg.seq, "ACK for a seq no longer pending");
                    return;
                };
                let sent = self.pending.remove(pos).expect("position is valid");
                let outcome = match ack.status {
                    AckStatus::Ok => DeliveryOutcome::Applied,
                    AckStatus::ReplayError => {
                        warn!(endpoint = self.id(), seq = msg.seq, index = ack.index, "remote replay failed");
                        DeliveryOutcome::ReplayFailed { index: ack.index }
                    }
                    AckStatus::DuplicateOrStale => {
                        warn!(endpoint = self.id(), seq = msg.seq, "remote rejected seq as stale");
                        DeliveryOutcome::Stale
                    }
                };
                self.settled_seq = self.settled_seq.max(sent.item.seq);
                self.ctx.hub.settle(&self.ctx.shared, sent.item, outcome);
            }
            MessageKind::Pong => debug!(endpoint = self.id(), seq = msg.seq, "pong"),
            other => warn!(endpoint = self.id(), kind = ?other, "unexpected message ignored"),
        }
    }

    /// Marks the endpoint down and drops everything routed to it from now on.
    async fn go_down(&mut self, reason: &str) {
        self.ctx.shared.set_state(LinkState::Down);
        for sent in std::mem::take(&mut self.pending) {
            self.drop_item(sent.item, reason);
        }
        loop {
            tokio::select! {
                _ = self.ctx.cancel.cancelled() => return,
                item = self.rx.recv() => match item {
                    Some(item) => self.drop_item(item, reason),
                    None => return,
                },
            }
        }
    }

    fn drop_item(&self, item: Outbound, reason: &str) {
        error!(endpoint = self.id(), seq = item.seq, key = %item.key, reason, "dropping item for down endpoint");
        self.ctx.hub.settle(
            &self.ctx.shared,
            item,
            DeliveryOutcome::Dropped {
                reason: reason.to_string(),
            },
        );
    }
}

async fn read_loop<S: AsyncRead>(
    mut reader: FramedRead<ReadHalf<S>, FrameCodec>,
    key: SessionKey,
    tx: mpsc::Sender<Result<Message, LinkError>>,
) {
    while let Some(next) = reader.next().await {
        let msg = next
            .map_err(LinkError::from)
            .and_then(|frame| open(&frame, &key).map_err(LinkError::from));
        let stop = msg.is_err();
        if tx.send(msg).await.is_err() || stop {
            break;
        }
    }
}

struct AbortOnDrop(tokio::task::JoinHandle<()>);

impl Drop for AbortOnDrop {
    fn drop(&mut self) {
        self.0.abort();
    }
}
