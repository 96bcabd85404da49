//! The single writer of the virtual screen. Every connection sends its
//! HELLOs and CONTROLs here, so replays are serialized in arrival order.

use std::collections::{BTreeMap, HashMap};
use std::time::Duration;

use sink_core::api::{PeerInfo, StateCause, StateDocument, StateEvent};
use sink_core::mapping::UiEvent;
use sink_core::protocol::{AckPayload, AckStatus, ControlPayload, SessionId};
use sink_core::screen::{expand, ClickConfig, ScreenState};
use tokio::sync::{broadcast, mpsc, oneshot, watch};
use tokio::time::Instant;
use tracing::{debug, error, warn};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuardDecision {
    Accept,
    Reject,
}

/// Accepts exactly the next seq after `last_applied`.
pub fn replay_guard(seq: u64, last_applied: u64) -> GuardDecision {
    if Some(seq) == last_applied.checked_add(1) {
        GuardDecision::Accept
    } else {
        if seq > last_applied {
            warn!(seq, last_applied, "gap in CONTROL sequence; rejected");
        } else {
            debug!(seq, last_applied, "duplicate or stale CONTROL; rejected");
        }
        GuardDecision::Reject
    }
}

pub(crate) enum ScreenCmd {
    /// Registers a connection and returns the session's last applied seq.
    Hello {
        conn: u64,
        session: SessionId,
        addr: String,
        seq_mark: u64,
        reply: oneshot::Sender<u64>,
    },
    Control {
        session: SessionId,
        seq: u64,
        payload: Vec<u8>,
        reply: oneshot::Sender<AckPayload>,
    },
    Detach {
        conn: u64,
    },
}

pub(crate) struct ScreenTask {
    pub screen: ScreenState,
    pub real_time: bool,
    pub started: Instant,
    pub state_tx: watch::Sender<StateDocument>,
    pub events_tx: broadcast::Sender<StateEvent>,
    sessions: HashMap<SessionId, u64>,
    peers: BTreeMap<u64, (SessionId, String)>,
    controls_applied: u64,
    last_seq: u64,
}

impl ScreenTask {
    /// Also returns the receiving side of the published state.
    pub fn new(
        screen: ScreenState,
        real_time: bool,
        events_tx: broadcast::Sender<StateEvent>,
    ) -> (Self, watch::Receiver<StateDocument>) {
        let initial = StateDocument {
            uptime_ms: 0,
            controls_applied: 0,
            last_seq: 0,
            peers: Vec::new(),
            snapshot: screen.snapshot(),
        };
        let (state_tx, rx) = watch::channel(initial);
        let task = ScreenTask {
            screen,
            real_time,
            started: Instant::now(),
            state_tx,
            events_tx,
            sessions: HashMap::new(),
            peers: BTreeMap::new(),
            controls_applied: 0,
            last_seq: 0,
        };
        (task, rx)
    }

    pub fn document(&self) -> StateDocument {
        StateDocument {
            uptime_ms: self.started.elapsed().as_millis() as u64,
            controls_applied: self.controls_applied,
            last_seq: self.last_seq,
            peers: self
                .peers
                .values()
                .map(|(session, addr)| PeerInfo {
                    session_id: session.to_string(),
                    addr: addr.clone(),
                    last_seq: self.sessions.get(session).copied().unwrap_or(0),
                })
                .collect(),
            snapshot: self.screen.snapshot(),
        }
    }

    pub async fn run(mut self, mut rx: mpsc::Receiver<ScreenCmd>) {
        while let Some(cmd) = rx.recv().await {
            match cmd {
                ScreenCmd::Hello {
                    conn,
                    session,
                    addr,
                    seq_mark,
                    reply,
                } => {
                    let last = self.sessions.entry(session).or_insert(0);
                    *last = (*last).max(seq_mark);
                    let _ = reply.send(*last);
                    self.peers.insert(conn, (session, addr));
                    self.state_tx.send_replace(self.document());
                }
                ScreenCmd::Control {
                    session,
                    seq,
                    payload,
                    reply,
                } => {
                    let ack = self.control(session, seq, &payload).await;
                    let _ = reply.send(ack);
                }
                ScreenCmd::Detach { conn } => {
                    self.peers.remove(&conn);
                    self.state_tx.send_replace(self.document());
                }
            }
        }
    }

    async fn control(&mut self, session: SessionId, seq: u64, payload: &[u8]) -> AckPayload {
        let last = self.sessions.get(&session).copied().unwrap_or(0);
        if replay_guard(seq, last) == GuardDecision::Reject {
            return AckPayload {
                status: AckStatus::DuplicateOrStale,
                index: 0,
            };
        }
        self.sessions.insert(session, seq);
        let failed_at = match ControlPayload::decode(payload) {
            Ok(control) => self.replay(&control).await,
            Err(e) => {
                error!(%session, seq, error = %e, "undecodable CONTROL payload");
                Some(0)
            }
        };
        self.controls_applied += 1;
        self.last_seq = self.last_seq.max(seq);
        let state = self.document();
        self.state_tx.send_replace(state.clone());
        let _ = self.events_tx.send(StateEvent {
            cause: StateCause::Control {
                session_id: session.to_string(),
                seq,
                failed_at,
            },
            state,
        });
        match failed_at {
            None => AckPayload::ok(),
            Some(index) => AckPayload {
                status: AckStatus::ReplayError,
                index,
            },
        }
    }

    /// Replays one sequence; returns the index of the failing event, if any.
    /// Events before the failure stay applied.
    async fn replay(&mut self, control: &ControlPayload) -> Option<u32> {
        let seq = &control.sequence;
        if seq.resolution != self.screen.resolution() {
            warn!(
                sent = %seq.resolution,
                screen = %self.screen.resolution(),
                "sequence resolved for a different resolution"
            );
        }
        let cfg = ClickConfig {
            click_delay_ms: control.click_delay_ms,
        };
        for (index, ev) in seq.events.iter().enumerate() {
            for atomic in expand(ev, &cfg) {
                if let Err(e) = self.screen.apply_event(&atomic) {
                    warn!(index, error = %e, "replay stopped");
                    return Some(index as u32);
                }
                if let (true, UiEvent::Delay(ms)) = (self.real_time, &atomic) {
                    tokio::time::sleep(Duration::from_millis(*ms)).await;
                }
            }
        }
        None
    }
}
