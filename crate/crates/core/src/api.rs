//! JSON documents exchanged over the agents' HTTP and WebSocket endpoints.
//!
//! Remote agent: `GET /state` returns a [`StateDocument`]; `/state/stream`
//! pushes a [`StateEvent`] per applied CONTROL. Local bridge: `POST /actions` takes a
//! [`RawAction`] and returns a [`DispatchSummary`]; `/dispatch/stream` pushes
//! [`DeliveryReport`]s; `GET /endpoints` lists [`EndpointStatus`].

use serde::{Deserialize, Serialize};

use crate::mapping::{Action, InputKey, MappingError};
use crate::screen::Snapshot;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeerInfo {
    pub session_id: String,
    pub addr: String,
    pub last_seq: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDocument {
    pub uptime_ms: u64,
    /// CONTROL messages accepted by the replay guard so far.
    pub controls_applied: u64,
    /// Highest applied seq across sessions.
    pub last_seq: u64,
    pub peers: Vec<PeerInfo>,
    pub snapshot: Snapshot,
}

/// Why a state document was pushed on `/state/stream`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StateCause {
    /// First message on a new subscription.
    Initial,
    /// A CONTROL passed the replay guard and was replayed.
    Control {
        session_id: String,
        seq: u64,
        /// Index of the event that failed, if replay stopped early.
        failed_at: Option<u32>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateEvent {
    pub cause: StateCause,
    pub state: StateDocument,
}

/// Operator action as typed at the CLI or posted by a UI.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawAction {
    pub interface_id: String,
    pub widget_id: String,
    pub action: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
}

impl RawAction {
    pub fn new(interface_id: &str, widget_id: &str, action: &str, payload: Option<&str>) -> Self {
        RawAction {
            interface_id: interface_id.into(),
            widget_id: widget_id.into(),
            action: action.into(),
            payload: payload.map(str::to_string),
        }
    }
}

/// Canonical key for a raw action. Ids are trimmed; an empty payload is
/// the same as none.
pub fn encode_input(raw: &RawAction) -> Result<InputKey, MappingError> {
    let interface = raw.interface_id.trim();
    let widget = raw.widget_id.trim();
    if interface.is_empty() || widget.is_empty() {
        return Err(MappingError::BadPayload(
            "interface and widget ids must be non-empty".into(),
        ));
    }
    let bad_char = |s: &str| s.chars().any(|c| c.is_whitespace() || c.is_control());
    if bad_char(interface) || bad_char(widget) {
        return Err(MappingError::BadPayload(
            "ids may not contain whitespace".into(),
        ));
    }
    let action: Action = raw.action.parse()?;
    let payload = raw.payload.as_deref().filter(|p| !p.is_empty());
    Ok(InputKey::new(interface, widget, action, payload))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum EndpointDispatch {
    Queued { interface_id: String, seq: u64 },
    Skipped { interface_id: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DispatchSummary {
    pub key: String,
    pub enqueued: usize,
    pub endpoints: Vec<EndpointDispatch>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum DeliveryOutcome {
    Applied,
    ReplayFailed { index: u32 },
    /// The remote had already applied this seq (e.g. a resend).
    AlreadyApplied,
    /// Seq arrived out of order and was rejected.
    Stale,
    /// Written, with acknowledgements disabled.
    Sent,
    /// Never delivered; the endpoint went down.
    Dropped { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeliveryReport {
    pub interface_id: String,
    pub seq: u64,
    pub key: String,
    #[serde(flatten)]
    pub outcome: DeliveryOutcome,
    /// Dispatch to ACK (or write, without ACKs), in milliseconds.
    pub latency_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkState {
    Connecting,
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointStatus {
    pub interface_id: String,
    pub addr: String,
    pub state: LinkState,
    /// Resolution currently used to resolve sequences, if known.
    pub resolution: Option<String>,
    pub pending: usize,
}
