//! Headless stand-in for a remote application's GUI.
//!
//! [`ScreenState`] applies atomic events; [`expand`] turns composite events
//! (click, typed text, drag) into atomic ones; [`replay`] does both over a
//! whole sequence.

mod snapshot;
mod spec;
mod state;

pub use snapshot::{Snapshot, WidgetSnapshot};
pub use spec::{Rect, ScreenSpec, TabRef, WidgetKind, WidgetSpec};
pub use state::{LogEntry, LogNote, ScreenState, WidgetState};

use thiserror::Error;

use crate::mapping::{Key, MouseButton, PixelCoord, ResolvedSequence, Resolution, UiEvent};

/// Delay between press and release of a click.
pub const DEFAULT_CLICK_DELAY_MS: u64 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClickConfig {
    pub click_delay_ms: u64,
}

impl Default for ClickConfig {
    fn default() -> Self {
        ClickConfig {
            click_delay_ms: DEFAULT_CLICK_DELAY_MS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScreenError {
    #[error("coordinate {coord} lies outside {resolution}")]
    CoordOutOfRange {
        coord: PixelCoord,
        resolution: Resolution,
    },
    #[error("{0} must be expanded before it is applied")]
    NotExpanded(&'static str),
    #[error("unknown widget {0:?}")]
    UnknownWidget(String),
    #[error("invalid screen spec: {0}")]
    Spec(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("event {index} failed: {source}")]
pub struct ReplayError {
    /// Index into the unexpanded sequence.
    pub index: usize,
    pub source: ScreenError,
}

/// Anything that can receive atomic UI events.
pub trait EventSink {
    fn resolution(&self) -> Resolution;
    fn apply_event(&mut self, ev: &UiEvent) -> Result<(), ScreenError>;
}

pub fn expand<P: Clone>(ev: &UiEvent<P>, cfg: &ClickConfig) -> Vec<UiEvent<P>> {
    match ev {
        UiEvent::MouseClick(b) => vec![
            UiEvent::MousePress(*b),
            UiEvent::Delay(cfg.click_delay_ms),
            UiEvent::MouseRelease(*b),
        ],
        UiEvent::TypeText(text) => text.chars().map(|c| UiEvent::KeyPress(Key::for_char(c))).collect(),
        UiEvent::Drag { from, to } => vec![
            UiEvent::MouseMove(from.clone()),
            UiEvent::MousePress(MouseButton::Left),
            UiEvent::MouseMove(to.clone()),
            UiEvent::MouseRelease(MouseButton::Left),
        ],
        atomic => vec![atomic.clone()],
    }
}

/// Expands and applies every event in order. Events before a failing one
/// stay applied. Returns the number of atomic events applied.
pub fn replay<S: EventSink + ?Sized>(
    sink: &mut S,
    seq: &ResolvedSequence,
    cfg: &ClickConfig,
) -> Result<usize, ReplayError> {
    let mut applied = 0;
    for (index, ev) in seq.events.iter().enumerate() {
        for atomic in expand(ev, cfg) {
            sink.apply_event(&atomic)
                .map_err(|source| ReplayError { index, source })?;
            applied += 1;
        }
    }
    Ok(applied)
}

/// Total simulated time a sequence takes once expanded.
pub fn sequence_duration_ms(seq: &ResolvedSequence, cfg: &ClickConfig) -> u64 {
    seq.events
        .iter()
        .flat_map(|ev| expand(ev, cfg))
        .map(|ev| match ev {
            UiEvent::Delay(ms) => ms,
            _ => 0,
        })
        .sum()
}
