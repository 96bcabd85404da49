//! Translation of encoded local inputs into remote UI-event sequences.
//!
//! Entries are authored in pixels against a reference resolution and stored
//! relative; [`Mapping::resolve`] turns an entry into absolute pixels for a
//! given target resolution.

mod config;
mod coord;
mod event;
mod key;
mod slider;
mod table;

pub use config::load_mapping;
pub use coord::{to_absolute, to_relative, PixelCoord, RelativeCoord, Resolution};
pub use event::{EventSequence, Key, MouseButton, ResolvedSequence, Step, UiEvent};
pub use key::{Action, InputKey};
pub use slider::{
    plan_slider_set, EndpointPolicy, KnobStart, SliderPlan, SliderPlanConfig, SliderSpec,
    SliderTemplate, SliderValue, DEFAULT_MAX_CLICKS, DEFAULT_PAGE_STEP_FRACTION,
};
pub use table::{ConstantHasher, ConstantKeyHasher, DefaultKeyHasher, MappingTable, BUCKETS};

use thiserror::Error;

use crate::screen::DEFAULT_CLICK_DELAY_MS;

/// Payload of a template entry; it matches any payload of an otherwise equal key.
pub const TEMPLATE_PAYLOAD: &str = "*";
/// Replaced by the input payload in `type_text` steps and `slider_set` values.
pub const PAYLOAD_PLACEHOLDER: &str = "{payload}";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MappingError {
    #[error("resolution {width}x{height} must be positive in both dimensions")]
    BadResolution { width: u32, height: u32 },
    #[error("coordinate {coord} lies outside {resolution}")]
    CoordOutOfRange {
        coord: PixelCoord,
        resolution: Resolution,
    },
    #[error("duplicate mapping key {0}")]
    DuplicateKey(String),
    #[error("schema error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Schema { line: Option<usize>, message: String },
    #[error("unknown action {0:?}")]
    UnknownAction(String),
    #[error("unknown key name {0:?}")]
    UnknownKey(String),
    #[error("no mapping for input {0}")]
    UnmappedInput(String),
    #[error("bad payload: {0}")]
    BadPayload(String),
    #[error("bad slider: {0}")]
    BadSlider(String),
    #[error("value {value} outside slider range [{min}, {max}]")]
    ValueOutOfRange { value: i64, min: i64, max: i64 },
    #[error("knob cannot be reached within {max_clicks} track clicks")]
    PlanInfeasible { max_clicks: u32 },
    #[error("value {value} is not reachable by dragging on a {track_len} px track")]
    Unrepresentable { value: i64, track_len: u32 },
    #[error("entry {entry} (line {line}): {source}")]
    InEntry {
        entry: usize,
        line: usize,
        source: Box<MappingError>,
    },
    #[error("event {event}: {source}")]
    InEvent {
        event: usize,
        source: Box<MappingError>,
    },
}

impl MappingError {
    /// Innermost error, stripped of entry and event context.
    pub fn root(&self) -> &MappingError {
        match self {
            MappingError::InEntry { source, .. } | MappingError::InEvent { source, .. } => {
                source.root()
            }
            other => other,
        }
    }
}

/// Metadata kept per loaded entry, in document order.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryInfo {
    pub key: InputKey,
    /// Remote widget id this entry is expected to drive.
    pub target: Option<String>,
    /// Example payload for template entries.
    pub sample: Option<String>,
    pub line: usize,
}

/// A loaded mapping module: the table plus document-level settings.
///
/// Immutable once built; share it behind an `Arc` and swap the whole value
/// to reload.
#[derive(Debug, Clone)]
pub struct Mapping {
    pub reference_resolution: Resolution,
    pub click_delay_ms: u64,
    pub table: MappingTable,
    entries: Vec<EntryInfo>,
}

impl Mapping {
    pub fn new(reference_resolution: Resolution) -> Self {
        Mapping {
            reference_resolution,
            click_delay_ms: DEFAULT_CLICK_DELAY_MS,
            table: MappingTable::new(),
            entries: Vec::new(),
        }
    }

    pub fn insert(&mut self, key: InputKey, seq: EventSequence) -> Option<EventSequence> {
        if !self.table.contains_key(&key) {
            self.entries.push(EntryInfo {
                key: key.clone(),
                target: None,
                sample: None,
                line: 0,
            });
        }
        self.table.put(key, seq)
    }

    pub fn entries(&self) -> &[EntryInfo] {
        &self.entries
    }

    /// Exact entry first, then the template entry for the same widget and action.
    pub fn lookup(&self, key: &InputKey) -> Option<&EventSequence> {
        self.table.get(key).or_else(|| {
            key.payload.as_ref()?;
            self.table.get(&key.with_payload(Some(TEMPLATE_PAYLOAD)))
        })
    }

    pub fn resolve(&self, key: &InputKey, target: Resolution) -> Result<ResolvedSequence, MappingError> {
        let seq = self
            .lookup(key)
            .ok_or_else(|| MappingError::UnmappedInput(key.to_string()))?;
        resolve_sequence(seq, key.payload.as_deref(), target)
    }
}

/// Converts every step of `seq` to pixels at `target`, substituting the
/// payload placeholder and planning slider steps. Clicks and typed text stay
/// unexpanded.
pub fn resolve_sequence(
    seq: &EventSequence,
    payload: Option<&str>,
    target: Resolution,
) -> Result<ResolvedSequence, MappingError> {
    let mut events = Vec::with_capacity(seq.steps.len());
    for (index, step) in seq.steps.iter().enumerate() {
        let at = |source| MappingError::InEvent {
            event: index,
            source: Box::new(source),
        };
        match step {
            Step::Event(UiEvent::TypeText(text)) if text.contains(PAYLOAD_PLACEHOLDER) => {
                let payload = payload
                    .ok_or_else(|| at(MappingError::BadPayload("input carries no payload".into())))?;
                events.push(UiEvent::TypeText(text.replace(PAYLOAD_PLACEHOLDER, payload)));
            }
            Step::Event(ev) => events.push(ev.clone().map_coords(|r| to_absolute(r, target))),
            Step::SliderSet(template) => {
                let value = match template.value {
                    SliderValue::Fixed(v) => v,
                    SliderValue::FromPayload => {
                        let text = payload.ok_or_else(|| {
                            at(MappingError::BadPayload("slider value needs a payload".into()))
                        })?;
                        text.trim().parse::<i64>().map_err(|_| {
                            at(MappingError::BadPayload(format!("{text:?} is not an integer")))
                        })?
                    }
                };
                let plan = template.plan_at(target, value).map_err(at)?;
                events.extend(plan.events());
            }
        }
    }
    Ok(ResolvedSequence::new(target, events))
}
