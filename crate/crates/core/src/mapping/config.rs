//! TOML mapping documents.
//!
//! ```toml
//! [header]
//! reference_resolution = { width = 1920, height = 1080 }
//! page_step = 0.25          # optional, fraction of the usable slider track
//! click_delay_ms = 200      # optional
//!
//! [[entry]]
//! interface = "local"
//! widget = "hr_field"
//! action = "set_value"
//! payload = "*"             # optional; "*" matches any payload
//! sample = "72"             # optional payload used by map-validate
//! target = "hr"             # optional remote widget the entry drives
//! events = [
//!   { type = "move", x = 400, y = 170 },
//!   { type = "click" },
//!   { type = "type_text", text = "{payload}" },
//!   { type = "key", key = "ENTER" },
//! ]
//! ```

use serde::Deserialize;
use toml::Spanned;

use super::coord::{to_relative, PixelCoord, RelativeCoord, Resolution};
use super::event::{EventSequence, Key, MouseButton, Step, UiEvent};
use super::key::{Action, InputKey};
use super::slider::{
    EndpointPolicy, SliderPlanConfig, SliderTemplate, SliderValue, DEFAULT_MAX_CLICKS,
    DEFAULT_PAGE_STEP_FRACTION,
};
use super::{EntryInfo, Mapping, MappingError, PAYLOAD_PLACEHOLDER};
use crate::screen::DEFAULT_CLICK_DELAY_MS;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    header: Header,
    #[serde(default)]
    entry: Vec<Spanned<RawEntry>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    reference_resolution: Resolution,
    page_step: Option<f64>,
    click_delay_ms: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    interface: String,
    widget: String,
    action: Action,
    payload: Option<String>,
    sample: Option<String>,
    target: Option<String>,
    events: Vec<Spanned<RawEvent>>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum RawEvent {
    Move {
        x: u32,
        y: u32,
    },
    Press {
        #[serde(default)]
        button: MouseButton,
    },
    Release {
        #[serde(default)]
        button: MouseButton,
    },
    Click {
        #[serde(default)]
        button: MouseButton,
    },
    Key {
        key: Key,
    },
    TypeText {
        text: String,
    },
    Drag {
        from_x: u32,
        from_y: u32,
        to_x: u32,
        to_y: u32,
    },
    Delay {
        ms: u64,
    },
    SliderSet {
        track_x: u32,
        track_y: u32,
        track_width: u32,
        knob_width: u32,
        min: i64,
        max: i64,
        value: RawSliderValue,
        page_step: Option<f64>,
        endpoint: Option<EndpointPolicy>,
        max_clicks: Option<u32>,
        assume_value: Option<i64>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawSliderValue {
    Fixed(i64),
    Placeholder(String),
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

pub fn load_mapping(text: &str) -> Result<Mapping, MappingError> {
    let doc: Document = toml::from_str(text).map_err(|e| MappingError::Schema {
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;

    let reference = Resolution::new(
        doc.header.reference_resolution.width,
        doc.header.reference_resolution.height,
    )?;
    let page_step = doc.header.page_step.unwrap_or(DEFAULT_PAGE_STEP_FRACTION);
    if !(page_step.is_finite() && page_step > 0.0) {
        return Err(MappingError::Schema {
            line: None,
            message: format!("header page_step must be positive, got {page_step}"),
        });
    }
    let mut mapping = Mapping::new(reference);
    mapping.click_delay_ms = doc.header.click_delay_ms.unwrap_or(DEFAULT_CLICK_DELAY_MS);

    for (index, spanned) in doc.entry.into_iter().enumerate() {
        let entry_no = index + 1;
        let line = line_of(text, spanned.span().start);
        let in_entry = |source: MappingError| MappingError::InEntry {
            entry: entry_no,
            line,
            source: Box::new(source),
        };
        let raw = spanned.into_inner();
        let key = InputKey {
            interface_id: raw.interface,
            widget_id: raw.widget,
            action: raw.action,
            payload: raw.payload,
        };
        if mapping.table.contains_key(&key) {
            return Err(in_entry(MappingError::DuplicateKey(key.to_string())));
        }
        let mut steps = Vec::with_capacity(raw.events.len());
        for (ev_index, ev) in raw.events.into_iter().enumerate() {
            let ev_line = line_of(text, ev.span().start);
            let step = convert_event(ev.into_inner(), reference, page_step).map_err(|e| {
                MappingError::InEntry {
                    entry: entry_no,
                    line: ev_line,
                    source: Box::new(MappingError::InEvent {
                        event: ev_index,
                        source: Box::new(e),
                    }),
                }
            })?;
            steps.push(step);
        }
        mapping.entries.push(EntryInfo {
            key: key.clone(),
            target: raw.target,
            sample: raw.sample,
            line,
        });
        mapping
            .table
            .put(key, EventSequence::new(reference, steps));
    }
    Ok(mapping)
}

fn rel(x: u32, y: u32, reference: Resolution) -> Result<RelativeCoord, MappingError> {
    to_relative(PixelCoord::new(x, y), reference)
}

fn convert_event(
    raw: RawEvent,
    reference: Resolution,
    default_page_step: f64,
) -> Result<Step, MappingError> {
    let ev = match raw {
        RawEvent::Move { x, y } => UiEvent::MouseMove(rel(x, y, reference)?),
        RawEvent::Press { button } => UiEvent::MousePress(button),
        RawEvent::Release { button } => UiEvent::MouseRelease(button),
        RawEvent::Click { button } => UiEvent::MouseClick(button),
        RawEvent::Key { key } => UiEvent::KeyPress(key),
        RawEvent::TypeText { text } => UiEvent::TypeText(text),
        RawEvent::Drag {
            from_x,
            from_y,
            to_x,
            to_y,
        } => UiEvent::Drag {
            from: rel(from_x, from_y, reference)?,
            to: rel(to_x, to_y, reference)?,
        },
        RawEvent::Delay { ms } => UiEvent::Delay(ms),
        RawEvent::SliderSet {
            track_x,
            track_y,
            track_width,
            knob_width,
            min,
            max,
            value,
            page_step,
            endpoint,
            max_clicks,
            assume_value,
        } => {
            if track_width <= knob_width || knob_width == 0 {
                return Err(MappingError::BadSlider(format!(
                    "track width {track_width} must exceed knob width {knob_width} > 0"
                )));
            }
            if max <= min {
                return Err(MappingError::BadSlider(format!("max {max} must exceed min {min}")));
            }
            let value = match value {
                RawSliderValue::Fixed(v) => SliderValue::Fixed(v),
                RawSliderValue::Placeholder(s) if s == PAYLOAD_PLACEHOLDER => SliderValue::FromPayload,
                RawSliderValue::Placeholder(s) => {
                    return Err(MappingError::BadSlider(format!(
                        "value must be an integer or {PAYLOAD_PLACEHOLDER:?}, got {s:?}"
                    )))
                }
            };
            let right_x = track_x
                .checked_add(track_width - 1)
                .ok_or(MappingError::BadSlider("track overflows".into()))?;
            let page_step = page_step.unwrap_or(default_page_step);
            if !(page_step.is_finite() && page_step > 0.0) {
                return Err(MappingError::BadSlider(format!("page_step must be positive, got {page_step}")));
            }
            return Ok(Step::SliderSet(SliderTemplate {
                left: rel(track_x, track_y, reference)?,
                right: rel(right_x, track_y, reference)?,
                knob_width_px: knob_width as f64,
                reference,
                min,
                max,
                page_step_fraction: page_step,
                value,
                plan: SliderPlanConfig {
                    max_clicks: max_clicks.unwrap_or(DEFAULT_MAX_CLICKS),
                    endpoint: endpoint.unwrap_or_default(),
                },
                assume_value,
            }));
        }
    };
    Ok(Step::Event(ev))
}
