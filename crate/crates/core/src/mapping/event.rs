//! UI events and event sequences.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::coord::{PixelCoord, RelativeCoord, Resolution};
use super::slider::SliderTemplate;
use super::MappingError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MouseButton {
    #[default]
    Left,
    Right,
}

/// Symbolic keyboard key.
///
/// Printable characters are `Char`; their names are `DIGIT_0`..`DIGIT_9`,
/// the letter itself for ASCII letters, a few punctuation names (`SPACE`,
/// `PERIOD`, `MINUS`, ...) and `U+XXXX` for everything else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Key {
    Char(char),
    Enter,
    Tab,
    Backspace,
    Delete,
    Escape,
    /// `CTRL_A`
    SelectAll,
}

const PUNCTUATION: &[(char, &str)] = &[
    (' ', "SPACE"),
    ('.', "PERIOD"),
    (',', "COMMA"),
    ('-', "MINUS"),
    ('+', "PLUS"),
    ('/', "SLASH"),
    (':', "COLON"),
    (';', "SEMICOLON"),
    ('=', "EQUALS"),
    ('%', "PERCENT"),
];

impl Key {
    pub fn for_char(c: char) -> Key {
        match c {
            '\n' => Key::Enter,
            '\t' => Key::Tab,
            c => Key::Char(c),
        }
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Key::Char(c) if c.is_ascii_digit() => write!(f, "DIGIT_{c}"),
            Key::Char(c) if c.is_ascii_alphabetic() => write!(f, "{c}"),
            Key::Char(c) => match PUNCTUATION.iter().find(|(p, _)| p == c) {
                Some((_, name)) => f.write_str(name),
                None => write!(f, "U+{:04X}", *c as u32),
            },
            Key::Enter => f.write_str("ENTER"),
            Key::Tab => f.write_str("TAB"),
            Key::Backspace => f.write_str("BACKSPACE"),
            Key::Delete => f.write_str("DELETE"),
            Key::Escape => f.write_str("ESCAPE"),
            Key::SelectAll => f.write_str("CTRL_A"),
        }
    }
}

impl FromStr for Key {
    type Err = MappingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        if let (Some(c), None) = (chars.next(), chars.next()) {
            if c.is_ascii_alphabetic() {
                return Ok(Key::Char(c));
            }
        }
        let upper = s.to_ascii_uppercase();
        let named = match upper.as_str() {
            "ENTER" | "RETURN" => Some(Key::Enter),
            "TAB" => Some(Key::Tab),
            "BACKSPACE" => Some(Key::Backspace),
            "DELETE" | "DEL" => Some(Key::Delete),
            "ESCAPE" | "ESC" => Some(Key::Escape),
            "CTRL_A" => Some(Key::SelectAll),
            _ => None,
        };
        if let Some(k) = named {
            return Ok(k);
        }
        if let Some(d) = upper.strip_prefix("DIGIT_") {
            let mut it = d.chars();
            if let (Some(c), None) = (it.next(), it.next()) {
                if c.is_ascii_digit() {
                    return Ok(Key::Char(c));
                }
            }
        }
        if let Some((c, _)) = PUNCTUATION.iter().find(|(_, name)| *name == upper) {
            return Ok(Key::Char(*c));
        }
        if let Some(hex) = upper.strip_prefix("U+") {
            if let Some(c) = u32::from_str_radix(hex, 16).ok().and_then(char::from_u32) {
                return Ok(Key::Char(c));
            }
        }
        Err(MappingError::UnknownKey(s.to_string()))
    }
}

impl Serialize for Key {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Key {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let name = String::deserialize(deserializer)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}

/// One interface control attribute. `P` is the coordinate type:
/// [`RelativeCoord`] in the mapping table, [`PixelCoord`] once resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UiEvent<P = PixelCoord> {
    MouseMove(P),
    MousePress(MouseButton),
    MouseRelease(MouseButton),
    /// Expanded to press, delay, release at replay time.
    MouseClick(MouseButton),
    KeyPress(Key),
    /// Expanded to one key press per character at replay time.
    TypeText(String),
    Drag { from: P, to: P },
    Delay(u64),
}

impl<P> UiEvent<P> {
    /// Atomic events are the ones a screen applies directly.
    pub fn is_atomic(&self) -> bool {
        !matches!(
            self,
            UiEvent::MouseClick(_) | UiEvent::TypeText(_) | UiEvent::Drag { .. }
        )
    }

    pub fn map_coords<Q>(self, mut f: impl FnMut(P) -> Q) -> UiEvent<Q> {
        match self {
            UiEvent::MouseMove(p) => UiEvent::MouseMove(f(p)),
            UiEvent::MousePress(b) => UiEvent::MousePress(b),
            UiEvent::MouseRelease(b) => UiEvent::MouseRelease(b),
            UiEvent::MouseClick(b) => UiEvent::MouseClick(b),
            UiEvent::KeyPress(k) => UiEvent::KeyPress(k),
            UiEvent::TypeText(t) => UiEvent::TypeText(t),
            UiEvent::Drag { from, to } => UiEvent::Drag {
                from: f(from),
                to: f(to),
            },
            UiEvent::Delay(ms) => UiEvent::Delay(ms),
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            UiEvent::MouseMove(_) => "mouse_move",
            UiEvent::MousePress(_) => "mouse_press",
            UiEvent::MouseRelease(_) => "mouse_release",
            UiEvent::MouseClick(_) => "mouse_click",
            UiEvent::KeyPress(_) => "key_press",
            UiEvent::TypeText(_) => "type_text",
            UiEvent::Drag { .. } => "drag",
            UiEvent::Delay(_) => "delay",
        }
    }
}

impl fmt::Display for UiEvent<PixelCoord> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UiEvent::MouseMove(p) => write!(f, "move {p}"),
            UiEvent::MousePress(b) => write!(f, "press {b:?}"),
            UiEvent::MouseRelease(b) => write!(f, "release {b:?}"),
            UiEvent::MouseClick(b) => write!(f, "click {b:?}"),
            UiEvent::KeyPress(k) => write!(f, "key {k}"),
            UiEvent::TypeText(t) => write!(f, "type {t:?}"),
            UiEvent::Drag { from, to } => write!(f, "drag {from} -> {to}"),
            UiEvent::Delay(ms) => write!(f, "delay {ms}ms"),
        }
    }
}

/// One stored step of a mapping entry.
///
/// `SliderSet` is planned against the target's pixel geometry when the entry
/// is resolved, because the click count and drag end point depend on it.
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Event(UiEvent<RelativeCoord>),
    SliderSet(SliderTemplate),
}

impl From<UiEvent<RelativeCoord>> for Step {
    fn from(ev: UiEvent<RelativeCoord>) -> Self {
        Step::Event(ev)
    }
}

/// The value side of the mapping table: an ordered list of steps in
/// resolution-relative coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSequence {
    pub steps: Vec<Step>,
    /// Resolution the entry was authored against.
    pub reference_resolution: Resolution,
}

impl EventSequence {
    pub fn new(reference_resolution: Resolution, steps: Vec<Step>) -> Self {
        EventSequence {
            steps,
            reference_resolution,
        }
    }

    pub fn from_events(
        reference_resolution: Resolution,
        events: impl IntoIterator<Item = UiEvent<RelativeCoord>>,
    ) -> Self {
        Self::new(
            reference_resolution,
            events.into_iter().map(Step::Event).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// An event sequence in absolute pixels for one target resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedSequence {
    pub resolution: Resolution,
    pub events: Vec<UiEvent<PixelCoord>>,
}

impl ResolvedSequence {
    pub fn new(resolution: Resolution, events: Vec<UiEvent<PixelCoord>>) -> Self {
        ResolvedSequence { resolution, events }
    }

    /// Copy with every pixel coordinate removed, for comparing sequences
    /// resolved at different resolutions.
    pub fn without_coords(&self) -> Vec<UiEvent<()>> {
        self.events.iter().cloned().map(|e| e.map_coords(|_| ())).collect()
    }
}
