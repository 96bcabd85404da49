use serde::{Deserialize, Serialize};

use super::state::{ScreenState, WidgetState};
use crate::mapping::{MouseButton, PixelCoord, Resolution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidgetSnapshot {
    pub id: String,
    #[serde(flatten)]
    pub state: WidgetState,
}

/// Serializable dump of a screen. Widgets appear in spec order, so equal
/// states serialize to identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub resolution: Resolution,
    pub pointer: PixelCoord,
    pub button_down: Option<MouseButton>,
    pub focus: Option<String>,
    pub clock_ms: u64,
    pub events_applied: usize,
    pub widgets: Vec<WidgetSnapshot>,
}

impl Snapshot {
    pub fn widget(&self, id: &str) -> Option<&WidgetState> {
        self.widgets.iter().find(|w| w.id == id).map(|w| &w.state)
    }

    /// Widget states with pixel geometry removed.
    pub fn widget_states(&self) -> Vec<(String, WidgetState)> {
        self.widgets
            .iter()
            .map(|w| (w.id.clone(), w.state.without_geometry()))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("snapshot serializes")
    }
}

impl ScreenState {
    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            resolution: self.resolution(),
            pointer: self.pointer(),
            button_down: self.button_down(),
            focus: self.focus().map(str::to_string),
            clock_ms: self.clock_ms(),
            events_applied: self.event_log().len(),
            widgets: self
                .widgets()
                .map(|(id, state)| WidgetSnapshot {
                    id: id.to_string(),
                    state: state.clone(),
                })
                .collect(),
        }
    }
}
