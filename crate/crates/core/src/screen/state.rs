use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::spec::{ScreenSpec, WidgetKind};
use super::{EventSink, ScreenError};
use crate::mapping::{Key, MouseButton, PixelCoord, Resolution, SliderSpec, UiEvent};

/// Live state of one widget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WidgetState {
    Button {
        click_count: u64,
    },
    TextField {
        content: String,
        focused: bool,
        /// Set by ENTER to the content at that moment.
        committed: Option<String>,
        all_selected: bool,
    },
    Checkbox {
        checked: bool,
    },
    Slider {
        min: i64,
        max: i64,
        value: i64,
        /// Knob position in pixels from the track start.
        knob_offset_px: f64,
    },
    TabBar {
        active_tab: usize,
        tabs: Vec<String>,
    },
}

impl WidgetState {
    fn initial(kind: &WidgetKind) -> Self {
        match kind {
            WidgetKind::Button => WidgetState::Button { click_count: 0 },
            WidgetKind::TextField { initial } => WidgetState::TextField {
                content: initial.clone(),
                focused: false,
                committed: None,
                all_selected: false,
            },
            WidgetKind::Checkbox { initial } => WidgetState::Checkbox { checked: *initial },
            WidgetKind::Slider { slider, initial } => WidgetState::Slider {
                min: slider.min,
                max: slider.max,
                value: *initial,
                knob_offset_px: slider.offset_for_value(*initial),
            },
            WidgetKind::TabBar { tabs, initial } => WidgetState::TabBar {
                active_tab: *initial,
                tabs: tabs.clone(),
            },
        }
    }

    /// Same state with pixel geometry zeroed, for comparing screens that
    /// differ only in resolution.
    pub fn without_geometry(&self) -> WidgetState {
        match self {
            WidgetState::Slider { min, max, value, .. } => WidgetState::Slider {
                min: *min,
                max: *max,
                value: *value,
                knob_offset_px: 0.0,
            },
            other => other.clone(),
        }
    }

    /// Field lookup by name, rendered as text. `None` for unknown names.
    pub fn field(&self, name: &str) -> Option<String> {
        Some(match (self, name) {
            (WidgetState::Button { click_count }, "click_count") => click_count.to_string(),
            (WidgetState::TextField { content, .. }, "content") => content.clone(),
            (WidgetState::TextField { focused, .. }, "focused") => focused.to_string(),
            (WidgetState::TextField { committed, .. }, "committed") => {
                committed.clone().unwrap_or_default()
            }
            (WidgetState::Checkbox { checked }, "checked") => checked.to_string(),
            (WidgetState::Slider { value, .. }, "value") => value.to_string(),
            (WidgetState::Slider { min, .. }, "min") => min.to_string(),
            (WidgetState::Slider { max, .. }, "max") => max.to_string(),
            (WidgetState::TabBar { active_tab, .. }, "active_tab") => active_tab.to_string(),
            (WidgetState::TabBar { active_tab, tabs }, "active") => tabs[*active_tab].clone(),
            _ => return None,
        })
    }
}

/// Annotation attached to a log entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogNote {
    Committed { widget: String, value: String },
    Ignored { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub at_ms: u64,
    pub event: UiEvent,
    pub note: Option<LogNote>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Part {
    Whole,
    Tab(usize),
    Track,
    Knob,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Armed {
    widget: usize,
    part: Part,
}

/// Deterministic simulated GUI. All time is simulated: only `Delay`
/// advances `clock_ms`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenState {
    spec: Arc<ScreenSpec>,
    pointer: PixelCoord,
    button_down: Option<MouseButton>,
    armed: Option<Armed>,
    focus: Option<usize>,
    clock_ms: u64,
    widgets: Vec<WidgetState>,
    log: Vec<LogEntry>,
}

impl ScreenState {
    pub fn new(spec: impl Into<Arc<ScreenSpec>>) -> Self {
        let spec = spec.into();
        let widgets = spec.widgets.iter().map(|w| WidgetState::initial(&w.kind)).collect();
        ScreenState {
            spec,
            pointer: PixelCoord::default(),
            button_down: None,
            armed: None,
            focus: None,
            clock_ms: 0,
            widgets,
            log: Vec::new(),
        }
    }

    pub fn spec(&self) -> &ScreenSpec {
        &self.spec
    }

    pub fn resolution(&self) -> Resolution {
        self.spec.resolution
    }

    pub fn pointer(&self) -> PixelCoord {
        self.pointer
    }

    pub fn clock_ms(&self) -> u64 {
        self.clock_ms
    }

    pub fn focus(&self) -> Option<&str> {
        self.focus.map(|i| self.spec.widgets[i].id.as_str())
    }

    pub fn button_down(&self) -> Option<MouseButton> {
        self.button_down
    }

    pub fn event_log(&self) -> &[LogEntry] {
        &self.log
    }

    pub fn widget(&self, id: &str) -> Option<&WidgetState> {
        self.spec.index_of(id).map(|i| &self.widgets[i])
    }

    pub fn widgets(&self) -> impl Iterator<Item = (&str, &WidgetState)> {
        self.spec
            .widgets
            .iter()
            .zip(&self.widgets)
            .map(|(spec, state)| (spec.id.as_str(), state))
    }

    /// Places a slider knob at an arbitrary pixel offset, as if the remote
    /// user had left it there.
    pub fn set_slider_offset(&mut self, id: &str, offset: f64) -> Result<(), ScreenError> {
        let i = self
            .spec
            .index_of(id)
            .ok_or_else(|| ScreenError::UnknownWidget(id.to_string()))?;
        let slider = self.slider_spec(i).ok_or_else(|| ScreenError::UnknownWidget(id.to_string()))?;
        if let WidgetState::Slider { value, knob_offset_px, .. } = &mut self.widgets[i] {
            *knob_offset_px = offset.clamp(0.0, slider.usable());
            *value = slider.value_at(*knob_offset_px);
        }
        Ok(())
    }

    fn slider_spec(&self, i: usize) -> Option<SliderSpec> {
        match &self.spec.widgets[i].kind {
            WidgetKind::Slider { slider, .. } => Some(*slider),
            _ => None,
        }
    }

    fn visible(&self, i: usize) -> bool {
        let Some(tab) = &self.spec.widgets[i].tab else {
            return true;
        };
        let bar = self.spec.index_of(&tab.bar).expect("validated tab bar");
        matches!(self.widgets[bar], WidgetState::TabBar { active_tab, .. } if active_tab == tab.index)
    }

    /// Visible widget under `p`, if any.
    pub fn hit(&self, p: PixelCoord) -> Option<&str> {
        self.hit_index(p).map(|i| self.spec.widgets[i].id.as_str())
    }

    fn hit_index(&self, p: PixelCoord) -> Option<usize> {
        (0..self.spec.widgets.len()).find(|&i| self.spec.widgets[i].rect.contains(p) && self.visible(i))
    }

    fn part_at(&self, i: usize, p: PixelCoord) -> Part {
        let w = &self.spec.widgets[i];
        match (&w.kind, &self.widgets[i]) {
            (WidgetKind::TabBar { tabs, .. }, _) => {
                let col = (p.x - w.rect.x) as u64;
                Part::Tab((col * tabs.len() as u64 / w.rect.width as u64) as usize)
            }
            (WidgetKind::Slider { slider, .. }, WidgetState::Slider { knob_offset_px, .. }) => {
                if slider.knob_covers(*knob_offset_px, p.x) {
                    Part::Knob
                } else {
                    Part::Track
                }
            }
            _ => Part::Whole,
        }
    }

    pub fn apply_event(&mut self, ev: &UiEvent) -> Result<(), ScreenError> {
        if !ev.is_atomic() {
            return Err(ScreenError::NotExpanded(ev.variant_name()));
        }
        let at_ms = self.clock_ms;
        let note = match ev {
            UiEvent::MouseMove(p) => {
                if !self.spec.resolution.contains(*p) {
                    return Err(ScreenError::CoordOutOfRange {
                        coord: *p,
                        resolution: self.spec.resolution,
                    });
                }
                self.pointer = *p;
                None
            }
            UiEvent::MousePress(button) => {
                self.button_down = Some(*button);
                self.armed = match button {
                    MouseButton::Left => self.hit_index(self.pointer).map(|widget| Armed {
                        widget,
                        part: self.part_at(widget, self.pointer),
                    }),
                    MouseButton::Right => None,
                };
                None
            }
            UiEvent::MouseRelease(button) => {
                self.button_down = None;
                match (button, self.armed.take()) {
                    (MouseButton::Left, Some(armed)) => self.release(armed),
                    _ => None,
                }
            }
            UiEvent::KeyPress(key) => self.key(*key),
            UiEvent::Delay(ms) => {
                self.clock_ms = self.clock_ms.saturating_add(*ms);
                None
            }
            UiEvent::MouseClick(_) | UiEvent::TypeText(_) | UiEvent::Drag { .. } => unreachable!(),
        };
        self.log.push(LogEntry {
            at_ms,
            event: ev.clone(),
            note,
        });
        Ok(())
    }

    fn release(&mut self, armed: Armed) -> Option<LogNote> {
        let i = armed.widget;
        if armed.part == Part::Knob {
            // Drags complete wherever the pointer is released.
            let slider = self.slider_spec(i).expect("knob belongs to a slider");
            let target = slider.drag_value(self.pointer.x);
            if let WidgetState::Slider { value, knob_offset_px, .. } = &mut self.widgets[i] {
                *value = target;
                *knob_offset_px = slider.offset_for_value(target);
            }
            self.set_focus(None);
            return None;
        }
        let over = self.hit_index(self.pointer)?;
        if over != i || self.part_at(i, self.pointer) != armed.part {
            return None;
        }
        let pointer_x = self.pointer.x;
        let slider = self.slider_spec(i);
        match &mut self.widgets[i] {
            WidgetState::Button { click_count } => {
                *click_count += 1;
                self.set_focus(None);
            }
            WidgetState::TextField { .. } => self.set_focus(Some(i)),
            WidgetState::Checkbox { checked } => {
                *checked = !*checked;
                self.set_focus(None);
            }
            WidgetState::TabBar { active_tab, .. } => {
                if let Part::Tab(t) = armed.part {
                    *active_tab = t;
                }
                let hidden = self.focus.is_some_and(|f| !self.visible(f));
                if hidden {
                    self.set_focus(None);
                }
            }
            WidgetState::Slider { value, knob_offset_px, .. } => {
                let slider = slider.expect("slider spec");
                *knob_offset_px = slider.page_toward(*knob_offset_px, pointer_x);
                *value = slider.value_at(*knob_offset_px);
                self.set_focus(None);
            }
        }
        None
    }

    fn set_focus(&mut self, focus: Option<usize>) {
        if let Some(old) = self.focus {
            if let WidgetState::TextField { focused, all_selected, .. } = &mut self.widgets[old] {
                *focused = false;
                *all_selected = false;
            }
        }
        self.focus = focus;
        if let Some(new) = focus {
            if let WidgetState::TextField { focused, .. } = &mut self.widgets[new] {
                *focused = true;
            }
        }
    }

    fn key(&mut self, key: Key) -> Option<LogNote> {
        let Some(i) = self.focus else {
            tracing::warn!(%key, "key press with no focused field ignored");
            return Some(LogNote::Ignored {
                reason: "no focused field".into(),
            });
        };
        let WidgetState::TextField {
            content,
            committed,
            all_selected,
            ..
        } = &mut self.widgets[i]
        else {
            return Some(LogNote::Ignored {
                reason: "focused widget is not a text field".into(),
            });
        };
        match key {
            Key::Char(c) => {
                if *all_selected {
                    content.clear();
                    *all_selected = false;
                }
                content.push(c);
            }
            Key::Backspace | Key::Delete if *all_selected => {
                content.clear();
                *all_selected = false;
            }
            Key::Backspace => {
                content.pop();
            }
            // The caret sits at the end of the content, so forward delete is a no-op.
            Key::Delete => {}
            Key::SelectAll => *all_selected = true,
            Key::Enter => {
                let value = content.clone();
                *committed = Some(value.clone());
                self.set_focus(None);
                return Some(LogNote::Committed {
                    widget: self.spec.widgets[i].id.clone(),
                    value,
                });
            }
            Key::Escape => self.set_focus(None),
            Key::Tab => {
                return Some(LogNote::Ignored {
                    reason: "focus traversal is not modelled".into(),
                })
            }
        }
        None
    }
}

impl EventSink for ScreenState {
    fn resolution(&self) -> Resolution {
        self.spec.resolution
    }

    fn apply_event(&mut self, ev: &UiEvent) -> Result<(), ScreenError> {
        ScreenState::apply_event(self, ev)
    }
}
