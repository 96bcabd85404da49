//! Screen layout documents.
//!
//! ```toml
//! resolution = { width = 1920, height = 1080 }
//!
//! [[widget]]
//! id = "tabs"
//! kind = "tab_bar"
//! rect = { x = 100, y = 40, width = 600, height = 50 }
//! tabs = ["Vitals", "Airway"]
//!
//! [[widget]]
//! id = "hr"
//! kind = "text_field"
//! rect = { x = 300, y = 150, width = 200, height = 40 }
//! tab = { bar = "tabs", index = 0 }
//! ```
//!
//! Widgets may not overlap, except members of different tabs of the same
//! tab bar.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::ScreenError;
use crate::mapping::{PixelCoord, Resolution, SliderSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl Rect {
    pub fn contains(&self, p: PixelCoord) -> bool {
        p.x >= self.x
            && p.y >= self.y
            && (p.x - self.x) < self.width
            && (p.y - self.y) < self.height
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        let (ax1, ay1) = (self.x as u64 + self.width as u64, self.y as u64 + self.height as u64);
        let (bx1, by1) = (other.x as u64 + other.width as u64, other.y as u64 + other.height as u64);
        (self.x as u64) < bx1 && (other.x as u64) < ax1 && (self.y as u64) < by1 && (other.y as u64) < ay1
    }

    pub fn center(&self) -> PixelCoord {
        PixelCoord::new(self.x + self.width / 2, self.y + self.height / 2)
    }

    fn fits(&self, res: Resolution) -> bool {
        self.width > 0
            && self.height > 0
            && self.x as u64 + self.width as u64 <= res.width as u64
            && self.y as u64 + self.height as u64 <= res.height as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabRef {
    pub bar: String,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WidgetKind {
    Button,
    TextField { initial: String },
    Checkbox { initial: bool },
    Slider { slider: SliderSpec, initial: i64 },
    TabBar { tabs: Vec<String>, initial: usize },
}

impl WidgetKind {
    pub fn name(&self) -> &'static str {
        match self {
            WidgetKind::Button => "button",
            WidgetKind::TextField { .. } => "text_field",
            WidgetKind::Checkbox { .. } => "checkbox",
            WidgetKind::Slider { .. } => "slider",
            WidgetKind::TabBar { .. } => "tab_bar",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WidgetSpec {
    pub id: String,
    pub rect: Rect,
    pub kind: WidgetKind,
    pub tab: Option<TabRef>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreenSpec {
    pub resolution: Resolution,
    pub widgets: Vec<WidgetSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScreen {
    resolution: Resolution,
    #[serde(default)]
    widget: Vec<RawWidget>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawKind {
    Button,
    TextField,
    Checkbox,
    Slider,
    TabBar,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWidget {
    id: String,
    kind: RawKind,
    rect: Rect,
    tab: Option<TabRef>,
    text: Option<String>,
    checked: Option<bool>,
    min: Option<i64>,
    max: Option<i64>,
    value: Option<i64>,
    knob_width: Option<u32>,
    page_step: Option<f64>,
    tabs: Option<Vec<String>>,
    active: Option<usize>,
}

impl RawWidget {
    fn into_spec(self) -> Result<WidgetSpec, ScreenError> {
        let id = self.id;
        let bad = |msg: String| ScreenError::Spec(format!("widget {id:?}: {msg}"));
        let extra: Vec<&str> = [
            ("text", self.text.is_some(), matches!(self.kind, RawKind::TextField)),
            ("checked", self.checked.is_some(), matches!(self.kind, RawKind::Checkbox)),
            ("tabs", self.tabs.is_some(), matches!(self.kind, RawKind::TabBar)),
            ("active", self.active.is_some(), matches!(self.kind, RawKind::TabBar)),
            ("min", self.min.is_some(), matches!(self.kind, RawKind::Slider)),
            ("max", self.max.is_some(), matches!(self.kind, RawKind::Slider)),
            ("value", self.value.is_some(), matches!(self.kind, RawKind::Slider)),
            ("knob_width", self.knob_width.is_some(), matches!(self.kind, RawKind::Slider)),
            ("page_step", self.page_step.is_some(), matches!(self.kind, RawKind::Slider)),
        ]
        .into_iter()
        .filter(|(_, present, allowed)| *present && !allowed)
        .map(|(name, _, _)| name)
        .collect();
        if !extra.is_empty() {
            return Err(bad(format!("fields {extra:?} do not apply to this kind")));
        }
        let kind = match self.kind {
            RawKind::Button => WidgetKind::Button,
            RawKind::TextField => WidgetKind::TextField {
                initial: self.text.unwrap_or_default(),
            },
            RawKind::Checkbox => WidgetKind::Checkbox {
                initial: self.checked.unwrap_or(false),
            },
            RawKind::TabBar => {
                let tabs = self.tabs.unwrap_or_default();
                if tabs.is_empty() {
                    return Err(bad("tab bar needs at least one tab".into()));
                }
                if tabs.len() as u32 > self.rect.width {
                    return Err(bad("more tabs than pixel columns".into()));
                }
                let initial = self.active.unwrap_or(0);
                if initial >= tabs.len() {
                    return Err(bad(format!("active tab {initial} out of range")));
                }
                WidgetKind::TabBar { tabs, initial }
            }
            RawKind::Slider => {
                let (min, max) = match (self.min, self.max) {
                    (Some(min), Some(max)) => (min, max),
                    _ => return Err(bad("slider needs min and max".into())),
                };
                let knob_width = self
                    .knob_width
                    .ok_or_else(|| bad("slider needs knob_width".into()))?;
                let slider = SliderSpec {
                    track_x: self.rect.x,
                    track_y: self.rect.y + self.rect.height / 2,
                    track_len: self.rect.width,
                    knob_width,
                    min,
                    max,
                    page_step: self
                        .page_step
                        .unwrap_or_else(|| SliderSpec::default_page_step(self.rect.width, knob_width)),
                };
                slider.validate().map_err(|e| bad(e.to_string()))?;
                let initial = self.value.unwrap_or(min);
                if !(min..=max).contains(&initial) {
                    return Err(bad(format!("initial value {initial} outside [{min}, {max}]")));
                }
                WidgetKind::Slider { slider, initial }
            }
        };
        Ok(WidgetSpec {
            id,
            rect: self.rect,
            kind,
            tab: self.tab,
        })
    }
}

impl ScreenSpec {
    pub fn new(resolution: Resolution, widgets: Vec<WidgetSpec>) -> Result<Self, ScreenError> {
        let spec = ScreenSpec { resolution, widgets };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_toml(text: &str) -> Result<Self, ScreenError> {
        let raw: RawScreen = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            ScreenError::Spec(match line {
                Some(l) => format!("line {l}: {}", e.message()),
                None => e.message().to_string(),
            })
        })?;
        let resolution = Resolution::new(raw.resolution.width, raw.resolution.height)
            .map_err(|e| ScreenError::Spec(e.to_string()))?;
        let widgets = raw
            .widget
            .into_iter()
            .map(RawWidget::into_spec)
            .collect::<Result<Vec<_>, _>>()?;
        ScreenSpec::new(resolution, widgets)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.widgets.iter().position(|w| w.id == id)
    }

    pub fn widget(&self, id: &str) -> Option<&WidgetSpec> {
        self.widgets.iter().find(|w| w.id == id)
    }

    fn validate(&self) -> Result<(), ScreenError> {
        let mut seen = HashMap::new();
        for (i, w) in self.widgets.iter().enumerate() {
            if seen.insert(w.id.as_str(), i).is_some() {
                return Err(ScreenError::Spec(format!("duplicate widget id {:?}", w.id)));
            }
            if !w.rect.fits(self.resolution) {
                return Err(ScreenError::Spec(format!(
                    "widget {:?} rectangle {:?} does not fit {}",
                    w.id, w.rect, self.resolution
                )));
            }
        }
        for w in &self.widgets {
            let Some(tab) = &w.tab else { continue };
            let bar = seen
                .get(tab.bar.as_str())
                .map(|&i| &self.widgets[i])
                .ok_or_else(|| ScreenError::Spec(format!("widget {:?}: unknown tab bar {:?}", w.id, tab.bar)))?;
            match &bar.kind {
                WidgetKind::TabBar { tabs, .. } if tab.index < tabs.len() && bar.tab.is_none() => {}
                _ => {
                    return Err(ScreenError::Spec(format!(
                        "widget {:?}: tab reference {}#{} is invalid",
                        w.id, tab.bar, tab.index
                    )))
                }
            }
        }
        for (i, a) in self.widgets.iter().enumerate() {
            for b in &self.widgets[i + 1..] {
                if !a.rect.intersects(&b.rect) {
                    continue;
                }
                let separate_tabs = matches!((&a.tab, &b.tab), (Some(ta), Some(tb)) if ta.bar == tb.bar && ta.index != tb.index);
                if !separate_tabs {
                    return Err(ScreenError::Spec(format!(
                        "widgets {:?} and {:?} overlap",
                        a.id, b.id
                    )));
                }
            }
        }
        Ok(())
    }
}
