//! Offline check of a mapping against screen specs.
//!
//! Every entry is resolved at each screen's resolution and replayed on a
//! fresh virtual screen. Template entries are resolved with their `sample`
//! payload.

use sink_core::mapping::{resolve_sequence, EntryInfo, Mapping, MappingError, TEMPLATE_PAYLOAD};
use sink_core::screen::{replay, ClickConfig, ScreenSpec, ScreenState};

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Pass,
    /// `event` indexes the entry's events when the failure is tied to one.
    Fail { event: Option<usize>, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntryCheck {
    /// 1-based position in the mapping document.
    pub entry: usize,
    pub line: usize,
    pub key: String,
    pub screen: String,
    pub verdict: Verdict,
}

impl EntryCheck {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

fn fail_from(e: &MappingError) -> Verdict {
    match e {
        MappingError::InEvent { event, source } => Verdict::Fail {
            event: Some(*event),
            reason: source.to_string(),
        },
        other => Verdict::Fail {
            event: None,
            reason: other.to_string(),
        },
    }
}

fn check(mapping: &Mapping, info: &EntryInfo, spec: &ScreenSpec) -> Verdict {
    if let Some(target) = &info.target {
        if spec.widget(target).is_none() {
            return Verdict::Fail {
                event: None,
                reason: format!("target widget {target:?} is not on this screen"),
            };
        }
    }
    let Some(seq) = mapping.table.get(&info.key) else {
        return Verdict::Fail {
            event: None,
            reason: "entry missing from table".into(),
        };
    };
    let payload = info
        .sample
        .as_deref()
        .or(info.key.payload.as_deref().filter(|p| *p != TEMPLATE_PAYLOAD));
    let resolved = match resolve_sequence(seq, payload, spec.resolution) {
        Ok(r) => r,
        Err(e) => return fail_from(&e),
    };
    let mut screen = ScreenState::new(spec.clone());
    let cfg = ClickConfig {
        click_delay_ms: mapping.click_delay_ms,
    };
    match replay(&mut screen, &resolved, &cfg) {
        Ok(_) => Verdict::Pass,
        Err(e) => Verdict::Fail {
            event: Some(e.index),
            reason: e.source.to_string(),
        },
    }
}

/// One check per (entry, screen), entries in document order.
pub fn validate(mapping: &Mapping, screens: &[(String, ScreenSpec)]) -> Vec<EntryCheck> {
    let mut out = Vec::new();
    for (i, info) in mapping.entries().iter().enumerate() {
        for (name, spec) in screens {
            out.push(EntryCheck {
                entry: i + 1,
                line: info.line,
                key: info.key.to_string(),
                screen: name.clone(),
                verdict: check(mapping, info, spec),
            });
        }
    }
    out
}

/// `PASS entry 3 (line 40) local tabs set_value "Airway" @ screen.toml`
pub fn render(c: &EntryCheck) -> String {
    let head = format!("entry {} (line {}) {} @ {}", c.entry, c.line, c.key, c.screen);
    match &c.verdict {
        Verdict::Pass => format!("PASS {head}"),
        Verdict::Fail { event: Some(ev), reason } => format!("FAIL {head}: event {ev}: {reason}"),
        Verdict::Fail { event: None, reason } => format!("FAIL {head}: {reason}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sink_core::mapping::load_mapping;

    fn screens() -> Vec<(String, ScreenSpec)> {
        vec![
            (
                "1080".into(),
                ScreenSpec::from_toml(include_str!("../../../fixtures/demo_remote_1080.toml")).unwrap(),
            ),
            (
                "800".into(),
                ScreenSpec::from_toml(include_str!("../../../fixtures/demo_remote_800.toml")).unwrap(),
            ),
        ]
    }

    #[test]
    fn shipped_mapping_passes_everywhere() {
        let m = load_mapping(include_str!("../../../fixtures/demo_mapping.toml")).unwrap();
        let checks = validate(&m, &screens());
        assert_eq!(checks.len(), m.entries().len() * 2);
        for c in &checks {
            assert!(c.passed(), "{}", render(c));
        }
    }

    const HEAD: &str = "[header]\nreference_resolution = { width = 1920, height = 1080 }\n";

    #[test]
    fn missing_target_widget_names_the_entry() {
        let text = format!(
            "{HEAD}\n[[entry]]\ninterface = \"local\"\nwidget = \"ghost\"\naction = \"click\"\ntarget = \"phantom\"\n\
             events = [{{ type = \"move\", x = 10, y = 10 }}, {{ type = \"click\" }}]\n"
        );
        let m = load_mapping(&text).unwrap();
        let c = &validate(&m, &screens()[..1])[0];
        let line = render(c);
        assert!(line.starts_with("FAIL entry 1 (line 4) local ghost click"), "{line}");
        assert!(line.contains("phantom"), "{line}");
    }

    #[test]
    fn slider_target_above_max_is_out_of_range() {
        let text = format!(
            "{HEAD}\n[[entry]]\ninterface = \"local\"\nwidget = \"spo2_slider\"\naction = \"set_value\"\n\
             payload = \"*\"\nsample = \"140\"\ntarget = \"spo2\"\n\
             events = [{{ type = \"slider_set\", track_x = 800, track_y = 600, track_width = 600, \
             knob_width = 30, min = 0, max = 100, value = \"{{payload}}\" }}]\n"
        );
        let m = load_mapping(&text).unwrap();
        let c = &validate(&m, &screens()[..1])[0];
        assert_eq!(c.verdict, Verdict::Fail { event: Some(0), reason: "value 140 outside slider range [0, 100]".into() });
    }
}
