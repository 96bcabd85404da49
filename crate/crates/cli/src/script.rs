//! Scenario scripts for `connect run-script`.
//!
//! One directive per line; blank lines and `#` comments are ignored.
//!
//! ```text
//! requirement R01 Heart rate entry is committed on every screen
//! local hr_field set_value 72
//! sleep 50
//! expect * hr.committed = 72
//! expect monitor notes.content = airway clear
//! ```
//!
//! An action line is `<interface> <widget> <action> [payload]`; the payload
//! is the rest of the line, so it may contain spaces. `expect` compares one
//! widget field on one endpoint (or `*` for every endpoint with a state URL)
//! once all actions of the requirement have settled. Lines before the first
//! `requirement` form an unnamed block.

use std::time::Duration;

use sink_core::api::RawAction;
use sink_core::mapping::Action;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct ScriptError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    All,
    Endpoint(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expectation {
    pub line: usize,
    pub target: Target,
    pub widget: String,
    pub field: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Action { line: usize, action: RawAction },
    Sleep(Duration),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Requirement {
    pub id: String,
    pub description: String,
    pub steps: Vec<Step>,
    pub expects: Vec<Expectation>,
}

impl Requirement {
    pub fn actions(&self) -> usize {
        self.steps.iter().filter(|s| matches!(s, Step::Action { .. })).count()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Script {
    pub requirements: Vec<Requirement>,
}

impl Script {
    pub fn action_count(&self) -> usize {
        self.requirements.iter().map(Requirement::actions).sum()
    }
}

/// Splits off the first whitespace-delimited word.
fn word(s: &str) -> (&str, &str) {
    let s = s.trim_start();
    match s.find(char::is_whitespace) {
        Some(i) => (&s[..i], s[i..].trim_start()),
        None => (s, ""),
    }
}

pub fn parse(text: &str) -> Result<Script, ScriptError> {
    let mut reqs: Vec<Requirement> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| ScriptError { line, message };
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let (head, rest) = word(content);
        if head == "requirement" {
            let (id, description) = word(rest);
            if id.is_empty() {
                return Err(err("requirement needs an id".into()));
            }
            if reqs.iter().any(|r| r.id == id) {
                return Err(err(format!("duplicate requirement id {id:?}")));
            }
            reqs.push(Requirement {
                id: id.into(),
                description: description.into(),
                steps: Vec::new(),
                expects: Vec::new(),
            });
            continue;
        }
        if reqs.is_empty() {
            reqs.push(Requirement {
                id: "-".into(),
                description: String::new(),
                steps: Vec::new(),
                expects: Vec::new(),
            });
        }
        let req = reqs.last_mut().expect("a block is open");
        match head {
            "sleep" => {
                let ms: u64 = rest
                    .parse()
                    .map_err(|_| err(format!("sleep wants milliseconds, got {rest:?}")))?;
                req.steps.push(Step::Sleep(Duration::from_millis(ms)));
            }
            "expect" => req.expects.push(parse_expect(rest).map_err(err)?.at(line)),
            _ => {
                let (widget, rest) = word(rest);
                let (action, payload) = word(rest);
                if widget.is_empty() || action.is_empty() {
                    return Err(err("expected <interface> <widget> <action> [payload]".into()));
                }
                action.parse::<Action>().map_err(|e| err(e.to_string()))?;
                let payload = (!payload.is_empty()).then_some(payload);
                req.steps.push(Step::Action {
                    line,
                    action: RawAction::new(head, widget, action, payload),
                });
            }
        }
    }
    Ok(Script { requirements: reqs })
}

impl Expectation {
    fn at(mut self, line: usize) -> Self {
        self.line = line;
        self
    }
}

fn parse_expect(rest: &str) -> Result<Expectation, String> {
    let usage = "expected `expect <endpoint|*> <widget>.<field> = <value>`";
    let (target, rest) = word(rest);
    let (path, rest) = word(rest);
    let value = rest.strip_prefix('=').ok_or(usage)?.trim();
    let (widget, field) = path.split_once('.').ok_or(usage)?;
    if target.is_empty() || widget.is_empty() || field.is_empty() {
        return Err(usage.into());
    }
    Ok(Expectation {
        line: 0,
        target: if target == "*" {
            Target::All
        } else {
            Target::Endpoint(target.into())
        },
        widget: widget.into(),
        field: field.into(),
        value: value.into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_blocks_and_directives() {
        let s = parse(
            "# header\n\
             local a click\n\
             requirement R1 First one\n\
             local notes set_text two  words \n\
             sleep 25\n\
             expect * notes.content = two  words\n\
             expect tablet notes.committed =\n",
        )
        .unwrap();
        assert_eq!(s.requirements.len(), 2);
        assert_eq!(s.requirements[0].id, "-");
        let r = &s.requirements[1];
        assert_eq!((r.id.as_str(), r.description.as_str()), ("R1", "First one"));
        assert_eq!(
            r.steps,
            vec![
                Step::Action {
                    line: 4,
                    action: RawAction::new("local", "notes", "set_text", Some("two  words")),
                },
                Step::Sleep(Duration::from_millis(25)),
            ]
        );
        assert_eq!(r.expects[0].target, Target::All);
        assert_eq!(r.expects[0].value, "two  words");
        assert_eq!(r.expects[1].target, Target::Endpoint("tablet".into()));
        assert_eq!((r.expects[1].line, r.expects[1].value.as_str()), (7, ""));
        assert_eq!(s.action_count(), 2);
    }

    #[test]
    fn reports_the_offending_line() {
        let cases = [
            ("sleep soon", 1),
            ("local w explode", 1),
            ("requirement R1 a\nrequirement R1 b", 2),
            ("local w click\nexpect * nodot = 1", 2),
            ("expect * a.b 1", 1),
            ("local w", 1),
        ];
        for (text, line) in cases {
            assert_eq!(parse(text).unwrap_err().line, line, "{text:?}");
        }
    }

    #[test]
    fn shipped_scenarios_parse() {
        let s = parse(include_str!("../../../fixtures/demo_scenarios.txt")).unwrap();
        assert_eq!(s.requirements.len(), 20);
        assert!(s.requirements.iter().all(|r| r.id.starts_with('R') && !r.expects.is_empty()));
    }
}
