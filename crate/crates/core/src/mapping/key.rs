use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::MappingError;

/// Kind of local operator action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Click,
    Toggle,
    SetValue,
    SetText,
    Key,
}

impl Action {
    pub const ALL: [Action; 5] = [
        Action::Click,
        Action::Toggle,
        Action::SetValue,
        Action::SetText,
        Action::Key,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Action::Click => "click",
            Action::Toggle => "toggle",
            Action::SetValue => "set_value",
            Action::SetText => "set_text",
            Action::Key => "key",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Action {
    type Err = MappingError;

    /// Accepts `set_value`, `SET_VALUE`, `set-value` and so on.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Action::ALL
            .into_iter()
            .find(|a| a.as_str() == norm)
            .ok_or_else(|| MappingError::UnknownAction(s.to_string()))
    }
}

/// Canonical encoding of one local user action; the lookup key of the
/// mapping table. All four fields take part in equality and hashing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InputKey {
    pub interface_id: String,
    pub widget_id: String,
    pub action: Action,
    pub payload: Option<String>,
}

impl InputKey {
    pub fn new(
        interface_id: impl Into<String>,
        widget_id: impl Into<String>,
        action: Action,
        payload: Option<impl Into<String>>,
    ) -> Self {
        InputKey {
            interface_id: interface_id.into(),
            widget_id: widget_id.into(),
            action,
            payload: payload.map(Into::into),
        }
    }

    /// Same key with the payload replaced by `payload`.
    pub fn with_payload(&self, payload: Option<&str>) -> Self {
        InputKey {
            payload: payload.map(str::to_string),
            ..self.clone()
        }
    }
}

impl fmt::Display for InputKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.interface_id, self.widget_id, self.action)?;
        if let Some(p) = &self.payload {
            write!(f, " {p:?}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_parsing_is_case_insensitive() {
        assert_eq!("SET_VALUE".parse::<Action>().unwrap(), Action::SetValue);
        assert_eq!("set-text".parse::<Action>().unwrap(), Action::SetText);
        assert!("hover".parse::<Action>().is_err());
    }

    #[test]
    fn payload_is_part_of_identity() {
        let a = InputKey::new("local", "hr_field", Action::SetValue, Some("72"));
        let b = InputKey::new("local", "hr_field", Action::SetValue, Some("73"));
        let none = InputKey::new("local", "hr_field", Action::SetValue, None::<String>);
        assert_ne!(a, b);
        assert_ne!(a, none);
        assert_eq!(a, b.with_payload(Some("72")));
    }
}
