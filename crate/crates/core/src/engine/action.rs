use serde::{Deserialize, Serialize};

/// What a character does with a turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Action {
    Speak { text: String },
    Ask { target: String, question: String },
    Investigate { location_or_clue: String, reason: String },
    Vote { accused: String },
}

impl Action {
    /// Canonical response text for Ask / Investigate, inverse of the converse grammar.
    pub fn render_response(&self) -> String {
        match self {
            Action::Speak { text } => text.clone(),
            Action::Ask { target, question } => format!("【Ask】【{target}】: {question}"),
            Action::Investigate { location_or_clue, reason } => {
                format!("【Investigate】【{location_or_clue}】: {reason}")
            }
            Action::Vote { accused } => accused.clone(),
        }
    }
}
