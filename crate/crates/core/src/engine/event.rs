use std::fmt;

use serde::{Deserialize, Serialize};

use super::state::Phase;
use crate::agent::PromptKind;
use crate::memory::{HistoryAction, HistoryEntry, UsageCounters};
use crate::script::ScriptPart;

/// Judge and ledger scores carried by `Score` records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", rename_all = "snake_case")]
pub enum ScoreRecord {
    /// One paired suspicion/trust sample from `observer` about `subject`.
    Ledger {
        observer: String,
        subject: String,
        suspicion: u8,
        trust: u8,
    },
    Ability {
        character: String,
        ability: Ability,
        score: u8,
    },
    Rouge {
        character: String,
        part: ScriptPart,
        precision: f64,
        recall: f64,
        f1: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ability {
    Reasoning,
    Communication,
    Observation,
    Innovation,
    RolePlay,
}

impl Ability {
    pub const ALL: [Ability; 5] = [
        Ability::Reasoning,
        Ability::Communication,
        Ability::Observation,
        Ability::Innovation,
        Ability::RolePlay,
    ];

    /// Name substituted into the judge prompt.
    pub fn label(self, language: crate::script::Language) -> &'static str {
        use crate::script::Language::*;
        match (language, self) {
            (En, Ability::Reasoning) => "reasoning and analysis",
            (En, Ability::Communication) => "communication and cooperation",
            (En, Ability::Observation) => "detail observation",
            (En, Ability::Innovation) => "creative thinking",
            (En, Ability::RolePlay) => "role-playing",
            (Zh, Ability::Reasoning) => "推理分析",
            (Zh, Ability::Communication) => "沟通合作",
            (Zh, Ability::Observation) => "细节观察",
            (Zh, Ability::Innovation) => "创新思维",
            (Zh, Ability::RolePlay) => "角色扮演",
        }
    }
}

/// Kind and payload of a transcript record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum EventBody {
    Speak {
        text: String,
    },
    Ask {
        target: String,
        question: String,
    },
    Answer {
        asker: String,
        text: String,
    },
    Investigate {
        target: String,
        reason: String,
    },
    ClueRevealed {
        clue_id: String,
        location: String,
        text: String,
        is_key: bool,
    },
    Score(ScoreRecord),
    Summary {
        through_seq: u64,
        summary: String,
    },
    Accuse {
        accused: String,
    },
    Vote {
        accused: String,
    },
    PhaseChange {
        from: Phase,
        to: Phase,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        unlocked_stage: Option<usize>,
    },
    Failure {
        prompt: PromptKind,
        attempt: u32,
        reason: String,
        raw: String,
    },
}

impl EventBody {
    pub fn kind_name(&self) -> &'static str {
        match self {
            EventBody::Speak { .. } => "Speak",
            EventBody::Ask { .. } => "Ask",
            EventBody::Answer { .. } => "Answer",
            EventBody::Investigate { .. } => "Investigate",
            EventBody::ClueRevealed { .. } => "ClueRevealed",
            EventBody::Score(_) => "Score",
            EventBody::Summary { .. } => "Summary",
            EventBody::Accuse { .. } => "Accuse",
            EventBody::Vote { .. } => "Vote",
            EventBody::PhaseChange { .. } => "PhaseChange",
            EventBody::Failure { .. } => "Failure",
        }
    }
}

/// Actor recorded for engine-generated events.
pub const SYSTEM_ACTOR: &str = "system";
/// Actor recorded for judge and summarizer events.
pub const JUDGE_ACTOR: &str = "judge";

/// One transcript record. Serializes with keys
/// `seq, round, phase, actor, kind, payload, usage`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub round: u32,
    pub phase: Phase,
    pub actor: String,
    #[serde(flatten)]
    pub body: EventBody,
    pub usage: UsageCounters,
}

impl Event {
    /// The history line this event contributes, if any.
    pub fn history_entry(&self) -> Option<HistoryEntry> {
        let (action, content) = match &self.body {
            EventBody::Speak { text } | EventBody::Answer { text, .. } if !text.trim().is_empty() => {
                (HistoryAction::Speak, text.clone())
            }
            EventBody::Ask { target, question } => (HistoryAction::Ask, format!("{target}, {question}")),
            EventBody::Investigate { target, reason } => {
                (HistoryAction::Investigate, format!("{target}, {reason}"))
            }
            EventBody::ClueRevealed { text, .. } => (HistoryAction::Clue, text.clone()),
            EventBody::Accuse { accused } => (HistoryAction::Vote, accused.clone()),
            _ => return None,
        };
        Some(HistoryEntry {
            seq: self.seq,
            round: self.round,
            phase: self.phase,
            actor: self.actor.clone(),
            action,
            content,
        })
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "#{} r{} {:?} {} {}",
            self.seq,
            self.round,
            self.phase,
            self.actor,
            self.body.kind_name()
        )
    }
}
