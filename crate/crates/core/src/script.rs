//! Script data model: characters, clues, stage segments and metadata.
//!
//! A [`Script`] is loaded from one UTF-8 JSON document and is immutable
//! afterwards. `truth` and every character's `private_clues` are confidential:
//! the engine only ever places them in judge-facing prompts (or, for private
//! clues, in the owning character's own context).

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::memory::count_tokens;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Zh,
    En,
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Language::Zh => "zh",
            Language::En => "en",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Structure {
    Single,
    Multi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kind {
    Orthodox,
    Unorthodox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ending {
    Close,
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSegment {
    pub index: usize,
    pub unlock_round: u32,
}

/// The character's own script text. Multi-stage scripts carry one entry per stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScriptText {
    Whole(String),
    Staged(Vec<String>),
}

impl ScriptText {
    /// Text of the stages unlocked so far (`stages_unlocked` >= 1).
    pub fn unlocked(&self, stages_unlocked: usize) -> String {
        match self {
            ScriptText::Whole(text) => text.clone(),
            ScriptText::Staged(parts) => parts
                .iter()
                .take(stages_unlocked.max(1))
                .map(String::as_str)
                .collect::<Vec<_>>()
                .join("\n"),
        }
    }

    pub fn full(&self) -> String {
        self.unlocked(usize::MAX)
    }

    pub fn stage(&self, index: usize) -> Option<&str> {
        match self {
            ScriptText::Whole(text) if index == 0 => Some(text),
            ScriptText::Whole(_) => None,
            ScriptText::Staged(parts) => parts.get(index).map(String::as_str),
        }
    }

    fn is_blank(&self) -> bool {
        match self {
            ScriptText::Whole(text) => text.trim().is_empty(),
            ScriptText::Staged(parts) => parts.iter().all(|p| p.trim().is_empty()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterProfile {
    pub id: String,
    pub story: String,
    pub script: ScriptText,
    pub relationships: String,
    pub performance: String,
    pub goals: String,
    #[serde(default)]
    pub abilities: String,
    #[serde(default)]
    pub private_clues: Vec<String>,
}

/// One of the six parts of a character dossier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptPart {
    Story,
    Script,
    Relationships,
    Performance,
    Goals,
    Abilities,
}

impl ScriptPart {
    pub const ALL: [ScriptPart; 6] = [
        ScriptPart::Story,
        ScriptPart::Script,
        ScriptPart::Relationships,
        ScriptPart::Performance,
        ScriptPart::Goals,
        ScriptPart::Abilities,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScriptPart::Story => "story",
            ScriptPart::Script => "script",
            ScriptPart::Relationships => "relationships",
            ScriptPart::Performance => "performance",
            ScriptPart::Goals => "goals",
            ScriptPart::Abilities => "abilities",
        }
    }

    /// Human-facing label used inside prompts.
    pub fn label(self, language: Language) -> &'static str {
        match (language, self) {
            (Language::En, ScriptPart::Story) => "Story",
            (Language::En, ScriptPart::Script) => "Script",
            (Language::En, ScriptPart::Relationships) => "Relationship",
            (Language::En, ScriptPart::Performance) => "Performance",
            (Language::En, ScriptPart::Goals) => "Purpose",
            (Language::En, ScriptPart::Abilities) => "Ability",
            (Language::Zh, ScriptPart::Story) => "人物故事",
            (Language::Zh, ScriptPart::Script) => "人物剧本",
            (Language::Zh, ScriptPart::Relationships) => "人物关系",
            (Language::Zh, ScriptPart::Performance) => "角色表现",
            (Language::Zh, ScriptPart::Goals) => "角色目标",
            (Language::Zh, ScriptPart::Abilities) => "其他能力",
        }
    }
}

impl fmt::Display for ScriptPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl CharacterProfile {
    /// Full text of one dossier part (all stages for `script`).
    pub fn part(&self, part: ScriptPart) -> String {
        match part {
            ScriptPart::Story => self.story.clone(),
            ScriptPart::Script => self.script.full(),
            ScriptPart::Relationships => self.relationships.clone(),
            ScriptPart::Performance => self.performance.clone(),
            ScriptPart::Goals => self.goals.clone(),
            ScriptPart::Abilities => self.abilities.clone(),
        }
    }

    /// The character description shown to the character itself, with the
    /// script text limited to unlocked stages.
    pub fn description(&self, language: Language, stages_unlocked: usize) -> String {
        let mut out = String::new();
        for part in ScriptPart::ALL {
            let text = match part {
                ScriptPart::Script => self.script.unlocked(stages_unlocked),
                other => self.part(other),
            };
            if text.trim().is_empty() {
                continue;
            }
            if !out.is_empty() {
                out.push('\n');
            }
            out.push_str(part.label(language));
            out.push_str(match language {
                Language::En => ": ",
                Language::Zh => "：",
            });
            out.push_str(&text);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clue {
    pub id: String,
    pub location: String,
    pub text: String,
    #[serde(default)]
    pub is_key: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Script {
    pub id: String,
    pub title: String,
    pub language: Language,
    pub structure: Structure,
    pub kind: Kind,
    pub ending: Ending,
    pub stages: Vec<StageSegment>,
    pub characters: Vec<CharacterProfile>,
    pub clues: Vec<Clue>,
    pub truth: String,
    pub culprit_ids: Vec<String>,
}

impl Script {
    pub fn character(&self, id: &str) -> Option<&CharacterProfile> {
        self.characters.iter().find(|c| c.id == id)
    }

    pub fn clue(&self, id: &str) -> Option<&Clue> {
        self.clues.iter().find(|c| c.id == id)
    }

    pub fn is_culprit(&self, id: &str) -> bool {
        self.culprit_ids.iter().any(|c| c == id)
    }

    pub fn character_ids(&self) -> Vec<String> {
        self.characters.iter().map(|c| c.id.clone()).collect()
    }

    /// Distinct clue locations in first-appearance order.
    pub fn locations(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        self.clues
            .iter()
            .filter(|c| seen.insert(c.location.as_str()))
            .map(|c| c.location.clone())
            .collect()
    }

    pub fn key_clue_count(&self) -> usize {
        self.clues.iter().filter(|c| c.is_key).count()
    }

    /// Number of stages whose unlock round is `<= round`.
    pub fn stages_unlocked_at(&self, round: u32) -> usize {
        self.stages
            .iter()
            .filter(|s| s.unlock_round <= round)
            .count()
            .max(1)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LoadError> {
        let path = path.as_ref();
        let body = serde_json::to_string_pretty(self).expect("script serializes");
        std::fs::write(path, body).map_err(|source| LoadError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationCode {
    TooFewCharacters,
    DuplicateCharacterId,
    EmptyCharacterPart,
    ScriptStageCount,
    UnknownPrivateClue,
    NoCulprit,
    UnknownCulprit,
    NoCivilian,
    DuplicateClueId,
    EmptyClueLocation,
    NoStages,
    StructureStageMismatch,
    StageIndexMismatch,
    StageUnlockOrder,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

impl Violation {
    fn new(code: ViolationCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.code, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed script document at line {line}, column {column}: {message}")]
    Format {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("script violates {} invariant(s): {}", .0.len(), join_violations(.0))]
    Schema(Vec<Violation>),
}

fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub fn load_script(path: impl AsRef<Path>) -> Result<Script, LoadError> {
    let path = path.as_ref();
    let body = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_script(&body)
}

pub fn parse_script(body: &str) -> Result<Script, LoadError> {
    let script: Script = serde_json::from_str(body).map_err(|e| LoadError::Format {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let violations = validate_script(&script);
    if violations.is_empty() {
        Ok(script)
    } else {
        Err(LoadError::Schema(violations))
    }
}

pub fn validate_script(script: &Script) -> Vec<Violation> {
    use ViolationCode::*;
    let mut out = Vec::new();

    if script.characters.len() < 2 {
        out.push(Violation::new(
            TooFewCharacters,
            format!("{} character(s), at least 2 required", script.characters.len()),
        ));
    }

    let clue_ids: BTreeSet<&str> = script.clues.iter().map(|c| c.id.as_str()).collect();
    let mut seen = BTreeSet::new();
    for ch in &script.characters {
        if !seen.insert(ch.id.as_str()) {
            out.push(Violation::new(
                DuplicateCharacterId,
                format!("character id `{}` appears more than once", ch.id),
            ));
        }
        let parts = [
            ("story", ch.story.trim().is_empty()),
            ("script", ch.script.is_blank()),
            ("relationships", ch.relationships.trim().is_empty()),
            ("performance", ch.performance.trim().is_empty()),
            ("goals", ch.goals.trim().is_empty()),
        ];
        for (name, blank) in parts {
            if blank {
                out.push(Violation::new(
                    EmptyCharacterPart,
                    format!("character `{}` has an empty `{name}` part", ch.id),
                ));
            }
        }
        if script.structure == Structure::Multi {
            let entries = match &ch.script {
                ScriptText::Staged(parts) => parts.len(),
                ScriptText::Whole(_) => 1,
            };
            if entries != script.stages.len() {
                out.push(Violation::new(
                    ScriptStageCount,
                    format!(
                        "character `{}` has {entries} script entries for {} stages",
                        ch.id,
                        script.stages.len()
                    ),
                ));
            }
        }
        for clue in &ch.private_clues {
            if !clue_ids.contains(clue.as_str()) {
                out.push(Violation::new(
                    UnknownPrivateClue,
                    format!("character `{}` holds unknown private clue `{clue}`", ch.id),
                ));
            }
        }
    }

    if script.culprit_ids.is_empty() {
        out.push(Violation::new(NoCulprit, "culprit_ids is empty"));
    }
    for culprit in &script.culprit_ids {
        if !seen.contains(culprit.as_str()) {
            out.push(Violation::new(
                UnknownCulprit,
                format!("culprit `{culprit}` is not a character"),
            ));
        }
    }
    if !script.characters.is_empty()
        && script.characters.iter().all(|c| script.is_culprit(&c.id))
    {
        out.push(Violation::new(NoCivilian, "every character is a culprit"));
    }

    let mut seen_clues = BTreeSet::new();
    for clue in &script.clues {
        if !seen_clues.insert(clue.id.as_str()) {
            out.push(Violation::new(
                DuplicateClueId,
                format!("clue id `{}` appears more than once", clue.id),
            ));
        }
        if clue.location.trim().is_empty() {
            out.push(Violation::new(
                EmptyClueLocation,
                format!("clue `{}` has an empty location", clue.id),
            ));
        }
    }

    if script.stages.is_empty() {
        out.push(Violation::new(NoStages, "at least one stage is required"));
    }
    let single = script.structure == Structure::Single;
    if single != (script.stages.len() == 1) && !script.stages.is_empty() {
        out.push(Violation::new(
            StructureStageMismatch,
            format!(
                "{:?} structure with {} stage(s)",
                script.structure,
                script.stages.len()
            ),
        ));
    }
    for (i, stage) in script.stages.iter().enumerate() {
        if stage.index != i {
            out.push(Violation::new(
                StageIndexMismatch,
                format!("stage at position {i} has index {}", stage.index),
            ));
        }
    }
    if let Some(first) = script.stages.first() {
        if first.unlock_round != 0 {
            out.push(Violation::new(
                StageUnlockOrder,
                format!("stage 0 unlocks at round {}, must be 0", first.unlock_round),
            ));
        }
    }
    for pair in script.stages.windows(2) {
        if pair[1].unlock_round <= pair[0].unlock_round {
            out.push(Violation::new(
                StageUnlockOrder,
                format!(
                    "stage {} unlocks at round {} after stage {} at round {}",
                    pair[1].index, pair[1].unlock_round, pair[0].index, pair[0].unlock_round
                ),
            ));
        }
    }

    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptStats {
    pub agents: usize,
    pub clues: usize,
    pub stages: usize,
    pub words: usize,
}

/// Table-style statistics. `words` sums the token heuristic over every
/// dossier part and clue text.
pub fn script_stats(script: &Script) -> ScriptStats {
    let dossier: usize = script
        .characters
        .iter()
        .flat_map(|c| ScriptPart::ALL.map(|p| c.part(p)))
        .map(|text| count_tokens(&text))
        .sum();
    let clues: usize = script.clues.iter().map(|c| count_tokens(&c.text)).sum();
    ScriptStats {
        agents: script.characters.len(),
        clues: script.clues.len(),
        stages: script.stages.len(),
        words: dossier + clues,
    }
}
