//! Prompt templates keyed by (kind, language) and placeholder rendering.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::script::Language;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PromptKind {
    Introduction,
    Converse,
    AskReply,
    Vote,
    SuspicionScore,
    TrustScore,
    HistorySummary,
    ScriptSummary,
    AbilityJudge,
    Reconstruction,
}

impl PromptKind {
    pub const ALL: [PromptKind; 10] = [
        PromptKind::Introduction,
        PromptKind::Converse,
        PromptKind::AskReply,
        PromptKind::Vote,
        PromptKind::SuspicionScore,
        PromptKind::TrustScore,
        PromptKind::HistorySummary,
        PromptKind::ScriptSummary,
        PromptKind::AbilityJudge,
        PromptKind::Reconstruction,
    ];

    /// File stem of the template for this kind.
    pub fn file_stem(self) -> &'static str {
        match self {
            PromptKind::Introduction => "introduction",
            PromptKind::Converse => "converse",
            PromptKind::AskReply => "ask_reply",
            PromptKind::Vote => "vote",
            PromptKind::SuspicionScore => "suspicion_score",
            PromptKind::TrustScore => "trust_score",
            PromptKind::HistorySummary => "history_summary",
            PromptKind::ScriptSummary => "script_summary",
            PromptKind::AbilityJudge => "ability_judge",
            PromptKind::Reconstruction => "reconstruction",
        }
    }

    /// Summarization completions are excluded from the user-completion count.
    pub fn is_summarization(self) -> bool {
        matches!(self, PromptKind::HistorySummary | PromptKind::ScriptSummary)
    }
}

impl fmt::Display for PromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("{kind} prompt requires context field `{field}`")]
    MissingContextField { kind: PromptKind, field: String },
    #[error("no {kind} template for language {language}")]
    MissingTemplate { kind: PromptKind, language: Language },
    #[error("cannot read template {path}: {message}")]
    Io { path: String, message: String },
}

/// Values for template placeholders.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PromptContext {
    fields: BTreeMap<String, String>,
}

impl PromptContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl Into<String>) -> Self {
        self.fields.insert(key.to_string(), value.into());
        self
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.fields.insert(key.to_string(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.get(key).map(String::as_str)
    }
}

/// Placeholders that may only be rendered into judge prompts.
const CONFIDENTIAL: &[&str] = &["truth"];

fn placeholder() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{([a-z_]+)\}").expect("valid regex"))
}

macro_rules! builtin {
    ($lang:literal) => {
        [
            include_str!(concat!("../../templates/", $lang, "/introduction.txt")),
            include_str!(concat!("../../templates/", $lang, "/converse.txt")),
            include_str!(concat!("../../templates/", $lang, "/ask_reply.txt")),
            include_str!(concat!("../../templates/", $lang, "/vote.txt")),
            include_str!(concat!("../../templates/", $lang, "/suspicion_score.txt")),
            include_str!(concat!("../../templates/", $lang, "/trust_score.txt")),
            include_str!(concat!("../../templates/", $lang, "/history_summary.txt")),
            include_str!(concat!("../../templates/", $lang, "/script_summary.txt")),
            include_str!(concat!("../../templates/", $lang, "/ability_judge.txt")),
            include_str!(concat!("../../templates/", $lang, "/reconstruction.txt")),
        ]
    };
}

#[derive(Debug, Clone)]
pub struct TemplateSet {
    templates: HashMap<(PromptKind, Language), String>,
    preambles: HashMap<Language, String>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::builtin()
    }
}

impl TemplateSet {
    /// Templates compiled into the crate from `templates/{en,zh}`.
    pub fn builtin() -> Self {
        let mut templates = HashMap::new();
        for (language, texts) in [(Language::En, builtin!("en")), (Language::Zh, builtin!("zh"))] {
            for (kind, text) in PromptKind::ALL.into_iter().zip(texts) {
                templates.insert((kind, language), text.to_string());
            }
        }
        let preambles = HashMap::from([
            (Language::En, include_str!("../../templates/en/preamble.txt").to_string()),
            (Language::Zh, include_str!("../../templates/zh/preamble.txt").to_string()),
        ]);
        Self { templates, preambles }
    }

    /// Built-in templates overridden by any `{dir}/{lang}/{stem}.txt` present.
    pub fn with_overrides(dir: impl AsRef<Path>) -> Result<Self, PromptError> {
        let mut set = Self::builtin();
        let dir = dir.as_ref();
        for language in [Language::En, Language::Zh] {
            let lang_dir = dir.join(language.to_string());
            let preamble = lang_dir.join("preamble.txt");
            if preamble.exists() {
                set.preambles.insert(language, read(&preamble)?);
            }
            for kind in PromptKind::ALL {
                let path = lang_dir.join(format!("{}.txt", kind.file_stem()));
                if path.exists() {
                    set.templates.insert((kind, language), read(&path)?);
                }
            }
        }
        Ok(set)
    }

    pub fn template(&self, kind: PromptKind, language: Language) -> Option<&str> {
        self.templates.get(&(kind, language)).map(String::as_str)
    }

    /// Renders a prompt. Every placeholder in the template must be supplied by
    /// `ctx` (`{preamble}` is filled from the set itself).
    pub fn build_prompt(
        &self,
        kind: PromptKind,
        language: Language,
        ctx: &PromptContext,
    ) -> Result<String, PromptError> {
        let template = self
            .template(kind, language)
            .ok_or(PromptError::MissingTemplate { kind, language })?;
        let preamble = self
            .preambles
            .get(&language)
            .map(|p| p.trim_end())
            .unwrap_or_default();

        let mut out = String::with_capacity(template.len() + 256);
        let mut last = 0;
        for caps in placeholder().captures_iter(template) {
            let whole = caps.get(0).expect("match");
            let key = &caps[1];
            let value = if key == "preamble" {
                preamble
            } else if CONFIDENTIAL.contains(&key) && kind != PromptKind::AbilityJudge {
                // Confidential placeholders never render outside judge prompts.
                ""
            } else {
                ctx.get(key).ok_or_else(|| PromptError::MissingContextField {
                    kind,
                    field: key.to_string(),
                })?
            };
            out.push_str(&template[last..whole.start()]);
            out.push_str(value);
            last = whole.end();
        }
        out.push_str(&template[last..]);
        Ok(out)
    }
}

fn read(path: &Path) -> Result<String, PromptError> {
    std::fs::read_to_string(path).map_err(|e| PromptError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Restatement appended to a prompt when the previous output could not be parsed.
pub fn rerun_suffix(language: Language, previous: &str, reason: &str) -> String {
    match language {
        Language::En => format!(
            "\n\nYour previous output was:\n{previous}\n\nIt could not be processed ({reason}). \
             Reply again and follow the required format exactly:\n### THOUGHT: XXX\n### RESPONSE: XXX\n"
        ),
        Language::Zh => format!(
            "\n\n你上一次的输出是：\n{previous}\n\n该输出无法被解析（{reason}）。\
             请重新回复，并严格遵循要求的格式：\n### THOUGHT: XXX\n### RESPONSE: XXX\n"
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full_ctx() -> PromptContext {
        [
            "name", "description", "self_clues", "history", "last_action", "characters",
            "address", "ask_name", "ask_content", "other_name", "content", "role_list",
            "actions", "truth", "ability", "script_part", "item", "text",
        ]
        .into_iter()
        .fold(PromptContext::new(), |ctx, k| ctx.with(k, format!("<{k}>")))
    }

    #[test]
    fn suspicion_prompt_states_the_scale() {
        let set = TemplateSet::builtin();
        let ctx = PromptContext::new()
            .with("history", "A: 【Speak】: hi")
            .with("other_name", "A")
            .with("content", "hi");
        for language in [Language::En, Language::Zh] {
            let text = set.build_prompt(PromptKind::SuspicionScore, language, &ctx).unwrap();
            assert!(text.contains("chosen from [0, 1, 2]"));
        }
    }

    #[test]
    fn converse_prompt_shows_both_formats() {
        let set = TemplateSet::builtin();
        for language in [Language::En, Language::Zh] {
            let text = set.build_prompt(PromptKind::Converse, language, &full_ctx()).unwrap();
            assert!(text.contains("【Ask】"));
            assert!(text.contains("【Investigate】"));
            assert!(!text.contains('{'), "unrendered placeholder");
        }
    }

    #[test]
    fn judge_requires_truth() {
        let set = TemplateSet::builtin();
        let mut ctx = full_ctx();
        ctx.fields.remove("truth");
        assert_eq!(
            set.build_prompt(PromptKind::AbilityJudge, Language::En, &ctx),
            Err(PromptError::MissingContextField {
                kind: PromptKind::AbilityJudge,
                field: "truth".into()
            })
        );
    }

    #[test]
    fn truth_only_reaches_the_ability_judge() {
        let set = TemplateSet::builtin();
        let ctx = full_ctx().with("truth", "THE-BUTLER-DID-IT");
        for language in [Language::En, Language::Zh] {
            for kind in PromptKind::ALL {
                let text = set.build_prompt(kind, language, &ctx).unwrap();
                assert_eq!(
                    text.contains("THE-BUTLER-DID-IT"),
                    kind == PromptKind::AbilityJudge,
                    "{kind} {language}"
                );
            }
        }
    }

    #[test]
    fn every_kind_has_both_languages() {
        let set = TemplateSet::builtin();
        for kind in PromptKind::ALL {
            for language in [Language::En, Language::Zh] {
                let t = set.template(kind, language).unwrap();
                assert!(t.contains("### THOUGHT:") && t.contains("### RESPONSE:"));
            }
        }
    }

    #[test]
    fn overrides_replace_single_templates() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(dir.path().join("en")).unwrap();
        std::fs::write(dir.path().join("en/vote.txt"), "Vote now, {name}.").unwrap();
        let set = TemplateSet::with_overrides(dir.path()).unwrap();
        let ctx = PromptContext::new().with("name", "Ada");
        assert_eq!(set.build_prompt(PromptKind::Vote, Language::En, &ctx).unwrap(), "Vote now, Ada.");
        assert!(set.build_prompt(PromptKind::Vote, Language::Zh, &ctx).is_err());
    }
}
