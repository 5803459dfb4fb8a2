use std::collections::BTreeMap;

use super::report::AbilityScores;
use super::rouge::{rouge_l_text, RougeScore};
use crate::agent::{
    solicit, AgentBackend, Ask, Payload, PromptContext, PromptKind, RerunPolicy, SolicitError,
    Solicited, TemplateSet, Vocabulary,
};
use crate::engine::{Ability, Event};
use crate::script::{Language, Script, ScriptPart};

/// What the judge may read about a finished game: the unsummarized history
/// and each character's own lines.
#[derive(Debug, Clone)]
pub struct JudgeView<'a> {
    pub script: &'a Script,
    pub language: Language,
    pub roster: Vec<String>,
    history: String,
    actions: BTreeMap<String, Vec<String>>,
}

impl<'a> JudgeView<'a> {
    pub fn new(script: &'a Script, language: Language, roster: Vec<String>, events: &[Event]) -> Self {
        let mut lines = Vec::new();
        let mut actions: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for entry in events.iter().filter_map(Event::history_entry) {
            let line = entry.render();
            actions.entry(entry.actor.clone()).or_default().push(line.clone());
            lines.push(line);
        }
        Self {
            script,
            language,
            roster,
            history: lines.join("\n"),
            actions,
        }
    }

    pub fn history(&self) -> &str {
        &self.history
    }

    pub fn actions_of(&self, character: &str) -> String {
        self.actions.get(character).map(|a| a.join("\n")).unwrap_or_default()
    }

    fn role_list(&self) -> String {
        self.roster.join("\n")
    }
}

/// A judged value plus every solicitation that produced it, in order.
#[derive(Debug, Clone)]
pub struct Judged<T> {
    pub value: T,
    pub solicitations: Vec<(PromptKind, Solicited)>,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum JudgeError {
    #[error("`{0}` is not a character of the script")]
    UnknownCharacter(String),
    #[error("judging `{item}` failed: {source}")]
    Failed {
        item: String,
        kind: PromptKind,
        /// Solicitations that succeeded before the failure.
        completed: Vec<(PromptKind, Solicited)>,
        #[source]
        source: SolicitError,
    },
}

struct Judge<'a> {
    backend: &'a dyn AgentBackend,
    templates: &'a TemplateSet,
    language: Language,
    policy: &'a mut RerunPolicy,
    done: Vec<(PromptKind, Solicited)>,
}

impl Judge<'_> {
    fn ask(&mut self, item: String, kind: PromptKind, ctx: &PromptContext) -> Result<Solicited, JudgeError> {
        let vocab = Vocabulary::default();
        let ask = Ask {
            agent: crate::engine::JUDGE_ACTOR,
            kind,
            language: self.language,
            ctx,
            vocab: &vocab,
        };
        match solicit(self.backend, self.templates, &ask, self.policy) {
            Ok(got) => {
                self.done.push((kind, got.clone()));
                Ok(got)
            }
            Err(source) => Err(JudgeError::Failed {
                item,
                kind,
                completed: std::mem::take(&mut self.done),
                source,
            }),
        }
    }
}

/// Scores `character` on each ability, one AbilityJudge solicitation apiece.
/// The judge sees the full dossier, the private clues and the truth.
pub fn judge_abilities(
    view: &JudgeView<'_>,
    character: &str,
    backend: &dyn AgentBackend,
    templates: &TemplateSet,
    policy: &mut RerunPolicy,
) -> Result<Judged<AbilityScores>, JudgeError> {
    let script = view.script;
    let profile = script.character(character).ok_or_else(|| JudgeError::UnknownCharacter(character.to_string()))?;
    let self_clues: Vec<String> = profile
        .private_clues
        .iter()
        .filter_map(|id| script.clue(id))
        .map(|c| format!("- [{}] {}", c.location, c.text))
        .collect();
    let base = PromptContext::new()
        .with("name", character)
        .with("description", profile.description(view.language, script.stages.len()))
        .with("self_clues", self_clues.join("\n"))
        .with("history", view.history())
        .with("actions", view.actions_of(character))
        .with("role_list", view.role_list())
        .with("truth", script.truth.as_str());
    let mut judge = Judge {
        backend,
        templates,
        language: view.language,
        policy,
        done: Vec::new(),
    };
    let mut scores = BTreeMap::new();
    for ability in Ability::ALL {
        let ctx = base.clone().with("ability", ability.label(view.language));
        let got = judge.ask(format!("{character}/{ability:?}"), PromptKind::AbilityJudge, &ctx)?;
        let Payload::Score(score) = got.parsed.payload else {
            unreachable!("judge replies carry a score")
        };
        scores.insert(ability, score);
    }
    Ok(Judged {
        value: AbilityScores::from_map(&scores).expect("all abilities scored"),
        solicitations: judge.done,
    })
}

/// Reconstructs each nonempty dossier part from the game record and scores
/// it against a judge summary of the original with Rouge-L. The
/// reconstruction prompt never sees the truth or the character's private clues.
pub fn reconstruct_and_score(
    view: &JudgeView<'_>,
    character: &str,
    backend: &dyn AgentBackend,
    templates: &TemplateSet,
    policy: &mut RerunPolicy,
) -> Result<Judged<Vec<(ScriptPart, RougeScore)>>, JudgeError> {
    let profile = view.script.character(character).ok_or_else(|| JudgeError::UnknownCharacter(character.to_string()))?;
    let mut judge = Judge {
        backend,
        templates,
        language: view.language,
        policy,
        done: Vec::new(),
    };
    let mut scores = Vec::new();
    for part in ScriptPart::ALL {
        let original = profile.part(part);
        if original.trim().is_empty() {
            continue;
        }
        let label = part.label(view.language);
        let summary_ctx = PromptContext::new()
            .with("item", label)
            .with("name", character)
            .with("content", original);
        let reference = judge.ask(format!("{character}/{part:?}"), PromptKind::ScriptSummary, &summary_ctx)?;
        let ctx = PromptContext::new()
            .with("name", character)
            .with("history", view.history())
            .with("actions", view.actions_of(character))
            .with("role_list", view.role_list())
            .with("script_part", label);
        let candidate = judge.ask(format!("{character}/{part:?}"), PromptKind::Reconstruction, &ctx)?;
        scores.push((part, rouge_l_text(candidate.parsed.text(), reference.parsed.text())));
    }
    Ok(Judged {
        value: scores,
        solicitations: judge.done,
    })
}
