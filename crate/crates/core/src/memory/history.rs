//! Append-only game history with a summarized prefix.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::tokens::count_tokens;
use crate::agent::{
    solicit, AgentBackend, Ask, PromptContext, PromptKind, RerunPolicy, SolicitError, Solicited,
    TemplateSet, Vocabulary,
};
use crate::engine::Phase;
use crate::script::Language;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HistoryAction {
    Speak,
    Ask,
    Investigate,
    Clue,
    Vote,
}

impl fmt::Display for HistoryAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub seq: u64,
    pub round: u32,
    pub phase: Phase,
    pub actor: String,
    pub action: HistoryAction,
    pub content: String,
}

impl HistoryEntry {
    /// `Name: 【Action】: Content`, flattened onto one line.
    pub fn render(&self) -> String {
        let content = self.content.split_whitespace().collect::<Vec<_>>().join(" ");
        format!("{}: 【{}】: {}", self.actor, self.action, content)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummarizedPrefix {
    pub through_seq: u64,
    pub summary: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryLog {
    entries: Vec<HistoryEntry>,
    summarized_prefix: Option<SummarizedPrefix>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HistoryError {
    #[error("history seq {seq} is not after {last}")]
    NonIncreasingSeq { seq: u64, last: u64 },
}

/// One replacement of the oldest retained entries by a summary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SummaryStep {
    pub through_seq: u64,
    pub summary: String,
    pub solicitations: Vec<Solicited>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SummarizeError {
    #[error("context budget must be positive")]
    ZeroBudget,
    #[error("summarizer failed: {source}")]
    Summarizer {
        completed: Vec<SummaryStep>,
        rejected: Vec<Solicited>,
        source: SolicitError,
    },
    #[error("summarizer twice returned a summary no shorter than its {source_tokens}-token source")]
    NotShorter {
        completed: Vec<SummaryStep>,
        rejected: Vec<Solicited>,
        source_tokens: usize,
    },
}

/// Everything the summarizer needs besides the history itself.
pub struct Summarizer<'a> {
    pub backend: &'a dyn AgentBackend,
    pub templates: &'a TemplateSet,
    pub language: Language,
    pub policy: &'a mut RerunPolicy,
}

impl HistoryLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, entry: HistoryEntry) -> Result<(), HistoryError> {
        let last = self
            .entries
            .last()
            .map(|e| e.seq)
            .or(self.summarized_prefix.as_ref().map(|p| p.through_seq));
        if let Some(last) = last {
            if entry.seq <= last {
                return Err(HistoryError::NonIncreasingSeq { seq: entry.seq, last });
            }
        }
        self.entries.push(entry);
        Ok(())
    }

    /// Entries not yet folded into the summary.
    pub fn retained(&self) -> &[HistoryEntry] {
        &self.entries
    }

    pub fn summarized_prefix(&self) -> Option<&SummarizedPrefix> {
        self.summarized_prefix.as_ref()
    }

    pub fn render(&self) -> String {
        let mut lines: Vec<String> = Vec::with_capacity(self.entries.len() + 1);
        if let Some(prefix) = &self.summarized_prefix {
            lines.push(prefix.summary.clone());
        }
        lines.extend(self.entries.iter().map(HistoryEntry::render));
        lines.join("\n")
    }

    pub fn token_count(&self) -> usize {
        count_tokens(&self.render())
    }

    /// Folds the oldest half of the retained entries (at least one) into the
    /// summary until the rendering fits `budget` or only the summary and one
    /// entry remain.
    pub fn maybe_summarize(
        &mut self,
        budget: usize,
        summarizer: &mut Summarizer<'_>,
    ) -> Result<Vec<SummaryStep>, SummarizeError> {
        if budget == 0 {
            return Err(SummarizeError::ZeroBudget);
        }
        let mut steps = Vec::new();
        while self.token_count() > budget && self.entries.len() > 1 {
            let take = (self.entries.len() / 2).max(1);
            let mut source_lines = Vec::with_capacity(take + 1);
            if let Some(prefix) = &self.summarized_prefix {
                source_lines.push(prefix.summary.clone());
            }
            source_lines.extend(self.entries[..take].iter().map(HistoryEntry::render));
            let source = source_lines.join("\n");
            let source_tokens = count_tokens(&source);

            let ctx = PromptContext::new().with("text", source.as_str());
            let vocab = Vocabulary::default();
            let ask = Ask {
                agent: "summarizer",
                kind: PromptKind::HistorySummary,
                language: summarizer.language,
                ctx: &ctx,
                vocab: &vocab,
            };
            let mut rejected = Vec::new();
            let accepted = loop {
                let got = match solicit(summarizer.backend, summarizer.templates, &ask, summarizer.policy) {
                    Ok(got) => got,
                    Err(source) => {
                        return Err(SummarizeError::Summarizer {
                            completed: steps,
                            rejected,
                            source,
                        })
                    }
                };
                if count_tokens(got.parsed.text()) < source_tokens {
                    break got;
                }
                rejected.push(got);
                if rejected.len() > 1 {
                    return Err(SummarizeError::NotShorter {
                        completed: steps,
                        rejected,
                        source_tokens,
                    });
                }
            };

            let through_seq = self.entries[take - 1].seq;
            let summary = accepted.parsed.text().to_string();
            self.entries.drain(..take);
            self.summarized_prefix = Some(SummarizedPrefix {
                through_seq,
                summary: summary.clone(),
            });
            rejected.push(accepted);
            steps.push(SummaryStep {
                through_seq,
                summary,
                solicitations: rejected,
            });
        }
        Ok(steps)
    }

    /// Applies a summary recorded elsewhere (transcript replay).
    pub fn apply_summary(&mut self, through_seq: u64, summary: String) {
        self.entries.retain(|e| e.seq > through_seq);
        self.summarized_prefix = Some(SummarizedPrefix { through_seq, summary });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::{scripted_backend, FnBackend, Request};

    fn entry(seq: u64, actor: &str, content: &str) -> HistoryEntry {
        HistoryEntry {
            seq,
            round: 0,
            phase: Phase::OpenConversation,
            actor: actor.into(),
            action: HistoryAction::Speak,
            content: content.into(),
        }
    }

    fn log_with(n: u64, words_each: usize) -> HistoryLog {
        let mut log = HistoryLog::new();
        for i in 0..n {
            let content = vec!["word"; words_each].join(" ");
            log.push(entry(i, if i % 2 == 0 { "Ada" } else { "Bo" }, &content)).unwrap();
        }
        log
    }

    #[test]
    fn render_uses_the_line_format() {
        let mut log = HistoryLog::new();
        log.push(entry(0, "Ada", "I was in\nthe garden.")).unwrap();
        assert_eq!(log.render(), "Ada: 【Speak】: I was in the garden.");
        assert!(log.push(entry(0, "Bo", "again")).is_err());
    }

    #[test]
    fn under_budget_is_unchanged() {
        let mut log = log_with(2, 1);
        let before = log.clone();
        let backend = scripted_backend(vec![]);
        let templates = TemplateSet::builtin();
        let mut policy = RerunPolicy::default();
        let mut s = Summarizer { backend: &backend, templates: &templates, language: Language::En, policy: &mut policy };
        assert!(log.maybe_summarize(100, &mut s).unwrap().is_empty());
        assert_eq!(log, before);
    }

    #[test]
    fn zero_budget_is_a_configuration_error() {
        let mut log = log_with(2, 1);
        let backend = scripted_backend(vec![]);
        let templates = TemplateSet::builtin();
        let mut policy = RerunPolicy::default();
        let mut s = Summarizer { backend: &backend, templates: &templates, language: Language::En, policy: &mut policy };
        assert_eq!(log.maybe_summarize(0, &mut s), Err(SummarizeError::ZeroBudget));
    }

    #[test]
    fn over_budget_history_is_folded_with_a_fixed_digest() {
        // Each "Ada: 【Speak】: word x10" line is 15 tokens ("Ada:", 【, Speak, 】, ":", 10 words);
        // the digest "Ada: 【Speak】: met" is 6.
        let mut log = log_with(8, 10);
        assert_eq!(log.token_count(), 8 * 15);
        let backend = FnBackend(|_: &Request| Ok("### THOUGHT: t\n### RESPONSE: Ada: 【Speak】: met".to_string()));
        let templates = TemplateSet::builtin();
        let mut policy = RerunPolicy::default();
        let mut s = Summarizer { backend: &backend, templates: &templates, language: Language::En, policy: &mut policy };
        let steps = log.maybe_summarize(40, &mut s).unwrap();
        // 120 -> fold 4 (6 + 60 = 66) -> fold 2 (6 + 30 = 36 <= 40).
        assert_eq!(steps.len(), 2);
        assert_eq!(log.token_count(), 36);
        assert_eq!(log.retained().len(), 2);
        assert_eq!(log.summarized_prefix().unwrap().through_seq, 5);
    }

    #[test]
    fn irreducible_history_stops_with_one_entry() {
        let mut log = log_with(3, 30);
        let backend = FnBackend(|_: &Request| Ok("### THOUGHT: t\n### RESPONSE: X: 【Speak】: y".to_string()));
        let templates = TemplateSet::builtin();
        let mut policy = RerunPolicy::default();
        let mut s = Summarizer { backend: &backend, templates: &templates, language: Language::En, policy: &mut policy };
        log.maybe_summarize(5, &mut s).unwrap();
        assert_eq!(log.retained().len(), 1);
        assert!(log.token_count() > 5);
    }

    #[test]
    fn non_shrinking_summary_is_retried_once_then_rejected() {
        let mut log = log_with(4, 2);
        let long = format!("### THOUGHT: t\n### RESPONSE: Ada: 【Speak】: {}", vec!["w"; 50].join(" "));
        let backend = FnBackend(move |_: &Request| Ok(long.clone()));
        let templates = TemplateSet::builtin();
        let mut policy = RerunPolicy::default();
        let mut s = Summarizer { backend: &backend, templates: &templates, language: Language::En, policy: &mut policy };
        match log.maybe_summarize(5, &mut s) {
            Err(SummarizeError::NotShorter { rejected, .. }) => assert_eq!(rejected.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
