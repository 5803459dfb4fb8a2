use std::collections::{BTreeMap, VecDeque};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::parse::Vocabulary;
use super::prompt::PromptKind;
use crate::memory::count_tokens;
use crate::script::Language;

/// Everything a backend gets to know about one completion. Game knowledge
/// arrives only through `prompt`; `vocab` lists the legal names for the reply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Request {
    pub kind: PromptKind,
    pub language: Language,
    /// Character id, or the judge's label.
    pub agent: String,
    pub prompt: String,
    pub vocab: Vocabulary,
    /// 1-based attempt number within one solicitation.
    pub attempt: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub input_tokens: u64,
    pub output_tokens: u64,
}

impl Usage {
    /// Counts under the shared token heuristic.
    pub fn heuristic(prompt: &str, output: &str) -> Self {
        Self {
            input_tokens: count_tokens(prompt) as u64,
            output_tokens: count_tokens(output) as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub usage: Usage,
}

impl Completion {
    pub fn heuristic(request: &Request, text: impl Into<String>) -> Self {
        let text = text.into();
        let usage = Usage::heuristic(&request.prompt, &text);
        Self { text, usage }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("authentication rejected: {0}")]
    Auth(String),
    #[error("request timed out: {0}")]
    Timeout(String),
    #[error("playbook for `{agent}` exhausted after {served} completion(s)")]
    PlaybookExhausted { agent: String, served: usize },
}

/// A completion service. Implementations must accept concurrent calls from
/// independent games.
pub trait AgentBackend: Send + Sync {
    /// Returns the raw text plus token usage (provider-reported when known).
    fn complete(&self, request: &Request) -> Result<Completion, BackendError>;
}

/// Canned outputs, served either strictly in order or per prompt kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Playbook {
    Ordered(Vec<String>),
    ByKind(BTreeMap<PromptKind, Vec<String>>),
}

#[derive(Debug)]
enum Queue {
    Ordered(VecDeque<String>),
    ByKind(BTreeMap<PromptKind, VecDeque<String>>),
}

/// Test double replaying canned raw outputs.
#[derive(Debug)]
pub struct ScriptedBackend {
    queue: Mutex<(Queue, usize)>,
    cycle: bool,
    original: Playbook,
}

impl ScriptedBackend {
    pub fn new(plays: Vec<String>) -> Self {
        Self::from_playbook(Playbook::Ordered(plays), false)
    }

    /// With `cycle`, an exhausted list restarts from its first entry.
    pub fn from_playbook(playbook: Playbook, cycle: bool) -> Self {
        let queue = match &playbook {
            Playbook::Ordered(plays) => Queue::Ordered(plays.iter().cloned().collect()),
            Playbook::ByKind(map) => Queue::ByKind(
                map.iter()
                    .map(|(k, v)| (*k, v.iter().cloned().collect()))
                    .collect(),
            ),
        };
        Self {
            queue: Mutex::new((queue, 0)),
            cycle,
            original: playbook,
        }
    }

    pub fn served(&self) -> usize {
        self.queue.lock().expect("playbook lock").1
    }
}

pub fn scripted_backend(plays: Vec<String>) -> ScriptedBackend {
    ScriptedBackend::new(plays)
}

impl AgentBackend for ScriptedBackend {
    fn complete(&self, request: &Request) -> Result<Completion, BackendError> {
        let mut guard = self.queue.lock().expect("playbook lock");
        let (queue, served) = &mut *guard;
        let next = match queue {
            Queue::Ordered(plays) => {
                if plays.is_empty() && self.cycle {
                    if let Playbook::Ordered(orig) = &self.original {
                        plays.extend(orig.iter().cloned());
                    }
                }
                plays.pop_front()
            }
            Queue::ByKind(map) => {
                let plays = map.entry(request.kind).or_default();
                if plays.is_empty() && self.cycle {
                    if let Playbook::ByKind(orig) = &self.original {
                        plays.extend(orig.get(&request.kind).into_iter().flatten().cloned());
                    }
                }
                plays.pop_front()
            }
        };
        match next {
            Some(text) => {
                *served += 1;
                Ok(Completion::heuristic(request, text))
            }
            None => Err(BackendError::PlaybookExhausted {
                agent: request.agent.clone(),
                served: *served,
            }),
        }
    }
}

/// Backend computed by a closure; handy for judges and fault injection.
pub struct FnBackend<F>(pub F);

impl<F> AgentBackend for FnBackend<F>
where
    F: Fn(&Request) -> Result<String, BackendError> + Send + Sync,
{
    fn complete(&self, request: &Request) -> Result<Completion, BackendError> {
        (self.0)(request).map(|text| Completion::heuristic(request, text))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(kind: PromptKind) -> Request {
        Request {
            kind,
            language: Language::En,
            agent: "A".into(),
            prompt: "say something".into(),
            vocab: Vocabulary::default(),
            attempt: 1,
        }
    }

    #[test]
    fn ordered_playback_then_exhaustion() {
        let backend = scripted_backend(vec!["one".into(), "two words".into()]);
        let r = request(PromptKind::Introduction);
        let first = backend.complete(&r).unwrap();
        assert_eq!(first.text, "one");
        assert_eq!(first.usage, Usage { input_tokens: 2, output_tokens: 1 });
        assert_eq!(backend.complete(&r).unwrap().text, "two words");
        assert_eq!(
            backend.complete(&r),
            Err(BackendError::PlaybookExhausted { agent: "A".into(), served: 2 })
        );
    }

    #[test]
    fn empty_playbook_is_exhausted_immediately() {
        let backend = scripted_backend(vec![]);
        assert!(matches!(
            backend.complete(&request(PromptKind::Vote)),
            Err(BackendError::PlaybookExhausted { served: 0, .. })
        ));
    }

    #[test]
    fn keyed_playbook_cycles_per_kind() {
        let playbook: Playbook = serde_json::from_str(
            r#"{"Vote": ["v1", "v2"], "TrustScore": ["t"]}"#,
        )
        .unwrap();
        let backend = ScriptedBackend::from_playbook(playbook, true);
        let vote = request(PromptKind::Vote);
        let trust = request(PromptKind::TrustScore);
        let got: Vec<String> = [&vote, &trust, &vote, &vote, &trust]
            .iter()
            .map(|r| backend.complete(r).unwrap().text)
            .collect();
        assert_eq!(got, ["v1", "t", "v2", "v1", "t"]);
        assert!(backend.complete(&request(PromptKind::Converse)).is_err());
    }

    #[test]
    fn identical_playbooks_report_identical_usage() {
        let plays: Vec<String> = vec!["### THOUGHT: a\n### RESPONSE: b".into(); 3];
        let run = || {
            let b = scripted_backend(plays.clone());
            (0..3)
                .map(|_| b.complete(&request(PromptKind::AskReply)).unwrap().usage)
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }
}
