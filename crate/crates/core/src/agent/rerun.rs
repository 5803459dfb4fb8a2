//! Bounded re-solicitation of backends whose output does not parse.

use serde::{Deserialize, Serialize};

use super::backend::{AgentBackend, BackendError, Request, Usage};
use super::parse::{parse_response, ParseFailure, ParsedResponse, Vocabulary};
use super::prompt::{rerun_suffix, PromptContext, PromptError, PromptKind, TemplateSet};
use crate::script::Language;

pub const DEFAULT_MAX_RETRIES: u32 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RerunPolicy {
    pub max_retries: u32,
    failure_counter: u64,
}

impl Default for RerunPolicy {
    fn default() -> Self {
        Self::new(DEFAULT_MAX_RETRIES)
    }
}

impl RerunPolicy {
    pub fn new(max_retries: u32) -> Self {
        Self {
            max_retries,
            failure_counter: 0,
        }
    }

    /// Unparseable outputs seen so far.
    pub fn failures(&self) -> u64 {
        self.failure_counter
    }
}

/// One backend call within a solicitation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    pub raw: String,
    pub usage: Usage,
    /// Why the output was rejected; `None` for the accepted attempt.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solicited {
    pub parsed: ParsedResponse,
    pub attempts: Vec<Attempt>,
}

impl Solicited {
    pub fn attempt_count(&self) -> usize {
        self.attempts.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolicitError {
    #[error("no parseable output after {} attempt(s)", attempts.len())]
    RerunExhausted { attempts: Vec<Attempt> },
    #[error("{source}")]
    Backend {
        source: BackendError,
        attempts: Vec<Attempt>,
    },
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

impl SolicitError {
    /// Calls completed before the solicitation gave up.
    pub fn attempts(&self) -> &[Attempt] {
        match self {
            SolicitError::RerunExhausted { attempts } | SolicitError::Backend { attempts, .. } => {
                attempts
            }
            SolicitError::Prompt(_) => &[],
        }
    }
}

/// What to ask and of whom.
#[derive(Debug, Clone)]
pub struct Ask<'a> {
    pub agent: &'a str,
    pub kind: PromptKind,
    pub language: Language,
    pub ctx: &'a PromptContext,
    pub vocab: &'a Vocabulary,
}

/// Requests a completion and re-prompts (original prompt + rejected output +
/// format restatement) on parse failure, issuing at most `1 + max_retries`
/// calls. Extra validation may reject otherwise parseable replies.
pub fn solicit_with<V>(
    backend: &dyn AgentBackend,
    templates: &TemplateSet,
    ask: &Ask<'_>,
    policy: &mut RerunPolicy,
    validate: V,
) -> Result<Solicited, SolicitError>
where
    V: Fn(&ParsedResponse) -> Result<(), ParseFailure>,
{
    let prompt = templates.build_prompt(ask.kind, ask.language, ask.ctx)?;
    let mut attempts: Vec<Attempt> = Vec::new();
    let mut request = Request {
        kind: ask.kind,
        language: ask.language,
        agent: ask.agent.to_string(),
        prompt: prompt.clone(),
        vocab: ask.vocab.clone(),
        attempt: 1,
    };
    for attempt in 1..=policy.max_retries + 1 {
        request.attempt = attempt;
        let completion = match backend.complete(&request) {
            Ok(c) => c,
            Err(source) => return Err(SolicitError::Backend { source, attempts }),
        };
        let outcome = parse_response(ask.kind, &completion.text, ask.vocab)
            .and_then(|parsed| validate(&parsed).map(|()| parsed));
        match outcome {
            Ok(parsed) => {
                attempts.push(Attempt {
                    raw: completion.text,
                    usage: completion.usage,
                    failure: None,
                });
                return Ok(Solicited { parsed, attempts });
            }
            Err(failure) => {
                policy.failure_counter += 1;
                let reason = failure.to_string();
                log::debug!("{} {} attempt {attempt} rejected: {reason}", ask.agent, ask.kind);
                request.prompt = format!(
                    "{prompt}{}",
                    rerun_suffix(ask.language, &completion.text, &reason)
                );
                attempts.push(Attempt {
                    raw: completion.text,
                    usage: completion.usage,
                    failure: Some(reason),
                });
            }
        }
    }
    Err(SolicitError::RerunExhausted { attempts })
}

pub fn solicit(
    backend: &dyn AgentBackend,
    templates: &TemplateSet,
    ask: &Ask<'_>,
    policy: &mut RerunPolicy,
) -> Result<Solicited, SolicitError> {
    solicit_with(backend, templates, ask, policy, |_| Ok(()))
}
