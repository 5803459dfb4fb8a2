//! Prompt construction, response parsing, the rerun policy and agent backends.

mod backend;
mod parse;
mod prompt;
mod random;
mod remote;
mod rerun;

pub use backend::{
    scripted_backend, AgentBackend, BackendError, Completion, FnBackend, Playbook, Request,
    ScriptedBackend, Usage,
};
pub use parse::{
    is_history_line, parse_response, resolve_name, split_markers, ParseFailure, ParsedResponse,
    Payload, Vocabulary, RESPONSE_MARKER, THOUGHT_MARKER,
};
pub use prompt::{rerun_suffix, PromptContext, PromptError, PromptKind, TemplateSet};
pub use random::RandomBackend;
pub use remote::{remote_backend, Backoff, RemoteBackend, RemoteConfig, ENV_API_BASE, ENV_API_KEY};
pub use rerun::{
    solicit, solicit_with, Ask, Attempt, RerunPolicy, SolicitError, Solicited, DEFAULT_MAX_RETRIES,
};
