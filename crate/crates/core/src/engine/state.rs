use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::voting::VotingResult;
use crate::agent::{RerunPolicy, DEFAULT_MAX_RETRIES};
use crate::memory::{HistoryLog, SuspicionTrustLedger, UsageCounters};
use crate::script::Language;

pub const DEFAULT_ROUNDS: u32 = 5;
pub const DEFAULT_CONTEXT_BUDGET: usize = 6000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phase {
    Introduction,
    OpenConversation,
    Interaction,
    Voting,
    Finished,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GameConfig {
    pub rounds: u32,
    pub seed: u64,
    /// Overrides the script's language for prompts.
    pub language: Option<Language>,
    pub max_retries: u32,
    /// Heuristic-token budget for the rendered history.
    pub context_budget: usize,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            rounds: DEFAULT_ROUNDS,
            seed: 0,
            language: None,
            max_retries: DEFAULT_MAX_RETRIES,
            context_budget: DEFAULT_CONTEXT_BUDGET,
        }
    }
}

/// Everything that changes while a game runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub script_id: String,
    /// 0-based iteration index.
    pub round: u32,
    pub phase: Phase,
    pub turn_cursor: usize,
    pub revealed_clues: BTreeSet<String>,
    /// Clue ids in revelation order.
    pub reveal_order: Vec<String>,
    pub revealed_by: BTreeMap<String, BTreeSet<String>>,
    pub history: HistoryLog,
    pub ledger: SuspicionTrustLedger,
    pub accusations: BTreeMap<String, String>,
    pub votes: BTreeMap<String, String>,
    /// Characters whose accusation turn was forfeited.
    pub abstained_accusations: BTreeSet<String>,
    /// Characters whose vote turn was forfeited.
    pub abstained_votes: BTreeSet<String>,
    pub rng_seed: u64,
    pub stages_unlocked: usize,
    pub last_action: BTreeMap<String, String>,
    pub usage: UsageCounters,
    pub rerun: RerunPolicy,
    pub next_seq: u64,
    pub voting_result: Option<VotingResult>,
}
