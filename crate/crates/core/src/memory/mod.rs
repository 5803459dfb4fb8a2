//! Per-game memory: history log, suspicion/trust ledger, usage counters and
//! the token heuristic they share.

mod history;
mod ledger;
mod tokens;
mod usage;

pub use history::{
    HistoryAction, HistoryEntry, HistoryError, HistoryLog, SummarizeError, SummarizedPrefix,
    Summarizer, SummaryStep,
};
pub use ledger::{LedgerCell, ScoreError, SuspicionTrustLedger};
pub use tokens::{count_tokens, is_cjk, tokenize};
pub use usage::{Direction, UsageCounters};
