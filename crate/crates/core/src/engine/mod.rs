//! Turn-ordered game state machine: introductions, alternating open
//! conversation and interaction rounds, then accusations and voting.

mod action;
mod event;
mod game;
mod state;
mod voting;

pub use action::Action;
pub use event::{Ability, Event, EventBody, ScoreRecord, JUDGE_ACTOR, SYSTEM_ACTOR};
pub use game::{EngineError, Game, Seat};
pub use state::{GameConfig, GameState, Phase, DEFAULT_CONTEXT_BUDGET, DEFAULT_ROUNDS};
pub use voting::{tally, RankedAccused, VotingResult, Winner};
