//! Config-driven runs, batches, transcripts and replay.

mod batch;
mod config;
mod run;
mod transcript;

pub use batch::{aggregate, run_all, run_batch, run_batch_sequential, BatchOutcome};
#[cfg(feature = "parallel")]
pub use batch::run_batch_parallel;
pub use config::{BackendSpec, ConfigError, RunConfig};
pub use run::{
    persist, replay, replay_events, run, GameOutcome, HarnessError, PreparedRun, ReplayError,
    ReportBundle,
};
pub use transcript::{
    canonical_bytes, canonical_hash, parse_transcript, read_transcript, write_transcript,
    TranscriptError,
};
