//! Pure metric computations plus the judge-driven ability and reconstruction
//! scoring that feeds them.

mod formulas;
mod judge;
mod kendall;
mod report;
mod rouge;

pub use formulas::{cic, fii, ici, mean, sci, sci_weighted, tii, victory_mrr, CicScope, SciWeights};
pub use judge::{judge_abilities, reconstruct_and_score, JudgeError, JudgeView, Judged};
pub use kendall::kendall_tau;
pub use report::{
    render_table, AbilityScores, CharacterMetrics, GameMetrics, MetricInputs, MetricReport,
    TableRow,
};
pub use rouge::{lcs_len, rouge_l, rouge_l_text, RougeScore};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("no suspicion or trust observations of `{0}`")]
    NoObservations(String),
    #[error("the script defines no clues of the requested class")]
    NoCluesDefined,
    #[error("no reconstruction scores to aggregate")]
    EmptyReconstruction,
    #[error("role-play score {0} is outside [0, 20]")]
    ScoreOutOfRange(u8),
    #[error("no culprit appears in the ranking")]
    CulpritNotRanked,
    #[error("rankings are not permutations of the same items")]
    ItemSetMismatch,
    #[error("rank correlation needs at least two items, got {0}")]
    TooFewItems(usize),
}
