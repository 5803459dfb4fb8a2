use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::report::AbilityScores;
use super::MetricError;
use crate::memory::SuspicionTrustLedger;
use crate::script::Script;

fn totals(ledger: &SuspicionTrustLedger, subject: &str) -> Result<(f64, f64), MetricError> {
    let (sus, trust) = ledger.column_totals(subject);
    if sus + trust == 0 {
        return Err(MetricError::NoObservations(subject.to_string()));
    }
    Ok((sus as f64, trust as f64))
}

/// Trust inclination: ΣP_T / (ΣP_S + ΣP_T) over observers other than `subject`.
pub fn tii(ledger: &SuspicionTrustLedger, subject: &str) -> Result<f64, MetricError> {
    let (sus, trust) = totals(ledger, subject)?;
    Ok(trust / (sus + trust))
}

/// Falsification inclination: ΣP_S / (ΣP_S + ΣP_T).
pub fn fii(ledger: &SuspicionTrustLedger, subject: &str) -> Result<f64, MetricError> {
    let (sus, trust) = totals(ledger, subject)?;
    Ok(sus / (sus + trust))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CicScope {
    Character(String),
    Game,
}

/// Fraction of the script's clues (or key clues) revealed by one character
/// or by anyone.
pub fn cic(
    revealed_by: &BTreeMap<String, BTreeSet<String>>,
    script: &Script,
    scope: &CicScope,
    key_only: bool,
) -> Result<f64, MetricError> {
    let eligible: BTreeSet<&str> = script
        .clues
        .iter()
        .filter(|c| !key_only || c.is_key)
        .map(|c| c.id.as_str())
        .collect();
    if eligible.is_empty() {
        return Err(MetricError::NoCluesDefined);
    }
    let found: BTreeSet<&str> = match scope {
        CicScope::Character(c) => revealed_by
            .get(c)
            .into_iter()
            .flatten()
            .map(String::as_str)
            .collect(),
        CicScope::Game => revealed_by.values().flatten().map(String::as_str).collect(),
    };
    let hits = found.intersection(&eligible).count();
    Ok(hits as f64 / eligible.len() as f64)
}

/// Interactivity: the four non-role-play abilities on a 0–100 scale.
pub fn ici(scores: &AbilityScores) -> f64 {
    let sum = u32::from(scores.reasoning)
        + u32::from(scores.communication)
        + u32::from(scores.observation)
        + u32::from(scores.innovation);
    100.0 * f64::from(sum) / 80.0
}

/// Blend of normalized role-play and mean reconstruction F1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SciWeights {
    pub role_play: f64,
    pub reconstruction: f64,
}

impl Default for SciWeights {
    fn default() -> Self {
        Self {
            role_play: 0.5,
            reconstruction: 0.5,
        }
    }
}

pub fn sci(role_play: u8, f1_per_part: &[f64]) -> Result<f64, MetricError> {
    sci_weighted(role_play, f1_per_part, SciWeights::default())
}

pub fn sci_weighted(role_play: u8, f1_per_part: &[f64], weights: SciWeights) -> Result<f64, MetricError> {
    if role_play > 20 {
        return Err(MetricError::ScoreOutOfRange(role_play));
    }
    let mean_f1 = mean(f1_per_part).ok_or(MetricError::EmptyReconstruction)?;
    Ok(100.0 * (weights.role_play * f64::from(role_play) / 20.0 + weights.reconstruction * mean_f1))
}

/// Reciprocal rank of the highest-ranked culprit.
pub fn victory_mrr<S: AsRef<str>>(ranking: &[S], culprit_ids: &[S]) -> Result<f64, MetricError> {
    ranking
        .iter()
        .position(|r| culprit_ids.iter().any(|c| c.as_ref() == r.as_ref()))
        .map(|i| 1.0 / (i + 1) as f64)
        .ok_or(MetricError::CulpritNotRanked)
}

/// Arithmetic mean; `None` for an empty slice.
pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}
