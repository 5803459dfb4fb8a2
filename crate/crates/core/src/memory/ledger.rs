use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerCell {
    pub sus_total: u32,
    pub trust_total: u32,
    pub samples: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScoreError {
    #[error("score level {0} is outside {{0, 1, 2}}")]
    InvalidLevel(i64),
    #[error("`{0}` cannot score itself")]
    SelfScoring(String),
}

/// Accumulated suspicion and trust, keyed by (observer, subject).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuspicionTrustLedger {
    cells: BTreeMap<String, BTreeMap<String, LedgerCell>>,
}

fn level(value: i64) -> Result<u32, ScoreError> {
    if (0..=2).contains(&value) {
        Ok(value as u32)
    } else {
        Err(ScoreError::InvalidLevel(value))
    }
}

impl SuspicionTrustLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_scores(
        &mut self,
        observer: &str,
        subject: &str,
        sus: i64,
        trust: i64,
    ) -> Result<(), ScoreError> {
        let sus = level(sus)?;
        let trust = level(trust)?;
        if observer == subject {
            return Err(ScoreError::SelfScoring(observer.to_string()));
        }
        let cell = self
            .cells
            .entry(observer.to_string())
            .or_default()
            .entry(subject.to_string())
            .or_default();
        cell.sus_total += sus;
        cell.trust_total += trust;
        cell.samples += 1;
        Ok(())
    }

    pub fn cell(&self, observer: &str, subject: &str) -> LedgerCell {
        self.cells
            .get(observer)
            .and_then(|row| row.get(subject))
            .copied()
            .unwrap_or_default()
    }

    pub fn cells(&self) -> impl Iterator<Item = (&str, &str, &LedgerCell)> {
        self.cells.iter().flat_map(|(observer, row)| {
            row.iter()
                .map(move |(subject, cell)| (observer.as_str(), subject.as_str(), cell))
        })
    }

    /// Column totals over every observer other than `subject`: (ΣP_S, ΣP_T).
    pub fn column_totals(&self, subject: &str) -> (u64, u64) {
        self.cells()
            .filter(|(observer, s, _)| *s == subject && *observer != subject)
            .fold((0, 0), |(sus, trust), (_, _, cell)| {
                (sus + u64::from(cell.sus_total), trust + u64::from(cell.trust_total))
            })
    }

    pub fn accumulated_suspicion(&self, subject: &str) -> u64 {
        self.column_totals(subject).0
    }

    /// The subject this observer suspects most, ties broken by `candidates` order.
    pub fn most_suspected<'a>(&self, observer: &str, candidates: &'a [String]) -> Option<&'a str> {
        let mut best: Option<(&str, u32)> = None;
        for candidate in candidates.iter().filter(|c| c.as_str() != observer) {
            let sus = self.cell(observer, candidate).sus_total;
            if best.is_none_or(|(_, b)| sus > b) {
                best = Some((candidate.as_str(), sus));
            }
        }
        best.map(|(c, _)| c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_update() {
        let mut ledger = SuspicionTrustLedger::new();
        ledger.record_scores("A", "B", 2, 0).unwrap();
        assert_eq!(
            ledger.cell("A", "B"),
            LedgerCell { sus_total: 2, trust_total: 0, samples: 1 }
        );
    }

    #[test]
    fn rejects_bad_levels_and_self_scoring() {
        let mut ledger = SuspicionTrustLedger::new();
        assert_eq!(ledger.record_scores("A", "B", 3, 0), Err(ScoreError::InvalidLevel(3)));
        assert_eq!(ledger.record_scores("A", "B", 0, -1), Err(ScoreError::InvalidLevel(-1)));
        assert_eq!(
            ledger.record_scores("A", "A", 1, 1),
            Err(ScoreError::SelfScoring("A".into()))
        );
        assert_eq!(ledger, SuspicionTrustLedger::new());
    }

    #[test]
    fn accumulated_suspicion_sums_observers() {
        let mut ledger = SuspicionTrustLedger::new();
        assert_eq!(ledger.accumulated_suspicion("C"), 0);
        ledger.record_scores("A", "C", 2, 0).unwrap();
        ledger.record_scores("B", "C", 1, 1).unwrap();
        let before = ledger.clone();
        assert_eq!(ledger.accumulated_suspicion("C"), 3);
        assert_eq!(ledger, before);
        assert_eq!(ledger.accumulated_suspicion("Z"), 0);
    }

    #[test]
    fn most_suspected_prefers_roster_order_on_ties() {
        let roster: Vec<String> = ["A", "B", "C"].map(String::from).to_vec();
        let mut ledger = SuspicionTrustLedger::new();
        assert_eq!(ledger.most_suspected("A", &roster), Some("B"));
        ledger.record_scores("A", "C", 1, 0).unwrap();
        assert_eq!(ledger.most_suspected("A", &roster), Some("C"));
    }

    proptest! {
        #[test]
        fn totals_stay_within_bounds(
            updates in prop::collection::vec((0usize..4, 0usize..4, 0i64..3, 0i64..3), 0..200)
        ) {
            let names = ["A", "B", "C", "D"];
            let mut ledger = SuspicionTrustLedger::new();
            for (o, s, sus, trust) in updates {
                let _ = ledger.record_scores(names[o], names[s], sus, trust);
            }
            for (_, _, cell) in ledger.cells() {
                prop_assert!(cell.sus_total <= 2 * cell.samples);
                prop_assert!(cell.trust_total <= 2 * cell.samples);
            }
        }
    }
}
