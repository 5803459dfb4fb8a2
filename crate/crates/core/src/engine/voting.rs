use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::memory::SuspicionTrustLedger;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Winner {
    Civilians,
    Culprit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedAccused {
    pub character: String,
    pub votes: u32,
    pub accumulated_suspicion: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VotingResult {
    pub vote_tally: BTreeMap<String, u32>,
    pub accused_ranking: Vec<RankedAccused>,
    pub final_accused: String,
    pub winner: Winner,
}

impl VotingResult {
    pub fn ranking_names(&self) -> Vec<String> {
        self.accused_ranking.iter().map(|r| r.character.clone()).collect()
    }
}

/// Tallies `votes` (voter → accused) over the whole roster. The ranking is
/// votes desc, then accumulated suspicion desc, then roster order; the head is
/// the final accused. Panics on an empty roster.
pub fn tally(
    votes: &BTreeMap<String, String>,
    roster: &[String],
    ledger: &SuspicionTrustLedger,
    culprit_ids: &[String],
) -> VotingResult {
    assert!(!roster.is_empty(), "tally over an empty roster");
    let mut vote_tally: BTreeMap<String, u32> = roster.iter().map(|c| (c.clone(), 0)).collect();
    for accused in votes.values() {
        if let Some(n) = vote_tally.get_mut(accused) {
            *n += 1;
        }
    }
    let mut ranked: Vec<(usize, RankedAccused)> = roster
        .iter()
        .enumerate()
        .map(|(i, c)| {
            (
                i,
                RankedAccused {
                    character: c.clone(),
                    votes: vote_tally[c],
                    accumulated_suspicion: ledger.accumulated_suspicion(c),
                },
            )
        })
        .collect();
    ranked.sort_by(|(ia, a), (ib, b)| {
        b.votes
            .cmp(&a.votes)
            .then(b.accumulated_suspicion.cmp(&a.accumulated_suspicion))
            .then(ia.cmp(ib))
    });
    let accused_ranking: Vec<RankedAccused> = ranked.into_iter().map(|(_, r)| r).collect();
    let final_accused = accused_ranking[0].character.clone();
    let winner = if culprit_ids.contains(&final_accused) {
        Winner::Civilians
    } else {
        Winner::Culprit
    };
    VotingResult {
        vote_tally,
        accused_ranking,
        final_accused,
        winner,
    }
}
