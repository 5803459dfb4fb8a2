use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::formulas::{cic, fii, ici, mean, sci, tii, victory_mrr, CicScope};
use super::rouge::RougeScore;
use crate::engine::{Ability, RankedAccused, VotingResult, Winner};
use crate::memory::{SuspicionTrustLedger, UsageCounters};
use crate::script::{Script, ScriptPart};

/// Judge scores on the 0–20 scale.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbilityScores {
    pub reasoning: u8,
    pub communication: u8,
    pub observation: u8,
    pub innovation: u8,
    pub role_play: u8,
}

impl AbilityScores {
    /// Assembles a full set; `None` if any ability is missing.
    pub fn from_map(scores: &BTreeMap<Ability, u8>) -> Option<Self> {
        Some(Self {
            reasoning: *scores.get(&Ability::Reasoning)?,
            communication: *scores.get(&Ability::Communication)?,
            observation: *scores.get(&Ability::Observation)?,
            innovation: *scores.get(&Ability::Innovation)?,
            role_play: *scores.get(&Ability::RolePlay)?,
        })
    }

    pub fn get(&self, ability: Ability) -> u8 {
        match ability {
            Ability::Reasoning => self.reasoning,
            Ability::Communication => self.communication,
            Ability::Observation => self.observation,
            Ability::Innovation => self.innovation,
            Ability::RolePlay => self.role_play,
        }
    }
}

/// Raw per-game material the report is computed from. A finished run and a
/// replayed transcript both reduce to this.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricInputs {
    pub script_id: String,
    pub roster: Vec<String>,
    pub ledger: SuspicionTrustLedger,
    pub revealed_by: BTreeMap<String, BTreeSet<String>>,
    pub voting: Option<VotingResult>,
    pub usage: UsageCounters,
    pub abilities: BTreeMap<String, BTreeMap<Ability, u8>>,
    pub rouge: BTreeMap<String, BTreeMap<ScriptPart, RougeScore>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterMetrics {
    pub character: String,
    pub tii: Option<f64>,
    pub fii: Option<f64>,
    pub accumulated_suspicion: u64,
    pub cic: Option<f64>,
    pub cic_key: Option<f64>,
    pub ici: Option<f64>,
    pub sci: Option<f64>,
    pub abilities: Option<AbilityScores>,
    pub rouge: BTreeMap<ScriptPart, RougeScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameMetrics {
    pub victory_mrr: Option<f64>,
    pub winner: Option<Winner>,
    pub final_accused: Option<String>,
    pub ranking: Vec<RankedAccused>,
    pub cic: Option<f64>,
    pub cic_key: Option<f64>,
    pub failures: u64,
    pub usage: UsageCounters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub script_id: String,
    pub characters: Vec<CharacterMetrics>,
    pub game: GameMetrics,
}

impl MetricReport {
    pub fn compute(script: &Script, inputs: &MetricInputs) -> Self {
        let characters = inputs
            .roster
            .iter()
            .map(|c| {
                let scope = CicScope::Character(c.clone());
                let abilities = inputs.abilities.get(c).and_then(AbilityScores::from_map);
                let rouge = inputs.rouge.get(c).cloned().unwrap_or_default();
                let f1s: Vec<f64> = rouge.values().map(|r| r.f1).collect();
                CharacterMetrics {
                    character: c.clone(),
                    tii: tii(&inputs.ledger, c).ok(),
                    fii: fii(&inputs.ledger, c).ok(),
                    accumulated_suspicion: inputs.ledger.accumulated_suspicion(c),
                    cic: cic(&inputs.revealed_by, script, &scope, false).ok(),
                    cic_key: cic(&inputs.revealed_by, script, &scope, true).ok(),
                    ici: abilities.as_ref().map(ici),
                    sci: abilities.as_ref().and_then(|a| sci(a.role_play, &f1s).ok()),
                    abilities,
                    rouge,
                }
            })
            .collect();
        let voting = inputs.voting.as_ref();
        let game = GameMetrics {
            victory_mrr: voting.and_then(|v| victory_mrr(&v.ranking_names(), &script.culprit_ids).ok()),
            winner: voting.map(|v| v.winner),
            final_accused: voting.map(|v| v.final_accused.clone()),
            ranking: voting.map(|v| v.accused_ranking.clone()).unwrap_or_default(),
            cic: cic(&inputs.revealed_by, script, &CicScope::Game, false).ok(),
            cic_key: cic(&inputs.revealed_by, script, &CicScope::Game, true).ok(),
            failures: inputs.usage.failures,
            usage: inputs.usage,
        };
        Self {
            script_id: inputs.script_id.clone(),
            characters,
            game,
        }
    }

    fn character_mean(&self, f: impl Fn(&CharacterMetrics) -> Option<f64>) -> Option<f64> {
        let values: Vec<f64> = self.characters.iter().filter_map(f).collect();
        mean(&values)
    }

    /// One table row for this game: Victory, TII and CIC as percentages,
    /// ICI and SCI already on a 0–100 scale, character values averaged.
    pub fn table_row(&self, label: impl Into<String>) -> TableRow {
        TableRow {
            label: label.into(),
            games: 1,
            victory: self.game.victory_mrr.map(|v| 100.0 * v),
            tii: self.character_mean(|c| c.tii).map(|v| 100.0 * v),
            cic: self.game.cic.map(|v| 100.0 * v),
            ici: self.character_mean(|c| c.ici),
            sci: self.character_mean(|c| c.sci),
            failures: self.game.failures,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    pub games: usize,
    pub victory: Option<f64>,
    pub tii: Option<f64>,
    pub cic: Option<f64>,
    pub ici: Option<f64>,
    pub sci: Option<f64>,
    pub failures: u64,
}

impl TableRow {
    /// Column-wise mean over rows; undefined cells are skipped.
    pub fn mean_of(label: impl Into<String>, rows: &[TableRow]) -> TableRow {
        let col = |f: fn(&TableRow) -> Option<f64>| {
            mean(&rows.iter().filter_map(f).collect::<Vec<_>>())
        };
        TableRow {
            label: label.into(),
            games: rows.iter().map(|r| r.games).sum(),
            victory: col(|r| r.victory),
            tii: col(|r| r.tii),
            cic: col(|r| r.cic),
            ici: col(|r| r.ici),
            sci: col(|r| r.sci),
            failures: rows.iter().map(|r| r.failures).sum(),
        }
    }
}

/// Plain-text table with columns Victory, TII, CIC, ICI, SCI.
pub fn render_table(rows: &[TableRow]) -> String {
    let width = rows.iter().map(|r| r.label.chars().count()).max().unwrap_or(0).max(5);
    let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$} | {:>5} | {:>7} | {:>7} | {:>7} | {:>7} | {:>7} | {:>8}",
        "Label", "Games", "Victory", "TII", "CIC", "ICI", "SCI", "Failures"
    );
    let _ = writeln!(out, "{}", "-".repeat(width + 69));
    for r in rows {
        let _ = writeln!(
            out,
            "{:<width$} | {:>5} | {:>7} | {:>7} | {:>7} | {:>7} | {:>7} | {:>8}",
            r.label,
            r.games,
            cell(r.victory),
            cell(r.tii),
            cell(r.cic),
            cell(r.ici),
            cell(r.sci),
            r.failures
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::script::parse_script;

    fn script() -> Script {
        parse_script(include_str!("../../fixtures/mini_manor.json")).unwrap()
    }

    #[test]
    fn lone_suspicion_score_gives_pure_falsification() {
        let script = script();
        let mut inputs = MetricInputs {
            script_id: script.id.clone(),
            roster: script.character_ids(),
            ..Default::default()
        };
        inputs.ledger.record_scores("Butler Graves", "Madam Hong", 2, 0).unwrap();
        let report = MetricReport::compute(&script, &inputs);
        let hong = &report.characters[1];
        assert_eq!(hong.tii, Some(0.0));
        assert_eq!(hong.fii, Some(1.0));
        assert_eq!(hong.accumulated_suspicion, 2);
        assert_eq!(report.characters[0].tii, None);
        assert_eq!(report.game.victory_mrr, None);
        assert_eq!(report.game.cic, Some(0.0));
    }

    #[test]
    fn report_round_trips_through_json() {
        let script = script();
        let mut inputs = MetricInputs {
            script_id: script.id.clone(),
            roster: script.character_ids(),
            ..Default::default()
        };
        inputs.abilities.insert(
            "Doctor Reed".into(),
            Ability::ALL.iter().map(|a| (*a, 10)).collect(),
        );
        inputs.rouge.insert(
            "Doctor Reed".into(),
            [(ScriptPart::Story, RougeScore { precision: 0.5, recall: 0.5, f1: 0.5 })].into(),
        );
        let report = MetricReport::compute(&script, &inputs);
        let reed = &report.characters[2];
        assert_eq!(reed.ici, Some(50.0));
        assert_eq!(reed.sci, Some(50.0));
        let json = serde_json::to_string(&report).unwrap();
        let back: MetricReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn table_has_the_column_order() {
        let row = TableRow {
            label: "scripted".into(),
            games: 2,
            victory: Some(75.0),
            tii: Some(40.0),
            cic: None,
            ici: Some(71.25),
            sci: Some(57.5),
            failures: 3,
        };
        let text = render_table(std::slice::from_ref(&row));
        let header = text.lines().next().unwrap();
        let order: Vec<usize> = ["Victory", "TII", "CIC", "ICI", "SCI"]
            .iter()
            .map(|c| header.find(c).unwrap())
            .collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]));
        assert!(text.contains("71.25"));
        let mean = TableRow::mean_of("all", &[row.clone(), TableRow { victory: Some(25.0), ..row }]);
        assert_eq!(mean.victory, Some(50.0));
        assert_eq!(mean.games, 4);
    }
}
