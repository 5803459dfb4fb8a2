use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::{BackendSpec, ConfigError, RunConfig};
use super::transcript::{canonical_bytes, canonical_hash, read_transcript, write_transcript, TranscriptError};
use crate::agent::{
    AgentBackend, BackendError, Payload, Playbook, PromptKind, RandomBackend, RemoteBackend,
    RemoteConfig, RerunPolicy, ScriptedBackend, SolicitError, Solicited, TemplateSet,
};
use crate::engine::{
    tally, Ability, EngineError, Event, EventBody, Game, GameConfig, Phase, ScoreRecord, Seat,
    JUDGE_ACTOR, SYSTEM_ACTOR,
};
use crate::memory::UsageCounters;
use crate::metrics::{
    judge_abilities, reconstruct_and_score, rouge_l_text, JudgeError, JudgeView, MetricInputs,
    MetricReport,
};
use crate::script::{load_script, LoadError, Script, ScriptPart};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Script(#[from] LoadError),
    #[error("cannot load playbook {path}: {message}")]
    Playbook { path: PathBuf, message: String },
    #[error("cannot load templates: {0}")]
    Templates(#[from] crate::agent::PromptError),
    #[error("cannot create backend: {0}")]
    Backend(#[from] BackendError),
    #[error("at event {seq}: {source}")]
    Engine {
        seq: u64,
        #[source]
        source: EngineError,
    },
    #[error("at event {seq}: {source}")]
    Judge {
        seq: u64,
        #[source]
        source: JudgeError,
    },
    #[error(transparent)]
    Transcript(#[from] TranscriptError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    /// Errors fixed by editing the config or script rather than retrying.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            HarnessError::Config(ConfigError::Invalid(_) | ConfigError::Format(_))
                | HarnessError::Script(LoadError::Schema(_) | LoadError::Format { .. })
                | HarnessError::Playbook { .. }
        )
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error(transparent)]
    Script(#[from] LoadError),
    #[error(transparent)]
    Transcript(#[from] TranscriptError),
    #[error("corrupt transcript at seq {seq}: {reason}")]
    Corrupt { seq: u64, reason: String },
}

#[derive(Debug, Clone)]
enum LoadedSpec {
    Scripted { playbook: Playbook, cycle: bool },
    Random { seed: Option<u64>, noise: f64 },
    Remote(RemoteConfig),
}

fn mix(seed: u64, slot: u64) -> u64 {
    // splitmix64 finalizer over (seed, slot)
    let mut z = seed ^ (slot.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl LoadedSpec {
    fn load(spec: &BackendSpec) -> Result<Self, HarnessError> {
        Ok(match spec {
            BackendSpec::Scripted { playbook, cycle } => {
                let fail = |message: String| HarnessError::Playbook {
                    path: playbook.clone(),
                    message,
                };
                let text = std::fs::read_to_string(playbook).map_err(|e| fail(e.to_string()))?;
                let parsed: Playbook = serde_json::from_str(&text).map_err(|e| fail(e.to_string()))?;
                LoadedSpec::Scripted {
                    playbook: parsed,
                    cycle: *cycle,
                }
            }
            BackendSpec::Random { seed, noise } => LoadedSpec::Random {
                seed: *seed,
                noise: *noise,
            },
            BackendSpec::Remote {
                endpoint,
                model,
                temperature,
                top_p,
                timeout_secs,
            } => {
                let mut config =
                    RemoteConfig::new(endpoint.clone().unwrap_or_default(), model.clone()).with_env_defaults();
                if let Some(t) = temperature {
                    config.temperature = *t;
                }
                if let Some(p) = top_p {
                    config.top_p = *p;
                }
                if let Some(s) = timeout_secs {
                    config.timeout_secs = *s;
                }
                LoadedSpec::Remote(config)
            }
        })
    }

    fn instantiate(&self, game_seed: u64, slot: u64) -> Result<Arc<dyn AgentBackend>, HarnessError> {
        Ok(match self {
            LoadedSpec::Scripted { playbook, cycle } => {
                Arc::new(ScriptedBackend::from_playbook(playbook.clone(), *cycle))
            }
            LoadedSpec::Random { seed, noise } => Arc::new(RandomBackend::with_noise(
                mix(seed.unwrap_or(0) ^ game_seed, slot),
                *noise,
            )),
            LoadedSpec::Remote(config) => Arc::new(RemoteBackend::new(config.clone())?),
        })
    }
}

/// A config with its script, playbooks and templates loaded, ready to play
/// any number of games.
#[derive(Debug, Clone)]
pub struct PreparedRun {
    pub config: RunConfig,
    pub script: Arc<Script>,
    templates: Arc<TemplateSet>,
    seats: Vec<(String, LoadedSpec)>,
    judge: Option<LoadedSpec>,
    summarizer: Option<LoadedSpec>,
}

/// One finished game.
#[derive(Debug, Clone)]
pub struct GameOutcome {
    pub seed: u64,
    pub events: Vec<Event>,
    pub report: MetricReport,
    pub hash: String,
}

impl GameOutcome {
    pub fn transcript_bytes(&self) -> Vec<u8> {
        canonical_bytes(&self.events)
    }
}

impl PreparedRun {
    pub fn new(config: RunConfig) -> Result<Self, HarnessError> {
        let script = load_script(&config.script)?;
        let names = script.character_ids();
        config.validate(&names)?;
        let templates = match &config.templates {
            Some(dir) => TemplateSet::with_overrides(dir)?,
            None => TemplateSet::builtin(),
        };
        let seats = names
            .iter()
            .map(|name| {
                let spec = config.backend_for(name).expect("validated");
                Ok((name.clone(), LoadedSpec::load(spec)?))
            })
            .collect::<Result<Vec<_>, HarnessError>>()?;
        let judge = config.judge.as_ref().map(LoadedSpec::load).transpose()?;
        let summarizer = config.summarizer.as_ref().map(LoadedSpec::load).transpose()?;
        Ok(Self {
            config,
            script: Arc::new(script),
            templates: Arc::new(templates),
            seats,
            judge,
            summarizer,
        })
    }

    pub fn label(&self) -> String {
        self.config.label.clone().unwrap_or_else(|| self.script.id.clone())
    }

    /// Seeds of the configured games.
    pub fn seeds(&self) -> Vec<u64> {
        (0..u64::from(self.config.runs))
            .map(|i| self.config.seed.wrapping_add(i))
            .collect()
    }

    /// Plays one game in memory, then judges every character.
    pub fn play(&self, seed: u64) -> Result<GameOutcome, HarnessError> {
        let n = self.seats.len() as u64;
        let seats = self
            .seats
            .iter()
            .enumerate()
            .map(|(i, (name, spec))| Ok(Seat::new(name.clone(), spec.instantiate(seed, i as u64)?)))
            .collect::<Result<Vec<_>, HarnessError>>()?;
        let game_config = GameConfig {
            rounds: self.config.rounds,
            seed,
            language: self.config.language,
            max_retries: self.config.max_retries,
            context_budget: self.config.context_budget,
        };
        let mut game = Game::new_game(Arc::clone(&self.script), seats, game_config)
            .map_err(|source| HarnessError::Engine { seq: 0, source })?
            .with_templates(Arc::clone(&self.templates));
        if let Some(spec) = self.summarizer.as_ref().or(self.judge.as_ref()) {
            game = game.with_summarizer(spec.instantiate(seed, n + 1)?);
        }

        let mut events = Vec::new();
        while !game.is_finished() {
            match game.step() {
                Ok(batch) => events.extend(batch),
                Err(source) => {
                    return Err(HarnessError::Engine {
                        seq: game.state().next_seq,
                        source,
                    })
                }
            }
        }

        let mut abilities = BTreeMap::new();
        let mut rouge = BTreeMap::new();
        if let Some(spec) = &self.judge {
            let backend = spec.instantiate(seed, n)?;
            let view = JudgeView::new(&self.script, game.language(), game.roster().to_vec(), &events);
            let mut policy = RerunPolicy::new(self.config.max_retries);
            for character in game.roster().to_vec() {
                let judged = judge_abilities(&view, &character, backend.as_ref(), &self.templates, &mut policy);
                let (done, failure) = split_judged(judged.map(|j| j.solicitations));
                let scores = record_abilities(&mut game, &character, &done, &mut events);
                abilities.insert(character.clone(), scores);
                absorb_failure(&mut game, failure, &mut events)?;

                let judged =
                    reconstruct_and_score(&view, &character, backend.as_ref(), &self.templates, &mut policy);
                let (done, failure) = split_judged(judged.map(|j| j.solicitations));
                let parts = record_rouge(&mut game, &self.script, &character, &done, &mut events);
                rouge.insert(character.clone(), parts);
                absorb_failure(&mut game, failure, &mut events)?;
            }
        }

        let state = game.state();
        let inputs = MetricInputs {
            script_id: self.script.id.clone(),
            roster: game.roster().to_vec(),
            ledger: state.ledger.clone(),
            revealed_by: state.revealed_by.clone(),
            voting: state.voting_result.clone(),
            usage: state.usage,
            abilities,
            rouge,
        };
        let report = MetricReport::compute(&self.script, &inputs);
        let hash = canonical_hash(&canonical_bytes(&events));
        Ok(GameOutcome {
            seed,
            events,
            report,
            hash,
        })
    }
}

type Done = Vec<(PromptKind, Solicited)>;

fn split_judged(result: Result<Done, JudgeError>) -> (Done, Option<JudgeError>) {
    match result {
        Ok(done) => (done, None),
        Err(JudgeError::Failed {
            item,
            kind,
            completed,
            source,
        }) => (
            completed.clone(),
            Some(JudgeError::Failed {
                item,
                kind,
                completed: Vec::new(),
                source,
            }),
        ),
        Err(other) => (Vec::new(), Some(other)),
    }
}

/// Records the rejected attempts of a failed judgement; transport errors end the run.
fn absorb_failure(game: &mut Game, failure: Option<JudgeError>, events: &mut Vec<Event>) -> Result<(), HarnessError> {
    let Some(error) = failure else {
        return Ok(());
    };
    if let JudgeError::Failed { kind, source, .. } = &error {
        let (failed, _) = game.record_attempts(JUDGE_ACTOR, *kind, source.attempts(), false);
        events.extend(failed);
        if matches!(source, SolicitError::RerunExhausted { .. }) {
            log::warn!("{error}");
            return Ok(());
        }
    }
    Err(HarnessError::Judge {
        seq: game.state().next_seq,
        source: error,
    })
}

fn record_abilities(
    game: &mut Game,
    character: &str,
    done: &Done,
    events: &mut Vec<Event>,
) -> BTreeMap<Ability, u8> {
    let mut scores = BTreeMap::new();
    for (ability, (kind, got)) in Ability::ALL.into_iter().zip(done) {
        let (failed, usage) = game.record_attempts(JUDGE_ACTOR, *kind, &got.attempts, false);
        events.extend(failed);
        let Payload::Score(score) = got.parsed.payload else {
            continue;
        };
        scores.insert(ability, score);
        events.push(game.record(
            JUDGE_ACTOR,
            EventBody::Score(ScoreRecord::Ability {
                character: character.to_string(),
                ability,
                score,
            }),
            usage.unwrap_or_default(),
        ));
    }
    scores
}

/// Summary/reconstruction pairs map onto the character's nonempty parts in order.
fn record_rouge(
    game: &mut Game,
    script: &Script,
    character: &str,
    done: &Done,
    events: &mut Vec<Event>,
) -> BTreeMap<ScriptPart, crate::metrics::RougeScore> {
    let profile = script.character(character).expect("seated character");
    let parts = ScriptPart::ALL.into_iter().filter(|p| !profile.part(*p).trim().is_empty());
    let mut scores = BTreeMap::new();
    for (part, pair) in parts.zip(done.chunks_exact(2)) {
        let mut usage = UsageCounters::default();
        for (kind, got) in pair {
            let (failed, accepted) = game.record_attempts(JUDGE_ACTOR, *kind, &got.attempts, false);
            events.extend(failed);
            usage += accepted.unwrap_or_default();
        }
        let score = rouge_l_text(pair[1].1.parsed.text(), pair[0].1.parsed.text());
        scores.insert(part, score);
        events.push(game.record(
            JUDGE_ACTOR,
            EventBody::Score(ScoreRecord::Rouge {
                character: character.to_string(),
                part,
                precision: score.precision,
                recall: score.recall,
                f1: score.f1,
            }),
            usage,
        ));
    }
    scores
}

/// Where one game's files landed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportBundle {
    pub seed: u64,
    pub transcript_path: PathBuf,
    pub report_path: PathBuf,
    pub hash: String,
    pub report: MetricReport,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    std::fs::write(path, bytes).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Persists one game under `<out>/<script id>-seed<seed>/`.
pub fn persist(outcome: &GameOutcome, script_id: &str, out: &Path) -> Result<ReportBundle, HarnessError> {
    let dir = out.join(format!("{script_id}-seed{}", outcome.seed));
    std::fs::create_dir_all(&dir).map_err(|source| HarnessError::Io {
        path: dir.clone(),
        source,
    })?;
    let transcript_path = dir.join("transcript.jsonl");
    let hash = write_transcript(&transcript_path, &outcome.events)?;
    let report_path = dir.join("report.json");
    let json = serde_json::to_vec_pretty(&outcome.report).expect("report serializes");
    write_file(&report_path, &json)?;
    Ok(ReportBundle {
        seed: outcome.seed,
        transcript_path,
        report_path,
        hash,
        report: outcome.report.clone(),
    })
}

/// Plays the configured seed once and writes transcript and report.
pub fn run(config: RunConfig) -> Result<ReportBundle, HarnessError> {
    let prepared = PreparedRun::new(config)?;
    let outcome = prepared.play(prepared.config.seed)?;
    persist(&outcome, &prepared.script.id, &prepared.config.output_dir)
}

/// Recomputes the report of a transcript file.
pub fn replay(transcript: impl AsRef<Path>, script: impl AsRef<Path>) -> Result<MetricReport, ReplayError> {
    let script = load_script(script)?;
    let events = read_transcript(transcript)?;
    replay_events(&script, &events)
}

/// Rebuilds the metric inputs purely from recorded events. Judge-derived
/// scores are taken from Score records, not re-judged.
pub fn replay_events(script: &Script, events: &[Event]) -> Result<MetricReport, ReplayError> {
    let characters: BTreeSet<String> = script.character_ids().into_iter().collect();
    let mut inputs = MetricInputs {
        script_id: script.id.clone(),
        ..Default::default()
    };
    let mut revealed = BTreeSet::new();
    let mut votes = BTreeMap::new();
    let mut intro_order = Vec::new();
    let mut finished = false;
    for (i, event) in events.iter().enumerate() {
        let corrupt = |reason: String| ReplayError::Corrupt {
            seq: event.seq,
            reason,
        };
        if event.seq != i as u64 {
            return Err(corrupt(format!("seq {} where {i} was expected", event.seq)));
        }
        let actor = event.actor.as_str();
        if actor != SYSTEM_ACTOR && actor != JUDGE_ACTOR && !characters.contains(actor) {
            return Err(corrupt(format!("unknown actor `{actor}`")));
        }
        let known = |c: &str| {
            if characters.contains(c) {
                Ok(())
            } else {
                Err(corrupt(format!("unknown character `{c}`")))
            }
        };
        inputs.usage += event.usage;
        match &event.body {
            EventBody::Speak { .. } if event.phase == Phase::Introduction => {
                intro_order.push(event.actor.clone());
            }
            EventBody::ClueRevealed { clue_id, .. } => {
                if script.clue(clue_id).is_none() {
                    return Err(corrupt(format!("unknown clue `{clue_id}`")));
                }
                if !revealed.insert(clue_id.clone()) {
                    return Err(corrupt(format!("clue `{clue_id}` revealed twice")));
                }
                inputs.revealed_by.entry(event.actor.clone()).or_default().insert(clue_id.clone());
            }
            EventBody::Score(ScoreRecord::Ledger {
                observer,
                subject,
                suspicion,
                trust,
            }) => {
                known(observer)?;
                known(subject)?;
                inputs
                    .ledger
                    .record_scores(observer, subject, i64::from(*suspicion), i64::from(*trust))
                    .map_err(|e| corrupt(e.to_string()))?;
            }
            EventBody::Score(ScoreRecord::Ability { character, ability, score }) => {
                known(character)?;
                if *score > 20 {
                    return Err(corrupt(format!("ability score {score} out of range")));
                }
                inputs.abilities.entry(character.clone()).or_default().insert(*ability, *score);
            }
            EventBody::Score(ScoreRecord::Rouge {
                character,
                part,
                precision,
                recall,
                f1,
            }) => {
                known(character)?;
                inputs.rouge.entry(character.clone()).or_default().insert(
                    *part,
                    crate::metrics::RougeScore {
                        precision: *precision,
                        recall: *recall,
                        f1: *f1,
                    },
                );
            }
            EventBody::Vote { accused } => {
                known(accused)?;
                votes.insert(event.actor.clone(), accused.clone());
            }
            EventBody::PhaseChange { to: Phase::Finished, .. } => finished = true,
            _ => {}
        }
    }
    let script_order = script.character_ids();
    let intro_set: BTreeSet<&String> = intro_order.iter().collect();
    inputs.roster = if intro_order.len() == script_order.len() && intro_set.len() == intro_order.len() {
        intro_order
    } else {
        script_order
    };
    if finished {
        inputs.voting = Some(tally(&votes, &inputs.roster, &inputs.ledger, &script.culprit_ids));
    }
    Ok(MetricReport::compute(script, &inputs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixing_separates_slots_and_seeds() {
        assert_ne!(mix(1, 0), mix(1, 1));
        assert_ne!(mix(1, 0), mix(2, 0));
        assert_eq!(mix(5, 3), mix(5, 3));
    }
}
