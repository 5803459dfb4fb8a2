use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::action::Action;
use super::event::{Event, EventBody, ScoreRecord, JUDGE_ACTOR, SYSTEM_ACTOR};
use super::state::{GameConfig, GameState, Phase};
use super::voting::{tally, VotingResult};
use crate::agent::{
    resolve_name, solicit, AgentBackend, Ask, Attempt, BackendError, ParsedResponse, Payload,
    PromptContext, PromptError, PromptKind, SolicitError, Solicited, TemplateSet, Vocabulary,
};
use crate::memory::{Direction, HistoryError, SummarizeError, Summarizer, UsageCounters};
use crate::script::{Clue, Language, Script};

/// One seat at the table: a character and the backend playing it.
#[derive(Clone)]
pub struct Seat {
    pub character: String,
    pub backend: Arc<dyn AgentBackend>,
}

impl Seat {
    pub fn new(character: impl Into<String>, backend: Arc<dyn AgentBackend>) -> Self {
        Self {
            character: character.into(),
            backend,
        }
    }
}

impl std::fmt::Debug for Seat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Seat").field("character", &self.character).finish_non_exhaustive()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("roster does not match the script: {0}")]
    RosterMismatch(String),
    #[error("invalid game configuration: {0}")]
    InvalidConfig(String),
    #[error("it is not `{actor}`'s turn")]
    NotYourTurn { actor: String, expected: Option<String> },
    #[error("unknown target `{0}`")]
    UnknownTarget(String),
    #[error("unknown location or clue `{0}`")]
    UnknownLocation(String),
    #[error("{action} is not allowed during {phase:?}")]
    InvalidAction { action: &'static str, phase: Phase },
    #[error("voting incomplete; missing {0:?}")]
    IncompleteVotes(Vec<String>),
    #[error("voting can only be tallied during the voting phase")]
    NotVoting,
    #[error("the game is already finished")]
    AlreadyFinished,
    #[error("backend for `{character}` failed: {source}")]
    Backend {
        character: String,
        #[source]
        source: BackendError,
    },
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    History(#[from] HistoryError),
}

/// Localized fixed strings used in prompts and notes.
fn host_name(lang: Language) -> &'static str {
    match lang {
        Language::En => "Host",
        Language::Zh => "主持人",
    }
}

fn host_question(lang: Language, round: u32) -> String {
    match lang {
        Language::En => format!(
            "Round {}: the floor is yours. Tell everyone what you know, what you noticed and whom you suspect.",
            round + 1
        ),
        Language::Zh => format!(
            "第{}轮：现在轮到你向所有人发言。请说出你知道的信息、你注意到的细节以及你怀疑的人。",
            round + 1
        ),
    }
}

fn none_text(lang: Language) -> &'static str {
    match lang {
        Language::En => "(none)",
        Language::Zh => "（无）",
    }
}

fn repeat_note(lang: Language, target: &str) -> String {
    match lang {
        Language::En => format!("I searched {target} again and found nothing new."),
        Language::Zh => format!("我再次搜查了{target}，没有新的发现。"),
    }
}

/// Usage of an accepted attempt.
fn accepted_usage(attempt: &Attempt, countable: bool) -> UsageCounters {
    let mut usage = UsageCounters::default();
    usage.charge(Direction::EnvInput, attempt.usage.input_tokens, countable);
    usage.charge(Direction::UserOutput, attempt.usage.output_tokens, countable);
    usage
}

/// Usage of a rejected attempt.
fn failed_usage(attempt: &Attempt) -> UsageCounters {
    let mut usage = accepted_usage(attempt, false);
    usage.failures = 1;
    usage
}

/// Turn-ordered state machine over one script and roster.
pub struct Game {
    script: Arc<Script>,
    roster: Vec<Seat>,
    names: Vec<String>,
    config: GameConfig,
    language: Language,
    templates: Arc<TemplateSet>,
    summarizer: Option<Arc<dyn AgentBackend>>,
    state: GameState,
    pending: Vec<Event>,
}

impl Game {
    pub fn new_game(
        script: Arc<Script>,
        roster: Vec<Seat>,
        config: GameConfig,
    ) -> Result<Self, EngineError> {
        if config.rounds == 0 {
            return Err(EngineError::InvalidConfig("rounds must be at least 1".into()));
        }
        if config.context_budget == 0 {
            return Err(EngineError::InvalidConfig("context budget must be positive".into()));
        }
        if roster.len() != script.characters.len() {
            return Err(EngineError::RosterMismatch(format!(
                "{} seats for {} characters",
                roster.len(),
                script.characters.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for seat in &roster {
            if script.character(&seat.character).is_none() {
                return Err(EngineError::RosterMismatch(format!(
                    "`{}` is not a character of the script",
                    seat.character
                )));
            }
            if !seen.insert(seat.character.clone()) {
                return Err(EngineError::RosterMismatch(format!(
                    "`{}` is seated twice",
                    seat.character
                )));
            }
        }
        let names = roster.iter().map(|s| s.character.clone()).collect();
        let language = config.language.unwrap_or(script.language);
        let state = GameState {
            script_id: script.id.clone(),
            round: 0,
            phase: Phase::Introduction,
            turn_cursor: 0,
            revealed_clues: BTreeSet::new(),
            reveal_order: Vec::new(),
            revealed_by: BTreeMap::new(),
            history: Default::default(),
            ledger: Default::default(),
            accusations: BTreeMap::new(),
            votes: BTreeMap::new(),
            abstained_accusations: BTreeSet::new(),
            abstained_votes: BTreeSet::new(),
            rng_seed: config.seed,
            stages_unlocked: script.stages_unlocked_at(0),
            last_action: BTreeMap::new(),
            usage: UsageCounters::default(),
            rerun: crate::agent::RerunPolicy::new(config.max_retries),
            next_seq: 0,
            voting_result: None,
        };
        Ok(Self {
            script,
            roster,
            names,
            config,
            language,
            templates: Arc::new(TemplateSet::builtin()),
            summarizer: None,
            state,
            pending: Vec::new(),
        })
    }

    pub fn with_templates(mut self, templates: Arc<TemplateSet>) -> Self {
        self.templates = templates;
        self
    }

    /// Backend used to compress the history when it outgrows the budget.
    pub fn with_summarizer(mut self, backend: Arc<dyn AgentBackend>) -> Self {
        self.summarizer = Some(backend);
        self
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn script(&self) -> &Script {
        &self.script
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn templates(&self) -> &TemplateSet {
        &self.templates
    }

    /// Character ids in turn order.
    pub fn roster(&self) -> &[String] {
        &self.names
    }

    pub fn is_finished(&self) -> bool {
        self.state.phase == Phase::Finished
    }

    /// Steps needed from a fresh game to `Finished`.
    pub fn step_budget(players: usize, rounds: u32) -> usize {
        let r = rounds as usize;
        players * 2 * r + players + 2 * players + 2 * r + 2
    }

    /// Whose turn it is, if any.
    pub fn current_actor(&self) -> Option<&str> {
        let n = self.names.len();
        let c = self.state.turn_cursor;
        match self.state.phase {
            Phase::Introduction | Phase::OpenConversation | Phase::Interaction if c < n => {
                Some(&self.names[c])
            }
            Phase::Voting if c < 2 * n => Some(&self.names[c % n]),
            _ => None,
        }
    }

    /// Advances one agent turn or one phase boundary.
    pub fn step(&mut self) -> Result<Vec<Event>, EngineError> {
        let n = self.names.len();
        let cursor = self.state.turn_cursor;
        match self.state.phase {
            Phase::Finished => return Err(EngineError::AlreadyFinished),
            Phase::Introduction if cursor < n => self.introduction_turn(cursor)?,
            Phase::Introduction => self.transition(Phase::OpenConversation, 0),
            Phase::OpenConversation if cursor < n => self.speech_turn(cursor)?,
            Phase::OpenConversation => self.transition(Phase::Interaction, self.state.round),
            Phase::Interaction if cursor < n => self.interaction_turn(cursor)?,
            Phase::Interaction => {
                if self.state.round + 1 < self.config.rounds {
                    self.transition(Phase::OpenConversation, self.state.round + 1)
                } else {
                    self.transition(Phase::Voting, self.state.round)
                }
            }
            Phase::Voting if cursor < 2 * n => self.voting_turn(cursor)?,
            Phase::Voting => {
                let result = self.run_voting()?;
                self.state.voting_result = Some(result);
                self.transition(Phase::Finished, self.state.round);
            }
        }
        Ok(std::mem::take(&mut self.pending))
    }

    /// Steps until `Finished`, returning every event.
    pub fn run_to_end(&mut self) -> Result<Vec<Event>, EngineError> {
        let mut events = Vec::new();
        while !self.is_finished() {
            events.extend(self.step()?);
        }
        Ok(events)
    }

    /// Performs `action` for the character holding the turn, then passes the turn.
    pub fn apply_action(&mut self, actor: &str, action: Action) -> Result<Vec<Event>, EngineError> {
        if self.current_actor() != Some(actor) {
            return Err(EngineError::NotYourTurn {
                actor: actor.to_string(),
                expected: self.current_actor().map(str::to_string),
            });
        }
        let action = self.validate(actor, action)?;
        self.execute(actor, action, UsageCounters::default())?;
        self.state.turn_cursor += 1;
        Ok(std::mem::take(&mut self.pending))
    }

    /// Tallies the recorded votes.
    pub fn run_voting(&self) -> Result<VotingResult, EngineError> {
        if self.state.phase != Phase::Voting {
            return Err(EngineError::NotVoting);
        }
        let missing: Vec<String> = self
            .names
            .iter()
            .filter(|c| {
                let accused = self.state.accusations.contains_key(*c)
                    || self.state.abstained_accusations.contains(*c);
                let voted =
                    self.state.votes.contains_key(*c) || self.state.abstained_votes.contains(*c);
                !(accused && voted)
            })
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(EngineError::IncompleteVotes(missing));
        }
        Ok(tally(
            &self.state.votes,
            &self.names,
            &self.state.ledger,
            &self.script.culprit_ids,
        ))
    }

    /// Appends an event produced outside the turn loop (post-game judging).
    pub fn record(&mut self, actor: &str, body: EventBody, usage: UsageCounters) -> Event {
        self.emit(actor, body, usage);
        self.pending.pop().expect("event just emitted")
    }

    /// Appends one Failure event per rejected attempt and returns them with
    /// the accepted attempt's usage, when there is one.
    pub fn record_attempts(
        &mut self,
        actor: &str,
        kind: PromptKind,
        attempts: &[Attempt],
        countable: bool,
    ) -> (Vec<Event>, Option<UsageCounters>) {
        let start = self.pending.len();
        let accepted = self.note_attempts(actor, kind, attempts, countable);
        (self.pending.split_off(start), accepted)
    }

    fn note_attempts(
        &mut self,
        actor: &str,
        kind: PromptKind,
        attempts: &[Attempt],
        countable: bool,
    ) -> Option<UsageCounters> {
        let mut accepted = None;
        for (i, attempt) in attempts.iter().enumerate() {
            match &attempt.failure {
                Some(reason) => self.emit(
                    actor,
                    EventBody::Failure {
                        prompt: kind,
                        attempt: i as u32 + 1,
                        reason: reason.clone(),
                        raw: attempt.raw.clone(),
                    },
                    failed_usage(attempt),
                ),
                None => accepted = Some(accepted_usage(attempt, countable)),
            }
        }
        accepted
    }

    fn emit(&mut self, actor: &str, body: EventBody, usage: UsageCounters) {
        let event = Event {
            seq: self.state.next_seq,
            round: self.state.round,
            phase: self.state.phase,
            actor: actor.to_string(),
            body,
            usage,
        };
        self.state.next_seq += 1;
        self.state.usage += usage;
        self.log_history(&event);
        self.pending.push(event);
    }

    fn log_history(&mut self, event: &Event) {
        if let Some(entry) = event.history_entry() {
            self.state.history.push(entry).expect("event seqs increase");
        }
    }

    fn transition(&mut self, to: Phase, round: u32) {
        let from = self.state.phase;
        self.state.phase = to;
        self.state.round = round;
        self.state.turn_cursor = 0;
        let mut unlocked_stage = None;
        if to == Phase::OpenConversation {
            let unlocked = self.script.stages_unlocked_at(round);
            if unlocked > self.state.stages_unlocked {
                self.state.stages_unlocked = unlocked;
                unlocked_stage = Some(unlocked - 1);
            }
        }
        self.emit(
            SYSTEM_ACTOR,
            EventBody::PhaseChange {
                from,
                to,
                unlocked_stage,
            },
            UsageCounters::default(),
        );
    }

    fn self_clues(&self, character: &str) -> String {
        let profile = self.script.character(character).expect("seated character");
        let lines: Vec<String> = profile
            .private_clues
            .iter()
            .filter_map(|id| self.script.clue(id))
            .map(|c| format!("- [{}] {}", c.location, c.text))
            .collect();
        if lines.is_empty() {
            none_text(self.language).to_string()
        } else {
            lines.join("\n")
        }
    }

    fn history_text(&self) -> String {
        let text = self.state.history.render();
        if text.is_empty() {
            none_text(self.language).to_string()
        } else {
            text
        }
    }

    fn others(&self, character: &str) -> Vec<String> {
        self.names.iter().filter(|c| c.as_str() != character).cloned().collect()
    }

    /// name, description, self_clues, history.
    fn base_context(&self, character: &str) -> PromptContext {
        let profile = self.script.character(character).expect("seated character");
        PromptContext::new()
            .with("name", character)
            .with("description", profile.description(self.language, self.state.stages_unlocked))
            .with("self_clues", self.self_clues(character))
            .with("history", self.history_text())
    }

    fn places(&self) -> Vec<String> {
        let mut places = self.script.locations();
        places.extend(self.script.clues.iter().map(|c| c.id.clone()));
        places
    }

    fn seat_index(&self, character: &str) -> usize {
        self.names.iter().position(|c| c == character).expect("seated character")
    }

    /// Solicits `character`, recording rejected attempts. `None` means the
    /// rerun policy ran out.
    fn solicit_character(
        &mut self,
        character: &str,
        kind: PromptKind,
        ctx: &PromptContext,
        vocab: &Vocabulary,
    ) -> Result<Option<Solicited>, EngineError> {
        let backend = Arc::clone(&self.roster[self.seat_index(character)].backend);
        self.solicit_from(backend.as_ref(), character, kind, ctx, vocab)
    }

    fn solicit_from(
        &mut self,
        backend: &dyn AgentBackend,
        actor: &str,
        kind: PromptKind,
        ctx: &PromptContext,
        vocab: &Vocabulary,
    ) -> Result<Option<Solicited>, EngineError> {
        let ask = Ask {
            agent: actor,
            kind,
            language: self.language,
            ctx,
            vocab,
        };
        match solicit(backend, &self.templates, &ask, &mut self.state.rerun) {
            Ok(got) => {
                let rejected: Vec<Attempt> =
                    got.attempts.iter().filter(|a| a.failure.is_some()).cloned().collect();
                self.note_attempts(actor, kind, &rejected, false);
                Ok(Some(got))
            }
            Err(SolicitError::RerunExhausted { attempts }) => {
                self.note_attempts(actor, kind, &attempts, false);
                Ok(None)
            }
            Err(SolicitError::Backend { source, attempts }) => {
                self.note_attempts(actor, kind, &attempts, false);
                Err(EngineError::Backend {
                    character: actor.to_string(),
                    source,
                })
            }
            Err(SolicitError::Prompt(e)) => Err(e.into()),
        }
    }

    fn final_usage(got: &Solicited, countable: bool) -> UsageCounters {
        got.attempts
            .last()
            .map(|a| accepted_usage(a, countable))
            .unwrap_or_default()
    }

    fn forfeit(&mut self, character: &str) {
        self.emit(character, EventBody::Speak { text: String::new() }, UsageCounters::default());
    }

    fn summarize_if_needed(&mut self) -> Result<(), EngineError> {
        let Some(backend) = self.summarizer.clone() else {
            return Ok(());
        };
        if self.state.history.token_count() <= self.config.context_budget {
            return Ok(());
        }
        let mut policy = self.state.rerun.clone();
        let mut history = std::mem::take(&mut self.state.history);
        let outcome = history.maybe_summarize(
            self.config.context_budget,
            &mut Summarizer {
                backend: backend.as_ref(),
                templates: &self.templates,
                language: self.language,
                policy: &mut policy,
            },
        );
        self.state.history = history;
        self.state.rerun = policy;
        let (steps, rejected, fatal) = match outcome {
            Ok(steps) => (steps, Vec::new(), None),
            Err(SummarizeError::ZeroBudget) => {
                return Err(EngineError::InvalidConfig("context budget must be positive".into()))
            }
            Err(SummarizeError::NotShorter { completed, rejected, .. }) => (completed, rejected, None),
            Err(SummarizeError::Summarizer { completed, rejected, source }) => {
                let attempts = source.attempts().to_vec();
                let fatal = match source {
                    SolicitError::Backend { source, .. } => Some(EngineError::Backend {
                        character: JUDGE_ACTOR.to_string(),
                        source,
                    }),
                    SolicitError::Prompt(e) => Some(e.into()),
                    SolicitError::RerunExhausted { .. } => None,
                };
                self.note_attempts(JUDGE_ACTOR, PromptKind::HistorySummary, &attempts, false);
                (completed, rejected, fatal)
            }
        };
        for step in steps {
            let (last, earlier) = step.solicitations.split_last().expect("accepted summary");
            for got in earlier {
                self.record_not_shorter(got);
            }
            self.note_attempts(JUDGE_ACTOR, PromptKind::HistorySummary, &last.attempts, false);
            self.emit(
                JUDGE_ACTOR,
                EventBody::Summary {
                    through_seq: step.through_seq,
                    summary: step.summary,
                },
                Self::final_usage(last, false),
            );
        }
        for got in &rejected {
            self.record_not_shorter(got);
        }
        match fatal {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    /// A parseable summary that did not shrink its source.
    fn record_not_shorter(&mut self, got: &Solicited) {
        let mut attempts = got.attempts.clone();
        if let Some(last) = attempts.last_mut() {
            last.failure = Some("summary is not shorter than its source".into());
        }
        self.note_attempts(JUDGE_ACTOR, PromptKind::HistorySummary, &attempts, false);
    }

    fn introduction_turn(&mut self, cursor: usize) -> Result<(), EngineError> {
        let character = self.names[cursor].clone();
        self.summarize_if_needed()?;
        let ctx = self.base_context(&character);
        let vocab = Vocabulary::default();
        match self.solicit_character(&character, PromptKind::Introduction, &ctx, &vocab)? {
            Some(got) => {
                let usage = Self::final_usage(&got, true);
                self.emit(&character, EventBody::Speak { text: got.parsed.text().to_string() }, usage);
            }
            None => self.forfeit(&character),
        }
        self.state.turn_cursor += 1;
        Ok(())
    }

    fn speech_turn(&mut self, cursor: usize) -> Result<(), EngineError> {
        let speaker = self.names[cursor].clone();
        self.summarize_if_needed()?;
        let ctx = self
            .base_context(&speaker)
            .with("ask_name", host_name(self.language))
            .with("ask_content", host_question(self.language, self.state.round));
        let vocab = Vocabulary::default();
        let text = match self.solicit_character(&speaker, PromptKind::AskReply, &ctx, &vocab)? {
            Some(got) => {
                let text = got.parsed.text().to_string();
                let usage = Self::final_usage(&got, true);
                self.emit(&speaker, EventBody::Speak { text: text.clone() }, usage);
                Some(text)
            }
            None => {
                self.forfeit(&speaker);
                None
            }
        };
        self.state.turn_cursor += 1;
        if let Some(text) = text {
            self.score_utterance(&speaker, &text)?;
        }
        Ok(())
    }

    /// Every other character rates the speaker once for suspicion and once for trust.
    fn score_utterance(&mut self, speaker: &str, text: &str) -> Result<(), EngineError> {
        for observer in self.others(speaker) {
            let ctx = PromptContext::new()
                .with("history", self.history_text())
                .with("other_name", speaker)
                .with("content", text);
            let vocab = Vocabulary::default();
            let sus = self.solicit_character(&observer, PromptKind::SuspicionScore, &ctx, &vocab)?;
            let trust = self.solicit_character(&observer, PromptKind::TrustScore, &ctx, &vocab)?;
            let (Some(sus), Some(trust)) = (sus, trust) else {
                continue;
            };
            let (Payload::Score(s), Payload::Score(t)) = (&sus.parsed.payload, &trust.parsed.payload) else {
                continue;
            };
            let (s, t) = (*s, *t);
            self.state
                .ledger
                .record_scores(&observer, speaker, i64::from(s), i64::from(t))
                .expect("parser bounds scores to 0..=2");
            let mut usage = Self::final_usage(&sus, true);
            usage += Self::final_usage(&trust, true);
            self.emit(
                &observer,
                EventBody::Score(ScoreRecord::Ledger {
                    observer: observer.clone(),
                    subject: speaker.to_string(),
                    suspicion: s,
                    trust: t,
                }),
                usage,
            );
        }
        Ok(())
    }

    fn interaction_turn(&mut self, cursor: usize) -> Result<(), EngineError> {
        let character = self.names[cursor].clone();
        self.summarize_if_needed()?;
        let others = self.others(&character);
        let last_action = self
            .state
            .last_action
            .get(&character)
            .cloned()
            .unwrap_or_else(|| none_text(self.language).to_string());
        let ctx = self
            .base_context(&character)
            .with("last_action", last_action)
            .with("characters", others.join("\n"))
            .with("address", self.script.locations().join("\n"));
        let vocab = Vocabulary {
            speaker: Some(character.clone()),
            targets: others,
            places: self.places(),
        };
        match self.solicit_character(&character, PromptKind::Converse, &ctx, &vocab)? {
            Some(got) => {
                let ParsedResponse { payload, response, .. } = &got.parsed;
                let Payload::Action(action) = payload else {
                    unreachable!("converse replies carry an action")
                };
                let countable = !matches!(action, Action::Investigate { .. });
                let usage = Self::final_usage(&got, countable);
                self.state.last_action.insert(character.clone(), response.clone());
                let action = self.validate(&character, action.clone())?;
                self.execute(&character, action, usage)?;
            }
            None => self.forfeit(&character),
        }
        self.state.turn_cursor += 1;
        Ok(())
    }

    fn voting_turn(&mut self, cursor: usize) -> Result<(), EngineError> {
        let n = self.names.len();
        let character = self.names[cursor % n].clone();
        self.summarize_if_needed()?;
        let others = self.others(&character);
        let ctx = self.base_context(&character).with("role_list", others.join("\n"));
        let vocab = Vocabulary {
            speaker: Some(character.clone()),
            targets: others,
            places: Vec::new(),
        };
        match self.solicit_character(&character, PromptKind::Vote, &ctx, &vocab)? {
            Some(got) => {
                let Payload::Vote(accused) = got.parsed.payload.clone() else { unreachable!() };
                let usage = Self::final_usage(&got, true);
                self.execute(&character, Action::Vote { accused }, usage)?;
            }
            None => {
                if cursor < n {
                    self.state.abstained_accusations.insert(character.clone());
                } else {
                    self.state.abstained_votes.insert(character.clone());
                }
                self.forfeit(&character);
            }
        }
        self.state.turn_cursor += 1;
        Ok(())
    }

    /// A clue id or a location, exact match first, then case-insensitive.
    fn resolve_clue_target(&self, name: &str) -> Option<String> {
        let ids: Vec<String> = self.script.clues.iter().map(|c| c.id.clone()).collect();
        let locations = self.script.locations();
        resolve_name(name, &ids)
            .or_else(|| resolve_name(name, &locations))
            .map(str::to_string)
    }

    fn validate(&self, actor: &str, action: Action) -> Result<Action, EngineError> {
        let phase = self.state.phase;
        let others = self.others(actor);
        match action {
            Action::Speak { .. } if phase == Phase::Voting => {
                Err(EngineError::InvalidAction { action: "Speak", phase })
            }
            Action::Speak { text } => Ok(Action::Speak { text }),
            Action::Ask { .. } | Action::Investigate { .. } if phase != Phase::Interaction => {
                Err(EngineError::InvalidAction { action: "Ask/Investigate", phase })
            }
            Action::Ask { target, question } => {
                let target = resolve_name(&target, &others)
                    .ok_or(EngineError::UnknownTarget(target.clone()))?
                    .to_string();
                Ok(Action::Ask { target, question })
            }
            Action::Investigate { location_or_clue, reason } => {
                let resolved = self
                    .resolve_clue_target(&location_or_clue)
                    .ok_or(EngineError::UnknownLocation(location_or_clue))?;
                Ok(Action::Investigate { location_or_clue: resolved, reason })
            }
            Action::Vote { .. } if phase != Phase::Voting => {
                Err(EngineError::InvalidAction { action: "Vote", phase })
            }
            Action::Vote { accused } => {
                let accused = resolve_name(&accused, &others)
                    .ok_or(EngineError::UnknownTarget(accused.clone()))?
                    .to_string();
                Ok(Action::Vote { accused })
            }
        }
    }

    /// The clue an investigation of `target` uncovers, if any is left.
    fn clue_for(&self, target: &str) -> Option<Clue> {
        if let Some(clue) = self.script.clue(target) {
            return (!self.state.revealed_clues.contains(&clue.id)).then(|| clue.clone());
        }
        self.script
            .clues
            .iter()
            .find(|c| c.location == target && !self.state.revealed_clues.contains(&c.id))
            .cloned()
    }

    fn execute(&mut self, actor: &str, action: Action, usage: UsageCounters) -> Result<(), EngineError> {
        match action {
            Action::Speak { text } => self.emit(actor, EventBody::Speak { text }, usage),
            Action::Ask { target, question } => {
                self.emit(
                    actor,
                    EventBody::Ask {
                        target: target.clone(),
                        question: question.clone(),
                    },
                    usage,
                );
                let ctx = self
                    .base_context(&target)
                    .with("ask_name", actor)
                    .with("ask_content", question);
                let vocab = Vocabulary::default();
                let (text, usage) =
                    match self.solicit_character(&target, PromptKind::AskReply, &ctx, &vocab)? {
                        Some(got) => (got.parsed.text().to_string(), Self::final_usage(&got, true)),
                        None => (String::new(), UsageCounters::default()),
                    };
                self.emit(
                    &target,
                    EventBody::Answer {
                        asker: actor.to_string(),
                        text,
                    },
                    usage,
                );
            }
            Action::Investigate { location_or_clue, reason } => {
                self.emit(
                    actor,
                    EventBody::Investigate {
                        target: location_or_clue.clone(),
                        reason,
                    },
                    usage,
                );
                match self.clue_for(&location_or_clue) {
                    Some(clue) => {
                        self.state.revealed_clues.insert(clue.id.clone());
                        self.state.reveal_order.push(clue.id.clone());
                        self.state
                            .revealed_by
                            .entry(actor.to_string())
                            .or_default()
                            .insert(clue.id.clone());
                        self.emit(
                            actor,
                            EventBody::ClueRevealed {
                                clue_id: clue.id,
                                location: clue.location,
                                text: clue.text,
                                is_key: clue.is_key,
                            },
                            UsageCounters::default(),
                        );
                    }
                    None => {
                        let text = repeat_note(self.language, &location_or_clue);
                        self.emit(actor, EventBody::Speak { text }, UsageCounters::default());
                    }
                }
            }
            Action::Vote { accused } => {
                let n = self.names.len();
                if self.state.turn_cursor < n {
                    self.state.accusations.insert(actor.to_string(), accused.clone());
                    self.emit(actor, EventBody::Accuse { accused }, usage);
                } else {
                    self.state.votes.insert(actor.to_string(), accused.clone());
                    self.emit(actor, EventBody::Vote { accused }, usage);
                }
            }
        }
        Ok(())
    }
}
