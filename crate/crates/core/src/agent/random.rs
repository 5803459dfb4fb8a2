use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::backend::{AgentBackend, BackendError, Completion, Request};
use super::prompt::PromptKind;

const WORDS: &[&str] = &[
    "lantern", "corridor", "midnight", "letter", "garden", "ledger", "portrait", "key",
    "whisper", "alibi", "rain", "staircase", "ink", "glove", "clock", "window",
];

/// Seeded agent producing grammatical but arbitrary replies. `noise` is the
/// probability that a reply is deliberately unparseable.
#[derive(Debug)]
pub struct RandomBackend {
    rng: Mutex<ChaCha8Rng>,
    noise: f64,
}

impl RandomBackend {
    pub fn new(seed: u64) -> Self {
        Self::with_noise(seed, 0.0)
    }

    pub fn with_noise(seed: u64, noise: f64) -> Self {
        Self {
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
            noise: noise.clamp(0.0, 1.0),
        }
    }
}

fn words(rng: &mut ChaCha8Rng, n: usize) -> String {
    (0..n)
        .map(|_| *WORDS.choose(rng).expect("nonempty"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn pick(rng: &mut ChaCha8Rng, names: &[String], fallback: &str) -> String {
    names
        .choose(rng)
        .cloned()
        .unwrap_or_else(|| fallback.to_string())
}

impl AgentBackend for RandomBackend {
    fn complete(&self, request: &Request) -> Result<Completion, BackendError> {
        let mut rng = self.rng.lock().expect("rng lock");
        let rng = &mut *rng;
        if self.noise > 0.0 && rng.gen_bool(self.noise) {
            let garbage = match rng.gen_range(0..3) {
                0 => words(rng, 4),
                1 => "### THOUGHT: unsure\n### RESPONSE: 7".to_string(),
                _ => "### THOUGHT: hmm\n### RESPONSE: 【Shout】【everyone】: hello".to_string(),
            };
            return Ok(Completion::heuristic(request, garbage));
        }
        let thought = words(rng, 3);
        let response = match request.kind {
            PromptKind::Converse => {
                let vocab = &request.vocab;
                let ask = vocab.places.is_empty() || (!vocab.targets.is_empty() && rng.gen_bool(0.5));
                if ask {
                    let target = pick(rng, &vocab.targets, "someone");
                    format!("【Ask】【{target}】: Where were you near the {}?", words(rng, 1))
                } else {
                    let place = pick(rng, &vocab.places, "somewhere");
                    format!("【Investigate】【{place}】: {}", words(rng, 3))
                }
            }
            PromptKind::Vote => pick(rng, &request.vocab.targets, &request.agent),
            PromptKind::SuspicionScore | PromptKind::TrustScore => rng.gen_range(0..=2).to_string(),
            PromptKind::AbilityJudge => rng.gen_range(0..=20).to_string(),
            PromptKind::HistorySummary => {
                format!("{}: 【Speak】: {}", request.agent, words(rng, 4))
            }
            PromptKind::Introduction
            | PromptKind::AskReply
            | PromptKind::ScriptSummary
            | PromptKind::Reconstruction => words(rng, 8),
        };
        Ok(Completion::heuristic(
            request,
            format!("### THOUGHT: {thought}\n### RESPONSE: {response}"),
        ))
    }
}
