use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::{DEFAULT_MAX_RETRIES};
use crate::engine::{DEFAULT_CONTEXT_BUDGET, DEFAULT_ROUNDS};
use crate::script::Language;

/// How one seat (or the judge) is played.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BackendSpec {
    /// Canned outputs from a JSON playbook: a list, or an object keyed by prompt kind.
    Scripted {
        playbook: PathBuf,
        #[serde(default)]
        cycle: bool,
    },
    /// Seeded random legal replies. Without a seed, one is derived from the
    /// game seed and the seat.
    Random {
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        noise: f64,
    },
    /// Chat-completion endpoint; `endpoint` falls back to `MIRAGE_API_BASE`.
    Remote {
        #[serde(default)]
        endpoint: Option<String>,
        model: String,
        #[serde(default)]
        temperature: Option<f64>,
        #[serde(default)]
        top_p: Option<f64>,
        #[serde(default)]
        timeout_secs: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub script: PathBuf,
    #[serde(default = "default_rounds")]
    pub rounds: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub language: Option<Language>,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_context_budget")]
    pub context_budget: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Games to play; game `i` uses seed `seed + i`.
    #[serde(default = "default_runs")]
    pub runs: u32,
    /// Row label in report tables.
    #[serde(default)]
    pub label: Option<String>,
    /// Directory of template overrides laid out as `<lang>/<kind>.txt`.
    #[serde(default)]
    pub templates: Option<PathBuf>,
    #[serde(default)]
    pub judge: Option<BackendSpec>,
    /// History summarizer; defaults to the judge.
    #[serde(default)]
    pub summarizer: Option<BackendSpec>,
    /// Used for characters without their own entry.
    #[serde(default)]
    pub default_backend: Option<BackendSpec>,
    #[serde(default)]
    pub characters: BTreeMap<String, BackendSpec>,
}

fn default_rounds() -> u32 {
    DEFAULT_ROUNDS
}
fn default_max_retries() -> u32 {
    DEFAULT_MAX_RETRIES
}
fn default_context_budget() -> usize {
    DEFAULT_CONTEXT_BUDGET
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}
fn default_runs() -> u32 {
    1
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Format(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Loads a config file; relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            config.resolve_paths(base);
        }
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.script);
        fix(&mut self.output_dir);
        if let Some(t) = &mut self.templates {
            fix(t);
        }
        let specs = self
            .judge
            .iter_mut()
            .chain(self.summarizer.iter_mut())
            .chain(self.default_backend.iter_mut())
            .chain(self.characters.values_mut());
        for spec in specs {
            if let BackendSpec::Scripted { playbook, .. } = spec {
                fix(playbook);
            }
        }
    }

    /// Checks the config against the script's character ids.
    pub fn validate(&self, characters: &[String]) -> Result<(), ConfigError> {
        if self.rounds == 0 {
            return Err(ConfigError::Invalid("rounds must be at least 1".into()));
        }
        if self.runs == 0 {
            return Err(ConfigError::Invalid("runs must be at least 1".into()));
        }
        if self.context_budget == 0 {
            return Err(ConfigError::Invalid("context_budget must be positive".into()));
        }
        if let Some(unknown) = self.characters.keys().find(|k| !characters.contains(k)) {
            return Err(ConfigError::Invalid(format!("`{unknown}` is not a character of the script")));
        }
        if self.default_backend.is_none() {
            if let Some(missing) = characters.iter().find(|c| !self.characters.contains_key(*c)) {
                return Err(ConfigError::Invalid(format!("no backend for `{missing}`")));
            }
        }
        Ok(())
    }

    pub fn backend_for(&self, character: &str) -> Option<&BackendSpec> {
        self.characters.get(character).or(self.default_backend.as_ref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEMO: &str = r#"
script = "mini_manor.json"
seed = 42

[judge]
kind = "random"
seed = 1

[default_backend]
kind = "random"
noise = 0.1

[characters."Madam Hong"]
kind = "scripted"
playbook = "hong.json"
cycle = true
"#;

    #[test]
    fn defaults_and_backends() {
        let mut config = RunConfig::from_toml(DEMO).unwrap();
        assert_eq!(config.rounds, 5);
        assert_eq!(config.max_retries, 3);
        assert_eq!(config.context_budget, 6000);
        assert_eq!(config.runs, 1);
        config.resolve_paths(Path::new("/cfg"));
        assert_eq!(config.script, PathBuf::from("/cfg/mini_manor.json"));
        assert_eq!(
            config.backend_for("Madam Hong"),
            Some(&BackendSpec::Scripted { playbook: "/cfg/hong.json".into(), cycle: true })
        );
        assert!(matches!(config.backend_for("Doctor Reed"), Some(BackendSpec::Random { .. })));
    }

    #[test]
    fn validation_rules() {
        let names = vec!["Madam Hong".to_string(), "Doctor Reed".to_string()];
        let config = RunConfig::from_toml(DEMO).unwrap();
        config.validate(&names).unwrap();
        let mut bad = config.clone();
        bad.default_backend = None;
        assert!(matches!(bad.validate(&names), Err(ConfigError::Invalid(m)) if m.contains("Doctor Reed")));
        let mut bad = config.clone();
        bad.rounds = 0;
        assert!(bad.validate(&names).is_err());
        assert!(config.validate(&["Doctor Reed".to_string()]).is_err());
        assert!(RunConfig::from_toml("script = 1").is_err());
        assert!(RunConfig::from_toml("script = \"a\"\nbogus = 1").is_err());
    }
}
