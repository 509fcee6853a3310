//! Run configuration: defaults, TOML file loading, and validation.
//!
//! Every knob has a default, a config file overrides defaults, and CLI
//! flags override the file. Unknown file keys are rejected so typos
//! surface instead of silently reverting to defaults.

use crate::backend::GenerationParams;
use crate::eval::TokenizeMode;
use crate::model::Locale;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Mock,
    Http,
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mock" => Ok(BackendKind::Mock),
            "http" => Ok(BackendKind::Http),
            other => Err(format!(
                "unknown backend {other:?}, expected \"mock\" or \"http\""
            )),
        }
    }
}

/// Tokenizer selection for evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenizerChoice {
    /// Per reference: character mode for Hangul, word mode otherwise.
    Auto,
    Word,
    Char,
}

impl TokenizerChoice {
    pub fn mode_override(self) -> Option<TokenizeMode> {
        match self {
            TokenizerChoice::Auto => None,
            TokenizerChoice::Word => Some(TokenizeMode::Word),
            TokenizerChoice::Char => Some(TokenizeMode::Char),
        }
    }
}

impl std::str::FromStr for TokenizerChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(TokenizerChoice::Auto),
            "word" => Ok(TokenizerChoice::Word),
            "char" => Ok(TokenizerChoice::Char),
            other => Err(format!(
                "unknown tokenizer {other:?}, expected \"auto\", \"word\", or \"char\""
            )),
        }
    }
}

/// The complete, validated configuration for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub backend: BackendKind,
    pub endpoint: String,
    pub model: String,
    /// Environment variable naming the bearer token for the HTTP backend.
    pub api_key_env: String,
    pub mock_script: Option<PathBuf>,
    pub locale: Locale,
    pub persona: bool,
    pub theme_instruction: bool,
    pub max_regeneration: u32,
    pub parallelism: usize,
    pub glossary: Option<PathBuf>,
    pub template_dir: Option<PathBuf>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub stop_sequences: Vec<String>,
    pub timeout_secs: u64,
    pub retries: u32,
    pub tokenizer: TokenizerChoice,
    pub skip_invalid: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            backend: BackendKind::Mock,
            endpoint: String::new(),
            model: "default".into(),
            api_key_env: "TABTX_API_KEY".into(),
            mock_script: None,
            locale: Locale::En,
            persona: true,
            theme_instruction: true,
            max_regeneration: 1,
            parallelism: 1,
            glossary: None,
            template_dir: None,
            temperature: 0.0,
            max_tokens: 512,
            stop_sequences: Vec::new(),
            timeout_secs: 30,
            retries: 2,
            tokenizer: TokenizerChoice::Auto,
            skip_invalid: false,
        }
    }
}

impl RunConfig {
    /// The per-request parameters this configuration implies.
    pub fn generation_params(&self) -> GenerationParams {
        GenerationParams {
            temperature: self.temperature,
            max_tokens: self.max_tokens,
            stop_sequences: self.stop_sequences.clone(),
            timeout: Duration::from_secs(self.timeout_secs),
            retries: self.retries,
        }
    }

    /// Reject inconsistent settings before any work starts.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.parallelism < 1 {
            return Err(ConfigError::Invalid(
                "parallelism must be at least 1".into(),
            ));
        }
        if self.backend == BackendKind::Http && self.endpoint.trim().is_empty() {
            return Err(ConfigError::Invalid(
                "http backend requires an endpoint".into(),
            ));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(ConfigError::Invalid(
                "temperature must lie in [0, 2]".into(),
            ));
        }
        if self.max_tokens == 0 {
            return Err(ConfigError::Invalid("max_tokens must be positive".into()));
        }
        Ok(())
    }
}

/// The TOML shape: everything optional, unknown keys rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfigFile {
    backend: Option<BackendKind>,
    endpoint: Option<String>,
    model: Option<String>,
    api_key_env: Option<String>,
    mock_script: Option<PathBuf>,
    locale: Option<Locale>,
    persona: Option<bool>,
    theme_instruction: Option<bool>,
    max_regeneration: Option<u32>,
    parallelism: Option<usize>,
    glossary: Option<PathBuf>,
    template_dir: Option<PathBuf>,
    temperature: Option<f64>,
    max_tokens: Option<u32>,
    stop_sequences: Option<Vec<String>>,
    timeout_secs: Option<u64>,
    retries: Option<u32>,
    tokenizer: Option<TokenizerChoice>,
    skip_invalid: Option<bool>,
}

impl RunConfig {
    /// Defaults overlaid with the file's settings.
    pub fn from_file(path: impl AsRef<Path>) -> Result<RunConfig, ConfigError> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: RunConfigFile = toml::from_str(&raw).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;

        let mut config = RunConfig::default();
        macro_rules! overlay {
            ($($field:ident),* $(,)?) => {
                $(if let Some(value) = file.$field {
                    config.$field = value;
                })*
            };
        }
        overlay!(
            backend,
            endpoint,
            model,
            api_key_env,
            locale,
            persona,
            theme_instruction,
            max_regeneration,
            parallelism,
            temperature,
            max_tokens,
            stop_sequences,
            timeout_secs,
            retries,
            tokenizer,
            skip_invalid,
        );
        config.mock_script = file.mock_script.or(config.mock_script);
        config.glossary = file.glossary.or(config.glossary);
        config.template_dir = file.template_dir.or(config.template_dir);
        config.validate()?;
        Ok(config)
    }
}
