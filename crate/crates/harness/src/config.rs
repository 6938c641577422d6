//! Session configuration file.
//!
//! ```json
//! {
//!   "mapping": { "mode": "granular", "grain_param": "order" },
//!   "script": "wave.json",
//!   "source": "voice.wav",
//!   "output": "out.wav"
//! }
//! ```
//!
//! Relative paths are resolved against the directory holding the config.

use std::path::{Path, PathBuf};

use matrix_core::mapping::{ConfigError, MappingConfig, SynthMode};
use matrix_core::synth::DEFAULT_SAMPLE_RATE;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed session config: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Mapping(#[from] ConfigError),
    #[error("session needs exactly one input: a script path or \"live\": true")]
    InputSource,
    #[error("granular mode needs a source WAV")]
    MissingSource,
    #[error("{0}")]
    Invalid(String),
}

/// Which additive renderer to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdditiveRenderer {
    #[default]
    Bank,
    Ifft,
}

fn d_output() -> PathBuf {
    PathBuf::from("out.wav")
}

fn d_sample_rate() -> u32 {
    DEFAULT_SAMPLE_RATE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    pub mapping: MappingConfig,
    #[serde(default)]
    pub script: Option<PathBuf>,
    #[serde(default)]
    pub live: bool,
    /// Source audio for granular mode.
    #[serde(default)]
    pub source: Option<PathBuf>,
    /// `host:port` receiving `/matrix/frame` packets.
    #[serde(default)]
    pub osc_destination: Option<String>,
    #[serde(default)]
    pub serve_port: Option<u16>,
    #[serde(default = "d_output")]
    pub output: PathBuf,
    /// Run report path; defaults to the output path with a `.json` extension.
    #[serde(default)]
    pub report: Option<PathBuf>,
    /// Where to dump the serial byte stream, for `matrix decode`.
    #[serde(default)]
    pub capture: Option<PathBuf>,
    #[serde(default = "d_sample_rate")]
    pub sample_rate: u32,
    #[serde(default)]
    pub additive_renderer: AdditiveRenderer,
}

impl SessionConfig {
    /// A scripted session with defaults for everything else.
    pub fn scripted(mapping: MappingConfig, script: impl Into<PathBuf>) -> Self {
        Self {
            mapping,
            script: Some(script.into()),
            live: false,
            source: None,
            osc_destination: None,
            serve_port: None,
            output: d_output(),
            report: None,
            capture: None,
            sample_rate: d_sample_rate(),
            additive_renderer: AdditiveRenderer::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, SessionError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads and validates a config, resolving relative paths.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SessionError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SessionError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(dir) = path.parent() {
            cfg.resolve_relative_to(dir);
        }
        Ok(cfg)
    }

    pub fn resolve_relative_to(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        self.script.as_mut().map(fix);
        self.source.as_mut().map(fix);
        self.report.as_mut().map(fix);
        self.capture.as_mut().map(fix);
        fix(&mut self.output);
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        self.mapping.validate()?;
        if self.script.is_some() == self.live {
            return Err(SessionError::InputSource);
        }
        if self.mapping.mode == SynthMode::Granular && self.source.is_none() {
            return Err(SessionError::MissingSource);
        }
        if self.sample_rate == 0 {
            return Err(SessionError::Invalid("sample_rate must be positive".into()));
        }
        Ok(())
    }

    pub fn report_path(&self) -> PathBuf {
        self.report
            .clone()
            .unwrap_or_else(|| self.output.with_extension("json"))
    }
}
