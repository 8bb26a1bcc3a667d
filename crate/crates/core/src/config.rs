//! TOML pipeline configuration.
//!
//! ```toml
//! output_dir = "out"
//! parallelism = 4
//!
//! [responder]
//! kind = "oracle"            # oracle | replay | http
//! world = "world.json"       # oracle
//! transcript = ["a.jsonl"]   # replay; a single string also works
//!
//! [responder.http]
//! endpoint = "http://localhost:8000/v1/chat/completions"
//! model = "my-model"
//!
//! [mining]
//! n = 10
//!
//! [sampling]
//! r = 200
//! ```
//!
//! Relative paths resolve against the config file's directory.
//! `UNLEARNKIT_ENDPOINT` overrides the HTTP endpoint; the bearer token is read
//! from the variable named by `api_key_env` (default `UNLEARNKIT_API_KEY`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::elicit::http::{HttpConfig, HttpResponder};
use crate::elicit::{MiningConfig, ReplayResponder, Responder};
use crate::oracle::{OracleResponder, OracleWorld};
use crate::sampler::SamplingConfig;

pub const ENDPOINT_ENV: &str = "UNLEARNKIT_ENDPOINT";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{field} file not found: {path}")]
    MissingFile { field: &'static str, path: PathBuf },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponderKind {
    #[default]
    Oracle,
    Replay,
    Http,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(PathBuf),
    Many(Vec<PathBuf>),
}

impl OneOrMany {
    pub fn paths(&self) -> Vec<PathBuf> {
        match self {
            OneOrMany::One(p) => vec![p.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResponderConfig {
    pub kind: ResponderKind,
    pub world: Option<PathBuf>,
    pub transcript: Option<OneOrMany>,
    pub http: HttpConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub responder: ResponderConfig,
    pub mining: MiningConfig,
    pub sampling: SamplingConfig,
    pub output_dir: PathBuf,
    pub parallelism: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            responder: ResponderConfig::default(),
            mining: MiningConfig::default(),
            sampling: SamplingConfig::default(),
            output_dir: PathBuf::from("out"),
            parallelism: 4,
        }
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl PipelineConfig {
    /// Reads, resolves, applies environment overrides and validates.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse { path: path.to_path_buf(), message },
            other => other,
        })
    }

    /// Parses `text`, resolving relative paths against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: PathBuf::from("<inline>"),
            message: e.message().to_string(),
        })?;
        cfg.output_dir = resolve(base, &cfg.output_dir);
        if let Some(w) = &cfg.responder.world {
            cfg.responder.world = Some(resolve(base, w));
        }
        if let Some(t) = &cfg.responder.transcript {
            cfg.responder.transcript = Some(OneOrMany::Many(t.paths().iter().map(|p| resolve(base, p)).collect()));
        }
        if let Ok(endpoint) = std::env::var(ENDPOINT_ENV) {
            if !endpoint.is_empty() {
                cfg.responder.http.endpoint = endpoint;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.mining.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.sampling.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.parallelism < 1 {
            return Err(ConfigError::Invalid("parallelism must be >= 1".into()));
        }
        let r = &self.responder;
        match r.kind {
            ResponderKind::Oracle => {
                let w = r.world.as_ref().ok_or_else(|| ConfigError::Invalid("oracle responder needs `world`".into()))?;
                if !w.is_file() {
                    return Err(ConfigError::MissingFile { field: "world", path: w.clone() });
                }
            }
            ResponderKind::Replay => {
                let paths = r.transcript.as_ref().map(OneOrMany::paths).unwrap_or_default();
                if paths.is_empty() {
                    return Err(ConfigError::Invalid("replay responder needs `transcript`".into()));
                }
                if let Some(p) = paths.iter().find(|p| !p.is_file()) {
                    return Err(ConfigError::MissingFile { field: "transcript", path: p.clone() });
                }
            }
            ResponderKind::Http => {
                if r.http.endpoint.trim().is_empty() {
                    return Err(ConfigError::Invalid("http responder needs an endpoint".into()));
                }
            }
        }
        Ok(())
    }

    /// Sets every seed the run uses.
    pub fn set_seed(&mut self, seed: u64) {
        self.mining.seed = seed;
        self.sampling.seed = seed;
        if self.responder.kind == ResponderKind::Http {
            self.responder.http.seed = Some(seed);
        }
    }

    pub fn build_responder(&self) -> Result<Box<dyn Responder>, ConfigError> {
        let r = &self.responder;
        Ok(match r.kind {
            ResponderKind::Oracle => {
                let path = r.world.as_deref().ok_or_else(|| ConfigError::Invalid("missing `world`".into()))?;
                let world = OracleWorld::load(path).map_err(|e| ConfigError::Invalid(e.to_string()))?;
                Box::new(OracleResponder::new(world).map_err(|e| ConfigError::Invalid(e.to_string()))?)
            }
            ResponderKind::Replay => {
                let paths = r.transcript.as_ref().map(OneOrMany::paths).unwrap_or_default();
                Box::new(ReplayResponder::from_files(&paths).map_err(|e| ConfigError::Invalid(e.to_string()))?)
            }
            ResponderKind::Http => Box::new(HttpResponder::new(r.http.clone())),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_resolution() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("w.json"), r#"{"seed":1,"facts":[]}"#).unwrap();
        let cfg = PipelineConfig::from_toml(
            "[responder]\nkind = \"oracle\"\nworld = \"w.json\"\n[mining]\ntau = 0.3\nk = 3\n",
            dir.path(),
        )
        .unwrap();
        assert_eq!(cfg.responder.world.as_deref(), Some(dir.path().join("w.json").as_path()));
        assert_eq!(cfg.output_dir, dir.path().join("out"));
        assert_eq!(cfg.mining, MiningConfig::sparse());
        assert_eq!(cfg.sampling, SamplingConfig::rich());
        assert_eq!(cfg.parallelism, 4);
        assert!(cfg.build_responder().is_ok());
    }

    #[test]
    fn missing_files_and_bad_fields() {
        let dir = tempfile::tempdir().unwrap();
        let err = PipelineConfig::from_toml("[responder]\nworld = \"nope.json\"\n", dir.path()).unwrap_err();
        assert!(matches!(err, ConfigError::MissingFile { field: "world", .. }));
        assert!(err.to_string().contains("nope.json"));

        let err = PipelineConfig::from_toml("[responder]\nkind = \"replay\"\ntranscript = \"t.jsonl\"\n", dir.path()).unwrap_err();
        assert!(matches!(err, ConfigError::MissingFile { field: "transcript", .. }));

        assert!(matches!(
            PipelineConfig::from_toml("bogus = 1\n", dir.path()),
            Err(ConfigError::Parse { .. })
        ));
        assert!(matches!(
            PipelineConfig::from_toml("[responder]\nkind = \"http\"\n[sampling]\neta = 2.0\n", dir.path()),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn transcript_accepts_list() {
        let dir = tempfile::tempdir().unwrap();
        for f in ["a.jsonl", "b.jsonl"] {
            std::fs::write(dir.path().join(f), "").unwrap();
        }
        let cfg = PipelineConfig::from_toml(
            "[responder]\nkind = \"replay\"\ntranscript = [\"a.jsonl\", \"b.jsonl\"]\n",
            dir.path(),
        )
        .unwrap();
        assert_eq!(cfg.responder.transcript.unwrap().paths().len(), 2);
    }
}
