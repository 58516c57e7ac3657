use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::dom::FilterPolicy;
use crate::matching::MatchConfig;
use crate::metrics::{EmbedError, Embedder, FallbackEmbedder, SidecarEmbedder};
use crate::model::GenerationConfig;
use crate::render::{RendererConfig, Viewport};

use super::BatchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedderKind {
    #[default]
    Fallback,
    Sidecar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedderConfig {
    pub kind: EmbedderKind,
    pub url: String,
    pub timeout_secs: f64,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        EmbedderConfig {
            kind: EmbedderKind::Fallback,
            url: "http://127.0.0.1:8765".into(),
            timeout_secs: 60.0,
        }
    }
}

impl EmbedderConfig {
    pub fn build(&self) -> Result<Box<dyn Embedder>, EmbedError> {
        Ok(match self.kind {
            EmbedderKind::Fallback => Box::new(FallbackEmbedder),
            EmbedderKind::Sidecar => Box::new(SidecarEmbedder::connect(
                &self.url,
                Duration::from_secs_f64(self.timeout_secs.max(0.001)),
            )?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurationConfig {
    pub placeholder: String,
    #[serde(flatten)]
    pub policy: FilterPolicy,
}

impl Default for CurationConfig {
    fn default() -> Self {
        CurationConfig {
            placeholder: "rick.jpg".into(),
            policy: FilterPolicy::default(),
        }
    }
}

/// Everything a batch run needs, loaded from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub reference_dir: Option<PathBuf>,
    pub candidate_dir: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub parallel: usize,
    pub viewport: Viewport,
    pub renderer: RendererConfig,
    pub embedder: EmbedderConfig,
    pub matching: MatchConfig,
    pub curation: CurationConfig,
    /// Named generation endpoints; `generate --model <name>` picks one.
    pub models: BTreeMap<String, GenerationConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            reference_dir: None,
            candidate_dir: None,
            output_dir: PathBuf::from("pagefidelity-out"),
            parallel: 1,
            viewport: Viewport::default(),
            renderer: RendererConfig::default(),
            embedder: EmbedderConfig::default(),
            matching: MatchConfig::default(),
            curation: CurationConfig::default(),
            models: BTreeMap::new(),
        }
    }
}

impl RunConfig {
    /// Parses TOML. Relative paths are resolved against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, BatchError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| BatchError::Config(e.to_string()))?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.reference_dir.as_mut().map(resolve);
        cfg.candidate_dir.as_mut().map(resolve);
        resolve(&mut cfg.output_dir);
        if let Some(c) = cfg.renderer.command.as_mut() {
            if c.components().count() > 1 {
                resolve(c);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, BatchError> {
        let text = std::fs::read_to_string(path).map_err(|e| BatchError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<(), BatchError> {
        if self.parallel == 0 {
            return Err(BatchError::Config("parallel must be at least 1".into()));
        }
        self.viewport
            .validate()
            .map_err(|e| BatchError::Config(e.to_string()))?;
        for p in [&self.reference_dir, &self.candidate_dir].into_iter().flatten() {
            if !p.is_dir() {
                return Err(BatchError::Config(format!("{} does not exist", p.display())));
            }
        }
        for (name, m) in &self.models {
            m.validate().map_err(|e| BatchError::Config(format!("models.{name}: {e}")))?;
        }
        Ok(())
    }

    /// Generation settings by name: configured models first, then built-in
    /// profiles.
    pub fn model(&self, name: &str) -> Option<GenerationConfig> {
        self.models
            .get(name)
            .cloned()
            .or_else(|| GenerationConfig::profile(name))
    }
}
