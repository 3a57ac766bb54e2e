//! Run configuration: built-in defaults, overridden by a TOML file, overridden by flags.

use std::path::{Path, PathBuf};

use anyhow::Context;
use rumour_core::classifiers::TrainConfig;
use rumour_core::features::FeatureConfig;
use rumour_core::resources::{ResourcePaths, Resources};
use rumour_core::sampling::{PairPlacement, DEFAULT_REPLACE_FRACTION};
use rumour_core::veracity::{HmmOptions, StructureMode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::UsageError;

pub const RESOURCES_ENV: &str = "RUMOUR_RESOURCES";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourceSection {
    /// Directory holding the conventionally named resource files.
    pub dir: Option<PathBuf>,
    /// Per-file overrides; relative paths are resolved against the config file.
    pub files: ResourcePaths,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    pub folds: usize,
    pub inner_folds: usize,
    pub random_samples: usize,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        EvaluationSection { folds: 5, inner_folds: 3, random_samples: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSection {
    pub replace_fraction: f64,
    pub placement: PairPlacement,
}

impl Default for SamplingSection {
    fn default() -> Self {
        SamplingSection { replace_fraction: DEFAULT_REPLACE_FRACTION, placement: PairPlacement::CoLocated }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VeracitySection {
    pub structure: StructureMode,
    /// Keep only PHEME rumours with enough replies in events with enough rumours.
    pub filter_pheme: bool,
    pub hmm: HmmOptions,
}

impl Default for VeracitySection {
    fn default() -> Self {
        VeracitySection { structure: StructureMode::Bas, filter_pheme: true, hmm: HmmOptions::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Annotated corpus directory.
    pub data: Option<PathBuf>,
    pub resources: ResourceSection,
    pub features: FeatureConfig,
    pub model: TrainConfig,
    pub evaluation: EvaluationSection,
    pub sampling: SamplingSection,
    pub veracity: VeracitySection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).map_err(|e| UsageError(format!("invalid config: {e}")).into())
    }

    /// Read `path`, resolving relative paths inside it against the file's directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).with_context(|| path.display().to_string())?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(q) = p {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        fix(&mut cfg.data);
        fix(&mut cfg.resources.dir);
        cfg.resources.files = cfg.resources.files.resolved(base);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Short digest of the effective configuration.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serialises");
        hex::encode(&Sha256::digest(canonical.as_bytes())[..6])
    }

    /// Propagate the run seed into every component that takes one.
    pub fn apply_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.model.seed = seed;
        self.veracity.hmm.em.seed = seed;
    }

    pub fn data_dir(&self) -> anyhow::Result<&Path> {
        self.data
            .as_deref()
            .ok_or_else(|| UsageError("no corpus directory; pass --data or set `data` in the config".into()).into())
    }

    pub fn resource_paths(&self) -> ResourcePaths {
        let mut paths = self.resources.dir.as_deref().map(ResourcePaths::in_dir).unwrap_or_default();
        let f = &self.resources.files;
        let over = |dst: &mut Option<PathBuf>, src: &Option<PathBuf>| {
            if src.is_some() {
                dst.clone_from(src);
            }
        };
        over(&mut paths.sentiment, &f.sentiment);
        over(&mut paths.negation, &f.negation);
        over(&mut paths.swear, &f.swear);
        over(&mut paths.positive_smileys, &f.positive_smileys);
        over(&mut paths.negative_smileys, &f.negative_smileys);
        over(&mut paths.synonyms, &f.synonyms);
        over(&mut paths.vectors, &f.vectors);
        over(&mut paths.pos, &f.pos);
        paths
    }

    pub fn load_resources(&self) -> anyhow::Result<Resources> {
        if let Some(d) = &self.resources.dir {
            if !d.is_dir() {
                return Err(UsageError(format!("resource directory {} does not exist", d.display())).into());
            }
        }
        let paths = self.resource_paths();
        if paths == ResourcePaths::default() {
            log::warn!("no resources configured; lexicon, sentiment and embedding features are unavailable");
        }
        Ok(Resources::load(&paths)?)
    }
}

/// Overrides collected from command-line flags.
#[derive(Debug, Default)]
pub struct Overrides {
    pub data: Option<PathBuf>,
    pub resources: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Defaults, then `file`, then the resource environment variable, then flags.
pub fn effective(file: Option<&Path>, env_resources: Option<PathBuf>, flags: Overrides) -> anyhow::Result<RunConfig> {
    let mut cfg = match file {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = env_resources {
        cfg.resources.dir = Some(dir);
    }
    if let Some(dir) = flags.resources {
        cfg.resources.dir = Some(dir);
    }
    if let Some(d) = flags.data {
        cfg.data = Some(d);
    }
    let seed = flags.seed.unwrap_or(cfg.seed);
    cfg.apply_seed(seed);
    Ok(cfg)
}
