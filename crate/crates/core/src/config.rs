//! Run configuration, read from TOML.
//!
//! Relative paths are resolved against the directory holding the config
//! file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::catalog::CatalogFormat;
use crate::llm::EndpointConfig;
use crate::metrics::InvalidPolicy;
use crate::pairs::BlockingPolicy;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CatalogSource {
    Tabular,
    Jsonl,
    /// DrugBank-style XML; interactions come from the same document.
    DrugbankXml,
}

impl CatalogSource {
    pub fn normalized(self) -> Option<CatalogFormat> {
        match self {
            CatalogSource::Tabular => Some(CatalogFormat::Tabular),
            CatalogSource::Jsonl => Some(CatalogFormat::Jsonl),
            CatalogSource::DrugbankXml => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogConfig {
    pub path: PathBuf,
    pub format: CatalogSource,
    /// Known interactions as `drug1_id<TAB>drug2_id` rows. Required unless
    /// the catalog is XML.
    #[serde(default)]
    pub interactions: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalDataset {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairsConfig {
    pub blocking: BlockingPolicy,
    pub train_size: usize,
    pub validation_size: usize,
    /// Share of the balanced reference dataset held out from baseline
    /// training.
    pub baseline_holdout_fraction: f64,
    pub external: Vec<ExternalDataset>,
}

impl Default for PairsConfig {
    fn default() -> Self {
        Self {
            blocking: BlockingPolicy::default(),
            train_size: 1000,
            validation_size: 1090,
            baseline_holdout_fraction: 0.05,
            external: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub folds: usize,
    /// Replaces the default powers-of-ten grid when set.
    pub c_grid: Option<Vec<f64>>,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Dataset the baseline is fitted on.
    pub train_dataset: String,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            folds: 10,
            c_grid: None,
            tolerance: 1e-6,
            max_iterations: 10_000,
            train_dataset: crate::cli::BASELINE_TRAIN.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub repeats: u32,
    pub invalid_policy: InvalidPolicy,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            repeats: 5,
            invalid_policy: InvalidPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    pub catalog: CatalogConfig,
    #[serde(default)]
    pub pairs: PairsConfig,
    #[serde(default)]
    pub baseline: BaselineConfig,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    /// Named model endpoints.
    #[serde(default)]
    pub endpoints: BTreeMap<String, EndpointConfig>,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    /// Parses `text`, resolving relative paths against `base`.
    pub fn parse(text: &str, base: &Path, origin: &Path) -> Result<Self, ConfigError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), ConfigError> {
        let bytes = std::fs::read(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let text = std::str::from_utf8(&bytes).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Ok((Self::parse(text, base, path)?, bytes))
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out_dir);
        fix(&mut self.catalog.path);
        if let Some(p) = &mut self.catalog.interactions {
            fix(p);
        }
        for e in &mut self.pairs.external {
            fix(&mut e.path);
        }
        for ep in self.endpoints.values_mut() {
            if let crate::llm::TransportKind::Replay { path: Some(p) } = &mut ep.transport {
                fix(p);
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.catalog.format != CatalogSource::DrugbankXml && self.catalog.interactions.is_none() {
            return bad("catalog.interactions is required for tabular and jsonl catalogs".into());
        }
        for (what, n) in [
            ("pairs.train_size", self.pairs.train_size),
            ("pairs.validation_size", self.pairs.validation_size),
        ] {
            if n % 2 != 0 {
                return bad(format!("{what} must be even, got {n}"));
            }
        }
        let f = self.pairs.baseline_holdout_fraction;
        if !(f > 0.0 && f < 1.0) {
            return bad(format!("pairs.baseline_holdout_fraction must lie in (0, 1), got {f}"));
        }
        let mut names = std::collections::BTreeSet::new();
        for e in &self.pairs.external {
            if crate::cli::RESERVED_DATASETS.contains(&e.name.as_str()) || !names.insert(e.name.as_str()) {
                return bad(format!("external dataset name {:?} is reserved or repeated", e.name));
            }
            if e.name.is_empty() || e.name.contains(['/', '\\']) {
                return bad(format!("external dataset name {:?} is not a valid file stem", e.name));
            }
        }
        if self.baseline.folds < 2 {
            return bad(format!("baseline.folds must be at least 2, got {}", self.baseline.folds));
        }
        if let Some(grid) = &self.baseline.c_grid {
            if grid.is_empty() || grid.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
                return bad("baseline.c_grid must be non-empty with positive finite values".into());
            }
        }
        if self.evaluation.repeats < 1 {
            return bad("evaluation.repeats must be at least 1".into());
        }
        for (name, ep) in &self.endpoints {
            if name.is_empty() || name.contains(['/', '\\']) {
                return bad(format!("endpoint name {name:?} is not a valid file stem"));
            }
            if ep.model_name.is_empty() {
                return bad(format!("endpoints.{name}.model_name is empty"));
            }
        }
        Ok(())
    }

    /// Seed for a sampling step; a missing seed is a configuration error.
    pub fn require_seed(&self) -> Result<u64, ConfigError> {
        self.seed
            .ok_or_else(|| ConfigError::Invalid("a seed is required for sampling (set `seed` or pass --seed)".into()))
    }

    pub fn c_grid(&self) -> Vec<f64> {
        self.baseline
            .c_grid
            .clone()
            .unwrap_or_else(crate::baseline::default_c_grid)
    }
}
