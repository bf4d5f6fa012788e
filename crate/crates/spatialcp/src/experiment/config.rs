//! Experiment configuration: a TOML file with every knob defaulted so an
//! empty config runs the full desk-scale study.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::conformal::{SchemeKind, DEFAULT_ETA_KM2};
use crate::error::{Error, Result};

/// Point-prediction models in the study grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Ols,
    RandomForest,
    Gbt,
    Spatial,
}

impl ModelKind {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Ols => "ols",
            Self::RandomForest => "random_forest",
            Self::Gbt => "gbt",
            Self::Spatial => "spatial",
        }
    }
}

/// Score kinds in the study grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    Standard,
    Normalized1,
    Normalized2,
    Normalized3,
    Cqr,
    Oracle,
}

impl ScoreKind {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Standard => "standard",
            Self::Normalized1 => "normalized1",
            Self::Normalized2 => "normalized2",
            Self::Normalized3 => "normalized3",
            Self::Cqr => "cqr",
            Self::Oracle => "oracle",
        }
    }

    /// CQR is tied to the random forest and the oracle score to the
    /// spatial regression; everything else runs with every model.
    pub fn defined_for(&self, model: ModelKind) -> bool {
        match self {
            Self::Cqr => model == ModelKind::RandomForest,
            Self::Oracle => model == ModelKind::Spatial,
            _ => true,
        }
    }
}

impl SchemeKind {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Cp => "cp",
            Self::Mcp => "mcp",
            Self::Scp => "scp",
            Self::Nncp => "nncp",
            Self::Fwcp => "fwcp",
        }
    }
}

/// Where the per-seed datasets come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    /// Generate covariates and responses in memory per seed.
    #[default]
    Synthetic,
    /// Subsample one real-schema CSV per seed.
    Csv,
    /// Consume the per-seed files written by `simulate`.
    Simulated,
}

/// A resolved data source.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic,
    Csv { path: String },
    Simulated { dir: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub source: SourceKind,
    /// CSV path (source = "csv").
    pub path: Option<String>,
    /// Directory of simulated per-seed files (source = "simulated").
    pub dir: Option<String>,
    /// Dataset size per replication.
    pub n: usize,
    /// Number of replications.
    pub seeds: u64,
    /// Base of the per-replication seed sequence.
    pub base_seed: u64,
    /// Train / calibration / test fractions.
    pub fractions: (f64, f64, f64),
}

impl DataConfig {
    pub fn resolved_source(&self) -> Result<DataSource> {
        match self.source {
            SourceKind::Synthetic => Ok(DataSource::Synthetic),
            SourceKind::Csv => self
                .path
                .clone()
                .map(|path| DataSource::Csv { path })
                .ok_or_else(|| Error::Config("source = \"csv\" needs a path".into())),
            SourceKind::Simulated => self
                .dir
                .clone()
                .map(|dir| DataSource::Simulated { dir })
                .ok_or_else(|| Error::Config("source = \"simulated\" needs a dir".into())),
        }
    }
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            source: SourceKind::Synthetic,
            path: None,
            dir: None,
            n: 1500,
            seeds: 10,
            base_seed: 2024,
            fractions: (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0),
        }
    }
}

/// Parameters of the synthetic response mechanism. The inverse range is
/// the published estimate; the variances are placeholders on the sale
/// price scale (squared millions).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DgpConfig {
    pub sigma_eps2: f64,
    pub sigma2: f64,
    pub rho: f64,
}

impl Default for DgpConfig {
    fn default() -> Self {
        Self {
            sigma_eps2: 0.5,
            sigma2: 0.2,
            rho: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CpConfig {
    /// Miscoverage level; sets are built at confidence `1 - alpha`.
    pub alpha: f64,
    /// Spatial kernel bandwidth in km^2.
    pub eta_km2: f64,
    /// Hard neighborhood radius in km.
    pub neighbor_radius_km: f64,
}

impl Default for CpConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            eta_km2: DEFAULT_ETA_KM2,
            neighbor_radius_km: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub rf_trees: usize,
    pub rf_min_leaf: usize,
    pub gbt_trees: usize,
    pub gbt_max_depth: usize,
    pub gbt_learning_rate: f64,
    pub qrf_trees: usize,
    pub qrf_min_leaf: usize,
    /// Trees and depth of the proximity forest behind feature weighting.
    pub proximity_trees: usize,
    pub proximity_max_depth: usize,
    /// Initial inverse range for the spatial MLE.
    pub mle_rho_init: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            rf_trees: 500,
            rf_min_leaf: 5,
            gbt_trees: 1000,
            gbt_max_depth: 4,
            gbt_learning_rate: 0.03,
            qrf_trees: 500,
            qrf_min_leaf: 40,
            proximity_trees: 500,
            proximity_max_depth: 6,
            mle_rho_init: 4.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub models: Vec<ModelKind>,
    pub scores: Vec<ScoreKind>,
    pub schemes: Vec<SchemeKind>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            models: vec![
                ModelKind::Ols,
                ModelKind::RandomForest,
                ModelKind::Gbt,
                ModelKind::Spatial,
            ],
            scores: vec![
                ScoreKind::Standard,
                ScoreKind::Normalized1,
                ScoreKind::Normalized2,
                ScoreKind::Normalized3,
                ScoreKind::Cqr,
                ScoreKind::Oracle,
            ],
            schemes: vec![
                SchemeKind::Cp,
                SchemeKind::Mcp,
                SchemeKind::Scp,
                SchemeKind::Nncp,
                SchemeKind::Fwcp,
            ],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
    /// Also write one row per test instance and cell.
    pub predictions: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: "results".into(),
            predictions: false,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub dgp: DgpConfig,
    pub cp: CpConfig,
    pub models: ModelConfig,
    pub grid: GridConfig,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = std::fs::read_to_string(&path).map_err(|e| {
            Error::Config(format!("cannot read {}: {e}", path.as_ref().display()))
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.seeds == 0 {
            return Err(Error::Config("need at least one seed".into()));
        }
        if self.data.n < 30 {
            return Err(Error::Config("dataset size must be at least 30".into()));
        }
        if !(self.cp.alpha > 0.0 && self.cp.alpha < 1.0) {
            return Err(Error::Config("alpha must be in (0, 1)".into()));
        }
        if !(self.cp.eta_km2 > 0.0) {
            return Err(Error::Config("eta_km2 must be positive".into()));
        }
        if !(self.cp.neighbor_radius_km > 0.0) {
            return Err(Error::Config("neighbor_radius_km must be positive".into()));
        }
        let (f1, f2, f3) = self.data.fractions;
        if !(f1 > 0.0 && f2 > 0.0 && f3 > 0.0) || (f1 + f2 + f3 - 1.0).abs() > 1e-9 {
            return Err(Error::Config("fractions must be positive and sum to 1".into()));
        }
        if self.grid.models.is_empty() || self.grid.scores.is_empty() || self.grid.schemes.is_empty()
        {
            return Err(Error::Config("grid must name at least one model, score, and scheme".into()));
        }
        self.data.resolved_source()?;
        Ok(())
    }

    /// The per-replication seed sequence.
    pub fn seed_for(&self, replication: u64) -> u64 {
        self.data.base_seed.wrapping_add(replication)
    }
}
