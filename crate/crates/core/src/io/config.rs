//! TOML run configuration.
//!
//! ```toml
//! seed = 7
//!
//! [dataset]
//! path = "curves.csv"
//! format = "csv_rows"
//!
//! [grid]
//! c_grid = [0.1, 1.0, 10.0]
//! penalty = { kind = "step", threshold = 100, high = 1000.0 }
//!
//! [[grid.blocks]]
//! projection = { family = "fourier" }
//! dimensions = [1, 2, 3, 4, 5]
//! kernels = [{ kind = "gaussian", sigma = 1.0 }]
//!
//! [split]
//! rule = "fraction"
//! fraction = 0.5
//!
//! [protocol]
//! kind = "repeated_splits"
//! count = 10
//! training = 120
//! seed = 0
//! inner = { rule = "fixed", training = 60, policy = "seeded_shuffle" }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::dataset::DatasetDescriptor;
use crate::error::{Error, Result};
use crate::eval::{derive_seed, Protocol, ProtocolSpec};
use crate::select::{validate_grid, CandidateGrid, GridSpec, GridWarning, SplitParams, SplitPolicy, SplitRule};
use crate::svm::SolverOptions;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: Option<f64>,
    pub max_iterations: Option<u64>,
}

impl SolverConfig {
    pub fn options(&self) -> SolverOptions {
        let mut o = SolverOptions::default();
        if let Some(t) = self.tol {
            o.tol = t;
        }
        if let Some(m) = self.max_iterations {
            o.max_iterations = m;
        }
        o
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    pub dataset: Option<DatasetDescriptor>,
    pub grid: Option<GridSpec>,
    #[serde(default = "default_split")]
    pub split: SplitParams,
    #[serde(default)]
    pub protocol: Option<ProtocolSpec>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_split() -> SplitParams {
    SplitParams {
        rule: SplitRule::Fraction { fraction: 0.5 },
        policy: SplitPolicy::FirstL,
        seed: 0,
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: None,
            dataset: None,
            grid: None,
            split: default_split(),
            protocol: None,
            solver: SolverConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    /// Reads a config; a relative dataset path is resolved against the
    /// config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let (Some(ds), Some(base)) = (cfg.dataset.take(), path.parent()) {
            cfg.dataset = Some(ds.relative_to(base));
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    /// Sets every seed of the run from one value: the selection split, the
    /// outer protocol and the inner splits.
    pub fn apply_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.split.seed = seed;
        if let Some(p) = &mut self.protocol {
            match &mut p.protocol {
                Protocol::RepeatedSplits { seed: s, .. } | Protocol::KFold { seed: s, .. } => *s = seed,
                Protocol::LeaveOneOut | Protocol::FixedSplit { .. } => {}
            }
            p.inner.seed = derive_seed(seed, u64::MAX);
        }
    }

    pub fn candidate_grid(&self) -> Result<CandidateGrid> {
        self.grid
            .as_ref()
            .ok_or_else(|| Error::Config("config has no [grid] section".into()))?
            .expand()
    }

    /// Expanded grid with its hypothesis warnings.
    pub fn checked_grid(&self) -> Result<(CandidateGrid, Vec<GridWarning>)> {
        let grid = self.candidate_grid()?;
        let schedule = match self.split.rule {
            SplitRule::Fixed { .. } => None,
            rule => Some(rule),
        };
        let warnings = validate_grid(&grid, schedule.as_ref());
        Ok((grid, warnings))
    }

    pub fn dataset(&self) -> Result<&DatasetDescriptor> {
        self.dataset
            .as_ref()
            .ok_or_else(|| Error::Config("config has no [dataset] section".into()))
    }

    pub fn protocol(&self) -> Result<ProtocolSpec> {
        self.protocol
            .ok_or_else(|| Error::Config("config has no [protocol] section".into()))
    }
}
