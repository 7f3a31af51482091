//! Sweep configuration files and the built-in ensemble presets.

use std::path::Path;

use bethe_core::experiments::beta_grid;
use bethe_core::optimizer::{InitialMetric, OptimizerConfig};
use bethe_core::{GraphFamily, Topology};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Graph family as written in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphShape {
    Grid { rows: usize, cols: usize },
    Complete { n: usize },
    ErdosRenyi { n: usize, p: f64 },
}

impl GraphShape {
    pub fn topology(&self) -> Topology {
        match *self {
            GraphShape::Grid { rows, cols } => Topology::Grid { rows, cols },
            GraphShape::Complete { n } => Topology::Complete { n },
            GraphShape::ErdosRenyi { n, p } => Topology::ErdosRenyi { n, p },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ensemble {
    pub graph: GraphShape,
    pub coupling_range: (f64, f64),
    pub field_range: (f64, f64),
}

impl Ensemble {
    pub fn family(&self, seed: u64) -> GraphFamily {
        GraphFamily {
            topology: self.graph.topology(),
            coupling_range: self.coupling_range,
            field_range: self.field_range,
            seed,
        }
    }
}

/// Optimizer settings; every field defaults to [`OptimizerConfig::default`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSettings {
    pub epsilon: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub projection_shrink: f64,
    pub expansion: f64,
    pub max_iterations: usize,
    pub max_line_search_steps: usize,
    pub random_initial_metric: bool,
    pub random_initial_step: bool,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        let c = OptimizerConfig::default();
        Self {
            epsilon: c.epsilon,
            tau1: c.tau1,
            tau2: c.tau2,
            projection_shrink: c.projection_shrink,
            expansion: c.expansion,
            max_iterations: c.max_iterations,
            max_line_search_steps: c.max_line_search_steps,
            random_initial_metric: false,
            random_initial_step: c.random_initial_step,
        }
    }
}

impl OptimizerSettings {
    pub fn to_config(&self) -> Result<OptimizerConfig> {
        let c = OptimizerConfig {
            epsilon: self.epsilon,
            tau1: self.tau1,
            tau2: self.tau2,
            projection_shrink: self.projection_shrink,
            expansion: self.expansion,
            max_iterations: self.max_iterations,
            max_line_search_steps: self.max_line_search_steps,
            initial_metric: if self.random_initial_metric {
                InitialMetric::RandomSpd
            } else {
                InitialMetric::Identity
            },
            random_initial_step: self.random_initial_step,
            record_trace: false,
        };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub family: Ensemble,
    pub model_count: usize,
    pub beta_grid: Vec<f64>,
    pub restarts: usize,
    #[serde(default)]
    pub optimizer: OptimizerSettings,
    pub seed: u64,
    /// Output directory for the tables.
    #[serde(default = "default_output")]
    pub output_path: String,
    /// Models above this size are swept without exact errors.
    #[serde(default = "default_exact_max_nodes")]
    pub exact_max_nodes: usize,
}

fn default_output() -> String {
    "sweep-out".into()
}

fn default_exact_max_nodes() -> usize {
    bethe_core::exact::DEFAULT_MAX_NODES
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.model_count == 0 || self.restarts == 0 {
            return Err(CliError::Config(
                "model_count and restarts must be ≥ 1".into(),
            ));
        }
        if self.beta_grid.is_empty() {
            return Err(CliError::Config("beta_grid is empty".into()));
        }
        if !self.beta_grid.iter().all(|b| b.is_finite() && *b > 0.0) {
            return Err(CliError::Config(
                "every β in beta_grid must be finite and > 0".into(),
            ));
        }
        if !self.beta_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(CliError::Config(
                "beta_grid must be strictly increasing".into(),
            ));
        }
        self.family.family(self.seed).validate()?;
        self.optimizer.to_config()?;
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// A built-in ensemble at desk scale: 20 models, 20 restarts, `β` from
    /// 0.1 to 2.0 in steps of 0.1.
    pub fn preset(name: &str, seed: u64) -> Result<Self> {
        let ferro = (0.0, 1.0);
        let glass = (-1.0, 1.0);
        let (graph, couplings, exact_max_nodes) = match name {
            "grid5-ferro" => (GraphShape::Grid { rows: 5, cols: 5 }, ferro, 25),
            "grid5-glass" => (GraphShape::Grid { rows: 5, cols: 5 }, glass, 25),
            "complete10-ferro" => (GraphShape::Complete { n: 10 }, ferro, 25),
            "complete10-glass" => (GraphShape::Complete { n: 10 }, glass, 25),
            "er25-ferro" => (GraphShape::ErdosRenyi { n: 25, p: 0.2 }, ferro, 25),
            "er25-glass" => (GraphShape::ErdosRenyi { n: 25, p: 0.2 }, glass, 25),
            // 2^64 states are out of reach; these sweep the Bethe side only.
            "grid8-ferro" => (GraphShape::Grid { rows: 8, cols: 8 }, ferro, 0),
            "grid8-glass" => (GraphShape::Grid { rows: 8, cols: 8 }, glass, 0),
            _ => {
                return Err(CliError::Config(format!(
                    "unknown preset {name:?}; expected one of {}",
                    PRESETS.join(", ")
                )))
            }
        };
        Ok(Self {
            family: Ensemble {
                graph,
                coupling_range: couplings,
                field_range: (-0.125, 0.125),
            },
            model_count: 20,
            beta_grid: beta_grid(0.1, 2.0, 0.1)?,
            restarts: 20,
            optimizer: OptimizerSettings::default(),
            seed,
            output_path: default_output(),
            exact_max_nodes,
        })
    }
}

pub const PRESETS: [&str; 8] = [
    "grid5-ferro",
    "grid5-glass",
    "complete10-ferro",
    "complete10-glass",
    "er25-ferro",
    "er25-glass",
    "grid8-ferro",
    "grid8-glass",
];
