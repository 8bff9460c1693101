//! Configuration resolution: defaults, then the JSON config file, then
//! command-line flags. The resolved document lands in the run manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use xtsc_core::harness::{
    AggregationMode, BenchmarkPlan, ExplainerSpec, FaithfulnessConfig, RobustnessConfig,
};
use xtsc_core::metrics::MetricId;
use xtsc_core::nn::{Architecture, TrainConfig};

use crate::CommonArgs;
use crate::commands::CliError;

pub const DATA_ROOT_ENV: &str = "XTSC_BENCH_HOME";

/// On-disk configuration document. Every field has a default; flags win
/// over file values.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub data_root: PathBuf,
    pub types: Vec<String>,
    pub models: Vec<String>,
    pub explainers: Vec<String>,
    pub metrics: Vec<String>,
    pub workers: usize,
    pub train_instances: usize,
    pub test_instances: usize,
    pub t_steps: usize,
    pub multivariate_features: usize,
    pub injection_constant: f64,
    pub n_reference_draws: usize,
    pub robustness: RobustnessConfig,
    pub faithfulness: FaithfulnessConfig,
    pub aggregation: AggregationMode,
    pub max_epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let data_root = std::env::var_os(DATA_ROOT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("xtsc-bench-data"));
        RunConfig {
            seed: 0,
            data_root,
            types: Vec::new(),
            models: vec!["temporal_conv".into(), "gated_recurrent".into()],
            explainers: ExplainerSpec::default_set().iter().map(|e| e.name().to_string()).collect(),
            metrics: MetricId::all().iter().map(|m| m.name().to_string()).collect(),
            workers: 0,
            train_instances: 100,
            test_instances: 50,
            t_steps: 50,
            multivariate_features: 50,
            injection_constant: 1.0,
            n_reference_draws: 8,
            robustness: RobustnessConfig::default(),
            faithfulness: FaithfulnessConfig::default(),
            aggregation: AggregationMode::PooledInstances,
            max_epochs: 500,
            patience: 20,
            learning_rate: 1e-3,
            batch_size: 32,
        }
    }
}

/// Flag-level overrides extracted from the command line.
#[derive(Clone, Debug, Default)]
pub struct ConfigOverrides {
    pub config_path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub types: Option<Vec<String>>,
    pub models: Option<Vec<String>>,
    pub explainers: Option<Vec<String>>,
    pub metrics: Option<Vec<String>>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

impl ConfigOverrides {
    pub fn from_common(common: &CommonArgs) -> Self {
        ConfigOverrides {
            config_path: common.config.clone(),
            seed: common.seed,
            types: common.types.clone(),
            models: common.models.clone(),
            explainers: common.explainers.clone(),
            metrics: common.metrics.clone(),
            workers: common.workers,
            out: common.out.clone(),
        }
    }

    /// Defaults -> config file -> flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut config = match &self.config_path {
            Some(path) => read_config(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(types) = &self.types {
            config.types = types.clone();
        }
        if let Some(models) = &self.models {
            config.models = models.clone();
        }
        if let Some(explainers) = &self.explainers {
            config.explainers = explainers.clone();
        }
        if let Some(metrics) = &self.metrics {
            config.metrics = metrics.clone();
        }
        if let Some(workers) = self.workers {
            config.workers = workers;
        }
        Ok(config)
    }
}

fn read_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("bad config {}: {e}", path.display())))
}

impl RunConfig {
    pub fn catalog_dir(&self) -> PathBuf {
        self.data_root.join("catalog")
    }

    pub fn models_dir(&self) -> PathBuf {
        self.data_root.join("models")
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.data_root.join("reports").join(format!("run_{}", self.seed))
    }

    pub fn architectures(&self) -> Result<Vec<Architecture>, CliError> {
        self.models
            .iter()
            .map(|name| {
                Architecture::parse(name)
                    .ok_or_else(|| CliError::config(format!("unknown model {name:?}")))
            })
            .collect()
    }

    pub fn explainer_specs(&self) -> Result<Vec<ExplainerSpec>, CliError> {
        self.explainers
            .iter()
            .map(|name| {
                ExplainerSpec::parse(name)
                    .ok_or_else(|| CliError::config(format!("unknown explainer {name:?}")))
            })
            .collect()
    }

    pub fn metric_ids(&self) -> Result<Vec<MetricId>, CliError> {
        self.metrics
            .iter()
            .map(|name| {
                MetricId::parse(name)
                    .ok_or_else(|| CliError::config(format!("unknown metric {name:?}")))
            })
            .collect()
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            max_epochs: self.max_epochs,
            patience: self.patience,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            ..TrainConfig::default()
        }
    }

    pub fn plan(&self) -> Result<BenchmarkPlan, CliError> {
        Ok(BenchmarkPlan {
            types: self.types.clone(),
            models: self.architectures()?,
            explainers: self.explainer_specs()?,
            metrics: self.metric_ids()?,
            master_seed: self.seed,
            workers: self.workers,
            robustness: self.robustness,
            faithfulness: self.faithfulness,
            aggregation: self.aggregation,
            n_reference_draws: self.n_reference_draws,
        })
    }

    pub fn as_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
