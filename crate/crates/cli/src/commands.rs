//! Subcommand implementations.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use xtsc_core::catalog::{
    build_catalog, filter_catalog, load_catalog, load_dataset, save_catalog, Arity, CatalogConfig,
};
use xtsc_core::error::{CatalogError, ExplainError, HarnessError, NnError};
use xtsc_core::explain::{load_external_attribution, Attribution, ExternalPayload};
use xtsc_core::harness::report::{emit_report, read_records_csv, RunManifest};
use xtsc_core::harness::{
    aggregate, evaluate as evaluate_custom_request, evaluate_synthetic, train_models,
    with_worker_pool, CustomEvaluation, GroupBy, ModelStore, StoredModel,
};
use xtsc_core::nn::{load_model, save_model, Architecture};
use xtsc_core::{Real, RealDataset};

use crate::config::{ConfigOverrides, RunConfig};

/// Error with a process exit code attached.
#[derive(Debug)]
pub struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError { message: message.into(), code: 2 }
    }

    pub fn empty(message: impl Into<String>) -> Self {
        CliError { message: message.into(), code: 3 }
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError { message: message.into(), code: 4 }
    }

    pub fn exit_code(&self) -> u8 {
        self.code
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl From<HarnessError> for CliError {
    fn from(err: HarnessError) -> Self {
        let code = match &err {
            HarnessError::EmptySelection(_) => 3,
            HarnessError::MissingCapability(_) | HarnessError::InvalidParameter(_) => 2,
            HarnessError::Io { .. } => 4,
            HarnessError::Catalog(c) => return CliError::from_catalog(c, err.to_string()),
            HarnessError::Nn(n) => return CliError::from_nn(n, err.to_string()),
            HarnessError::Explain(e) => return CliError::from_explain(e, err.to_string()),
            HarnessError::Metrics(_) => 5,
        };
        CliError { message: err.to_string(), code }
    }
}

impl CliError {
    fn from_catalog(err: &CatalogError, message: String) -> Self {
        let code = match err {
            CatalogError::Io { .. } => 4,
            CatalogError::FormatError { .. } => 2,
            _ => 5,
        };
        CliError { message, code }
    }

    fn from_nn(err: &NnError, message: String) -> Self {
        let code = match err {
            NnError::Io { .. } => 4,
            NnError::FormatError { .. } | NnError::InvalidParameter(_) => 2,
            NnError::EmptySelection(_) => 3,
            _ => 5,
        };
        CliError { message, code }
    }

    fn from_explain(err: &ExplainError, message: String) -> Self {
        let code = match err {
            ExplainError::Io { .. } => 4,
            ExplainError::FormatError { .. }
            | ExplainError::InvalidParameter(_)
            | ExplainError::InvalidShape(_) => 2,
            _ => 5,
        };
        CliError { message, code }
    }
}

impl From<CatalogError> for CliError {
    fn from(err: CatalogError) -> Self {
        let message = err.to_string();
        CliError::from_catalog(&err, message)
    }
}

impl From<NnError> for CliError {
    fn from(err: NnError) -> Self {
        let message = err.to_string();
        CliError::from_nn(&err, message)
    }
}

impl From<ExplainError> for CliError {
    fn from(err: ExplainError) -> Self {
        let message = err.to_string();
        CliError::from_explain(&err, message)
    }
}

fn write_command_manifest(
    dir: &Path,
    command: &str,
    config: &RunConfig,
    extra: serde_json::Value,
) -> Result<(), CliError> {
    let manifest = serde_json::json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "resolved_config": config.as_json(),
        "details": extra,
    });
    let path = dir.join("run_manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::create_dir_all(dir)
        .and_then(|_| std::fs::write(&path, text))
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

pub fn generate(overrides: &ConfigOverrides, force: bool) -> Result<(), CliError> {
    let config = overrides.resolve()?;
    let out = overrides.out.clone().unwrap_or_else(|| config.catalog_dir());
    if out.exists() && out.read_dir().map(|mut d| d.next().is_some()).unwrap_or(false) {
        if !force {
            return Err(CliError::io(format!(
                "output directory {} is not empty (use --force to overwrite)",
                out.display()
            )));
        }
        std::fs::remove_dir_all(&out)
            .map_err(|e| CliError::io(format!("cannot clear {}: {e}", out.display())))?;
    }

    let catalog_config = CatalogConfig {
        master_seed: config.seed,
        train_instances: config.train_instances,
        test_instances: config.test_instances,
        t_steps: config.t_steps,
        multivariate_features: config.multivariate_features,
        injection_constant: config.injection_constant,
        types: config.types.clone(),
        arities: vec![Arity::Univariate, Arity::Multivariate],
    };
    let catalog = with_worker_pool(config.workers, || build_catalog::<Real>(&catalog_config))
        .map_err(CliError::from)??;
    if catalog.is_empty() {
        return Err(CliError::empty(format!("no dataset matches types {:?}", config.types)));
    }
    save_catalog(&catalog, config.seed, &out)?;
    write_command_manifest(
        &out,
        "generate",
        &config,
        serde_json::json!({ "datasets": catalog.len() }),
    )?;
    println!("generated {} datasets under {}", catalog.len(), out.display());
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct TrainMeta {
    train_accuracy: f64,
    test_accuracy: f64,
    epochs_run: usize,
}

fn checkpoint_dir(models_root: &Path, slug: &str, arch: Architecture) -> PathBuf {
    models_root.join(slug).join(arch.name())
}

fn load_catalog_checked(dir: &Path) -> Result<Vec<RealDataset>, CliError> {
    if !dir.join("catalog_manifest.json").exists() {
        return Err(CliError::io(format!("no catalog at {} (run `generate` first)", dir.display())));
    }
    Ok(load_catalog(dir)?)
}

pub fn train(overrides: &ConfigOverrides, data: Option<PathBuf>) -> Result<(), CliError> {
    let config = overrides.resolve()?;
    let catalog_dir = data.unwrap_or_else(|| config.catalog_dir());
    let models_root = overrides.out.clone().unwrap_or_else(|| config.models_dir());
    let catalog = load_catalog_checked(&catalog_dir)?;
    let selected = filter_catalog(&catalog, &config.types);
    if selected.is_empty() {
        return Err(CliError::empty(format!("no dataset matches types {:?}", config.types)));
    }
    let archs = config.architectures()?;
    let train_config = config.train_config();

    // Resume: (dataset, arch) pairs with an existing checkpoint are
    // loaded into the store up front; train_models only fills the gaps.
    let mut store = ModelStore::<Real>::new();
    let mut resumed = std::collections::BTreeSet::new();
    for ds in &selected {
        for &arch in &archs {
            let dir = checkpoint_dir(&models_root, &ds.slug(), arch);
            if dir.join("model.json").exists() {
                let model = load_model::<Real>(&dir)?;
                let meta: TrainMeta = match read_json(&dir.join("train_meta.json")) {
                    Some(meta) => meta,
                    None => TrainMeta {
                        train_accuracy: xtsc_core::nn::accuracy(&model, &ds.train)?,
                        test_accuracy: xtsc_core::nn::accuracy(&model, &ds.test)?,
                        epochs_run: 0,
                    },
                };
                resumed.insert((ds.slug(), arch));
                store.insert(
                    ds.slug(),
                    arch,
                    StoredModel {
                        train_accuracy: meta.train_accuracy,
                        test_accuracy: meta.test_accuracy,
                        epochs_run: meta.epochs_run,
                        model,
                    },
                );
            }
        }
    }

    with_worker_pool(config.workers, || {
        train_models(&mut store, &selected, &archs, config.seed, &train_config)
    })??;

    let mut gate_failures = 0usize;
    let mut rows: Vec<(String, String, TrainMeta)> = Vec::new();
    for ((slug, arch), entry) in store.iter() {
        if !resumed.contains(&(slug.clone(), *arch)) {
            let dir = checkpoint_dir(&models_root, slug, *arch);
            save_model(&entry.model, &dir)?;
            write_json(
                &dir.join("train_meta.json"),
                &TrainMeta {
                    train_accuracy: entry.train_accuracy,
                    test_accuracy: entry.test_accuracy,
                    epochs_run: entry.epochs_run,
                },
            )?;
        }
        rows.push((
            slug.clone(),
            arch.name().to_string(),
            TrainMeta {
                train_accuracy: entry.train_accuracy,
                test_accuracy: entry.test_accuracy,
                epochs_run: entry.epochs_run,
            },
        ));
    }

    rows.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
    let mut csv = String::from("dataset,architecture,train_acc,test_acc,epochs_run\n");
    for (dataset, arch, meta) in &rows {
        if meta.test_accuracy <= 0.9 {
            gate_failures += 1;
            println!(
                "warning: {dataset}/{arch} test accuracy {:.3} fails the 0.9 gate",
                meta.test_accuracy
            );
        }
        csv.push_str(&format!(
            "{dataset},{arch},{},{},{}\n",
            meta.train_accuracy, meta.test_accuracy, meta.epochs_run
        ));
    }
    std::fs::create_dir_all(&models_root)
        .map_err(|e| CliError::io(format!("cannot create {}: {e}", models_root.display())))?;
    std::fs::write(models_root.join("accuracy.csv"), csv)
        .map_err(|e| CliError::io(format!("cannot write accuracy.csv: {e}")))?;
    write_command_manifest(
        &models_root,
        "train",
        &config,
        serde_json::json!({ "models": rows.len(), "gate_failures": gate_failures }),
    )?;
    println!("trained/kept {} checkpoints under {}", rows.len(), models_root.display());
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Option<T> {
    let text = std::fs::read_to_string(path).ok()?;
    serde_json::from_str(&text).ok()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

pub struct EvaluateInputs {
    pub data: Option<PathBuf>,
    pub checkpoints: Option<PathBuf>,
    pub custom_data: Option<PathBuf>,
    pub attributions: Option<PathBuf>,
    pub model_checkpoint: Option<PathBuf>,
}

pub fn evaluate(
    overrides: &ConfigOverrides,
    inputs: EvaluateInputs,
    _force: bool,
) -> Result<(), CliError> {
    let config = overrides.resolve()?;
    let out = overrides.out.clone().unwrap_or_else(|| config.reports_dir());
    match &inputs.custom_data {
        Some(custom) => evaluate_custom(&config, custom, &inputs, &out),
        None => evaluate_catalog(&config, &inputs, &out),
    }
}

fn evaluate_catalog(
    config: &RunConfig,
    inputs: &EvaluateInputs,
    out: &Path,
) -> Result<(), CliError> {
    let plan = config.plan()?;
    let catalog_dir = inputs.data.clone().unwrap_or_else(|| config.catalog_dir());
    let models_root = inputs.checkpoints.clone().unwrap_or_else(|| config.models_dir());
    let catalog = load_catalog_checked(&catalog_dir)?;
    let selected = filter_catalog(&catalog, &plan.types);
    if selected.is_empty() {
        return Err(CliError::empty(format!("no dataset matches types {:?}", plan.types)));
    }

    let mut store = ModelStore::<Real>::new();
    for ds in &selected {
        for &arch in &plan.models {
            let dir = checkpoint_dir(&models_root, &ds.slug(), arch);
            if !dir.join("model.json").exists() {
                return Err(CliError::config(format!(
                    "missing capability: no checkpoint for {}/{} at {} (run `train` first)",
                    ds.slug(),
                    arch.name(),
                    dir.display()
                )));
            }
            let model = load_model::<Real>(&dir)?;
            let meta: Option<TrainMeta> = read_json(&dir.join("train_meta.json"));
            // Gate accuracy is recomputed from the checkpoint itself.
            let test_accuracy = xtsc_core::nn::accuracy(&model, &ds.test)?;
            let entry = StoredModel {
                train_accuracy: meta.as_ref().map(|m| m.train_accuracy).unwrap_or(f64::NAN),
                test_accuracy,
                epochs_run: meta.map(|m| m.epochs_run).unwrap_or(0),
                model,
            };
            store.insert(ds.slug(), arch, entry);
        }
    }

    let output = evaluate_synthetic(&plan, &catalog, &store)?;
    let stats = aggregate(&output.records, GroupBy::ExplainerMetric, plan.aggregation)?;
    let mut manifest = RunManifest::new(plan, output.gate_skips.clone());
    manifest.resolved_config = Some(config.as_json());
    emit_report(out, &output.records, &stats, &manifest)?;
    println!(
        "evaluated {} records ({} gate skips) -> {}",
        output.records.len(),
        output.gate_skips.len(),
        out.display()
    );
    for skip in &output.gate_skips {
        println!(
            "  gate skip: {}/{} test accuracy {:.3}",
            skip.dataset, skip.model, skip.test_accuracy
        );
    }
    Ok(())
}

fn evaluate_custom(
    config: &RunConfig,
    custom: &Path,
    inputs: &EvaluateInputs,
    out: &Path,
) -> Result<(), CliError> {
    let dataset = load_dataset::<Real>(custom)?;
    let model = match &inputs.model_checkpoint {
        Some(dir) => Some(load_model::<Real>(dir)?),
        None => None,
    };

    let mut external: BTreeMap<String, BTreeMap<usize, Attribution<Real>>> = BTreeMap::new();
    if let Some(dir) = &inputs.attributions {
        let entries = std::fs::read_dir(dir)
            .map_err(|e| CliError::io(format!("cannot read {}: {e}", dir.display())))?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default();
                name.ends_with(".json") && !name.ends_with(".manifest.json")
                    || name.ends_with(".csv")
            })
            .collect();
        paths.sort();
        for path in paths {
            let loaded = load_external_attribution::<Real>(&path, dataset.shape())?;
            let instance = loaded.instance_index.ok_or_else(|| {
                CliError::config(format!("{} lacks an instance_index field", path.display()))
            })?;
            let attribution = match loaded.payload {
                ExternalPayload::Attribution(a) => a,
                ExternalPayload::Example(example) => {
                    let x = dataset.test.get(instance).ok_or_else(|| {
                        CliError::config(format!(
                            "{} targets instance {instance}, test split has {}",
                            path.display(),
                            dataset.test.len()
                        ))
                    })?;
                    xtsc_core::explain::example_to_attribution(&x.series, &example, None)?
                }
            };
            external.entry(loaded.explainer).or_default().insert(instance, attribution);
        }
        if external.is_empty() {
            return Err(CliError::empty(format!("no attribution files in {}", dir.display())));
        }
    }

    let explainers = if model.is_some() { config.explainer_specs()? } else { Vec::new() };
    if model.is_none() && external.is_empty() {
        return Err(CliError::config(
            "custom evaluation needs --model-checkpoint and/or --attributions".to_string(),
        ));
    }

    let request = CustomEvaluation {
        dataset: &dataset,
        dataset_name: dataset.slug(),
        model: model.as_ref(),
        model_name: model
            .as_ref()
            .map(|m| m.architecture().name().to_string())
            .unwrap_or_else(|| "external".to_string()),
        explainers,
        external: external.into_iter().collect(),
        metrics: config.metric_ids()?,
        master_seed: config.seed,
        workers: config.workers,
        robustness: config.robustness,
        faithfulness: config.faithfulness,
    };
    let output = evaluate_custom_request(&request)?;
    let stats = aggregate(&output.records, GroupBy::ExplainerMetric, config.aggregation)?;
    let mut manifest = RunManifest::new(config.plan()?, vec![]);
    manifest.resolved_config = Some(config.as_json());
    manifest.warnings.push(format!("custom-data evaluation of {}", custom.display()));
    emit_report(out, &output.records, &stats, &manifest)?;
    println!("evaluated {} records -> {}", output.records.len(), out.display());
    Ok(())
}

pub fn report(overrides: &ConfigOverrides, records_path: &Path, _force: bool) -> Result<(), CliError> {
    let config = overrides.resolve()?;
    let out = overrides
        .out
        .clone()
        .unwrap_or_else(|| records_path.parent().unwrap_or(Path::new(".")).join("rerender"));
    let records = read_records_csv::<Real>(records_path)?;
    if records.is_empty() {
        return Err(CliError::empty(format!("{} holds no records", records_path.display())));
    }
    let stats = aggregate(&records, GroupBy::ExplainerMetric, config.aggregation)?;
    let mut manifest = RunManifest::new(config.plan()?, vec![]);
    manifest.resolved_config = Some(config.as_json());
    manifest.warnings.push(format!("re-rendered from {}", records_path.display()));
    emit_report(&out, &records, &stats, &manifest)?;
    println!("rendered {} stats groups -> {}", stats.len(), out.display());
    Ok(())
}
