//! Benchmark orchestration: trained-model stores, the synthetic and
//! custom evaluation entry points, grouped aggregation and report
//! emission.
//!
//! Only classifiers above the accuracy gate (test accuracy > 0.9) are
//! explained and scored; gate failures are recorded in the run manifest
//! instead. Every stochastic quantity derives its seed from the master
//! seed and the record coordinates, so the produced record multiset is
//! independent of worker count and scheduling order.

pub mod report;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{filter_catalog, SyntheticDataset};
use crate::error::{ExplainError, HarnessError, MetricsError};
use crate::explain::{
    gradient_attribution, lime_surrogate, occlusion, tsr_wrap, Attribution, GradientVariant,
    Readout, TsrThreshold,
};
use crate::matrix::Matrix;
use crate::metrics::{
    complexity, faithfulness_corr, relevance_mass_acc, relevance_rank_acc, sens_max, sens_mean,
    BaselineSource, FaithfulnessParams, MetricId, MetricRecord, NormKind, RecordStatus,
    RobustnessParams,
};
use crate::nn::{accuracy, train, Architecture, Classifier, ClassifierModel, TrainConfig};
use crate::rng::derive_seed;
use crate::series::TimeSeries;
use crate::{num, Scalar};

/// Classifiers at or below this test accuracy are skipped.
pub const ACCURACY_GATE: f64 = 0.9;

/// A named explainer with its parameters, as selected in a plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ExplainerSpec {
    Saliency,
    GradientInput,
    SmoothGrad { n: usize, sigma: f64 },
    IntegratedGradients { steps: usize },
    /// Expected-gradients style: integrated gradients averaged over
    /// several baselines drawn from the reference set.
    GradientShap { steps: usize, n_baselines: usize },
    Occlusion { window_features: usize, window_time: usize },
    TsrSaliency,
    TsrOcclusion { window_features: usize, window_time: usize },
    Lime { segment_len: usize, n_samples: usize },
}

impl ExplainerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ExplainerSpec::Saliency => "saliency",
            ExplainerSpec::GradientInput => "gradient_x_input",
            ExplainerSpec::SmoothGrad { .. } => "smoothgrad",
            ExplainerSpec::IntegratedGradients { .. } => "integrated_gradients",
            ExplainerSpec::GradientShap { .. } => "gradient_shap",
            ExplainerSpec::Occlusion { .. } => "occlusion",
            ExplainerSpec::TsrSaliency => "tsr_saliency",
            ExplainerSpec::TsrOcclusion { .. } => "tsr_occlusion",
            ExplainerSpec::Lime { .. } => "lime",
        }
    }

    /// Parse a CLI name into the spec with default parameters.
    pub fn parse(name: &str) -> Option<ExplainerSpec> {
        match name.to_lowercase().as_str() {
            "saliency" | "grad" => Some(ExplainerSpec::Saliency),
            "gradient_x_input" | "gxi" => Some(ExplainerSpec::GradientInput),
            "smoothgrad" | "sg" => Some(ExplainerSpec::SmoothGrad { n: 8, sigma: 0.1 }),
            "integrated_gradients" | "ig" => Some(ExplainerSpec::IntegratedGradients { steps: 16 }),
            "gradient_shap" | "gs" => Some(ExplainerSpec::GradientShap { steps: 8, n_baselines: 4 }),
            "occlusion" | "fo" => Some(ExplainerSpec::Occlusion { window_features: 1, window_time: 0 }),
            "tsr_saliency" | "tsr_grad" => Some(ExplainerSpec::TsrSaliency),
            "tsr_occlusion" | "tsr_fo" => {
                Some(ExplainerSpec::TsrOcclusion { window_features: 1, window_time: 0 })
            }
            "lime" | "leftist" => Some(ExplainerSpec::Lime { segment_len: 10, n_samples: 0 }),
            _ => None,
        }
    }

    pub fn default_set() -> Vec<ExplainerSpec> {
        vec![
            ExplainerSpec::Saliency,
            ExplainerSpec::SmoothGrad { n: 8, sigma: 0.1 },
            ExplainerSpec::GradientShap { steps: 8, n_baselines: 4 },
            ExplainerSpec::Occlusion { window_features: 1, window_time: 0 },
            ExplainerSpec::TsrSaliency,
            ExplainerSpec::TsrOcclusion { window_features: 1, window_time: 0 },
            ExplainerSpec::Lime { segment_len: 10, n_samples: 0 },
        ]
    }

    /// Produce an attribution for `x`, explaining the class `target`.
    pub fn apply<F: Scalar>(
        &self,
        model: &dyn Classifier<F>,
        x: &TimeSeries<F>,
        target: usize,
        ctx: &ExplainContext<'_, F>,
    ) -> Result<Attribution<F>, ExplainError> {
        // A zero window-time resolves to roughly a tenth of the series.
        let resolve_window = |wf: usize, wt: usize| {
            (wf.max(1), if wt == 0 { (x.t_steps() / 10).max(1) } else { wt })
        };
        match self {
            ExplainerSpec::Saliency => {
                gradient_attribution(model, x, target, &GradientVariant::Plain)
            }
            ExplainerSpec::GradientInput => {
                gradient_attribution(model, x, target, &GradientVariant::TimesInput)
            }
            ExplainerSpec::SmoothGrad { n, sigma } => gradient_attribution(
                model,
                x,
                target,
                &GradientVariant::Smooth { n: *n, sigma: num(*sigma), seed: ctx.seed },
            ),
            ExplainerSpec::IntegratedGradients { steps } => gradient_attribution(
                model,
                x,
                target,
                &GradientVariant::Integrated { steps: *steps, baseline: ctx.baseline.clone() },
            ),
            ExplainerSpec::GradientShap { steps, n_baselines } => {
                if ctx.backgrounds.is_empty() {
                    return Err(ExplainError::InvalidParameter(
                        "gradient_shap needs a nonempty reference set".into(),
                    ));
                }
                let mut acc = Matrix::<F>::zeros(x.n_features(), x.t_steps());
                let k = (*n_baselines).max(1);
                for b in 0..k {
                    let baseline = ctx.backgrounds[b % ctx.backgrounds.len()].clone();
                    let attr = gradient_attribution(
                        model,
                        x,
                        target,
                        &GradientVariant::Integrated { steps: *steps, baseline },
                    )?;
                    for (slot, v) in acc.data_mut().iter_mut().zip(attr.scores().data()) {
                        *slot += *v;
                    }
                }
                let scale = F::from_usize(k).unwrap();
                for slot in acc.data_mut() {
                    *slot /= scale;
                }
                Attribution::new(acc, target, "gradient_shap")
            }
            ExplainerSpec::Occlusion { window_features, window_time } => {
                let window = resolve_window(*window_features, *window_time);
                occlusion(model, x, target, window, ctx.baseline, Readout::Probability)
            }
            ExplainerSpec::TsrSaliency => tsr_wrap(
                |xx: &TimeSeries<F>| gradient_attribution(model, xx, target, &GradientVariant::Plain),
                x,
                TsrThreshold::MeanTimeRelevance,
                ctx.baseline,
            ),
            ExplainerSpec::TsrOcclusion { window_features, window_time } => {
                let window = resolve_window(*window_features, *window_time);
                tsr_wrap(
                    |xx: &TimeSeries<F>| {
                        occlusion(model, xx, target, window, ctx.baseline, Readout::Probability)
                    },
                    x,
                    TsrThreshold::MeanTimeRelevance,
                    ctx.baseline,
                )
            }
            ExplainerSpec::Lime { segment_len, n_samples } => {
                // A zero sample count resolves to 4x the segment count.
                let per_feature = (x.t_steps() / (*segment_len).max(1)).max(1);
                let segments = x.n_features() * per_feature;
                let samples = if *n_samples == 0 { segments * 4 } else { *n_samples };
                lime_surrogate(
                    model,
                    x,
                    target,
                    *segment_len,
                    samples,
                    ctx.backgrounds,
                    ctx.seed,
                )
            }
        }
    }
}

/// Shared inputs an explainer may need besides the instance.
pub struct ExplainContext<'a, F> {
    /// Masking baseline on the model's input scale.
    pub baseline: &'a TimeSeries<F>,
    /// Reference set for surrogate backgrounds and sampled baselines.
    pub backgrounds: &'a [TimeSeries<F>],
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessConfig {
    pub radius: f64,
    pub n_perturbations: usize,
    pub norm: NormKind,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        RobustnessConfig { radius: 0.1, n_perturbations: 10, norm: NormKind::L2 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaselineKind {
    GenerationProcess,
    Uniform,
    TrainMean,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaithfulnessConfig {
    pub subset_fraction: f64,
    pub n_runs: usize,
    pub baseline: BaselineKind,
}

impl Default for FaithfulnessConfig {
    fn default() -> Self {
        FaithfulnessConfig { subset_fraction: 0.1, n_runs: 20, baseline: BaselineKind::GenerationProcess }
    }
}

/// How [`aggregate`] pools records inside a group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AggregationMode {
    /// Every instance-level value contributes directly (default).
    PooledInstances,
    /// Average per dataset first, then summarize the dataset means.
    PerDatasetMeans,
}

/// Facets added to the (explainer, metric) group key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupBy {
    ExplainerMetric,
    ExplainerMetricDataset,
    ExplainerMetricModel,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchmarkPlan {
    pub types: Vec<String>,
    pub models: Vec<Architecture>,
    pub explainers: Vec<ExplainerSpec>,
    pub metrics: Vec<MetricId>,
    pub master_seed: u64,
    /// 0 selects the number of available cores.
    pub workers: usize,
    pub robustness: RobustnessConfig,
    pub faithfulness: FaithfulnessConfig,
    pub aggregation: AggregationMode,
    /// Reference-set draws per dataset (surrogate backgrounds, sampled
    /// baselines).
    pub n_reference_draws: usize,
}

impl BenchmarkPlan {
    pub fn new(master_seed: u64) -> Self {
        BenchmarkPlan {
            types: Vec::new(),
            models: Architecture::all().to_vec(),
            explainers: ExplainerSpec::default_set(),
            metrics: MetricId::all().to_vec(),
            master_seed,
            workers: 0,
            robustness: RobustnessConfig::default(),
            faithfulness: FaithfulnessConfig::default(),
            aggregation: AggregationMode::PooledInstances,
            n_reference_draws: 8,
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.models.is_empty() || self.explainers.is_empty() || self.metrics.is_empty() {
            return Err(HarnessError::InvalidParameter(
                "plan needs nonempty model, explainer and metric lists".into(),
            ));
        }
        Ok(())
    }
}

/// A trained model plus the numbers the gate and reports need.
#[derive(Clone, Debug)]
pub struct StoredModel<F> {
    pub model: ClassifierModel<F>,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub epochs_run: usize,
}

/// Trained models keyed by (dataset slug, architecture).
#[derive(Default)]
pub struct ModelStore<F> {
    entries: BTreeMap<(String, Architecture), StoredModel<F>>,
}

impl<F: Scalar> ModelStore<F> {
    pub fn new() -> Self {
        ModelStore { entries: BTreeMap::new() }
    }

    pub fn insert(&mut self, dataset: String, arch: Architecture, entry: StoredModel<F>) {
        self.entries.insert((dataset, arch), entry);
    }

    pub fn get(&self, dataset: &str, arch: Architecture) -> Option<&StoredModel<F>> {
        self.entries.get(&(dataset.to_string(), arch))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(String, Architecture), &StoredModel<F>)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Train one model for a dataset with seeds derived from the master
/// seed, so any front end reproduces the same parameters.
pub fn train_single<F: Scalar>(
    dataset: &SyntheticDataset<F>,
    arch: Architecture,
    master_seed: u64,
    base_config: &TrainConfig,
) -> Result<StoredModel<F>, HarnessError> {
    let slug = dataset.slug();
    let model_seed = derive_seed(master_seed, &["model-init", &slug, arch.name()], &[]);
    let train_seed = derive_seed(master_seed, &["train", &slug, arch.name()], &[]);
    let model = ClassifierModel::new(arch, dataset.shape(), model_seed);
    let cfg = base_config.clone().with_seed(train_seed);
    let outcome = train(model, &dataset.train, &cfg)?;
    Ok(StoredModel {
        train_accuracy: accuracy(&outcome.model, &dataset.train)?,
        test_accuracy: accuracy(&outcome.model, &dataset.test)?,
        epochs_run: outcome.history.epochs.len(),
        model: outcome.model,
    })
}

/// Train one model per (dataset, architecture), deterministically seeded
/// from the master seed. Existing entries are kept (resume semantics).
pub fn train_models<F: Scalar>(
    store: &mut ModelStore<F>,
    catalog: &[SyntheticDataset<F>],
    archs: &[Architecture],
    master_seed: u64,
    base_config: &TrainConfig,
) -> Result<(), HarnessError> {
    let mut jobs = Vec::new();
    for ds in catalog {
        for &arch in archs {
            if store.get(&ds.slug(), arch).is_none() {
                jobs.push((ds, arch));
            }
        }
    }
    let trained: Vec<Result<(String, Architecture, StoredModel<F>), HarnessError>> = jobs
        .par_iter()
        .map(|&(ds, arch)| {
            let entry = train_single(ds, arch, master_seed, base_config)?;
            Ok((ds.slug(), arch, entry))
        })
        .collect();
    for item in trained {
        let (slug, arch, entry) = item?;
        store.insert(slug, arch, entry);
    }
    Ok(())
}

/// A model skipped by the accuracy gate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateSkip {
    pub dataset: String,
    pub model: String,
    pub test_accuracy: f64,
}

#[derive(Clone, Debug)]
pub struct EvalOutput<F> {
    pub records: Vec<MetricRecord<F>>,
    pub gate_skips: Vec<GateSkip>,
}

fn record_seed(master: u64, dataset: &str, model: &str, explainer: &str, metric: &str, instance: usize) -> u64 {
    derive_seed(master, &["record", dataset, model, explainer, metric], &[instance as u64])
}

fn canonical_sort<F: Scalar>(records: &mut [MetricRecord<F>]) {
    records.sort_by(|a, b| {
        (&a.metric, &a.dataset, &a.model, &a.explainer, a.instance)
            .cmp(&(&b.metric, &b.dataset, &b.model, &b.explainer, b.instance))
    });
}

/// Run a job inside a dedicated worker pool; `workers == 0` uses the
/// available cores. Work derives all randomness from fixed seeds, so the
/// pool size never changes results.
pub fn with_worker_pool<T: Send>(
    workers: usize,
    job: impl FnOnce() -> T + Send,
) -> Result<T, HarnessError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if workers > 0 {
        builder = builder.num_threads(workers);
    }
    let pool = builder
        .build()
        .map_err(|e| HarnessError::InvalidParameter(format!("worker pool: {e}")))?;
    Ok(pool.install(job))
}

struct InstanceJob<'a, F: Scalar> {
    dataset: &'a SyntheticDataset<F>,
    model_name: &'a str,
    model: &'a ClassifierModel<F>,
    explainer: &'a ExplainerSpec,
    instance: usize,
    backgrounds: &'a [TimeSeries<F>],
}

fn metric_value_to_record<F: Scalar>(
    coords: (&str, &str, &str, usize),
    metric: MetricId,
    outcome: Result<(F, RecordStatus), MetricsError>,
) -> Result<MetricRecord<F>, HarnessError> {
    let (dataset, model, explainer, instance) = coords;
    let (value, status) = match outcome {
        Ok((v, status)) => (Some(v), status),
        Err(MetricsError::DegenerateCorrelation(_)) => {
            (None, RecordStatus::Degenerate("zero_variance_correlation".into()))
        }
        Err(MetricsError::DegenerateAttribution) => {
            (None, RecordStatus::Degenerate("all_zero_attribution".into()))
        }
        Err(other) => return Err(other.into()),
    };
    Ok(MetricRecord {
        metric: metric.name().to_string(),
        dataset: dataset.to_string(),
        model: model.to_string(),
        explainer: explainer.to_string(),
        instance,
        value,
        status,
    })
}

/// Baseline handling for one scoring pass: the synthetic entry point
/// masks with generation-process draws, the custom one with uniform
/// noise.
#[derive(Clone, Copy)]
struct ScoreSettings {
    master_seed: u64,
    robustness: RobustnessConfig,
    faithfulness: FaithfulnessConfig,
    explain_baseline: BaselineKind,
}

fn resolve_baseline<'a, F: Scalar>(
    kind: BaselineKind,
    ds: &'a SyntheticDataset<F>,
    train_mean: &'a TimeSeries<F>,
) -> BaselineSource<'a, F> {
    match kind {
        BaselineKind::GenerationProcess => BaselineSource::GenerationProcess {
            spec: &ds.generation_spec,
            normalization: &ds.normalization,
        },
        BaselineKind::Uniform => BaselineSource::Uniform,
        BaselineKind::TrainMean => BaselineSource::TrainMean(train_mean),
    }
}

/// Run every requested metric for one (instance, explainer) cell.
/// Reliability metrics on instances without a mask become skip records.
fn score_instance<F: Scalar>(
    settings: &ScoreSettings,
    job: &InstanceJob<'_, F>,
    metrics: &[MetricId],
    dataset_name: &str,
    train_mean: &TimeSeries<F>,
) -> Result<Vec<MetricRecord<F>>, HarnessError> {
    let ds = job.dataset;
    let inst = &ds.test[job.instance];
    let x = &inst.series;
    let explainer_name = job.explainer.name();
    let target = job.model.predict(x)?;

    // One masking baseline per (dataset, instance), shared by explainers.
    let baseline_seed =
        derive_seed(settings.master_seed, &["explain-baseline", dataset_name], &[job.instance as u64]);
    let baseline = resolve_baseline(settings.explain_baseline, ds, train_mean)
        .sample(x.shape(), baseline_seed)?;

    let explain_seed =
        record_seed(settings.master_seed, dataset_name, job.model_name, explainer_name, "explain", job.instance);
    let ctx = ExplainContext { baseline: &baseline, backgrounds: job.backgrounds, seed: explain_seed };
    let attribution = job.explainer.apply(job.model, x, target, &ctx)?;

    let mut records = Vec::with_capacity(metrics.len());
    for &metric in metrics {
        let seed =
            record_seed(settings.master_seed, dataset_name, job.model_name, explainer_name, metric.name(), job.instance);
        let coords = (dataset_name, job.model_name, explainer_name, job.instance);
        let outcome: Result<(F, RecordStatus), MetricsError> = match metric {
            MetricId::Complexity => complexity(&attribution).map(|v| (v, RecordStatus::Ok)),
            MetricId::RelevanceRank | MetricId::RelevanceMass => match &inst.mask {
                Some(mask) => {
                    if metric == MetricId::RelevanceRank {
                        relevance_rank_acc(&attribution, mask).map(|v| (v, RecordStatus::Ok))
                    } else {
                        relevance_mass_acc(&attribution, mask).map(|v| (v, RecordStatus::Ok))
                    }
                }
                None => {
                    records.push(skip_record(coords, metric, "no_ground_truth"));
                    continue;
                }
            },
            MetricId::Faithfulness => {
                let params = FaithfulnessParams {
                    subset_fraction: num(settings.faithfulness.subset_fraction),
                    n_runs: settings.faithfulness.n_runs,
                    seed,
                    readout: Readout::Probability,
                };
                let source = resolve_baseline(settings.faithfulness.baseline, ds, train_mean);
                faithfulness_corr(job.model, &attribution, x, &params, &source)
                    .map(|v| (v, RecordStatus::Ok))
            }
            MetricId::SensMax | MetricId::SensMean => {
                let params = RobustnessParams {
                    radius: num(settings.robustness.radius),
                    n_perturbations: settings.robustness.n_perturbations,
                    seed,
                    norm: settings.robustness.norm,
                };
                let explain_fn = |xx: &TimeSeries<F>| job.explainer.apply(job.model, xx, target, &ctx);
                let sens = if metric == MetricId::SensMax {
                    sens_max(&explain_fn, job.model, x, &params)
                } else {
                    sens_mean(&explain_fn, job.model, x, &params)
                };
                sens.map(|s| {
                    let status = if s.prediction_stable {
                        RecordStatus::Ok
                    } else {
                        RecordStatus::UnstablePrediction
                    };
                    (s.value, status)
                })
            }
        };
        records.push(metric_value_to_record(coords, metric, outcome)?);
    }
    Ok(records)
}

/// Score every selected (dataset, gate-passing model, explainer, test
/// instance, metric) combination of the synthetic catalog.
pub fn evaluate_synthetic<F: Scalar>(
    plan: &BenchmarkPlan,
    catalog: &[SyntheticDataset<F>],
    models: &ModelStore<F>,
) -> Result<EvalOutput<F>, HarnessError> {
    plan.validate()?;
    let selected = filter_catalog(catalog, &plan.types);
    if selected.is_empty() {
        return Err(HarnessError::EmptySelection(format!(
            "no dataset matches the type filter {:?}",
            plan.types
        )));
    }

    let mut gate_skips = Vec::new();
    let mut active: Vec<(&SyntheticDataset<F>, Architecture, &StoredModel<F>)> = Vec::new();
    for ds in &selected {
        for &arch in &plan.models {
            let slug = ds.slug();
            let entry = models.get(&slug, arch).ok_or_else(|| {
                HarnessError::MissingCapability(format!("no trained {arch} model for {slug}"))
            })?;
            if entry.test_accuracy > ACCURACY_GATE {
                active.push((ds, arch, entry));
            } else {
                gate_skips.push(GateSkip {
                    dataset: slug,
                    model: arch.name().to_string(),
                    test_accuracy: entry.test_accuracy,
                });
            }
        }
    }
    if active.is_empty() {
        let details: Vec<String> = gate_skips
            .iter()
            .map(|s| format!("{}/{}: {:.3}", s.dataset, s.model, s.test_accuracy))
            .collect();
        return Err(HarnessError::EmptySelection(format!(
            "no model passes the {ACCURACY_GATE} accuracy gate ({})",
            details.join(", ")
        )));
    }

    // Reference sets are per dataset, shared across instances.
    let mut backgrounds: BTreeMap<String, Vec<TimeSeries<F>>> = BTreeMap::new();
    for ds in &selected {
        let slug = ds.slug();
        if backgrounds.contains_key(&slug) {
            continue;
        }
        let source = BaselineSource::GenerationProcess {
            spec: &ds.generation_spec,
            normalization: &ds.normalization,
        };
        let draws: Result<Vec<_>, _> = (0..plan.n_reference_draws.max(1))
            .map(|k| {
                source.sample(ds.shape(), derive_seed(plan.master_seed, &["background", &slug], &[k as u64]))
            })
            .collect();
        backgrounds.insert(slug, draws?);
    }

    let train_means: BTreeMap<String, TimeSeries<F>> =
        selected.iter().map(|ds| (ds.slug(), ds.train_mean())).collect();

    let mut jobs = Vec::new();
    for (ds, arch, entry) in &active {
        let bg = &backgrounds[&ds.slug()];
        for explainer in &plan.explainers {
            for instance in 0..ds.test.len() {
                jobs.push(InstanceJob {
                    dataset: *ds,
                    model_name: arch.name(),
                    model: &entry.model,
                    explainer,
                    instance,
                    backgrounds: bg,
                });
            }
        }
    }

    let settings = ScoreSettings {
        master_seed: plan.master_seed,
        robustness: plan.robustness,
        faithfulness: plan.faithfulness,
        explain_baseline: BaselineKind::GenerationProcess,
    };
    let metrics = plan.metrics.clone();
    let results: Result<Vec<Vec<MetricRecord<F>>>, HarnessError> = with_worker_pool(plan.workers, || {
        jobs.par_iter()
            .map(|job| {
                let slug = job.dataset.slug();
                score_instance(&settings, job, &metrics, &slug, &train_means[&slug])
            })
            .collect()
    })?;
    let mut records: Vec<MetricRecord<F>> = results?.into_iter().flatten().collect();
    canonical_sort(&mut records);
    Ok(EvalOutput { records, gate_skips })
}

/// Custom-data evaluation request: any dataset in the on-disk format,
/// optionally a live model, internal explainers and/or pre-computed
/// attribution files.
pub struct CustomEvaluation<'a, F: Scalar> {
    pub dataset: &'a SyntheticDataset<F>,
    pub dataset_name: String,
    pub model: Option<&'a ClassifierModel<F>>,
    pub model_name: String,
    pub explainers: Vec<ExplainerSpec>,
    /// External attributions: (explainer name, test-instance index ->
    /// attribution).
    pub external: Vec<(String, BTreeMap<usize, Attribution<F>>)>,
    pub metrics: Vec<MetricId>,
    pub master_seed: u64,
    pub workers: usize,
    pub robustness: RobustnessConfig,
    pub faithfulness: FaithfulnessConfig,
}

impl<'a, F: Scalar> CustomEvaluation<'a, F> {
    pub fn new(dataset: &'a SyntheticDataset<F>, master_seed: u64) -> Self {
        CustomEvaluation {
            dataset,
            dataset_name: dataset.slug(),
            model: None,
            model_name: "external".to_string(),
            explainers: Vec::new(),
            external: Vec::new(),
            metrics: vec![MetricId::Complexity],
            master_seed,
            workers: 0,
            robustness: RobustnessConfig::default(),
            // Without a known generating process, baselining defaults to
            // uniform noise.
            faithfulness: FaithfulnessConfig { baseline: BaselineKind::Uniform, ..Default::default() },
        }
    }
}

/// Evaluate custom data. Reliability metrics are skipped (with a reason)
/// for instances without ground-truth masks; metrics that need a live
/// model fail with `MissingCapability` when none is supplied.
pub fn evaluate<F: Scalar>(request: &CustomEvaluation<'_, F>) -> Result<EvalOutput<F>, HarnessError> {
    if request.metrics.is_empty() || (request.explainers.is_empty() && request.external.is_empty()) {
        return Err(HarnessError::InvalidParameter(
            "evaluation needs at least one metric and one explanation source".into(),
        ));
    }
    let ds = request.dataset;
    if ds.test.is_empty() {
        return Err(HarnessError::EmptySelection("dataset has an empty test split".into()));
    }
    if request.model.is_none() {
        if !request.explainers.is_empty() {
            return Err(HarnessError::MissingCapability(
                "internal explainers need a live model".into(),
            ));
        }
        if let Some(metric) = request.metrics.iter().find(|m| m.needs_model()) {
            return Err(HarnessError::MissingCapability(format!(
                "{metric} needs a live model, only attribution files were provided"
            )));
        }
    }

    let shape = ds.shape();
    let train_mean = ds.train_mean();
    let mut records: Vec<MetricRecord<F>> = Vec::new();

    // Reference draws for internal explainers on custom data: uniform
    // noise on the normalized scale.
    let uniform = BaselineSource::<F>::Uniform;
    let backgrounds: Vec<TimeSeries<F>> = (0..8)
        .map(|k| uniform.sample(shape, derive_seed(request.master_seed, &["background"], &[k])))
        .collect::<Result<_, _>>()?;

    if let Some(model) = request.model {
        let settings = ScoreSettings {
            master_seed: request.master_seed,
            robustness: request.robustness,
            faithfulness: request.faithfulness,
            explain_baseline: BaselineKind::Uniform,
        };
        for explainer in &request.explainers {
            for instance in 0..ds.test.len() {
                let job = InstanceJob {
                    dataset: ds,
                    model_name: &request.model_name,
                    model,
                    explainer,
                    instance,
                    backgrounds: &backgrounds,
                };
                records.extend(score_instance(
                    &settings,
                    &job,
                    &request.metrics,
                    &request.dataset_name,
                    &train_mean,
                )?);
            }
        }
    }

    for (name, per_instance) in &request.external {
        for (&instance, attribution) in per_instance {
            if instance >= ds.test.len() {
                return Err(HarnessError::InvalidParameter(format!(
                    "attribution file targets instance {instance}, test split has {}",
                    ds.test.len()
                )));
            }
            let inst = &ds.test[instance];
            if attribution.shape() != shape {
                return Err(HarnessError::Explain(ExplainError::InvalidShape(format!(
                    "external attribution {:?} vs dataset {:?}",
                    attribution.shape(),
                    shape
                ))));
            }
            for &metric in &request.metrics {
                let coords = (request.dataset_name.as_str(), request.model_name.as_str(), name.as_str(), instance);
                let seed = record_seed(request.master_seed, &request.dataset_name, &request.model_name, name, metric.name(), instance);
                let outcome: Result<(F, RecordStatus), MetricsError> = match metric {
                    MetricId::Complexity => complexity(attribution).map(|v| (v, RecordStatus::Ok)),
                    MetricId::RelevanceRank | MetricId::RelevanceMass => match &inst.mask {
                        Some(mask) => {
                            if metric == MetricId::RelevanceRank {
                                relevance_rank_acc(attribution, mask).map(|v| (v, RecordStatus::Ok))
                            } else {
                                relevance_mass_acc(attribution, mask).map(|v| (v, RecordStatus::Ok))
                            }
                        }
                        None => {
                            records.push(skip_record(coords, metric, "no_ground_truth"));
                            continue;
                        }
                    },
                    MetricId::Faithfulness => {
                        let model = request.model.expect("checked above");
                        let params = FaithfulnessParams {
                            subset_fraction: num(request.faithfulness.subset_fraction),
                            n_runs: request.faithfulness.n_runs,
                            seed,
                            readout: Readout::Probability,
                        };
                        let source = match request.faithfulness.baseline {
                            BaselineKind::GenerationProcess => BaselineSource::GenerationProcess {
                                spec: &ds.generation_spec,
                                normalization: &ds.normalization,
                            },
                            BaselineKind::Uniform => BaselineSource::Uniform,
                            BaselineKind::TrainMean => BaselineSource::TrainMean(&train_mean),
                        };
                        faithfulness_corr(model, attribution, &inst.series, &params, &source)
                            .map(|v| (v, RecordStatus::Ok))
                    }
                    MetricId::SensMax | MetricId::SensMean => {
                        // A fixed attribution file cannot be re-explained
                        // at perturbed inputs.
                        records.push(skip_record(coords, metric, "not_reexplainable"));
                        continue;
                    }
                };
                records.push(metric_value_to_record(coords, metric, outcome)?);
            }
        }
    }

    if records.is_empty() {
        return Err(HarnessError::EmptySelection("no records were produced".into()));
    }
    canonical_sort(&mut records);
    Ok(EvalOutput { records, gate_skips: Vec::new() })
}

fn skip_record<F: Scalar>(
    coords: (&str, &str, &str, usize),
    metric: MetricId,
    reason: &str,
) -> MetricRecord<F> {
    MetricRecord {
        metric: metric.name().to_string(),
        dataset: coords.0.to_string(),
        model: coords.1.to_string(),
        explainer: coords.2.to_string(),
        instance: coords.3,
        value: None,
        status: RecordStatus::Skipped(reason.to_string()),
    }
}


/// Group key of an aggregate row.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupKey {
    pub explainer: String,
    pub metric: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
}

impl GroupKey {
    pub fn label(&self) -> String {
        let mut out = format!("{}/{}", self.explainer, self.metric);
        if let Some(ds) = &self.dataset {
            out.push('/');
            out.push_str(ds);
        }
        if let Some(model) = &self.model {
            out.push('/');
            out.push_str(model);
        }
        out
    }
}

/// Grouped summary (quartiles by linear interpolation). Records without
/// a value (degenerate or skipped) are excluded from the moments and
/// counted separately.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct AggregateStats<F: Scalar> {
    pub group: GroupKey,
    pub mean: F,
    pub median: F,
    pub q1: F,
    pub q3: F,
    pub min: F,
    pub max: F,
    pub count: usize,
    pub degenerate_count: usize,
}

pub fn aggregate<F: Scalar>(
    records: &[MetricRecord<F>],
    group_by: GroupBy,
    mode: AggregationMode,
) -> Result<Vec<AggregateStats<F>>, HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::EmptySelection("no records to aggregate".into()));
    }
    let mut groups: BTreeMap<GroupKey, Vec<&MetricRecord<F>>> = BTreeMap::new();
    for record in records {
        let key = GroupKey {
            explainer: record.explainer.clone(),
            metric: record.metric.clone(),
            dataset: matches!(group_by, GroupBy::ExplainerMetricDataset)
                .then(|| record.dataset.clone()),
            model: matches!(group_by, GroupBy::ExplainerMetricModel).then(|| record.model.clone()),
        };
        groups.entry(key).or_default().push(record);
    }

    let mut out = Vec::with_capacity(groups.len());
    for (group, members) in groups {
        let degenerate_count = members.iter().filter(|r| r.value.is_none()).count();
        let values: Vec<F> = match mode {
            AggregationMode::PooledInstances => {
                members.iter().filter_map(|r| r.value).collect()
            }
            AggregationMode::PerDatasetMeans => {
                let mut per_dataset: BTreeMap<&str, Vec<F>> = BTreeMap::new();
                for r in &members {
                    if let Some(v) = r.value {
                        per_dataset.entry(r.dataset.as_str()).or_default().push(v);
                    }
                }
                per_dataset.values().map(|vs| crate::stats::mean(vs)).collect()
            }
        };
        if values.is_empty() {
            continue;
        }
        let sorted = crate::stats::sorted_copy(&values);
        out.push(AggregateStats {
            group,
            mean: crate::stats::mean(&values),
            median: crate::stats::quantile_sorted(&sorted, 0.5),
            q1: crate::stats::quantile_sorted(&sorted, 0.25),
            q3: crate::stats::quantile_sorted(&sorted, 0.75),
            min: sorted[0],
            max: sorted[sorted.len() - 1],
            count: values.len(),
            degenerate_count,
        });
    }
    Ok(out)
}
