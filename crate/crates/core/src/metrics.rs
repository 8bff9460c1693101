//! The four metric families scoring an explainer: robustness (max and
//! mean sensitivity under input perturbations), faithfulness (correlation
//! between summed attributions and the output drop under baseline
//! masking), complexity (entropy of the fractional contribution
//! distribution), and reliability (relevance rank / mass accuracy against
//! the ground-truth mask).
//!
//! Rank, mass and contribution computations use absolute attribution
//! values; signed scores would make the mass ratio unbounded.

use serde::{Deserialize, Serialize};

use crate::error::{ExplainError, MetricsError};
use crate::explain::{read_class_score, Attribution, Readout};
use crate::injection::NormalizationParams;
use crate::nn::{argmax, Classifier};
use crate::processes::{sample_reference, GenerationSpec};
use crate::rng::SeedStream;
use crate::series::{GroundTruthMask, TimeSeries};
use crate::stats;
use crate::{num, Scalar};

/// Identifier of one metric, as used in plans, records and the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetricId {
    SensMax,
    SensMean,
    Faithfulness,
    Complexity,
    RelevanceRank,
    RelevanceMass,
}

impl MetricId {
    pub fn name(&self) -> &'static str {
        match self {
            MetricId::SensMax => "sens_max",
            MetricId::SensMean => "sens_mean",
            MetricId::Faithfulness => "faithfulness",
            MetricId::Complexity => "complexity",
            MetricId::RelevanceRank => "relevance_rank",
            MetricId::RelevanceMass => "relevance_mass",
        }
    }

    pub fn all() -> [MetricId; 6] {
        [
            MetricId::SensMax,
            MetricId::SensMean,
            MetricId::Faithfulness,
            MetricId::Complexity,
            MetricId::RelevanceRank,
            MetricId::RelevanceMass,
        ]
    }

    /// Parse a CLI/config name; `racc` and `macc` are accepted aliases.
    pub fn parse(name: &str) -> Option<MetricId> {
        match name.to_lowercase().as_str() {
            "sens_max" | "max_sensitivity" => Some(MetricId::SensMax),
            "sens_mean" | "avg_sensitivity" => Some(MetricId::SensMean),
            "faithfulness" | "faithfulness_corr" => Some(MetricId::Faithfulness),
            "complexity" => Some(MetricId::Complexity),
            "relevance_rank" | "racc" => Some(MetricId::RelevanceRank),
            "relevance_mass" | "macc" => Some(MetricId::RelevanceMass),
            _ => None,
        }
    }

    /// Reliability metrics need a ground-truth mask.
    pub fn needs_mask(&self) -> bool {
        matches!(self, MetricId::RelevanceRank | MetricId::RelevanceMass)
    }

    /// Robustness and faithfulness need a live model (attribution files
    /// alone are not enough).
    pub fn needs_model(&self) -> bool {
        matches!(self, MetricId::SensMax | MetricId::SensMean | MetricId::Faithfulness)
    }
}

impl std::fmt::Display for MetricId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    L2,
    Linf,
}

fn distance<F: Scalar>(a: &crate::matrix::Matrix<F>, b: &crate::matrix::Matrix<F>, norm: NormKind) -> F {
    let diff = a.sub(b);
    match norm {
        NormKind::L2 => diff.frobenius_norm(),
        NormKind::Linf => diff.max_abs(),
    }
}

/// Robustness parameters: perturbations are confined to a radius-`radius`
/// ball (same norm for the input ball and the explanation distance).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RobustnessParams<F> {
    pub radius: F,
    pub n_perturbations: usize,
    pub seed: u64,
    pub norm: NormKind,
}

impl<F: Scalar> Default for RobustnessParams<F> {
    fn default() -> Self {
        RobustnessParams { radius: num(0.1), n_perturbations: 10, seed: 0, norm: NormKind::L2 }
    }
}

impl<F: Scalar> RobustnessParams<F> {
    fn validate(&self) -> Result<(), MetricsError> {
        if self.radius < F::zero() || self.n_perturbations == 0 {
            return Err(MetricsError::InvalidParameter(
                "radius must be >= 0 and n_perturbations >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Sensitivity value plus the prediction-stability flag: the result is
/// flagged when the model argmax changed on more than half of the
/// sampled perturbations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sensitivity<F> {
    pub value: F,
    pub prediction_stable: bool,
}

/// The perturbed inputs a sensitivity evaluation visits, exposed so
/// oracles can recompute perturbation norms independently. Uniform noise
/// rescaled into the ball: for L2 the direction is uniform in the cube
/// and the radius is `r * u^(1/d)`; for Linf every cell is `U(-r, r)`.
pub fn sample_perturbations<F: Scalar>(
    x: &TimeSeries<F>,
    params: &RobustnessParams<F>,
) -> Vec<TimeSeries<F>> {
    let d = x.n_features() * x.t_steps();
    (0..params.n_perturbations)
        .map(|j| {
            let mut stream = SeedStream::derived(params.seed, &["sens-perturb"], &[j as u64]);
            let mut out = x.clone();
            match params.norm {
                NormKind::L2 => {
                    let noise: Vec<F> =
                        (0..d).map(|_| stream.uniform(num::<F>(-1.0), num(1.0))).collect();
                    let norm = noise.iter().fold(F::zero(), |a, &v| a + v * v).sqrt();
                    let u: F = stream.unit();
                    let rho = params.radius * u.powf(F::one() / num(d as f64));
                    let scale = if norm > F::zero() { rho / norm } else { F::zero() };
                    for (slot, nv) in out.values_mut().data_mut().iter_mut().zip(&noise) {
                        *slot += *nv * scale;
                    }
                }
                NormKind::Linf => {
                    for slot in out.values_mut().data_mut() {
                        *slot += stream.uniform(-params.radius, params.radius);
                    }
                }
            }
            out
        })
        .collect()
}

fn sensitivity<F: Scalar>(
    explain: &dyn Fn(&TimeSeries<F>) -> Result<Attribution<F>, ExplainError>,
    model: &dyn Classifier<F>,
    x: &TimeSeries<F>,
    params: &RobustnessParams<F>,
) -> Result<(F, F, bool), MetricsError> {
    params.validate()?;
    let base = explain(x)
        .map_err(|e| MetricsError::ExplainFailure { sample: 0, source: Box::new(e) })?;
    let original_class = argmax(&model.forward(x)?);
    let perturbed = sample_perturbations(x, params);
    let mut max = F::zero();
    let mut sum = F::zero();
    let mut stable = 0usize;
    for (j, xbar) in perturbed.iter().enumerate() {
        let attr = explain(xbar)
            .map_err(|e| MetricsError::ExplainFailure { sample: j + 1, source: Box::new(e) })?;
        let dist = distance(attr.scores(), base.scores(), params.norm);
        max = max.max(dist);
        sum += dist;
        if argmax(&model.forward(xbar)?) == original_class {
            stable += 1;
        }
    }
    let mean = sum / F::from_usize(perturbed.len()).unwrap();
    Ok((max, mean, 2 * stable >= perturbed.len()))
}

/// Maximum explanation change over the sampled neighborhood.
pub fn sens_max<F: Scalar>(
    explain: &dyn Fn(&TimeSeries<F>) -> Result<Attribution<F>, ExplainError>,
    model: &dyn Classifier<F>,
    x: &TimeSeries<F>,
    params: &RobustnessParams<F>,
) -> Result<Sensitivity<F>, MetricsError> {
    let (max, _, stable) = sensitivity(explain, model, x, params)?;
    Ok(Sensitivity { value: max, prediction_stable: stable })
}

/// Mean explanation change over the sampled neighborhood; never exceeds
/// [`sens_max`] on the same sample set.
pub fn sens_mean<F: Scalar>(
    explain: &dyn Fn(&TimeSeries<F>) -> Result<Attribution<F>, ExplainError>,
    model: &dyn Classifier<F>,
    x: &TimeSeries<F>,
    params: &RobustnessParams<F>,
) -> Result<Sensitivity<F>, MetricsError> {
    let (_, mean, stable) = sensitivity(explain, model, x, params)?;
    Ok(Sensitivity { value: mean, prediction_stable: stable })
}

/// Where faithfulness masking draws its uninformative values from.
#[derive(Clone, Copy, Debug)]
pub enum BaselineSource<'a, F> {
    /// Sample the dataset's generating process and normalize with the
    /// dataset's parameters.
    GenerationProcess { spec: &'a GenerationSpec, normalization: &'a NormalizationParams<F> },
    /// Cellwise `U(0, 1)` on the normalized scale (default for data
    /// without a known generating process).
    Uniform,
    /// Per-cell mean of the train split.
    TrainMean(&'a TimeSeries<F>),
}

impl<F: Scalar> BaselineSource<'_, F> {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineSource::GenerationProcess { .. } => "generation_process",
            BaselineSource::Uniform => "uniform",
            BaselineSource::TrainMean(_) => "train_mean",
        }
    }

    /// Draw one baseline series of the given shape.
    pub fn sample(&self, shape: (usize, usize), seed: u64) -> Result<TimeSeries<F>, MetricsError> {
        match self {
            BaselineSource::GenerationProcess { spec, normalization } => {
                let raw = sample_reference(spec, shape, seed).map_err(|e| {
                    MetricsError::InvalidParameter(format!("generation-process baseline: {e}"))
                })?;
                Ok(normalization.transform(&raw))
            }
            BaselineSource::Uniform => {
                let mut stream = SeedStream::derived(seed, &["uniform-baseline"], &[]);
                let mut out = TimeSeries::zeros(shape.0, shape.1);
                for v in out.values_mut().data_mut() {
                    *v = stream.unit();
                }
                Ok(out)
            }
            BaselineSource::TrainMean(mean) => {
                if mean.shape() != shape {
                    return Err(MetricsError::InvalidShape(format!(
                        "train mean {:?} vs instance {:?}",
                        mean.shape(),
                        shape
                    )));
                }
                Ok((*mean).clone())
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FaithfulnessParams<F> {
    /// Fraction of cells replaced per run, in (0, 1); at least one cell.
    pub subset_fraction: F,
    pub n_runs: usize,
    pub seed: u64,
    /// Probability readout by default; the logit readout keeps linear
    /// models exactly linear.
    pub readout: Readout,
}

impl<F: Scalar> Default for FaithfulnessParams<F> {
    fn default() -> Self {
        FaithfulnessParams {
            subset_fraction: num(0.1),
            n_runs: 20,
            seed: 0,
            readout: Readout::Probability,
        }
    }
}

/// Pearson correlation between summed attributions of random cell
/// subsets and the model's output drop when those cells are replaced by
/// the baseline. The readout class is the argmax at `x`, held fixed
/// across subsets.
pub fn faithfulness_corr<F: Scalar>(
    model: &dyn Classifier<F>,
    attribution: &Attribution<F>,
    x: &TimeSeries<F>,
    params: &FaithfulnessParams<F>,
    baseline: &BaselineSource<'_, F>,
) -> Result<F, MetricsError> {
    if attribution.shape() != x.shape() {
        return Err(MetricsError::InvalidShape(format!(
            "attribution {:?} vs instance {:?}",
            attribution.shape(),
            x.shape()
        )));
    }
    if !(params.subset_fraction > F::zero() && params.subset_fraction < F::one()) {
        return Err(MetricsError::InvalidParameter("subset fraction must be in (0,1)".into()));
    }
    if params.n_runs < 2 {
        return Err(MetricsError::InvalidParameter("faithfulness needs >= 2 runs".into()));
    }
    let cells = x.n_features() * x.t_steps();
    let subset_size = ((params.subset_fraction.to_f64().unwrap() * cells as f64).floor() as usize)
        .clamp(1, cells);
    let reference =
        baseline.sample(x.shape(), crate::rng::derive_seed(params.seed, &["faith-baseline"], &[]))?;

    let original_class = argmax(&model.forward(x)?);
    let base_score = read_class_score(model, x, original_class, params.readout)?;

    let mut attr_sums = Vec::with_capacity(params.n_runs);
    let mut drops = Vec::with_capacity(params.n_runs);
    let mut masked = x.clone();
    let t = x.t_steps();
    for run in 0..params.n_runs {
        let mut stream = SeedStream::derived(params.seed, &["faith-subset"], &[run as u64]);
        let subset = stream.distinct_indices(cells, subset_size);
        for &idx in &subset {
            let (i, k) = (idx / t, idx % t);
            masked.set(i, k, reference.get(i, k));
        }
        let sum = subset
            .iter()
            .fold(F::zero(), |a, &idx| a + attribution.scores().data()[idx]);
        let drop = base_score - read_class_score(model, &masked, original_class, params.readout)?;
        for &idx in &subset {
            let (i, k) = (idx / t, idx % t);
            masked.set(i, k, x.get(i, k));
        }
        attr_sums.push(sum);
        drops.push(drop);
    }

    stats::pearson(&attr_sums, &drops).ok_or_else(|| {
        MetricsError::DegenerateCorrelation(
            "zero variance in attribution sums or output drops".into(),
        )
    })
}

/// Shannon entropy of the fractional contribution distribution
/// `P(i) = |a_i| / sum |a|`, with `0 ln 0 := 0`. Ranges over
/// `[0, ln(N*T)]`.
pub fn complexity<F: Scalar>(attribution: &Attribution<F>) -> Result<F, MetricsError> {
    let total = attribution.scores().abs_sum();
    if total == F::zero() {
        return Err(MetricsError::DegenerateAttribution);
    }
    let mut entropy = F::zero();
    for &a in attribution.scores().data() {
        let p = a.abs() / total;
        if p > F::zero() {
            entropy -= p * p.ln();
        }
    }
    Ok(entropy)
}

fn check_mask_shape<F: Scalar>(
    attribution: &Attribution<F>,
    mask: &GroundTruthMask,
) -> Result<(), MetricsError> {
    if attribution.shape() != mask.shape() {
        return Err(MetricsError::InvalidShape(format!(
            "attribution {:?} vs mask {:?}",
            attribution.shape(),
            mask.shape()
        )));
    }
    Ok(())
}

/// Fraction of the top-`K` cells (by absolute score, `K` the mask
/// cardinality) that fall inside the ground truth. Ties break on the
/// feature-major cell order.
pub fn relevance_rank_acc<F: Scalar>(
    attribution: &Attribution<F>,
    mask: &GroundTruthMask,
) -> Result<F, MetricsError> {
    check_mask_shape(attribution, mask)?;
    let k = mask.cardinality();
    let scores = attribution.scores().data();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b].abs().partial_cmp(&scores[a].abs()).expect("finite scores").then(a.cmp(&b))
    });
    let t = mask.t_steps();
    let hits = order[..k].iter().filter(|&&idx| mask.is_set(idx / t, idx % t)).count();
    Ok(num::<F>(hits as f64) / num(k as f64))
}

/// Share of total absolute attribution mass lying inside the ground
/// truth.
pub fn relevance_mass_acc<F: Scalar>(
    attribution: &Attribution<F>,
    mask: &GroundTruthMask,
) -> Result<F, MetricsError> {
    check_mask_shape(attribution, mask)?;
    let total = attribution.scores().abs_sum();
    if total == F::zero() {
        return Err(MetricsError::DegenerateAttribution);
    }
    let t = mask.t_steps();
    let inside = attribution
        .scores()
        .data()
        .iter()
        .enumerate()
        .filter(|(idx, _)| mask.is_set(idx / t, idx % t))
        .fold(F::zero(), |a, (_, v)| a + v.abs());
    Ok(inside / total)
}

/// Why a record carries no usable value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecordStatus {
    Ok,
    /// Value present, but the model argmax was unstable over the sampled
    /// perturbation ball.
    UnstablePrediction,
    /// No value: the metric degenerated (reason code).
    Degenerate(String),
    /// No value: the metric was skipped (reason code).
    Skipped(String),
}

impl RecordStatus {
    pub fn label(&self) -> String {
        match self {
            RecordStatus::Ok => "ok".to_string(),
            RecordStatus::UnstablePrediction => "unstable_prediction".to_string(),
            RecordStatus::Degenerate(reason) => format!("degenerate:{reason}"),
            RecordStatus::Skipped(reason) => format!("skipped:{reason}"),
        }
    }

    pub fn parse(label: &str) -> Option<RecordStatus> {
        match label {
            "ok" => Some(RecordStatus::Ok),
            "unstable_prediction" => Some(RecordStatus::UnstablePrediction),
            other => match other.split_once(':') {
                Some(("degenerate", reason)) => Some(RecordStatus::Degenerate(reason.to_string())),
                Some(("skipped", reason)) => Some(RecordStatus::Skipped(reason.to_string())),
                _ => None,
            },
        }
    }
}

/// One scored (metric, dataset, model, explainer, instance) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricRecord<F> {
    pub metric: String,
    pub dataset: String,
    pub model: String,
    pub explainer: String,
    pub instance: usize,
    /// Present for `Ok` / `UnstablePrediction`, absent otherwise.
    pub value: Option<F>,
    pub status: RecordStatus,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::nn::{ConstantModel, LinearScorer};

    fn series(values: Vec<f64>) -> TimeSeries<f64> {
        TimeSeries::new(Matrix::from_vec(1, values.len(), values))
    }

    fn attr(values: Vec<f64>) -> Attribution<f64> {
        Attribution::new(Matrix::from_vec(1, values.len(), values), 1, "test").unwrap()
    }

    fn mask(bits: Vec<bool>) -> GroundTruthMask {
        GroundTruthMask::new(Matrix::from_vec(1, bits.len(), bits)).unwrap()
    }

    fn constant_explainer(
        len: usize,
    ) -> impl Fn(&TimeSeries<f64>) -> Result<Attribution<f64>, ExplainError> {
        move |_x: &TimeSeries<f64>| {
            Attribution::new(Matrix::from_vec(1, len, vec![0.25; len]), 1, "const")
        }
    }

    fn identity_explainer(
    ) -> impl Fn(&TimeSeries<f64>) -> Result<Attribution<f64>, ExplainError> {
        |x: &TimeSeries<f64>| Attribution::new(x.values().clone(), 1, "identity")
    }

    #[test]
    fn constant_explainer_has_zero_sensitivity() {
        let model = ConstantModel::new((1, 6), vec![0.6, 0.4]);
        let x = series(vec![0.5; 6]);
        let params = RobustnessParams::default();
        let smax = sens_max(&constant_explainer(6), &model, &x, &params).unwrap();
        let smean = sens_mean(&constant_explainer(6), &model, &x, &params).unwrap();
        assert_eq!(smax.value, 0.0);
        assert_eq!(smean.value, 0.0);
        assert!(smax.prediction_stable);
    }

    #[test]
    fn zero_radius_pins_the_neighborhood_to_x() {
        let model = ConstantModel::new((1, 6), vec![0.6, 0.4]);
        let x = series(vec![0.5; 6]);
        let params = RobustnessParams { radius: 0.0, ..RobustnessParams::default() };
        let smax = sens_max(&identity_explainer(), &model, &x, &params).unwrap();
        assert_eq!(smax.value, 0.0);
    }

    #[test]
    fn identity_explainer_matches_the_perturbation_norm_oracle() {
        let model = ConstantModel::new((1, 8), vec![0.5, 0.5]);
        let x = series(vec![0.3; 8]);
        for norm in [NormKind::L2, NormKind::Linf] {
            let params = RobustnessParams { seed: 9, norm, ..RobustnessParams::default() };
            let smax = sens_max(&identity_explainer(), &model, &x, &params).unwrap();
            let smean = sens_mean(&identity_explainer(), &model, &x, &params).unwrap();
            // Oracle: recompute the sampled perturbation norms directly.
            let norms: Vec<f64> = sample_perturbations(&x, &params)
                .iter()
                .map(|xbar| {
                    let diff = xbar.values().sub(x.values());
                    match norm {
                        NormKind::L2 => diff.frobenius_norm(),
                        NormKind::Linf => diff.max_abs(),
                    }
                })
                .collect();
            let expect_max = norms.iter().fold(0.0f64, |a, &v| a.max(v));
            let expect_mean = norms.iter().sum::<f64>() / norms.len() as f64;
            assert!((smax.value - expect_max).abs() < 1e-12);
            assert!((smean.value - expect_mean).abs() < 1e-12);
            assert!(smax.value <= 0.1 + 1e-12, "confined to the ball");
            assert!(smean.value <= smax.value);
        }
    }

    #[test]
    fn single_perturbation_makes_mean_equal_max() {
        let model = ConstantModel::new((1, 8), vec![0.5, 0.5]);
        let x = series(vec![0.1; 8]);
        let params =
            RobustnessParams { n_perturbations: 1, seed: 4, ..RobustnessParams::default() };
        let smax = sens_max(&identity_explainer(), &model, &x, &params).unwrap();
        let smean = sens_mean(&identity_explainer(), &model, &x, &params).unwrap();
        assert_eq!(smax.value, smean.value);
    }

    #[test]
    fn explainer_failures_carry_the_sample_index() {
        let model = ConstantModel::new((1, 4), vec![0.5, 0.5]);
        let x = series(vec![0.1; 4]);
        let failing = |inp: &TimeSeries<f64>| {
            if inp == &series(vec![0.1; 4]) {
                Attribution::new(inp.values().clone(), 1, "id")
            } else {
                Err(ExplainError::InvalidParameter("boom".into()))
            }
        };
        let err = sens_max(&failing, &model, &x, &RobustnessParams::default());
        match err {
            Err(MetricsError::ExplainFailure { sample, .. }) => assert_eq!(sample, 1),
            other => panic!("expected explain failure, got {other:?}"),
        }
    }

    #[test]
    fn linear_scorer_with_exact_attribution_is_perfectly_faithful() {
        let w = vec![0.8, -0.5, 1.2, 0.3, -0.9, 0.6, 0.2, -0.1];
        let model = LinearScorer::new(Matrix::from_vec(1, 8, w.clone()), 0.4);
        let x = series(vec![0.9, 0.2, 0.8, 0.7, 0.1, 0.9, 0.5, 0.3]);
        // Fixed baseline; attribution a_i = w_i (x_i - b_i).
        let baseline = series(vec![0.45; 8]);
        let scores: Vec<f64> =
            (0..8).map(|i| w[i] * (x.get(0, i) - baseline.get(0, i))).collect();
        let attribution = attr(scores);
        // argmax at x must be class 1 for the drop to align with the sums.
        assert!(model.score(&x) > 0.0);
        let params = FaithfulnessParams {
            subset_fraction: 0.25,
            n_runs: 16,
            seed: 3,
            readout: Readout::Logit,
        };
        let corr = faithfulness_corr(
            &model,
            &attribution,
            &x,
            &params,
            &BaselineSource::TrainMean(&baseline),
        )
        .unwrap();
        assert!((corr - 1.0).abs() < 1e-9, "corr {corr}");
    }

    #[test]
    fn constant_model_output_degenerates_the_correlation() {
        let model = ConstantModel::new((1, 8), vec![0.7, 0.3]);
        let x = series(vec![0.5; 8]);
        let attribution = attr(vec![0.1, 0.9, 0.3, 0.2, 0.4, 0.8, 0.6, 0.7]);
        let err = faithfulness_corr(
            &model,
            &attribution,
            &x,
            &FaithfulnessParams::default(),
            &BaselineSource::Uniform,
        );
        assert!(matches!(err, Err(MetricsError::DegenerateCorrelation(_))), "{err:?}");
    }

    #[test]
    fn complexity_known_values() {
        // One-hot: a single spike has zero entropy.
        let one_hot = attr(vec![0.0, 0.0, 3.5, 0.0]);
        assert_eq!(complexity(&one_hot).unwrap(), 0.0);

        // Uniform over 50 cells: the entropy maximum ln 50.
        let uniform = attr(vec![0.2; 50]);
        let c = complexity(&uniform).unwrap();
        assert!((c - 50f64.ln()).abs() < 1e-12, "{c}");

        // Direct-entropy oracle for [0.5, 0.25, 0.25].
        let mixed = attr(vec![0.5, -0.25, 0.25]);
        let expected = -(0.5 * 0.5f64.ln() + 2.0 * 0.25 * 0.25f64.ln());
        assert!((complexity(&mixed).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 1.0397207708399179).abs() < 1e-12);

        assert!(matches!(
            complexity(&attr(vec![0.0; 4])),
            Err(MetricsError::DegenerateAttribution)
        ));
    }

    #[test]
    fn relevance_rank_known_values() {
        // Top-K exactly the mask.
        let a = attr(vec![0.9, 0.1, 0.8, 0.05]);
        let m = mask(vec![true, false, true, false]);
        assert_eq!(relevance_rank_acc(&a, &m).unwrap(), 1.0);

        // Top-K disjoint from the mask.
        let m = mask(vec![false, true, false, true]);
        assert_eq!(relevance_rank_acc(&a, &m).unwrap(), 0.0);

        // Brute-force set-intersection case.
        let a = attr(vec![0.9, 0.8, 0.1, 0.05]);
        let m = mask(vec![true, false, true, false]);
        assert_eq!(relevance_rank_acc(&a, &m).unwrap(), 0.5);
    }

    #[test]
    fn rank_ties_break_on_cell_order() {
        let a = attr(vec![0.5, 0.5, 0.5, 0.5]);
        let m = mask(vec![true, true, false, false]);
        // K = 2; ties resolve to cells 0 and 1.
        assert_eq!(relevance_rank_acc(&a, &m).unwrap(), 1.0);
    }

    #[test]
    fn relevance_mass_known_values() {
        let a = attr(vec![0.6, 0.3, 0.1]);
        let ratio = relevance_mass_acc(&a, &mask(vec![true, false, false])).unwrap();
        assert!((ratio - 0.6).abs() < 1e-12, "{ratio}");
        assert_eq!(relevance_mass_acc(&a, &mask(vec![true, true, true])).unwrap(), 1.0);
        let uniform = attr(vec![0.25; 4]);
        assert_eq!(relevance_mass_acc(&uniform, &mask(vec![true, true, false, false])).unwrap(), 0.5);
        assert!(relevance_mass_acc(&attr(vec![0.0; 3]), &mask(vec![true, false, false])).is_err());
    }

    #[test]
    fn record_status_labels_round_trip() {
        for status in [
            RecordStatus::Ok,
            RecordStatus::UnstablePrediction,
            RecordStatus::Degenerate("zero_variance".into()),
            RecordStatus::Skipped("no_ground_truth".into()),
        ] {
            assert_eq!(RecordStatus::parse(&status.label()), Some(status.clone()));
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn attr_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
            (2usize..40).prop_flat_map(|len| {
                (
                    proptest::collection::vec(-10.0f64..10.0, len),
                    proptest::collection::vec(proptest::bool::ANY, len),
                )
            })
        }

        proptest! {
            #[test]
            fn metrics_are_bounded_and_scale_invariant(
                (values, bits) in attr_strategy(),
                scale in 1e-3f64..1e3,
            ) {
                prop_assume!(values.iter().any(|&v| v != 0.0));
                prop_assume!(bits.iter().any(|&b| b));
                let len = values.len();
                let a = attr(values.clone());
                let m = mask(bits);

                let c = complexity(&a).unwrap();
                prop_assert!(c >= -1e-12 && c <= (len as f64).ln() + 1e-12);
                let racc = relevance_rank_acc(&a, &m).unwrap();
                let macc = relevance_mass_acc(&a, &m).unwrap();
                prop_assert!((0.0..=1.0).contains(&racc));
                prop_assert!((-1e-12..=1.0 + 1e-12).contains(&macc));

                let scaled = attr(values.iter().map(|v| v * scale).collect());
                prop_assert!((complexity(&scaled).unwrap() - c).abs() < 1e-9);
                prop_assert!((relevance_rank_acc(&scaled, &m).unwrap() - racc).abs() < 1e-12);
                prop_assert!((relevance_mass_acc(&scaled, &m).unwrap() - macc).abs() < 1e-12);
            }

            #[test]
            fn mean_sensitivity_never_exceeds_max(seed in 0u64..200) {
                let model = ConstantModel::new((1, 6), vec![0.5, 0.5]);
                let x = series(vec![0.4; 6]);
                let params = RobustnessParams { seed, n_perturbations: 6, ..RobustnessParams::default() };
                let smax = sens_max(&identity_explainer(), &model, &x, &params).unwrap();
                let smean = sens_mean(&identity_explainer(), &model, &x, &params).unwrap();
                prop_assert!(smean.value <= smax.value + 1e-15);
            }
        }
    }
}
