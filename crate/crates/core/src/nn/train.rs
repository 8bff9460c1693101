//! Training loop: Adam on cross-entropy with early stopping.
//!
//! The protocol is fixed by [`TrainConfig::default`]: up to 500 epochs,
//! Adam at learning rate 0.001, batch size 32, and early stopping with
//! patience 20 on the loss of a stratified 20% validation split; the
//! best-validation snapshot is restored at the end. Training is
//! single-threaded and fully seeded, so a given (model seed, config seed,
//! data) triple reproduces bit-identically regardless of how many models
//! train in parallel elsewhere.

use serde::{Deserialize, Serialize};

use crate::error::NnError;
use crate::nn::{argmax, softmax, Classifier, ClassifierModel};
use crate::rng::SeedStream;
use crate::series::{ClassLabel, LabeledInstance, TimeSeries};
use crate::Scalar;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub validation_fraction: f64,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 500,
            patience: 20,
            learning_rate: 1e-3,
            batch_size: 32,
            validation_fraction: 0.2,
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<(), NnError> {
        if self.patience == 0 || self.patience >= self.max_epochs {
            return Err(NnError::InvalidParameter(format!(
                "patience {} must be in 1..{}",
                self.patience, self.max_epochs
            )));
        }
        // A zero learning rate is allowed (no-op steps); negative is not.
        if !(self.learning_rate >= 0.0) || self.batch_size == 0 {
            return Err(NnError::InvalidParameter("bad learning rate or batch size".into()));
        }
        if !(0.0 < self.validation_fraction && self.validation_fraction < 1.0) {
            return Err(NnError::InvalidParameter("validation fraction must be in (0,1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochStats>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

pub struct TrainedModel<F> {
    pub model: ClassifierModel<F>,
    pub history: TrainingHistory,
}

struct Adam<F> {
    m: Vec<F>,
    v: Vec<F>,
    t: i32,
    beta1: F,
    beta2: F,
    eps: F,
    lr: F,
}

impl<F: Scalar> Adam<F> {
    fn new(n: usize, cfg: &TrainConfig) -> Self {
        Adam {
            m: vec![F::zero(); n],
            v: vec![F::zero(); n],
            t: 0,
            beta1: crate::num(cfg.adam_beta1),
            beta2: crate::num(cfg.adam_beta2),
            eps: crate::num(cfg.adam_eps),
            lr: crate::num(cfg.learning_rate),
        }
    }

    fn step(&mut self, params: &mut [F], grads: &[F]) {
        self.t += 1;
        let bc1 = F::one() - self.beta1.powi(self.t);
        let bc2 = F::one() - self.beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (F::one() - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (F::one() - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Cross-entropy of the model's softmax output against the label.
pub fn cross_entropy_loss<F: Scalar>(
    model: &ClassifierModel<F>,
    x: &TimeSeries<F>,
    label: ClassLabel,
) -> Result<F, NnError> {
    let probs = model.forward(x)?;
    Ok(-(probs[label.index()].max(crate::num(1e-300))).ln())
}

/// Cross-entropy loss together with its gradient w.r.t. every parameter
/// (flat, in the model's layout order).
pub fn loss_gradients<F: Scalar>(
    model: &ClassifierModel<F>,
    x: &TimeSeries<F>,
    label: ClassLabel,
) -> Result<(F, Vec<F>), NnError> {
    if x.shape() != model.input_shape() {
        return Err(NnError::InvalidShape(format!(
            "instance {:?} vs model {:?}",
            x.shape(),
            model.input_shape()
        )));
    }
    let mut grads = vec![F::zero(); model.params().len()];
    let (logits, _dx) = model.backprop(
        x.values(),
        |logits| {
            let mut d = softmax(logits);
            d[label.index()] -= F::one();
            d
        },
        Some(&mut grads),
    );
    let probs = softmax(&logits);
    let loss = -(probs[label.index()].max(crate::num(1e-300))).ln();
    Ok((loss, grads))
}

/// Stratified index split: per class, the last `fraction` of a seeded
/// shuffle goes to validation (at least one instance where possible).
fn split_validation<F: Scalar>(
    instances: &[LabeledInstance<F>],
    fraction: f64,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let mut train_idx = Vec::new();
    let mut val_idx = Vec::new();
    for class in [ClassLabel::Negative, ClassLabel::Positive] {
        let mut idx: Vec<usize> = instances
            .iter()
            .enumerate()
            .filter_map(|(i, inst)| (inst.label == class).then_some(i))
            .collect();
        let mut stream = SeedStream::derived(seed, &["val-split", "class"], &[class.index() as u64]);
        stream.shuffle(&mut idx);
        let n_val = ((idx.len() as f64 * fraction).round() as usize)
            .max(usize::from(idx.len() >= 2))
            .min(idx.len().saturating_sub(1));
        let cut = idx.len() - n_val;
        train_idx.extend_from_slice(&idx[..cut]);
        val_idx.extend_from_slice(&idx[cut..]);
    }
    train_idx.sort_unstable();
    val_idx.sort_unstable();
    (train_idx, val_idx)
}

/// Train a model on the given split; see the module docs for the protocol.
pub fn train<F: Scalar>(
    mut model: ClassifierModel<F>,
    instances: &[LabeledInstance<F>],
    cfg: &TrainConfig,
) -> Result<TrainedModel<F>, NnError> {
    cfg.validate()?;
    let has_pos = instances.iter().any(|i| i.label == ClassLabel::Positive);
    let has_neg = instances.iter().any(|i| i.label == ClassLabel::Negative);
    if !has_pos || !has_neg {
        return Err(NnError::DegenerateLabels);
    }
    for inst in instances {
        if inst.series.shape() != model.input_shape() {
            return Err(NnError::InvalidShape(format!(
                "instance {:?} vs model {:?}",
                inst.series.shape(),
                model.input_shape()
            )));
        }
    }

    let (fit_idx, val_idx) = split_validation(instances, cfg.validation_fraction, cfg.seed);
    let mut adam = Adam::new(model.params().len(), cfg);
    let mut grads = vec![F::zero(); model.params().len()];

    let mut history = Vec::new();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0usize;
    let mut best_params = model.params().to_vec();
    let mut stale_epochs = 0usize;
    let mut stopped_early = false;

    for epoch in 0..cfg.max_epochs {
        let mut order = fit_idx.clone();
        SeedStream::derived(cfg.seed, &["epoch-order"], &[epoch as u64]).shuffle(&mut order);

        let mut loss_sum = 0.0f64;
        for batch in order.chunks(cfg.batch_size) {
            grads.fill(F::zero());
            let scale = crate::num::<F>(1.0 / batch.len() as f64);
            for &idx in batch {
                let inst = &instances[idx];
                let label = inst.label.index();
                let (logits, _dx) = model.backprop(
                    inst.series.values(),
                    |logits| {
                        let mut d = softmax(logits);
                        d[label] -= F::one();
                        for v in &mut d {
                            *v *= scale;
                        }
                        d
                    },
                    Some(&mut grads),
                );
                let probs = softmax(&logits);
                let p = probs[label].max(crate::num(1e-300));
                loss_sum -= p.ln().to_f64().unwrap();
            }
            adam.step(model.params_mut(), &grads);
        }
        let train_loss = loss_sum / fit_idx.len() as f64;

        let mut val_sum = 0.0f64;
        for &idx in &val_idx {
            let inst = &instances[idx];
            let loss = cross_entropy_loss(&model, &inst.series, inst.label)?;
            val_sum += loss.to_f64().unwrap();
        }
        let val_loss = val_sum / val_idx.len().max(1) as f64;
        history.push(EpochStats { epoch, train_loss, val_loss });

        if val_loss < best_val {
            best_val = val_loss;
            best_epoch = epoch;
            best_params.copy_from_slice(model.params());
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= cfg.patience {
                stopped_early = true;
                break;
            }
        }
    }

    model.params_mut().copy_from_slice(&best_params);
    Ok(TrainedModel {
        model,
        history: TrainingHistory { epochs: history, best_epoch, stopped_early },
    })
}

/// Fraction of argmax-correct predictions over a split.
pub fn accuracy<F: Scalar>(
    model: &dyn Classifier<F>,
    split: &[LabeledInstance<F>],
) -> Result<f64, NnError> {
    if split.is_empty() {
        return Err(NnError::EmptySelection("accuracy over an empty split".into()));
    }
    let mut correct = 0usize;
    for inst in split {
        let probs = model.forward(&inst.series)?;
        if argmax(&probs) == inst.label.index() {
            correct += 1;
        }
    }
    Ok(correct as f64 / split.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Architecture, ConstantModel};

    fn toy_instances(n: usize, shape: (usize, usize), gap: f64) -> Vec<LabeledInstance<f64>> {
        // Separable toy data: class shifts the first cells by +-gap.
        let mut out = Vec::new();
        for idx in 0..n {
            let mut stream = SeedStream::derived(7, &["toy"], &[idx as u64]);
            let label = ClassLabel::from_index(idx % 2);
            let mut series = TimeSeries::zeros(shape.0, shape.1);
            for i in 0..shape.0 {
                for t in 0..shape.1 {
                    series.set(i, t, stream.standard_normal());
                }
            }
            let shift = if label == ClassLabel::Positive { gap } else { -gap };
            for t in 0..shape.1 / 2 {
                series.set(0, t, series.get(0, t) + shift);
            }
            out.push(LabeledInstance { series, label, mask: None })
        }
        out
    }

    #[test]
    fn single_class_data_is_degenerate() {
        let mut data = toy_instances(10, (1, 8), 1.0);
        for inst in &mut data {
            inst.label = ClassLabel::Positive;
        }
        let model = ClassifierModel::<f64>::new(Architecture::GatedRecurrent, (1, 8), 1);
        let err = train(model, &data, &TrainConfig::default());
        assert!(matches!(err, Err(NnError::DegenerateLabels)));
    }

    #[test]
    fn zero_learning_rate_leaves_parameters_unchanged() {
        let data = toy_instances(12, (1, 8), 1.0);
        let model = ClassifierModel::<f64>::new(Architecture::GatedRecurrent, (1, 8), 1);
        let before = model.params().to_vec();
        let cfg = TrainConfig {
            learning_rate: 0.0,
            max_epochs: 30,
            patience: 3,
            ..TrainConfig::default()
        };
        let trained = train(model, &data, &cfg).unwrap();
        assert_eq!(trained.model.params(), &before[..]);
        // No improvement after the first epoch: patience stops the run.
        assert!(trained.history.stopped_early);
        assert_eq!(trained.history.epochs.len(), 1 + cfg.patience);
    }

    #[test]
    fn patience_bounds_the_history_length() {
        let data = toy_instances(24, (1, 8), 2.0);
        let model = ClassifierModel::<f64>::new(Architecture::GatedRecurrent, (1, 8), 3);
        let cfg = TrainConfig { max_epochs: 400, patience: 5, ..TrainConfig::default() };
        let trained = train(model, &data, &cfg).unwrap();
        let e = trained.history.epochs.len();
        assert!(e <= 400);
        if trained.history.stopped_early {
            assert_eq!(trained.history.best_epoch + cfg.patience + 1, e);
        }
    }

    #[test]
    fn training_is_bit_reproducible() {
        let data = toy_instances(20, (1, 8), 1.5);
        let cfg = TrainConfig { max_epochs: 25, patience: 8, ..TrainConfig::default() };
        let run = || {
            let model = ClassifierModel::<f64>::new(Architecture::GatedRecurrent, (1, 8), 11);
            train(model, &data, &cfg).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.model.params(), b.model.params());
        assert_eq!(a.history.epochs.len(), b.history.epochs.len());
    }

    #[test]
    fn separable_task_is_learned() {
        let data = toy_instances(60, (1, 8), 2.0);
        let test = toy_instances(40, (1, 8), 2.0);
        let model = ClassifierModel::<f64>::new(Architecture::GatedRecurrent, (1, 8), 5);
        let cfg = TrainConfig { max_epochs: 200, ..TrainConfig::default() }.with_seed(2);
        let trained = train(model, &data, &cfg).unwrap();
        let acc = accuracy(&trained.model, &test).unwrap();
        assert!(acc > 0.9, "accuracy {acc}");
    }

    #[test]
    fn accuracy_matches_a_confusion_count_oracle() {
        let data = toy_instances(100, (1, 6), 0.3);
        let model = ClassifierModel::<f64>::new(Architecture::GatedRecurrent, (1, 6), 13);
        let acc = accuracy(&model, &data).unwrap();
        let mut correct = 0usize;
        for inst in &data {
            let probs = model.forward(&inst.series).unwrap();
            let pred = usize::from(probs[1] > probs[0]);
            if pred == inst.label.index() {
                correct += 1;
            }
        }
        assert_eq!(acc, correct as f64 / data.len() as f64);
    }

    #[test]
    fn constant_model_scores_chance_on_a_balanced_split() {
        let data = toy_instances(40, (1, 6), 1.0);
        let model = ConstantModel::new((1, 6), vec![0.7, 0.3]);
        let acc = accuracy(&model, &data).unwrap();
        assert_eq!(acc, 0.5);
        assert!(accuracy::<f64>(&model, &[]).is_err());
    }

    #[test]
    fn parameter_gradients_match_finite_differences() {
        // Loss-gradient check on a sampled subset of parameters.
        let eps = 1e-5;
        for arch in Architecture::all() {
            for seed in 0..3u64 {
                let mut model = ClassifierModel::<f64>::new(arch, (2, 6), 300 + seed);
                let inst = &toy_instances(4, (2, 6), 1.0)[seed as usize % 4];
                let label = inst.label.index();
                let mut grads = vec![0.0; model.params().len()];
                model.backprop(
                    inst.series.values(),
                    |logits| {
                        let mut d = softmax(logits);
                        d[label] -= 1.0;
                        d
                    },
                    Some(&mut grads),
                );
                let mut stream = SeedStream::derived(900, &["paramcheck"], &[seed]);
                for _ in 0..40 {
                    let p = stream.below(grads.len());
                    let orig = model.params()[p];
                    model.params_mut()[p] = orig + eps;
                    let lp = cross_entropy_loss(&model, &inst.series, inst.label).unwrap();
                    model.params_mut()[p] = orig - eps;
                    let lm = cross_entropy_loss(&model, &inst.series, inst.label).unwrap();
                    model.params_mut()[p] = orig;
                    let fd = (lp - lm) / (2.0 * eps);
                    let ad = grads[p];
                    let rel = (ad - fd).abs() / ad.abs().max(fd.abs()).max(1e-6);
                    assert!(rel < 1e-4, "{arch:?} seed {seed} param {p}: ad {ad} fd {fd}");
                }
            }
        }
    }

    #[test]
    fn loss_is_nonincreasing_early_for_most_seeds() {
        // Statistical: the first epochs of the separable task reduce the
        // training loss for at least 18 of 20 seeds.
        let data = toy_instances(40, (1, 8), 2.0);
        let mut ok = 0;
        for seed in 0..20u64 {
            let model = ClassifierModel::<f64>::new(Architecture::GatedRecurrent, (1, 8), seed);
            let cfg = TrainConfig { max_epochs: 6, patience: 5, ..TrainConfig::default() }
                .with_seed(seed);
            let trained = train(model, &data, &cfg).unwrap();
            let losses: Vec<f64> = trained.history.epochs.iter().map(|e| e.train_loss).collect();
            if losses.windows(2).all(|w| w[1] <= w[0] + 1e-9) {
                ok += 1;
            }
        }
        assert!(ok >= 18, "monotone-loss seeds: {ok}/20");
    }
}
