//! Classifiers with exact reverse-mode gradients.
//!
//! Two trainable families ([`Architecture::TemporalConv`],
//! [`Architecture::GatedRecurrent`]) plus two analytic calibration models
//! ([`LinearScorer`], [`ConstantModel`]) used to validate metrics against
//! closed-form answers. Everything runs on the CPU in plain loops; the
//! backward passes are checked against central finite differences in the
//! test suite.

mod checkpoint;
mod gated;
mod params;
mod tcn;
mod train;

pub use checkpoint::{load_model, save_model, MODEL_FORMAT_VERSION};
pub use gated::GatedRecurrentNet;
pub use params::{ParamLayout, TensorSpec};
pub use tcn::TemporalConvNet;
pub use train::{
    accuracy, cross_entropy_loss, loss_gradients, train, EpochStats, TrainConfig, TrainedModel,
    TrainingHistory,
};

use serde::{Deserialize, Serialize};

use crate::error::NnError;
use crate::matrix::Matrix;
use crate::series::TimeSeries;
use crate::Scalar;

/// Numerically stable softmax.
pub fn softmax<F: Scalar>(logits: &[F]) -> Vec<F> {
    let max = logits.iter().fold(F::neg_infinity(), |a, &v| a.max(v));
    let exps: Vec<F> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum = exps.iter().fold(F::zero(), |a, &v| a + v);
    exps.iter().map(|&v| v / sum).collect()
}

/// A classification model exposing class probabilities and input
/// gradients of the target-class logit.
pub trait Classifier<F: Scalar>: Send + Sync {
    fn input_shape(&self) -> (usize, usize);

    fn n_classes(&self) -> usize {
        2
    }

    /// Raw class scores before the softmax.
    fn logits(&self, x: &TimeSeries<F>) -> Result<Vec<F>, NnError>;

    /// Class probability vector (softmax of the logits): nonnegative,
    /// summing to one.
    fn forward(&self, x: &TimeSeries<F>) -> Result<Vec<F>, NnError> {
        Ok(softmax(&self.logits(x)?))
    }

    /// Gradient of the target-class logit with respect to every input cell.
    fn input_gradient(&self, x: &TimeSeries<F>, target: usize) -> Result<Matrix<F>, NnError>;

    /// Index of the most probable class.
    fn predict(&self, x: &TimeSeries<F>) -> Result<usize, NnError> {
        let probs = self.forward(x)?;
        Ok(argmax(&probs))
    }
}

pub(crate) fn argmax<F: Scalar>(values: &[F]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Architecture {
    TemporalConv,
    GatedRecurrent,
}

impl Architecture {
    pub fn name(&self) -> &'static str {
        match self {
            Architecture::TemporalConv => "temporal_conv",
            Architecture::GatedRecurrent => "gated_recurrent",
        }
    }

    pub fn all() -> [Architecture; 2] {
        [Architecture::TemporalConv, Architecture::GatedRecurrent]
    }

    /// Parse a CLI/config name; `cnn` and `lstm` are accepted aliases.
    pub fn parse(name: &str) -> Option<Architecture> {
        match name.to_lowercase().as_str() {
            "temporal_conv" | "tcn" | "cnn" => Some(Architecture::TemporalConv),
            "gated_recurrent" | "lstm" => Some(Architecture::GatedRecurrent),
            _ => None,
        }
    }
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// A trainable classifier of either architecture with flat parameter
/// storage (see [`ParamLayout`]).
#[derive(Clone, Debug, PartialEq)]
pub enum ClassifierModel<F> {
    TemporalConv(TemporalConvNet<F>),
    GatedRecurrent(GatedRecurrentNet<F>),
}

impl<F: Scalar> ClassifierModel<F> {
    /// Default-size model for the given input shape: 3 residual blocks of
    /// 32 width-7 filters, or one gated layer of hidden size 10.
    pub fn new(arch: Architecture, shape: (usize, usize), seed: u64) -> Self {
        match arch {
            Architecture::TemporalConv => ClassifierModel::TemporalConv(TemporalConvNet::new(
                shape.0, shape.1, 32, 7, 3, seed,
            )),
            Architecture::GatedRecurrent => {
                ClassifierModel::GatedRecurrent(GatedRecurrentNet::new(shape.0, shape.1, 10, seed))
            }
        }
    }

    pub fn architecture(&self) -> Architecture {
        match self {
            ClassifierModel::TemporalConv(_) => Architecture::TemporalConv,
            ClassifierModel::GatedRecurrent(_) => Architecture::GatedRecurrent,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ClassifierModel::TemporalConv(m) => m.seed,
            ClassifierModel::GatedRecurrent(m) => m.seed,
        }
    }

    pub fn layout(&self) -> &ParamLayout {
        match self {
            ClassifierModel::TemporalConv(m) => &m.layout,
            ClassifierModel::GatedRecurrent(m) => &m.layout,
        }
    }

    pub fn params(&self) -> &[F] {
        match self {
            ClassifierModel::TemporalConv(m) => &m.params,
            ClassifierModel::GatedRecurrent(m) => &m.params,
        }
    }

    pub fn params_mut(&mut self) -> &mut [F] {
        match self {
            ClassifierModel::TemporalConv(m) => &mut m.params,
            ClassifierModel::GatedRecurrent(m) => &mut m.params,
        }
    }

    /// Mutable view of one named tensor, e.g. `"head.weight"`.
    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut [F]> {
        let idx = self.layout().index_of(name)?;
        let range = self.layout().range(idx);
        Some(&mut self.params_mut()[range])
    }

    fn check_shape(&self, x: &TimeSeries<F>) -> Result<(), NnError> {
        if x.shape() != self.input_shape() {
            return Err(NnError::InvalidShape(format!(
                "input {:?} vs model {:?}",
                x.shape(),
                self.input_shape()
            )));
        }
        Ok(())
    }

    /// One cached forward plus reverse pass. `make_dlogits` maps the
    /// computed logits to the gradient seeded at the output; parameter
    /// gradients accumulate into `grads` when given. Returns the logits
    /// and the input gradient.
    pub(crate) fn backprop(
        &self,
        x: &Matrix<F>,
        make_dlogits: impl FnOnce(&[F]) -> Vec<F>,
        grads: Option<&mut [F]>,
    ) -> (Vec<F>, Matrix<F>) {
        match self {
            ClassifierModel::TemporalConv(m) => {
                let cache = m.forward_cached(x);
                let dlogits = make_dlogits(&cache.logits);
                let dx = m.backward(&cache, &dlogits, grads);
                (cache.logits, dx)
            }
            ClassifierModel::GatedRecurrent(m) => {
                let cache = m.forward_cached(x);
                let dlogits = make_dlogits(&cache.logits);
                let dx = m.backward(x, &cache, &dlogits, grads);
                (cache.logits, dx)
            }
        }
    }
}

impl<F: Scalar> Classifier<F> for ClassifierModel<F> {
    fn input_shape(&self) -> (usize, usize) {
        match self {
            ClassifierModel::TemporalConv(m) => (m.n_features, m.t_steps),
            ClassifierModel::GatedRecurrent(m) => (m.n_features, m.t_steps),
        }
    }

    fn logits(&self, x: &TimeSeries<F>) -> Result<Vec<F>, NnError> {
        self.check_shape(x)?;
        Ok(match self {
            ClassifierModel::TemporalConv(m) => m.forward_cached(x.values()).logits,
            ClassifierModel::GatedRecurrent(m) => m.forward_cached(x.values()).logits,
        })
    }

    fn input_gradient(&self, x: &TimeSeries<F>, target: usize) -> Result<Matrix<F>, NnError> {
        self.check_shape(x)?;
        if target >= self.n_classes() {
            return Err(NnError::InvalidParameter(format!("target class {target} out of range")));
        }
        let onehot = move |logits: &[F]| {
            let mut d = vec![F::zero(); logits.len()];
            d[target] = F::one();
            d
        };
        let (_logits, dx) = self.backprop(x.values(), onehot, None);
        Ok(dx)
    }
}

/// Analytic linear scorer: `logit_1 = w . x + b`, `logit_0 = 0`. Used to
/// calibrate metrics against closed-form answers.
#[derive(Clone, Debug)]
pub struct LinearScorer<F> {
    pub weights: Matrix<F>,
    pub bias: F,
}

impl<F: Scalar> LinearScorer<F> {
    pub fn new(weights: Matrix<F>, bias: F) -> Self {
        LinearScorer { weights, bias }
    }

    pub fn score(&self, x: &TimeSeries<F>) -> F {
        self.bias
            + self
                .weights
                .data()
                .iter()
                .zip(x.values().data())
                .fold(F::zero(), |a, (&w, &v)| a + w * v)
    }
}

impl<F: Scalar> Classifier<F> for LinearScorer<F> {
    fn input_shape(&self) -> (usize, usize) {
        self.weights.shape()
    }

    fn logits(&self, x: &TimeSeries<F>) -> Result<Vec<F>, NnError> {
        if x.shape() != self.input_shape() {
            return Err(NnError::InvalidShape(format!(
                "input {:?} vs scorer {:?}",
                x.shape(),
                self.input_shape()
            )));
        }
        Ok(vec![F::zero(), self.score(x)])
    }

    fn input_gradient(&self, x: &TimeSeries<F>, target: usize) -> Result<Matrix<F>, NnError> {
        let _ = self.logits(x)?;
        Ok(match target {
            1 => self.weights.clone(),
            _ => Matrix::zeros(self.weights.rows(), self.weights.cols()),
        })
    }
}

/// Model with a fixed output, independent of the input.
#[derive(Clone, Debug)]
pub struct ConstantModel<F> {
    shape: (usize, usize),
    probs: Vec<F>,
}

impl<F: Scalar> ConstantModel<F> {
    pub fn new(shape: (usize, usize), probs: Vec<F>) -> Self {
        ConstantModel { shape, probs }
    }
}

impl<F: Scalar> Classifier<F> for ConstantModel<F> {
    fn input_shape(&self) -> (usize, usize) {
        self.shape
    }

    fn logits(&self, _x: &TimeSeries<F>) -> Result<Vec<F>, NnError> {
        Ok(self.probs.iter().map(|&p| p.max(crate::num(1e-12)).ln()).collect())
    }

    fn forward(&self, _x: &TimeSeries<F>) -> Result<Vec<F>, NnError> {
        Ok(self.probs.clone())
    }

    fn input_gradient(&self, _x: &TimeSeries<F>, _target: usize) -> Result<Matrix<F>, NnError> {
        Ok(Matrix::zeros(self.shape.0, self.shape.1))
    }
}
