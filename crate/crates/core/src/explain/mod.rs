//! Reference explainers and attribution ingestion.
//!
//! Gradient family (saliency, gradient-times-input, smoothed and
//! path-integrated variants), sliding-window occlusion, temporal saliency
//! rescaling as a wrapper over any base explainer, a segment-surrogate
//! explainer, and conversion of example-based explanations (e.g.
//! externally generated counterfactuals) into attribution maps.
//!
//! All explainers are deterministic given (model, input, seed); the
//! stochastic ones take explicit seeds.

mod external;
mod gradient;
mod lime;
mod occlusion;
mod tsr;

pub use external::{
    example_to_attribution, load_external_attribution, save_attribution_file, ExampleExplanation,
    ExternalPayload, LoadedExplanation, ATTRIBUTION_FORMAT_VERSION,
};
pub use gradient::{gradient_attribution, GradientVariant};
pub use lime::{lime_surrogate, lime_surrogate_fit, LimeFit};
pub use occlusion::occlusion;
pub use tsr::{tsr_wrap, TsrThreshold};

use crate::error::ExplainError;
use crate::matrix::Matrix;
use crate::series::TimeSeries;
use crate::Scalar;

/// Per-cell relevance scores for one explained instance.
#[derive(Clone, Debug, PartialEq)]
pub struct Attribution<F> {
    scores: Matrix<F>,
    pub target_class: usize,
    pub explainer: String,
}

impl<F: Scalar> Attribution<F> {
    /// Requires every score to be finite.
    pub fn new(
        scores: Matrix<F>,
        target_class: usize,
        explainer: impl Into<String>,
    ) -> Result<Self, ExplainError> {
        if !scores.all_finite() {
            return Err(ExplainError::InvalidParameter(
                "attribution contains non-finite scores".into(),
            ));
        }
        Ok(Attribution { scores, target_class, explainer: explainer.into() })
    }

    #[inline]
    pub fn scores(&self) -> &Matrix<F> {
        &self.scores
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        self.scores.shape()
    }

    pub fn into_scores(self) -> Matrix<F> {
        self.scores
    }
}

/// Which model output a perturbation-based score reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Readout {
    /// Softmax probability of the class (default).
    Probability,
    /// Raw class logit; linear models stay exactly linear under this.
    Logit,
}

pub(crate) fn read_class_score<F: Scalar>(
    model: &dyn crate::nn::Classifier<F>,
    x: &TimeSeries<F>,
    class: usize,
    readout: Readout,
) -> Result<F, crate::error::NnError> {
    Ok(match readout {
        Readout::Probability => model.forward(x)?[class],
        Readout::Logit => model.logits(x)?[class],
    })
}

/// Copy of `x` with one time step replaced by baseline values.
pub(crate) fn replace_column<F: Scalar>(
    x: &TimeSeries<F>,
    col: usize,
    baseline: &TimeSeries<F>,
) -> TimeSeries<F> {
    let mut out = x.clone();
    for i in 0..x.n_features() {
        out.set(i, col, baseline.get(i, col));
    }
    out
}

/// Copy of `x` with one feature row replaced by baseline values.
pub(crate) fn replace_row<F: Scalar>(
    x: &TimeSeries<F>,
    row: usize,
    baseline: &TimeSeries<F>,
) -> TimeSeries<F> {
    let mut out = x.clone();
    for t in 0..x.t_steps() {
        out.set(row, t, baseline.get(row, t));
    }
    out
}

pub(crate) fn check_same_shape<F: Scalar>(
    x: &TimeSeries<F>,
    other: &TimeSeries<F>,
    what: &str,
) -> Result<(), ExplainError> {
    if x.shape() != other.shape() {
        return Err(ExplainError::InvalidShape(format!(
            "{what} {:?} vs instance {:?}",
            other.shape(),
            x.shape()
        )));
    }
    Ok(())
}
