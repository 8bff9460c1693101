//! Gradient-family attributions.

use crate::error::ExplainError;
use crate::explain::{check_same_shape, Attribution};
use crate::matrix::Matrix;
use crate::nn::Classifier;
use crate::rng::SeedStream;
use crate::series::TimeSeries;
use crate::Scalar;

/// The four gradient readings.
#[derive(Clone, Debug)]
pub enum GradientVariant<F> {
    /// Saliency: `|d logit_target / d x|`.
    Plain,
    /// Signed gradient elementwise times the input.
    TimesInput,
    /// Mean saliency over `n` Gaussian-noised copies of the input.
    Smooth { n: usize, sigma: F, seed: u64 },
    /// Path-integrated gradients from `baseline` to the input (midpoint
    /// rule over `steps` points), scaled by `x - baseline`.
    Integrated { steps: usize, baseline: TimeSeries<F> },
}

impl<F> GradientVariant<F> {
    pub fn tag(&self) -> &'static str {
        match self {
            GradientVariant::Plain => "saliency",
            GradientVariant::TimesInput => "gradient_x_input",
            GradientVariant::Smooth { .. } => "smoothgrad",
            GradientVariant::Integrated { .. } => "integrated_gradients",
        }
    }
}

pub fn gradient_attribution<F: Scalar>(
    model: &dyn Classifier<F>,
    x: &TimeSeries<F>,
    target: usize,
    variant: &GradientVariant<F>,
) -> Result<Attribution<F>, ExplainError> {
    let scores = match variant {
        GradientVariant::Plain => model.input_gradient(x, target)?.map(|v| v.abs()),
        GradientVariant::TimesInput => {
            let grad = model.input_gradient(x, target)?;
            let mut scores = grad;
            for (s, v) in scores.data_mut().iter_mut().zip(x.values().data()) {
                *s *= *v;
            }
            scores
        }
        GradientVariant::Smooth { n, sigma, seed } => {
            if *n < 1 {
                return Err(ExplainError::InvalidParameter("smoothgrad needs n >= 1".into()));
            }
            if *sigma < F::zero() {
                return Err(ExplainError::InvalidParameter("smoothgrad needs sigma >= 0".into()));
            }
            let mut acc = Matrix::<F>::zeros(x.n_features(), x.t_steps());
            for j in 0..*n {
                let mut noisy = x.clone();
                let mut stream = SeedStream::derived(*seed, &["smoothgrad"], &[j as u64]);
                for v in noisy.values_mut().data_mut() {
                    *v += *sigma * stream.standard_normal::<F>();
                }
                let grad = model.input_gradient(&noisy, target)?;
                for (a, g) in acc.data_mut().iter_mut().zip(grad.data()) {
                    *a += g.abs();
                }
            }
            let scale = F::from_usize(*n).unwrap();
            for a in acc.data_mut() {
                *a /= scale;
            }
            acc
        }
        GradientVariant::Integrated { steps, baseline } => {
            if *steps < 2 {
                return Err(ExplainError::InvalidParameter(
                    "integrated gradients need >= 2 steps".into(),
                ));
            }
            check_same_shape(x, baseline, "baseline")?;
            let mut mean_grad = Matrix::<F>::zeros(x.n_features(), x.t_steps());
            for j in 0..*steps {
                let alpha = crate::num::<F>((j as f64 + 0.5) / *steps as f64);
                let mut point = baseline.clone();
                for (p, (&xv, &bv)) in point
                    .values_mut()
                    .data_mut()
                    .iter_mut()
                    .zip(x.values().data().iter().zip(baseline.values().data()))
                {
                    *p = bv + alpha * (xv - bv);
                }
                let grad = model.input_gradient(&point, target)?;
                for (m, g) in mean_grad.data_mut().iter_mut().zip(grad.data()) {
                    *m += *g;
                }
            }
            let scale = F::from_usize(*steps).unwrap();
            for (m, (&xv, &bv)) in mean_grad
                .data_mut()
                .iter_mut()
                .zip(x.values().data().iter().zip(baseline.values().data()))
            {
                *m = *m / scale * (xv - bv);
            }
            mean_grad
        }
    };
    Attribution::new(scores, target, variant.tag())
}
