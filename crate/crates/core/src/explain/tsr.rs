//! Temporal saliency rescaling.
//!
//! Decouples the time and feature axes of any base explainer: the time
//! relevance of step `t` is the L1 change of the base attribution map
//! when all features at `t` are masked to the baseline; feature relevance
//! is computed analogously by masking whole feature rows. Steps whose
//! time relevance does not exceed the threshold are zeroed; the rest get
//! `score(i, t) = time_relevance[t] * feature_relevance[i]`.

use crate::error::ExplainError;
use crate::explain::{check_same_shape, replace_column, replace_row, Attribution};
use crate::matrix::Matrix;
use crate::series::TimeSeries;
use crate::stats;
use crate::Scalar;

/// Threshold selecting which time steps keep relevance.
#[derive(Clone, Copy, Debug)]
pub enum TsrThreshold<F> {
    /// Mean of the time-relevance vector (default).
    MeanTimeRelevance,
    Fixed(F),
}

pub fn tsr_wrap<F, E>(
    base_explainer: E,
    x: &TimeSeries<F>,
    threshold: TsrThreshold<F>,
    baseline: &TimeSeries<F>,
) -> Result<Attribution<F>, ExplainError>
where
    F: Scalar,
    E: Fn(&TimeSeries<F>) -> Result<Attribution<F>, ExplainError>,
{
    check_same_shape(x, baseline, "baseline")?;
    let base = base_explainer(x)?;
    if base.shape() != x.shape() {
        return Err(ExplainError::InvalidShape(format!(
            "base explainer produced {:?} for instance {:?}",
            base.shape(),
            x.shape()
        )));
    }
    let (n, t) = x.shape();

    let time_relevance: Vec<F> = (0..t)
        .map(|col| {
            let masked = replace_column(x, col, baseline);
            let attr = base_explainer(&masked)?;
            Ok(attr.scores().sub(base.scores()).abs_sum())
        })
        .collect::<Result<_, ExplainError>>()?;

    let alpha = match threshold {
        TsrThreshold::MeanTimeRelevance => stats::mean(&time_relevance),
        TsrThreshold::Fixed(v) => v,
    };
    let active: Vec<bool> = time_relevance.iter().map(|&r| r > alpha).collect();

    let mut scores = Matrix::<F>::zeros(n, t);
    if active.iter().any(|&a| a) {
        let feature_relevance: Vec<F> = (0..n)
            .map(|row| {
                let masked = replace_row(x, row, baseline);
                let attr = base_explainer(&masked)?;
                Ok(attr.scores().sub(base.scores()).abs_sum())
            })
            .collect::<Result<_, ExplainError>>()?;
        for i in 0..n {
            for col in 0..t {
                if active[col] {
                    *scores.get_mut(i, col) = time_relevance[col] * feature_relevance[i];
                }
            }
        }
    }
    Attribution::new(scores, base.target_class, format!("tsr({})", base.explainer))
}
