//! Segment-surrogate explainer.
//!
//! The series is cut into segments of `segment_len` consecutive steps per
//! feature (the last segment absorbs any remainder). Binary on/off
//! samples replace off-segments with values from a background series
//! drawn from a reference set (one draw per sample); a weighted linear
//! surrogate is then fitted on (mask -> target probability) and every
//! cell receives its segment's coefficient.
//!
//! Sample weights use an exponential kernel on the Hamming distance `d`
//! of the mask from all-on: `w = exp(-(d / sqrt(S))^2)` with `S` the
//! segment count.

use crate::error::ExplainError;
use crate::explain::Attribution;
use crate::matrix::Matrix;
use crate::nn::Classifier;
use crate::rng::SeedStream;
use crate::series::TimeSeries;
use crate::Scalar;

/// Fitted surrogate details, exposed for diagnostics and tests.
#[derive(Clone, Debug)]
pub struct LimeFit<F> {
    pub intercept: F,
    /// One coefficient per segment, feature-major.
    pub coefficients: Vec<F>,
    pub segments_per_feature: usize,
}

impl<F: Scalar> LimeFit<F> {
    /// Surrogate prediction for the all-on mask.
    pub fn all_on_prediction(&self) -> F {
        self.intercept + self.coefficients.iter().fold(F::zero(), |a, &c| a + c)
    }
}

fn segment_bounds(t_steps: usize, segment_len: usize, per_feature: usize, s: usize) -> (usize, usize) {
    let start = s * segment_len;
    let end = if s + 1 == per_feature { t_steps } else { (s + 1) * segment_len };
    (start, end)
}

pub fn lime_surrogate<F: Scalar>(
    model: &dyn Classifier<F>,
    x: &TimeSeries<F>,
    target: usize,
    segment_len: usize,
    n_samples: usize,
    backgrounds: &[TimeSeries<F>],
    seed: u64,
) -> Result<Attribution<F>, ExplainError> {
    lime_surrogate_fit(model, x, target, segment_len, n_samples, backgrounds, seed)
        .map(|(attr, _)| attr)
}

pub fn lime_surrogate_fit<F: Scalar>(
    model: &dyn Classifier<F>,
    x: &TimeSeries<F>,
    target: usize,
    segment_len: usize,
    n_samples: usize,
    backgrounds: &[TimeSeries<F>],
    seed: u64,
) -> Result<(Attribution<F>, LimeFit<F>), ExplainError> {
    let (n, t) = x.shape();
    if segment_len == 0 {
        return Err(ExplainError::InvalidParameter("segment length must be >= 1".into()));
    }
    if backgrounds.is_empty() {
        return Err(ExplainError::InvalidParameter("background reference set is empty".into()));
    }
    for bg in backgrounds {
        crate::explain::check_same_shape(x, bg, "background")?;
    }
    let per_feature = (t / segment_len).max(1);
    let n_segments = n * per_feature;
    if n_samples < n_segments {
        return Err(ExplainError::IllPosedSurrogate { n_samples, n_segments });
    }

    // Sample masks, perturbed outputs and kernel weights. Sample 0 is
    // always the all-on mask.
    let dim = n_segments + 1; // intercept column first
    let mut xtwx = vec![F::zero(); dim * dim];
    let mut xtwy = vec![F::zero(); dim];
    let mut accumulate = |mask: &[bool], y: F, w: F| {
        let mut cols = Vec::with_capacity(dim);
        cols.push(0usize);
        cols.extend(mask.iter().enumerate().filter_map(|(s, &on)| on.then_some(s + 1)));
        for &a in &cols {
            xtwy[a] += w * y;
            for &b in &cols {
                xtwx[a * dim + b] += w;
            }
        }
    };

    let all_on = vec![true; n_segments];
    let y0 = model.forward(x)?[target];
    accumulate(&all_on, y0, F::one());

    let mut perturbed = x.clone();
    for j in 1..n_samples {
        let mut mask_stream = SeedStream::derived(seed, &["lime-mask"], &[j as u64]);
        let mask: Vec<bool> = (0..n_segments).map(|_| mask_stream.next_u64() & 1 == 1).collect();
        let mut bg_stream = SeedStream::derived(seed, &["lime-bg"], &[j as u64]);
        let background = &backgrounds[bg_stream.below(backgrounds.len())];

        for i in 0..n {
            for s in 0..per_feature {
                let (start, end) = segment_bounds(t, segment_len, per_feature, s);
                let on = mask[i * per_feature + s];
                for k in start..end {
                    perturbed.set(i, k, if on { x.get(i, k) } else { background.get(i, k) });
                }
            }
        }
        let y = model.forward(&perturbed)?[target];
        let off = mask.iter().filter(|&&b| !b).count() as f64;
        let weight = crate::num::<F>((-off * off / n_segments as f64).exp());
        accumulate(&mask, y, weight);
    }

    // Ridge-stabilized weighted normal equations.
    let lambda = crate::num::<F>(1e-8);
    for d in 0..dim {
        xtwx[d * dim + d] += lambda;
    }
    let beta = solve_dense(&mut xtwx, &mut xtwy, dim).ok_or_else(|| {
        ExplainError::InvalidParameter("surrogate normal equations are singular".into())
    })?;

    let mut scores = Matrix::<F>::zeros(n, t);
    for i in 0..n {
        for s in 0..per_feature {
            let (start, end) = segment_bounds(t, segment_len, per_feature, s);
            let coeff = beta[1 + i * per_feature + s];
            for k in start..end {
                *scores.get_mut(i, k) = coeff;
            }
        }
    }
    let fit = LimeFit { intercept: beta[0], coefficients: beta[1..].to_vec(), segments_per_feature: per_feature };
    Ok((Attribution::new(scores, target, "lime")?, fit))
}

/// Gaussian elimination with partial pivoting on a dense system stored
/// row-major in `a`; consumes both buffers.
fn solve_dense<F: Scalar>(a: &mut [F], b: &mut [F], dim: usize) -> Option<Vec<F>> {
    for col in 0..dim {
        let mut pivot = col;
        for row in col + 1..dim {
            if a[row * dim + col].abs() > a[pivot * dim + col].abs() {
                pivot = row;
            }
        }
        if a[pivot * dim + col] == F::zero() {
            return None;
        }
        if pivot != col {
            for k in 0..dim {
                a.swap(col * dim + k, pivot * dim + k);
            }
            b.swap(col, pivot);
        }
        let diag = a[col * dim + col];
        for row in col + 1..dim {
            let factor = a[row * dim + col] / diag;
            if factor == F::zero() {
                continue;
            }
            for k in col..dim {
                let v = a[col * dim + k];
                a[row * dim + k] -= factor * v;
            }
            let bv = b[col];
            b[row] -= factor * bv;
        }
    }
    let mut x = vec![F::zero(); dim];
    for col in (0..dim).rev() {
        let mut acc = b[col];
        for k in col + 1..dim {
            acc -= a[col * dim + k] * x[k];
        }
        x[col] = acc / a[col * dim + col];
    }
    Some(x)
}
