//! Sliding-window occlusion: a cell's relevance is the average output
//! drop over all windows covering it when the window is replaced by
//! baseline values (stride 1).

use crate::error::ExplainError;
use crate::explain::{check_same_shape, read_class_score, Attribution, Readout};
use crate::matrix::Matrix;
use crate::nn::Classifier;
use crate::series::TimeSeries;
use crate::Scalar;

pub fn occlusion<F: Scalar>(
    model: &dyn Classifier<F>,
    x: &TimeSeries<F>,
    target: usize,
    window: (usize, usize),
    baseline: &TimeSeries<F>,
    readout: Readout,
) -> Result<Attribution<F>, ExplainError> {
    let (n, t) = x.shape();
    let (wf, wt) = window;
    if wf == 0 || wt == 0 || wf > n || wt > t {
        return Err(ExplainError::InvalidParameter(format!(
            "window {:?} does not fit input ({n}, {t})",
            window
        )));
    }
    check_same_shape(x, baseline, "baseline")?;

    let reference = read_class_score(model, x, target, readout)?;
    let mut drops = Matrix::<F>::zeros(n, t);
    let mut coverage = Matrix::<u32>::zeros(n, t);
    let mut masked = x.clone();
    for f0 in 0..=n - wf {
        for t0 in 0..=t - wt {
            for i in f0..f0 + wf {
                for k in t0..t0 + wt {
                    masked.set(i, k, baseline.get(i, k));
                }
            }
            let drop = reference - read_class_score(model, &masked, target, readout)?;
            for i in f0..f0 + wf {
                for k in t0..t0 + wt {
                    *drops.get_mut(i, k) += drop;
                    *coverage.get_mut(i, k) += 1;
                    masked.set(i, k, x.get(i, k));
                }
            }
        }
    }
    for (d, &c) in drops.data_mut().iter_mut().zip(coverage.data()) {
        debug_assert!(c > 0);
        *d /= F::from_u32(c).unwrap();
    }
    Attribution::new(drops, target, "occlusion")
}
