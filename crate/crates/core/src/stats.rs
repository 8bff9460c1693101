//! Small descriptive-statistics helpers shared by metrics, aggregation
//! and reporting.

use crate::Scalar;

pub fn mean<F: Scalar>(values: &[F]) -> F {
    debug_assert!(!values.is_empty());
    let sum = values.iter().fold(F::zero(), |acc, &v| acc + v);
    sum / F::from_usize(values.len()).unwrap()
}

/// Linear-interpolation quantile on sorted data (the `h = (n - 1) q`
/// convention): `q = 0.5` of `1..=100` gives 50.5.
pub fn quantile_sorted<F: Scalar>(sorted: &[F], q: f64) -> F {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&q));
    if sorted.len() == 1 {
        return sorted[0];
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let w = crate::num::<F>(h - lo as f64);
    sorted[lo] + w * (sorted[hi] - sorted[lo])
}

pub fn sorted_copy<F: Scalar>(values: &[F]) -> Vec<F> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    v
}

pub fn median<F: Scalar>(values: &[F]) -> F {
    quantile_sorted(&sorted_copy(values), 0.5)
}

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson<F: Scalar>(xs: &[F], ys: &[F]) -> Option<F> {
    debug_assert_eq!(xs.len(), ys.len());
    if xs.len() < 2 {
        return None;
    }
    let mx = mean(xs);
    let my = mean(ys);
    let mut cov = F::zero();
    let mut vx = F::zero();
    let mut vy = F::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    if vx == F::zero() || vy == F::zero() {
        return None;
    }
    Some(cov / (vx * vy).sqrt())
}

/// Spearman rank correlation (average ranks on ties).
pub fn spearman<F: Scalar>(xs: &[F], ys: &[F]) -> Option<F> {
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    pearson(&rx, &ry)
}

fn average_ranks<F: Scalar>(values: &[F]) -> Vec<F> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![F::zero(); values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // 1-based ranks, averaged across the tie run.
        let avg = crate::num::<F>((i + j) as f64 / 2.0 + 1.0);
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate_linearly() {
        let values: Vec<f64> = (1..=100).map(|v| v as f64).collect();
        let sorted = sorted_copy(&values);
        assert_eq!(quantile_sorted(&sorted, 0.5), 50.5);
        assert_eq!(quantile_sorted(&sorted, 0.25), 25.75);
        assert_eq!(quantile_sorted(&sorted, 0.75), 75.25);
        assert_eq!(quantile_sorted(&sorted, 0.0), 1.0);
        assert_eq!(quantile_sorted(&sorted, 1.0), 100.0);
    }

    #[test]
    fn pearson_of_identical_series_is_one() {
        let xs = [1.0f64, 2.0, 5.0, -1.0];
        let r = pearson(&xs, &xs).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_detects_zero_variance() {
        let xs = [1.0f64, 1.0, 1.0];
        let ys = [1.0f64, 2.0, 3.0];
        assert!(pearson(&xs, &ys).is_none());
    }

    #[test]
    fn spearman_is_monotonicity_invariant() {
        let xs = [1.0f64, 2.0, 3.0, 4.0];
        let ys = [1.0f64, 8.0, 27.0, 64.0];
        let r = spearman(&xs, &ys).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spearman_handles_ties_with_average_ranks() {
        let xs = [1.0f64, 1.0, 2.0, 3.0];
        let ranks = average_ranks(&xs);
        assert_eq!(ranks, vec![1.5, 1.5, 3.0, 4.0]);
    }
}
