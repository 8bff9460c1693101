//! Sample shapes: time series, ground-truth masks and labeled instances.

use serde::{Deserialize, Serialize};

use crate::error::InjectionError;
use crate::matrix::Matrix;
use crate::Scalar;

/// An `N x T` real matrix: `N` feature channels observed over `T` steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries<F> {
    values: Matrix<F>,
}

impl<F: Scalar> TimeSeries<F> {
    pub fn new(values: Matrix<F>) -> Self {
        TimeSeries { values }
    }

    pub fn zeros(n_features: usize, t_steps: usize) -> Self {
        TimeSeries { values: Matrix::zeros(n_features, t_steps) }
    }

    #[inline]
    pub fn n_features(&self) -> usize {
        self.values.rows()
    }

    #[inline]
    pub fn t_steps(&self) -> usize {
        self.values.cols()
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }

    #[inline]
    pub fn get(&self, feature: usize, step: usize) -> F {
        *self.values.get(feature, step)
    }

    #[inline]
    pub fn set(&mut self, feature: usize, step: usize, v: F) {
        *self.values.get_mut(feature, step) = v;
    }

    pub fn values(&self) -> &Matrix<F> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Matrix<F> {
        &mut self.values
    }

    pub fn into_values(self) -> Matrix<F> {
        self.values
    }

    pub fn all_finite(&self) -> bool {
        self.values.all_finite()
    }
}

/// Class label of a binary task.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    Negative,
    Positive,
}

impl ClassLabel {
    pub fn from_index(idx: usize) -> Self {
        if idx == 0 { ClassLabel::Negative } else { ClassLabel::Positive }
    }

    #[inline]
    pub fn index(self) -> usize {
        match self {
            ClassLabel::Negative => 0,
            ClassLabel::Positive => 1,
        }
    }
}

/// Boolean `N x T` grid marking the informative cells of an instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthMask {
    cells: Matrix<bool>,
}

impl GroundTruthMask {
    /// Requires at least one marked cell.
    pub fn new(cells: Matrix<bool>) -> Result<Self, InjectionError> {
        if cells.count_true() == 0 {
            return Err(InjectionError::MaskInfeasible("mask has no informative cells".into()));
        }
        Ok(GroundTruthMask { cells })
    }

    #[inline]
    pub fn n_features(&self) -> usize {
        self.cells.rows()
    }

    #[inline]
    pub fn t_steps(&self) -> usize {
        self.cells.cols()
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        self.cells.shape()
    }

    #[inline]
    pub fn is_set(&self, feature: usize, step: usize) -> bool {
        *self.cells.get(feature, step)
    }

    pub fn cells(&self) -> &Matrix<bool> {
        &self.cells
    }

    /// Number of informative cells (`K` for rank-based metrics).
    pub fn cardinality(&self) -> usize {
        self.cells.count_true()
    }

    /// Flat row-major indices of the informative cells.
    pub fn set_indices(&self) -> Vec<usize> {
        self.cells
            .data()
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }
}

/// One labeled sample. Synthetic instances always carry their mask;
/// user-supplied data may omit it (reliability metrics then skip).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledInstance<F> {
    pub series: TimeSeries<F>,
    pub label: ClassLabel,
    pub mask: Option<GroundTruthMask>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_mask_is_rejected() {
        let err = GroundTruthMask::new(Matrix::filled(2, 2, false));
        assert!(err.is_err());
    }

    #[test]
    fn mask_cardinality_and_indices() {
        let mut grid = Matrix::filled(2, 3, false);
        *grid.get_mut(0, 1) = true;
        *grid.get_mut(1, 2) = true;
        let mask = GroundTruthMask::new(grid).unwrap();
        assert_eq!(mask.cardinality(), 2);
        assert_eq!(mask.set_indices(), vec![1, 5]);
    }
}
