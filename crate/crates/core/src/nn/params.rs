//! Flat parameter storage with a named tensor layout.
//!
//! Models keep every weight in one contiguous vector; the layout maps
//! tensor names to slices. That single vector is what the optimizer
//! updates, what checkpoints serialize (in layout order), and what
//! gradient checks index into.

use serde::{Deserialize, Serialize};

use crate::rng::SeedStream;
use crate::Scalar;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    /// Fan-in used for init scaling; zero means zero-initialized (biases).
    pub fan_in: usize,
}

impl TensorSpec {
    pub fn weight(name: &str, shape: Vec<usize>, fan_in: usize) -> Self {
        TensorSpec { name: name.to_string(), shape, fan_in }
    }

    pub fn bias(name: &str, len: usize) -> Self {
        TensorSpec { name: name.to_string(), shape: vec![len], fan_in: 0 }
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamLayout {
    tensors: Vec<TensorSpec>,
    offsets: Vec<usize>,
    total: usize,
}

impl ParamLayout {
    pub fn new(tensors: Vec<TensorSpec>) -> Self {
        let mut offsets = Vec::with_capacity(tensors.len());
        let mut total = 0;
        for t in &tensors {
            offsets.push(total);
            total += t.len();
        }
        ParamLayout { tensors, offsets, total }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn tensors(&self) -> &[TensorSpec] {
        &self.tensors
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.tensors.iter().position(|t| t.name == name)
    }

    pub fn range(&self, idx: usize) -> std::ops::Range<usize> {
        self.offsets[idx]..self.offsets[idx] + self.tensors[idx].len()
    }

    pub fn slice<'a, F>(&self, params: &'a [F], idx: usize) -> &'a [F] {
        &params[self.range(idx)]
    }

    pub fn slice_mut<'a, F>(&self, params: &'a mut [F], idx: usize) -> &'a mut [F] {
        &mut params[self.range(idx)]
    }

    /// Fan-in-scaled uniform init: weights `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`,
    /// biases zero; tensors filled in layout order from one stream.
    pub fn init<F: Scalar>(&self, stream: &mut SeedStream) -> Vec<F> {
        let mut params = vec![F::zero(); self.total];
        for (idx, spec) in self.tensors.iter().enumerate() {
            if spec.fan_in == 0 {
                continue;
            }
            let bound = 1.0 / (spec.fan_in as f64).sqrt();
            for v in self.slice_mut(&mut params, idx) {
                *v = stream.uniform(crate::num(-bound), crate::num(bound));
            }
        }
        params
    }
}
