//! Benchmark engine for feature-attribution explainers on time-series
//! classifiers.
//!
//! The crate covers the full pipeline: seeded synthetic dataset generation
//! with known ground-truth masks, small trainable classifiers with exact
//! input gradients, a set of reference explainers, and the metric families
//! (robustness, faithfulness, complexity, reliability) used to score any
//! explainer against those datasets.
//!
//! All numeric code is generic over the scalar type through [`Scalar`];
//! the shipped pipeline and CLI use the [`Real`] (= `f64`) aliases below.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub mod catalog;
pub mod error;
pub mod explain;
pub mod harness;
pub mod injection;
pub mod matrix;
pub mod metrics;
pub mod nn;
pub mod processes;
pub mod rng;
pub mod series;
pub mod stats;

pub(crate) mod io;

/// Floating-point scalar the numeric core is generic over: `f32` or `f64`
/// (or any future type satisfying the same bounds).
pub trait Scalar:
    Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + FromStr
    + Default
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Convert an `f64` literal or intermediate into the working scalar type.
#[inline]
pub fn num<F: Scalar>(v: f64) -> F {
    F::from_f64(v).expect("value representable in scalar type")
}

/// Default scalar for the shipped pipeline and the CLI.
pub type Real = f64;
/// [`series::TimeSeries`] at the default scalar.
pub type RealSeries = series::TimeSeries<Real>;
/// [`explain::Attribution`] at the default scalar.
pub type RealAttribution = explain::Attribution<Real>;
/// [`catalog::SyntheticDataset`] at the default scalar.
pub type RealDataset = catalog::SyntheticDataset<Real>;
/// [`metrics::MetricRecord`] at the default scalar.
pub type RealRecord = metrics::MetricRecord<Real>;
/// [`nn::ClassifierModel`] at the default scalar.
pub type RealModel = nn::ClassifierModel<Real>;
