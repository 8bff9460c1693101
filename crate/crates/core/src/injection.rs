//! Ground-truth mask construction, class-constant injection and min-max
//! normalization.
//!
//! Ten informative-feature kinds combine a location mode (fixed center,
//! moving, position-encodes-class) with a size class (normal box, small
//! box, rare time steps, rare features):
//!
//! | kind              | location   | size        |
//! |-------------------|------------|-------------|
//! | Middle            | fixed      | normal      |
//! | SmallMiddle       | fixed      | small       |
//! | MovingMiddle      | moving     | normal      |
//! | MovingSmall       | moving     | small       |
//! | RareTime          | fixed      | rare time   |
//! | RareFeature       | fixed      | rare feature|
//! | MovingRareTime    | moving     | rare time   |
//! | MovingRareFeature | moving     | rare feature|
//! | PositionalTime    | positional | normal      |
//! | PositionalFeature | positional | normal      |
//!
//! Sizing rules: a normal box spans `min(dim, ceil(0.3 dim) + 1)` cells
//! per axis (strictly over 30% per dimension); "rare" spans
//! `max(1, ceil(0.05 dim) - 1)` of its axis (strictly under 5% except at
//! the floor of one); a small box keeps its total cell count strictly
//! under 10% of the grid. Feature-axis kinds degenerate on univariate
//! data and fall back to their time-axis twin while keeping their name.

use serde::{Deserialize, Serialize};

use crate::error::InjectionError;
use crate::matrix::Matrix;
use crate::rng::SeedStream;
use crate::series::{ClassLabel, GroundTruthMask, LabeledInstance, TimeSeries};
use crate::{num, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocationMode {
    Fixed,
    Moving,
    /// Box position encodes the class: positive sits in the first half
    /// of the axis, negative in the second half; both classes receive an
    /// added constant.
    Positional,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SizeClass {
    Normal,
    Small,
    RareTime,
    RareFeature,
}

/// The ten informative-feature kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureKind {
    Middle,
    SmallMiddle,
    MovingMiddle,
    MovingSmall,
    RareTime,
    RareFeature,
    MovingRareTime,
    MovingRareFeature,
    PositionalTime,
    PositionalFeature,
}

impl FeatureKind {
    pub fn all() -> [FeatureKind; 10] {
        [
            FeatureKind::Middle,
            FeatureKind::SmallMiddle,
            FeatureKind::MovingMiddle,
            FeatureKind::MovingSmall,
            FeatureKind::RareTime,
            FeatureKind::RareFeature,
            FeatureKind::MovingRareTime,
            FeatureKind::MovingRareFeature,
            FeatureKind::PositionalTime,
            FeatureKind::PositionalFeature,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            FeatureKind::Middle => "Middle",
            FeatureKind::SmallMiddle => "SmallMiddle",
            FeatureKind::MovingMiddle => "MovingMiddle",
            FeatureKind::MovingSmall => "MovingSmall",
            FeatureKind::RareTime => "RareTime",
            FeatureKind::RareFeature => "RareFeature",
            FeatureKind::MovingRareTime => "MovingRareTime",
            FeatureKind::MovingRareFeature => "MovingRareFeature",
            FeatureKind::PositionalTime => "PositionalTime",
            FeatureKind::PositionalFeature => "PositionalFeature",
        }
    }

    pub fn slug(&self) -> &'static str {
        match self {
            FeatureKind::Middle => "middle",
            FeatureKind::SmallMiddle => "small_middle",
            FeatureKind::MovingMiddle => "moving_middle",
            FeatureKind::MovingSmall => "moving_small",
            FeatureKind::RareTime => "rare_time",
            FeatureKind::RareFeature => "rare_feature",
            FeatureKind::MovingRareTime => "moving_rare_time",
            FeatureKind::MovingRareFeature => "moving_rare_feature",
            FeatureKind::PositionalTime => "positional_time",
            FeatureKind::PositionalFeature => "positional_feature",
        }
    }

    pub fn location_mode(&self) -> LocationMode {
        match self {
            FeatureKind::Middle
            | FeatureKind::SmallMiddle
            | FeatureKind::RareTime
            | FeatureKind::RareFeature => LocationMode::Fixed,
            FeatureKind::MovingMiddle
            | FeatureKind::MovingSmall
            | FeatureKind::MovingRareTime
            | FeatureKind::MovingRareFeature => LocationMode::Moving,
            FeatureKind::PositionalTime | FeatureKind::PositionalFeature => {
                LocationMode::Positional
            }
        }
    }

    pub fn size_class(&self) -> SizeClass {
        match self {
            FeatureKind::Middle
            | FeatureKind::MovingMiddle
            | FeatureKind::PositionalTime
            | FeatureKind::PositionalFeature => SizeClass::Normal,
            FeatureKind::SmallMiddle | FeatureKind::MovingSmall => SizeClass::Small,
            FeatureKind::RareTime | FeatureKind::MovingRareTime => SizeClass::RareTime,
            FeatureKind::RareFeature | FeatureKind::MovingRareFeature => SizeClass::RareFeature,
        }
    }

    /// Effective geometry on a given feature count: feature-axis kinds
    /// degenerate at `N == 1` and borrow their time-axis twin.
    fn effective(&self, n_features: usize) -> FeatureKind {
        if n_features > 1 {
            return *self;
        }
        match self {
            FeatureKind::RareFeature => FeatureKind::RareTime,
            FeatureKind::MovingRareFeature => FeatureKind::MovingRareTime,
            FeatureKind::PositionalFeature => FeatureKind::PositionalTime,
            other => *other,
        }
    }
}

/// Mask construction request: the kind plus the stream all per-instance
/// offsets are derived from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskSpec {
    pub kind: FeatureKind,
    pub seed: u64,
}

impl MaskSpec {
    pub fn new(kind: FeatureKind, seed: u64) -> Self {
        MaskSpec { kind, seed }
    }
}

/// Span over > 30% of the axis: `ceil(0.3 dim) + 1`, clamped to the axis.
fn normal_extent(dim: usize) -> usize {
    (((0.3 * dim as f64).ceil() as usize) + 1).min(dim)
}

/// Strictly under `frac` of the axis, floored at one cell.
fn strictly_below(frac: f64, dim: usize) -> usize {
    ((frac * dim as f64).ceil() as usize).saturating_sub(1).max(1)
}

fn infeasible(kind: FeatureKind, shape: (usize, usize), why: &str) -> InjectionError {
    InjectionError::MaskInfeasible(format!("{} on shape {:?}: {}", kind.name(), shape, why))
}

/// Box extents `(rows, cols)` for a kind on a shape.
fn box_extents(
    kind: FeatureKind,
    shape: (usize, usize),
) -> Result<(usize, usize), InjectionError> {
    let (n, t) = shape;
    match kind.size_class() {
        SizeClass::Normal => Ok((normal_extent(n), normal_extent(t))),
        SizeClass::Small => {
            let cells = n * t;
            if cells < 11 {
                return Err(infeasible(kind, shape, "needs at least 11 cells for a <10% box"));
            }
            let budget = ((0.1 * cells as f64).ceil() as usize) - 1;
            let rows = (((budget as f64).sqrt().floor() as usize).max(1)).min(n);
            let cols = ((budget / rows).max(1)).min(t);
            Ok((rows, cols))
        }
        SizeClass::RareTime => {
            if t < 20 {
                return Err(infeasible(kind, shape, "needs >= 20 time steps for a <5% span"));
            }
            Ok((n, strictly_below(0.05, t)))
        }
        SizeClass::RareFeature => {
            if n < 20 {
                return Err(infeasible(kind, shape, "needs >= 20 features for a <5% span"));
            }
            Ok((strictly_below(0.05, n), t))
        }
    }
}

fn centered(dim: usize, extent: usize) -> usize {
    (dim - extent) / 2
}

/// Offset of the box within one class half of the positional axis.
fn positional_offset(
    kind: FeatureKind,
    dim: usize,
    extent: usize,
    label: ClassLabel,
    shape: (usize, usize),
) -> Result<usize, InjectionError> {
    let half = dim / 2;
    if extent > half {
        return Err(infeasible(kind, shape, "box does not fit in one half of the axis"));
    }
    Ok(match label {
        ClassLabel::Positive => (half - extent) / 2,
        ClassLabel::Negative => half + (dim - half - extent) / 2,
    })
}

/// Build the ground-truth mask for one instance.
///
/// Fixed kinds ignore `instance_seed` and are identical across instances;
/// moving kinds draw their offset from
/// `derive_seed(spec.seed, ["mask-offset"], [instance_seed])`; positional
/// kinds place the box in the half of the axis selected by `label`.
pub fn build_mask(
    spec: &MaskSpec,
    shape: (usize, usize),
    instance_seed: u64,
    label: ClassLabel,
) -> Result<GroundTruthMask, InjectionError> {
    let (n, t) = shape;
    if n == 0 || t == 0 {
        return Err(InjectionError::InvalidShape(format!("empty shape {:?}", shape)));
    }
    let effective = spec.kind.effective(n);
    let (rows, cols) = box_extents(effective, shape)?;

    let (row0, col0) = match effective.location_mode() {
        LocationMode::Fixed => (centered(n, rows), centered(t, cols)),
        LocationMode::Moving => {
            let mut stream = SeedStream::derived(spec.seed, &["mask-offset"], &[instance_seed]);
            let row0 = if n > rows { stream.below(n - rows + 1) } else { 0 };
            let col0 = if t > cols { stream.below(t - cols + 1) } else { 0 };
            (row0, col0)
        }
        LocationMode::Positional => match effective {
            FeatureKind::PositionalTime => (
                centered(n, rows),
                positional_offset(effective, t, cols, label, shape)?,
            ),
            FeatureKind::PositionalFeature => (
                positional_offset(effective, n, rows, label, shape)?,
                centered(t, cols),
            ),
            _ => unreachable!("positional mode only on positional kinds"),
        },
    };

    let mut cells = Matrix::filled(n, t, false);
    for r in row0..row0 + rows {
        for c in col0..col0 + cols {
            *cells.get_mut(r, c) = true;
        }
    }
    GroundTruthMask::new(cells)
}

/// Shift masked cells by the class constant: positive class adds,
/// negative class subtracts. Unmasked cells pass through untouched.
pub fn inject_label<F: Scalar>(
    series: TimeSeries<F>,
    mask: &GroundTruthMask,
    class: ClassLabel,
    constant: F,
) -> Result<LabeledInstance<F>, InjectionError> {
    let signed = match class {
        ClassLabel::Positive => constant,
        ClassLabel::Negative => -constant,
    };
    inject_shift(series, mask, class, constant, signed)
}

/// Positional variant: both classes receive an added constant; the class
/// is carried by the mask position instead of the shift sign.
pub fn inject_positional<F: Scalar>(
    series: TimeSeries<F>,
    mask: &GroundTruthMask,
    class: ClassLabel,
    constant: F,
) -> Result<LabeledInstance<F>, InjectionError> {
    inject_shift(series, mask, class, constant, constant)
}

fn inject_shift<F: Scalar>(
    mut series: TimeSeries<F>,
    mask: &GroundTruthMask,
    class: ClassLabel,
    constant: F,
    shift: F,
) -> Result<LabeledInstance<F>, InjectionError> {
    if constant <= F::zero() {
        return Err(InjectionError::DegenerateSeparation {
            constant: constant.to_f64().unwrap_or(f64::NAN),
        });
    }
    if series.shape() != mask.shape() {
        return Err(InjectionError::InvalidShape(format!(
            "series {:?} vs mask {:?}",
            series.shape(),
            mask.shape()
        )));
    }
    for i in 0..series.n_features() {
        for k in 0..series.t_steps() {
            if mask.is_set(i, k) {
                let v = series.get(i, k);
                series.set(i, k, v + shift);
            }
        }
    }
    Ok(LabeledInstance { series, label: class, mask: Some(mask.clone()) })
}

/// Per-feature affine ranges fitted on a train split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams<F> {
    /// `(min, max)` per feature; `min == max` marks a constant feature,
    /// which maps to 0.5 uniformly.
    pub feature_ranges: Vec<(F, F)>,
}

impl<F: Scalar> NormalizationParams<F> {
    pub fn n_features(&self) -> usize {
        self.feature_ranges.len()
    }

    #[inline]
    fn forward(&self, feature: usize, v: F) -> F {
        let (lo, hi) = self.feature_ranges[feature];
        if hi == lo {
            num(0.5)
        } else {
            (v - lo) / (hi - lo)
        }
    }

    #[inline]
    fn backward(&self, feature: usize, v: F) -> F {
        let (lo, hi) = self.feature_ranges[feature];
        if hi == lo {
            lo
        } else {
            lo + v * (hi - lo)
        }
    }

    /// Map a series onto the train scale. Values outside the fitted range
    /// land outside `[0, 1]` and are not clipped.
    pub fn transform(&self, series: &TimeSeries<F>) -> TimeSeries<F> {
        let mut out = series.clone();
        self.transform_in_place(&mut out);
        out
    }

    pub fn transform_in_place(&self, series: &mut TimeSeries<F>) {
        debug_assert_eq!(series.n_features(), self.n_features());
        for i in 0..series.n_features() {
            for k in 0..series.t_steps() {
                let v = series.get(i, k);
                series.set(i, k, self.forward(i, v));
            }
        }
    }

    pub fn inverse(&self, series: &TimeSeries<F>) -> TimeSeries<F> {
        let mut out = series.clone();
        for i in 0..out.n_features() {
            for k in 0..out.t_steps() {
                let v = out.get(i, k);
                out.set(i, k, self.backward(i, v));
            }
        }
        out
    }
}

/// Fit per-feature min-max on the train split and apply it to both
/// splits. Train values land in `[0, 1]`; test uses the train parameters
/// unchanged, so it may exceed that interval.
pub fn normalize<F: Scalar>(
    mut train: Vec<LabeledInstance<F>>,
    mut test: Vec<LabeledInstance<F>>,
) -> Result<(Vec<LabeledInstance<F>>, Vec<LabeledInstance<F>>, NormalizationParams<F>), InjectionError>
{
    let first = train.first().ok_or(InjectionError::EmptyTrainSplit)?;
    let n_features = first.series.n_features();

    let mut ranges = vec![(F::infinity(), F::neg_infinity()); n_features];
    for inst in &train {
        for i in 0..n_features {
            for k in 0..inst.series.t_steps() {
                let v = inst.series.get(i, k);
                let (lo, hi) = ranges[i];
                ranges[i] = (lo.min(v), hi.max(v));
            }
        }
    }
    let params = NormalizationParams { feature_ranges: ranges };
    for inst in train.iter_mut().chain(test.iter_mut()) {
        params.transform_in_place(&mut inst.series);
    }
    Ok((train, test, params))
}
