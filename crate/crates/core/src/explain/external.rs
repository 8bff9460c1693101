//! Example-to-attribution conversion and the attribution exchange format.
//!
//! Example-based explainers return a perturbed instance instead of
//! scores; [`example_to_attribution`] converts one into a relevance map
//! via the cellwise fraction of change `(x - x') / x` (guarded
//! denominator). External files carry either kind:
//!
//! - `*.attr.json`: `{format_version, explainer, kind, target_class,
//!   n_features, t_steps, instance_index?, scores: [row-major]}`
//! - `<stem>.csv` (N rows x T columns) next to `<stem>.manifest.json`
//!   with the same fields minus `scores`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ExplainError;
use crate::explain::{check_same_shape, Attribution};
use crate::io;
use crate::matrix::Matrix;
use crate::series::TimeSeries;
use crate::Scalar;

pub const ATTRIBUTION_FORMAT_VERSION: &str = "1.0";

/// Denominator guard for the fraction of change, on the normalized scale.
const EPS_GUARD: f64 = 1e-6;

/// A perturbed instance returned by an example-based explainer.
#[derive(Clone, Debug, PartialEq)]
pub struct ExampleExplanation<F> {
    pub values: TimeSeries<F>,
}

/// Convert an example-based explanation into a relevance-magnitude map:
/// `delta(i, t) = (x - x') / max(|x|, eps)` cellwise.
///
/// `feature_range` must be provided for data that is not already
/// normalized; both series are mapped onto `[0, 1]` per feature first.
pub fn example_to_attribution<F: Scalar>(
    x: &TimeSeries<F>,
    example: &ExampleExplanation<F>,
    feature_range: Option<&[(F, F)]>,
) -> Result<Attribution<F>, ExplainError> {
    check_same_shape(x, &example.values, "example")?;
    let (n, t) = x.shape();
    let (x_norm, ex_norm) = match feature_range {
        Some(ranges) => {
            if ranges.len() != n {
                return Err(ExplainError::InvalidShape(format!(
                    "{} feature ranges for {n} features",
                    ranges.len()
                )));
            }
            if ranges.iter().any(|(lo, hi)| hi <= lo) {
                return Err(ExplainError::InvalidParameter(
                    "feature ranges must have max > min".into(),
                ));
            }
            let apply = |src: &TimeSeries<F>| {
                let mut out = src.clone();
                for i in 0..n {
                    let (lo, hi) = ranges[i];
                    for k in 0..t {
                        out.set(i, k, (src.get(i, k) - lo) / (hi - lo));
                    }
                }
                out
            };
            (apply(x), apply(&example.values))
        }
        None => (x.clone(), example.values.clone()),
    };

    let guard = crate::num::<F>(EPS_GUARD);
    let mut scores = Matrix::<F>::zeros(n, t);
    for i in 0..n {
        for k in 0..t {
            let xv = x_norm.get(i, k);
            let denom = xv.abs().max(guard);
            *scores.get_mut(i, k) = (xv - ex_norm.get(i, k)) / denom;
        }
    }
    Attribution::new(scores, 0, "example_delta")
}

/// Payload of an external explanation file.
#[derive(Clone, Debug)]
pub enum ExternalPayload<F> {
    Attribution(Attribution<F>),
    Example(ExampleExplanation<F>),
}

#[derive(Clone, Debug)]
pub struct LoadedExplanation<F> {
    pub explainer: String,
    pub target_class: usize,
    /// Test-split index the explanation belongs to, when declared.
    pub instance_index: Option<usize>,
    pub payload: ExternalPayload<F>,
}

#[derive(Debug, Serialize, Deserialize)]
struct AttributionFile {
    format_version: String,
    explainer: String,
    #[serde(default = "default_kind")]
    kind: String,
    target_class: usize,
    n_features: usize,
    t_steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    instance_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scores: Option<Vec<Option<f64>>>,
}

fn default_kind() -> String {
    "attribution".to_string()
}

fn format_err(path: &Path, message: impl Into<String>) -> ExplainError {
    ExplainError::FormatError { path: path.display().to_string(), message: message.into() }
}

/// Load an external explanation (attribution scores or an example
/// instance), validating shape and finiteness of every cell.
pub fn load_external_attribution<F: Scalar>(
    path: &Path,
    expected_shape: (usize, usize),
) -> Result<LoadedExplanation<F>, ExplainError> {
    let is_csv = path.extension().and_then(|e| e.to_str()) == Some("csv");
    let (manifest, cells): (AttributionFile, Vec<f64>) = if is_csv {
        let manifest_path = path.with_extension("manifest.json");
        let manifest: AttributionFile =
            io::read_json(&manifest_path).map_err(|e| format_err(&manifest_path, e))?;
        let rows = io::read_csv(path)
            .map_err(|e| ExplainError::Io { path: path.display().to_string(), source: e })?;
        if rows.len() != manifest.n_features {
            return Err(format_err(
                path,
                format!("{} rows for {} features", rows.len(), manifest.n_features),
            ));
        }
        let mut cells = Vec::with_capacity(manifest.n_features * manifest.t_steps);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != manifest.t_steps {
                return Err(format_err(
                    path,
                    format!("row {i} has {} columns, expected {}", row.len(), manifest.t_steps),
                ));
            }
            for (t, field) in row.iter().enumerate() {
                let v: f64 = field
                    .parse()
                    .map_err(|_| format_err(path, format!("cell ({i},{t}) is not a number")))?;
                cells.push(v);
            }
        }
        (manifest, cells)
    } else {
        let manifest: AttributionFile =
            io::read_json(path).map_err(|e| format_err(path, e))?;
        let raw = manifest
            .scores
            .as_ref()
            .ok_or_else(|| format_err(path, "missing scores array"))?;
        if raw.len() != manifest.n_features * manifest.t_steps {
            return Err(format_err(
                path,
                format!(
                    "scores hold {} cells, expected {}",
                    raw.len(),
                    manifest.n_features * manifest.t_steps
                ),
            ));
        }
        let mut cells = Vec::with_capacity(raw.len());
        for (idx, v) in raw.iter().enumerate() {
            let (i, t) = (idx / manifest.t_steps, idx % manifest.t_steps);
            cells.push(v.ok_or_else(|| format_err(path, format!("cell ({i},{t}) is null")))?);
        }
        (manifest, cells)
    };

    if manifest.format_version != ATTRIBUTION_FORMAT_VERSION {
        return Err(format_err(
            path,
            format!("unsupported format version {}", manifest.format_version),
        ));
    }
    if (manifest.n_features, manifest.t_steps) != expected_shape {
        return Err(ExplainError::InvalidShape(format!(
            "file declares ({}, {}), expected {:?}",
            manifest.n_features, manifest.t_steps, expected_shape
        )));
    }
    for (idx, v) in cells.iter().enumerate() {
        if !v.is_finite() {
            let (i, t) = (idx / manifest.t_steps, idx % manifest.t_steps);
            return Err(format_err(path, format!("cell ({i},{t}) is not finite: {v}")));
        }
    }
    let matrix = Matrix::from_vec(
        manifest.n_features,
        manifest.t_steps,
        cells.into_iter().map(crate::num::<F>).collect(),
    );
    let payload = match manifest.kind.as_str() {
        "attribution" => ExternalPayload::Attribution(Attribution::new(
            matrix,
            manifest.target_class,
            manifest.explainer.clone(),
        )?),
        "example" => ExternalPayload::Example(ExampleExplanation { values: TimeSeries::new(matrix) }),
        other => return Err(format_err(path, format!("unknown kind {other:?}"))),
    };
    Ok(LoadedExplanation {
        explainer: manifest.explainer,
        target_class: manifest.target_class,
        instance_index: manifest.instance_index,
        payload,
    })
}

/// Write an attribution in the JSON exchange format.
pub fn save_attribution_file<F: Scalar>(
    attribution: &Attribution<F>,
    instance_index: Option<usize>,
    path: &Path,
) -> Result<(), ExplainError> {
    let (n, t) = attribution.shape();
    let file = AttributionFile {
        format_version: ATTRIBUTION_FORMAT_VERSION.to_string(),
        explainer: attribution.explainer.clone(),
        kind: default_kind(),
        target_class: attribution.target_class,
        n_features: n,
        t_steps: t,
        instance_index,
        scores: Some(
            attribution.scores().data().iter().map(|v| Some(v.to_f64().unwrap())).collect(),
        ),
    };
    io::write_json(path, &file)
        .map_err(|e| ExplainError::Io { path: path.display().to_string(), source: e })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(values: Vec<f64>) -> TimeSeries<f64> {
        TimeSeries::new(Matrix::from_vec(1, values.len(), values))
    }

    #[test]
    fn identical_example_gives_zero_attribution() {
        let x = series(vec![0.2, 0.4, 0.8]);
        let ex = ExampleExplanation { values: x.clone() };
        let attr = example_to_attribution(&x, &ex, None).unwrap();
        assert!(attr.scores().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fraction_of_change_matches_hand_computation() {
        let x = series(vec![0.5, 0.2]);
        let ex = ExampleExplanation { values: series(vec![0.25, 0.2]) };
        let attr = example_to_attribution(&x, &ex, None).unwrap();
        assert!((attr.scores().data()[0] - 0.5).abs() < 1e-12);
        assert_eq!(attr.scores().data()[1], 0.0);
    }

    #[test]
    fn zero_cells_use_the_denominator_guard() {
        let x = series(vec![0.0]);
        let ex = ExampleExplanation { values: series(vec![0.3]) };
        let attr = example_to_attribution(&x, &ex, None).unwrap();
        let v = attr.scores().data()[0];
        assert!(v.is_finite());
        assert!((v + 0.3 / 1e-6).abs() < 1e-6, "guarded value {v}");
    }

    #[test]
    fn feature_ranges_normalize_before_the_delta() {
        // Raw scale [-2, 2]: x = 0 -> 0.5, example = -2 -> 0.0.
        let x = series(vec![0.0]);
        let ex = ExampleExplanation { values: series(vec![-2.0]) };
        let attr = example_to_attribution(&x, &ex, Some(&[(-2.0, 2.0)])).unwrap();
        assert!((attr.scores().data()[0] - 1.0).abs() < 1e-12);
        // Mismatched range count is rejected.
        assert!(example_to_attribution(&x, &ex, Some(&[(-2.0, 2.0), (0.0, 1.0)])).is_err());
    }

    #[test]
    fn json_round_trip_preserves_the_attribution() {
        let attr = Attribution::new(Matrix::from_vec(1, 3, vec![0.1, -0.5, 2.0]), 1, "ext").unwrap();
        let path = std::env::temp_dir().join(format!("xtsc_attr_{}.attr.json", std::process::id()));
        save_attribution_file(&attr, Some(7), &path).unwrap();
        let loaded: LoadedExplanation<f64> = load_external_attribution(&path, (1, 3)).unwrap();
        assert_eq!(loaded.instance_index, Some(7));
        match loaded.payload {
            ExternalPayload::Attribution(a) => assert_eq!(a, attr),
            _ => panic!("expected attribution payload"),
        }
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn non_finite_cells_are_named_in_the_error() {
        let dir = std::env::temp_dir();
        let csv_path = dir.join(format!("xtsc_attr_nan_{}.csv", std::process::id()));
        let manifest_path = csv_path.with_extension("manifest.json");
        std::fs::write(&csv_path, "0.5,NaN,0.25\n").unwrap();
        std::fs::write(
            &manifest_path,
            format!(
                "{{\"format_version\":\"{ATTRIBUTION_FORMAT_VERSION}\",\"explainer\":\"ext\",\"kind\":\"attribution\",\"target_class\":0,\"n_features\":1,\"t_steps\":3}}"
            ),
        )
        .unwrap();
        let err = load_external_attribution::<f64>(&csv_path, (1, 3));
        match err {
            Err(ExplainError::FormatError { message, .. }) => {
                assert!(message.contains("(0,1)"), "message: {message}");
            }
            other => panic!("expected format error, got {other:?}"),
        }
        std::fs::remove_file(&csv_path).ok();
        std::fs::remove_file(&manifest_path).ok();
    }

    #[test]
    fn shape_mismatch_is_invalid_shape() {
        let attr = Attribution::new(Matrix::from_vec(1, 3, vec![0.0; 3]), 0, "ext").unwrap();
        let path = std::env::temp_dir().join(format!("xtsc_attr_shape_{}.attr.json", std::process::id()));
        save_attribution_file(&attr, None, &path).unwrap();
        assert!(matches!(
            load_external_attribution::<f64>(&path, (1, 4)),
            Err(ExplainError::InvalidShape(_))
        ));
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn example_files_round_through_the_delta_conversion() {
        // A counterfactual-style file must yield the same attribution as
        // the in-memory path.
        let x = series(vec![0.5, 0.25, 0.8]);
        let example = ExampleExplanation { values: series(vec![0.25, 0.25, 0.4]) };
        let direct = example_to_attribution(&x, &example, None).unwrap();

        let path = std::env::temp_dir().join(format!("xtsc_ex_{}.attr.json", std::process::id()));
        let file = AttributionFile {
            format_version: ATTRIBUTION_FORMAT_VERSION.to_string(),
            explainer: "counterfactual".into(),
            kind: "example".into(),
            target_class: 1,
            n_features: 1,
            t_steps: 3,
            instance_index: Some(0),
            scores: Some(example.values.values().data().iter().map(|&v| Some(v)).collect()),
        };
        io::write_json(&path, &file).unwrap();
        let loaded: LoadedExplanation<f64> = load_external_attribution(&path, (1, 3)).unwrap();
        let via_file = match loaded.payload {
            ExternalPayload::Example(ex) => example_to_attribution(&x, &ex, None).unwrap(),
            _ => panic!("expected example payload"),
        };
        assert_eq!(via_file.scores(), direct.scores());
        std::fs::remove_file(&path).ok();
    }
}
