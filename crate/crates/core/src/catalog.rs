//! Catalog assembly, filtering and on-disk persistence for the synthetic
//! benchmark datasets.
//!
//! A full default catalog is 6 processes x 10 informative-feature kinds
//! per arity: 60 univariate (1 x 50) plus 60 multivariate (50 x 50)
//! datasets, each with 100 train / 50 test instances, alternating labels,
//! and min-max normalization fitted on the train split.
//!
//! On disk every dataset is one directory:
//!
//! ```text
//! <slug>/
//!   manifest.json      id, shape, seeds, normalization, constant, version
//!   train.csv          one instance per row: N*T cells (feature-major,
//!   test.csv           cell (i,t) at column i*T + t) then a label column
//!   train_mask.csv     same layout with 0/1 cells (present when the
//!   test_mask.csv      dataset carries ground-truth masks)
//! ```

use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::CatalogError;
use crate::injection::{
    build_mask, inject_label, inject_positional, normalize, FeatureKind, LocationMode, MaskSpec,
    NormalizationParams,
};
use crate::matrix::Matrix;
use crate::processes::{generate_base, GenerationSpec, ProcessKind};
use crate::rng::derive_seed;
use crate::series::{ClassLabel, GroundTruthMask, LabeledInstance, TimeSeries};
use crate::{io, Scalar};

/// Current dataset directory format. Readers accept any older minor
/// version of the same major.
pub const DATASET_FORMAT_VERSION: &str = "1.1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Arity {
    Univariate,
    Multivariate,
}

impl Arity {
    pub fn slug(&self) -> &'static str {
        match self {
            Arity::Univariate => "uni",
            Arity::Multivariate => "multi",
        }
    }
}

/// Unique dataset identity: (process, feature kind, arity).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DatasetId {
    /// Canonical process name, e.g. `"Gaussian"`.
    pub process: String,
    pub feature_kind: FeatureKind,
    pub arity: Arity,
}

impl DatasetId {
    pub fn new(process: &ProcessKind, feature_kind: FeatureKind, arity: Arity) -> Self {
        DatasetId { process: process.name().to_string(), feature_kind, arity }
    }

    /// Directory-friendly identifier, e.g. `gaussian_middle_uni`.
    pub fn slug(&self) -> String {
        format!("{}_{}_{}", process_slug(&self.process), self.feature_kind.slug(), self.arity.slug())
    }

    /// Case-insensitive substring match against process name, feature-kind
    /// name and the combined dataset slug; an empty filter matches
    /// everything, several terms union.
    pub fn matches(&self, types: &[String]) -> bool {
        if types.is_empty() {
            return true;
        }
        let haystacks = [
            self.process.to_lowercase(),
            process_slug(&self.process).to_string(),
            self.feature_kind.name().to_lowercase(),
            self.feature_kind.slug().to_string(),
            self.slug(),
        ];
        types.iter().any(|t| {
            let needle = t.to_lowercase();
            haystacks.iter().any(|h| h.contains(&needle))
        })
    }
}

impl std::fmt::Display for DatasetId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.slug())
    }
}

fn process_slug(name: &str) -> &str {
    match name {
        "Gaussian" => "gaussian",
        "Harmonic" => "harmonic",
        "PseudoPeriodic" => "pseudo_periodic",
        "Autoregressive" => "autoregressive",
        "ContinuousAutoregressive" => "car",
        "Narma" => "narma",
        other => other,
    }
}

/// A fully materialized benchmark dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticDataset<F> {
    pub id: DatasetId,
    pub train: Vec<LabeledInstance<F>>,
    pub test: Vec<LabeledInstance<F>>,
    pub normalization: NormalizationParams<F>,
    pub generation_spec: GenerationSpec,
    pub mask_seed: u64,
    pub injection_constant: f64,
}

impl<F: Scalar> SyntheticDataset<F> {
    pub fn shape(&self) -> (usize, usize) {
        (self.generation_spec.n_features, self.generation_spec.t_steps)
    }

    pub fn slug(&self) -> String {
        self.id.slug()
    }

    /// Per-cell mean of the (normalized) train series, the `TrainMean`
    /// faithfulness baseline.
    pub fn train_mean(&self) -> TimeSeries<F> {
        let (n, t) = self.shape();
        let mut acc = Matrix::<F>::zeros(n, t);
        for inst in &self.train {
            for (slot, v) in acc.data_mut().iter_mut().zip(inst.series.values().data()) {
                *slot += *v;
            }
        }
        let count = F::from_usize(self.train.len().max(1)).unwrap();
        for v in acc.data_mut() {
            *v /= count;
        }
        TimeSeries::new(acc)
    }
}

/// Catalog construction parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CatalogConfig {
    pub master_seed: u64,
    pub train_instances: usize,
    pub test_instances: usize,
    pub t_steps: usize,
    pub multivariate_features: usize,
    pub injection_constant: f64,
    /// Pre-build filter with the same semantics as [`filter_catalog`].
    pub types: Vec<String>,
    pub arities: Vec<Arity>,
}

impl CatalogConfig {
    pub fn new(master_seed: u64) -> Self {
        CatalogConfig {
            master_seed,
            train_instances: 100,
            test_instances: 50,
            t_steps: 50,
            multivariate_features: 50,
            injection_constant: 1.0,
            types: Vec::new(),
            arities: vec![Arity::Univariate, Arity::Multivariate],
        }
    }
}

/// Build every selected dataset. Fully deterministic in the master seed
/// and independent of worker scheduling: all randomness is derived per
/// dataset and instance.
pub fn build_catalog<F: Scalar>(
    config: &CatalogConfig,
) -> Result<Vec<SyntheticDataset<F>>, CatalogError> {
    let mut selected = Vec::new();
    for arity in &config.arities {
        for process in ProcessKind::defaults() {
            for kind in FeatureKind::all() {
                let id = DatasetId::new(&process, kind, *arity);
                if id.matches(&config.types) {
                    selected.push((process, kind, *arity));
                }
            }
        }
    }
    selected
        .par_iter()
        .map(|(process, kind, arity)| build_dataset(config, process, *kind, *arity))
        .collect()
}

fn build_dataset<F: Scalar>(
    config: &CatalogConfig,
    process: &ProcessKind,
    kind: FeatureKind,
    arity: Arity,
) -> Result<SyntheticDataset<F>, CatalogError> {
    let id = DatasetId::new(process, kind, arity);
    let slug = id.slug();
    let n_features = match arity {
        Arity::Univariate => 1,
        Arity::Multivariate => config.multivariate_features,
    };
    let dataset_seed = derive_seed(config.master_seed, &["dataset", &slug], &[]);
    let generation_spec = GenerationSpec::new(
        *process,
        derive_seed(dataset_seed, &["series-base"], &[]),
        config.t_steps,
        n_features,
    );
    let mask_seed = derive_seed(dataset_seed, &["mask"], &[]);
    let mask_spec = MaskSpec::new(kind, mask_seed);
    let positional = kind.location_mode() == LocationMode::Positional;
    let constant = crate::num::<F>(config.injection_constant);

    let build_split = |split: &str, count: usize, offset: u64| {
        (0..count)
            .map(|idx| {
                let instance_seed = offset + idx as u64;
                let series_seed = derive_seed(dataset_seed, &["series", split], &[idx as u64]);
                let series: TimeSeries<F> =
                    generate_base(&generation_spec.with_seed(series_seed))?;
                let label = ClassLabel::from_index(idx % 2);
                let mask =
                    build_mask(&mask_spec, (n_features, config.t_steps), instance_seed, label)?;
                let inst = if positional {
                    inject_positional(series, &mask, label, constant)?
                } else {
                    inject_label(series, &mask, label, constant)?
                };
                Ok::<_, CatalogError>(inst)
            })
            .collect::<Result<Vec<_>, _>>()
    };

    let train = build_split("train", config.train_instances, 0)?;
    let test =
        build_split("test", config.test_instances, config.train_instances as u64)?;
    let (train, test, normalization) = normalize(train, test)?;

    Ok(SyntheticDataset {
        id,
        train,
        test,
        normalization,
        generation_spec,
        mask_seed,
        injection_constant: config.injection_constant,
    })
}

/// Keep datasets whose process or feature-kind name contains any of the
/// requested substrings (case-insensitive); an empty list keeps all.
pub fn filter_catalog<F: Scalar>(
    catalog: &[SyntheticDataset<F>],
    types: &[String],
) -> Vec<SyntheticDataset<F>> {
    catalog.iter().filter(|ds| ds.id.matches(types)).cloned().collect()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
struct DatasetManifest<F: Scalar> {
    format_version: String,
    id: DatasetId,
    n_features: usize,
    t_steps: usize,
    generation_spec: GenerationSpec,
    mask_seed: u64,
    injection_constant: f64,
    normalization: NormalizationParams<F>,
    train_instances: usize,
    test_instances: usize,
    has_masks: bool,
}

/// Top-level manifest listing the datasets of a generated catalog.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CatalogManifest {
    pub format_version: String,
    pub master_seed: u64,
    pub datasets: Vec<String>,
}

fn check_version(path: &Path, version: &str) -> Result<(), CatalogError> {
    let bad = || {
        CatalogError::format(
            path.display().to_string(),
            format!("unsupported format version {version}, current {DATASET_FORMAT_VERSION}"),
        )
    };
    let mut parts = version.split('.');
    let major: u32 = parts.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
    let minor: u32 = parts.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
    let mut current = DATASET_FORMAT_VERSION.split('.');
    let cur_major: u32 = current.next().unwrap().parse().unwrap();
    let cur_minor: u32 = current.next().unwrap().parse().unwrap();
    if major != cur_major || minor > cur_minor {
        return Err(bad());
    }
    Ok(())
}

fn instances_csv<F: Scalar>(instances: &[LabeledInstance<F>]) -> String {
    let mut out = String::new();
    for inst in instances {
        let mut fields: Vec<String> =
            inst.series.values().data().iter().map(|v| format!("{v}")).collect();
        fields.push(format!("{}", inst.label.index()));
        out.push_str(&io::csv_line(&fields));
    }
    out
}

fn masks_csv<F: Scalar>(instances: &[LabeledInstance<F>]) -> Option<String> {
    let mut out = String::new();
    for inst in instances {
        let mask = inst.mask.as_ref()?;
        let mut fields: Vec<String> =
            mask.cells().data().iter().map(|&b| if b { "1" } else { "0" }.to_string()).collect();
        fields.push(format!("{}", inst.label.index()));
        out.push_str(&io::csv_line(&fields));
    }
    Some(out)
}

/// Persist one dataset as a directory; the round-trip through
/// [`load_dataset`] is exact.
pub fn save_dataset<F: Scalar>(
    dataset: &SyntheticDataset<F>,
    dir: &Path,
) -> Result<(), CatalogError> {
    let (n, t) = dataset.shape();
    let train_masks = masks_csv(&dataset.train);
    let test_masks = masks_csv(&dataset.test);
    let has_masks = train_masks.is_some() && test_masks.is_some();
    let manifest = DatasetManifest {
        format_version: DATASET_FORMAT_VERSION.to_string(),
        id: dataset.id.clone(),
        n_features: n,
        t_steps: t,
        generation_spec: dataset.generation_spec,
        mask_seed: dataset.mask_seed,
        injection_constant: dataset.injection_constant,
        normalization: dataset.normalization.clone(),
        train_instances: dataset.train.len(),
        test_instances: dataset.test.len(),
        has_masks,
    };
    let write = |name: &str, content: &str| {
        io::write_text(&dir.join(name), content)
            .map_err(|e| CatalogError::io(dir.join(name).display().to_string(), e))
    };
    io::write_json(&dir.join("manifest.json"), &manifest)
        .map_err(|e| CatalogError::io(dir.join("manifest.json").display().to_string(), e))?;
    write("train.csv", &instances_csv(&dataset.train))?;
    write("test.csv", &instances_csv(&dataset.test))?;
    if has_masks {
        write("train_mask.csv", &train_masks.unwrap())?;
        write("test_mask.csv", &test_masks.unwrap())?;
    }
    Ok(())
}

fn parse_instances<F: Scalar>(
    path: &Path,
    n: usize,
    t: usize,
    masks: Option<&Path>,
) -> Result<Vec<LabeledInstance<F>>, CatalogError> {
    let display = path.display().to_string();
    let rows = io::read_csv(path).map_err(|e| CatalogError::io(display.clone(), e))?;
    let mask_rows = match masks {
        Some(mpath) => {
            let mdisplay = mpath.display().to_string();
            let mrows = io::read_csv(mpath).map_err(|e| CatalogError::io(mdisplay.clone(), e))?;
            if mrows.len() != rows.len() {
                return Err(CatalogError::format(
                    mdisplay,
                    format!("{} mask rows for {} instances", mrows.len(), rows.len()),
                ));
            }
            Some(mrows)
        }
        None => None,
    };

    let mut out = Vec::with_capacity(rows.len());
    for (row_idx, row) in rows.iter().enumerate() {
        if row.len() != n * t + 1 {
            return Err(CatalogError::format(
                display.clone(),
                format!("row {row_idx} has {} fields, expected {}", row.len(), n * t + 1),
            ));
        }
        let mut data = Vec::with_capacity(n * t);
        for (col, field) in row[..n * t].iter().enumerate() {
            let v: F = field.parse().map_err(|_| {
                CatalogError::format(
                    display.clone(),
                    format!("row {row_idx} col {col}: not a number: {field:?}"),
                )
            })?;
            data.push(v);
        }
        let label_field = &row[n * t];
        let label_idx: usize = label_field.parse().map_err(|_| {
            CatalogError::format(
                display.clone(),
                format!("row {row_idx}: bad label {label_field:?}"),
            )
        })?;
        if label_idx > 1 {
            return Err(CatalogError::format(
                display.clone(),
                format!("row {row_idx}: label must be 0 or 1, got {label_idx}"),
            ));
        }
        let mask = match &mask_rows {
            Some(mrows) => {
                let mrow = &mrows[row_idx];
                if mrow.len() != n * t + 1 {
                    return Err(CatalogError::format(
                        display.clone(),
                        format!("mask row {row_idx} has {} fields, expected {}", mrow.len(), n * t + 1),
                    ));
                }
                let cells: Vec<bool> = mrow[..n * t].iter().map(|f| f == "1").collect();
                Some(
                    GroundTruthMask::new(Matrix::from_vec(n, t, cells)).map_err(|e| {
                        CatalogError::format(display.clone(), format!("mask row {row_idx}: {e}"))
                    })?,
                )
            }
            None => None,
        };
        out.push(LabeledInstance {
            series: TimeSeries::new(Matrix::from_vec(n, t, data)),
            label: ClassLabel::from_index(label_idx),
            mask,
        });
    }
    Ok(out)
}

/// Load a dataset directory written by [`save_dataset`] (or any data in
/// the same format, e.g. user-supplied custom datasets).
pub fn load_dataset<F: Scalar>(dir: &Path) -> Result<SyntheticDataset<F>, CatalogError> {
    let manifest_path = dir.join("manifest.json");
    let manifest: DatasetManifest<F> = io::read_json(&manifest_path)
        .map_err(|e| CatalogError::format(manifest_path.display().to_string(), e))?;
    check_version(&manifest_path, &manifest.format_version)?;
    if manifest.normalization.n_features() != manifest.n_features {
        return Err(CatalogError::format(
            manifest_path.display().to_string(),
            format!(
                "normalization covers {} features, manifest declares {}",
                manifest.normalization.n_features(),
                manifest.n_features
            ),
        ));
    }
    let (n, t) = (manifest.n_features, manifest.t_steps);
    let train_masks = manifest.has_masks.then(|| dir.join("train_mask.csv"));
    let test_masks = manifest.has_masks.then(|| dir.join("test_mask.csv"));
    let train = parse_instances(&dir.join("train.csv"), n, t, train_masks.as_deref())?;
    let test = parse_instances(&dir.join("test.csv"), n, t, test_masks.as_deref())?;
    if train.len() != manifest.train_instances || test.len() != manifest.test_instances {
        return Err(CatalogError::format(
            manifest_path.display().to_string(),
            format!(
                "manifest declares {}/{} instances, files hold {}/{}",
                manifest.train_instances,
                manifest.test_instances,
                train.len(),
                test.len()
            ),
        ));
    }
    Ok(SyntheticDataset {
        id: manifest.id,
        train,
        test,
        normalization: manifest.normalization,
        generation_spec: manifest.generation_spec,
        mask_seed: manifest.mask_seed,
        injection_constant: manifest.injection_constant,
    })
}

/// Write a whole catalog under `root`, one directory per dataset, plus a
/// `catalog_manifest.json` index.
pub fn save_catalog<F: Scalar>(
    catalog: &[SyntheticDataset<F>],
    master_seed: u64,
    root: &Path,
) -> Result<(), CatalogError> {
    let mut slugs = Vec::with_capacity(catalog.len());
    for dataset in catalog {
        let slug = dataset.slug();
        save_dataset(dataset, &root.join(&slug))?;
        slugs.push(slug);
    }
    let manifest = CatalogManifest {
        format_version: DATASET_FORMAT_VERSION.to_string(),
        master_seed,
        datasets: slugs,
    };
    io::write_json(&root.join("catalog_manifest.json"), &manifest)
        .map_err(|e| CatalogError::io(root.display().to_string(), e))
}

/// Load every dataset listed in a catalog directory.
pub fn load_catalog<F: Scalar>(root: &Path) -> Result<Vec<SyntheticDataset<F>>, CatalogError> {
    let manifest_path = root.join("catalog_manifest.json");
    let manifest: CatalogManifest = io::read_json(&manifest_path)
        .map_err(|e| CatalogError::format(manifest_path.display().to_string(), e))?;
    check_version(&manifest_path, &manifest.format_version)?;
    let unique: BTreeSet<&String> = manifest.datasets.iter().collect();
    if unique.len() != manifest.datasets.len() {
        return Err(CatalogError::format(
            manifest_path.display().to_string(),
            "duplicate dataset entries".to_string(),
        ));
    }
    manifest.datasets.iter().map(|slug| load_dataset(&root.join(slug))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> CatalogConfig {
        CatalogConfig {
            train_instances: 8,
            test_instances: 4,
            ..CatalogConfig::new(11)
        }
    }

    #[test]
    fn typed_build_keeps_only_matching_datasets() {
        let config = CatalogConfig {
            types: vec!["Rare".into()],
            arities: vec![Arity::Univariate],
            ..small_config()
        };
        let catalog: Vec<SyntheticDataset<f64>> = build_catalog(&config).unwrap();
        // 6 processes x 4 rare kinds.
        assert_eq!(catalog.len(), 24);
        assert!(catalog.iter().all(|ds| ds.id.feature_kind.name().contains("Rare")));
    }

    #[test]
    fn filtering_uses_union_semantics() {
        let config = CatalogConfig { arities: vec![Arity::Univariate], ..small_config() };
        let catalog: Vec<SyntheticDataset<f64>> = build_catalog(&config).unwrap();
        assert_eq!(catalog.len(), 60);

        let filtered = filter_catalog(&catalog, &["Gaussian".into(), "Middle".into()]);
        let expected: BTreeSet<String> = catalog
            .iter()
            .filter(|ds| {
                ds.id.process.to_lowercase().contains("gaussian")
                    || ds.id.feature_kind.name().to_lowercase().contains("middle")
            })
            .map(|ds| ds.slug())
            .collect();
        let got: BTreeSet<String> = filtered.iter().map(|ds| ds.slug()).collect();
        assert_eq!(got, expected);
        assert!(filtered.len() > 10);

        assert_eq!(filter_catalog(&catalog, &[]).len(), 60);
        assert!(filter_catalog(&catalog, &["nonexistent".into()]).is_empty());
    }

    #[test]
    fn labels_alternate_and_masks_behave_per_location_mode() {
        let config = CatalogConfig {
            types: vec!["moving_middle".into(), "middle".into()],
            arities: vec![Arity::Univariate],
            train_instances: 40,
            test_instances: 10,
            ..CatalogConfig::new(3)
        };
        let catalog: Vec<SyntheticDataset<f64>> = build_catalog(&config).unwrap();
        for ds in &catalog {
            let positives = ds.train.iter().filter(|i| i.label == ClassLabel::Positive).count();
            assert_eq!(positives, ds.train.len() / 2);
            let masks: Vec<_> = ds.train.iter().map(|i| i.mask.clone().unwrap()).collect();
            match ds.id.feature_kind {
                FeatureKind::Middle => {
                    assert!(masks.windows(2).all(|w| w[0] == w[1]), "fixed masks identical");
                }
                FeatureKind::MovingMiddle => {
                    let distinct = masks
                        .windows(2)
                        .filter(|w| w[0] != w[1])
                        .count();
                    assert!(
                        distinct as f64 / (masks.len() - 1) as f64 > 0.9,
                        "moving masks mostly differ, got {distinct}/{}",
                        masks.len() - 1
                    );
                }
                _ => {}
            }
        }
    }

    #[test]
    fn train_values_are_normalized_into_unit_interval() {
        let config = CatalogConfig {
            types: vec!["gaussian_middle".into()],
            arities: vec![Arity::Univariate],
            ..small_config()
        };
        let catalog: Vec<SyntheticDataset<f64>> = build_catalog(&config).unwrap();
        for ds in &catalog {
            for inst in &ds.train {
                for v in inst.series.values().data() {
                    assert!((0.0..=1.0).contains(v), "train value {v} outside [0,1]");
                }
            }
        }
    }

    #[test]
    fn save_load_round_trip_is_exact() {
        let config = CatalogConfig {
            types: vec!["narma_positional_time".into()],
            arities: vec![Arity::Univariate],
            ..small_config()
        };
        let catalog: Vec<SyntheticDataset<f64>> = build_catalog(&config).unwrap();
        assert_eq!(catalog.len(), 1);
        let dir = std::env::temp_dir().join(format!("xtsc_ds_rt_{}", std::process::id()));
        save_dataset(&catalog[0], &dir).unwrap();
        let loaded: SyntheticDataset<f64> = load_dataset(&dir).unwrap();
        assert_eq!(loaded, catalog[0]);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn same_seed_builds_byte_identical_catalogs() {
        let config = CatalogConfig {
            types: vec!["harmonic_rare".into()],
            arities: vec![Arity::Univariate],
            ..small_config()
        };
        let a: Vec<SyntheticDataset<f64>> = build_catalog(&config).unwrap();
        let b: Vec<SyntheticDataset<f64>> = build_catalog(&config).unwrap();
        assert_eq!(a.len(), 2);
        let dir_a = std::env::temp_dir().join(format!("xtsc_cat_a_{}", std::process::id()));
        let dir_b = std::env::temp_dir().join(format!("xtsc_cat_b_{}", std::process::id()));
        save_catalog(&a, config.master_seed, &dir_a).unwrap();
        save_catalog(&b, config.master_seed, &dir_b).unwrap();
        for ds in &a {
            for file in ["manifest.json", "train.csv", "test.csv", "train_mask.csv"] {
                let fa = std::fs::read(dir_a.join(ds.slug()).join(file)).unwrap();
                let fb = std::fs::read(dir_b.join(ds.slug()).join(file)).unwrap();
                assert_eq!(fa, fb, "{file} differs");
            }
        }
        std::fs::remove_dir_all(&dir_a).ok();
        std::fs::remove_dir_all(&dir_b).ok();
    }

    #[test]
    fn shape_mismatch_in_rows_is_a_format_error() {
        let config = CatalogConfig {
            types: vec!["gaussian_small_middle".into()],
            arities: vec![Arity::Univariate],
            ..small_config()
        };
        let catalog: Vec<SyntheticDataset<f64>> = build_catalog(&config).unwrap();
        let dir = std::env::temp_dir().join(format!("xtsc_ds_bad_{}", std::process::id()));
        save_dataset(&catalog[0], &dir).unwrap();
        // Drop one column from the first train row.
        let path = dir.join("train.csv");
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        let truncated = lines[0].rsplit_once(',').unwrap().0.to_string();
        lines[0] = &truncated;
        std::fs::write(&path, lines.join("\n")).unwrap();
        let err = load_dataset::<f64>(&dir);
        assert!(matches!(err, Err(CatalogError::FormatError { .. })), "{err:?}");
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn future_format_versions_are_rejected() {
        let path = Path::new("manifest.json");
        assert!(check_version(path, "1.0").is_ok());
        assert!(check_version(path, DATASET_FORMAT_VERSION).is_ok());
        assert!(check_version(path, "1.9").is_err());
        assert!(check_version(path, "2.0").is_err());
        assert!(check_version(path, "junk").is_err());
    }
}
