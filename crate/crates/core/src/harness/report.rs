//! Report files: `records.csv`, `stats.csv`, `stats.json`, one
//! `boxplot_<metric>.svg` per metric, and `run_manifest.json`.
//!
//! All emission is deterministic: records are written in canonical order
//! and floats go through the shortest round-trip `Display` form, so
//! identical inputs produce byte-identical files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::catalog::DATASET_FORMAT_VERSION;
use crate::error::HarnessError;
use crate::explain::ATTRIBUTION_FORMAT_VERSION;
use crate::harness::{AggregateStats, AggregationMode, BenchmarkPlan, GateSkip, GroupBy};
use crate::io;
use crate::metrics::{MetricRecord, RecordStatus};
use crate::nn::MODEL_FORMAT_VERSION;
use crate::rng::STREAM_SCHEME;
use crate::Scalar;

pub const RECORDS_HEADER: &str = "metric,dataset,model,explainer,instance,value,status";
pub const STATS_HEADER: &str = "group,mean,median,q1,q3,min,max,count,degenerate_count";

/// Provenance written next to every report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub stream_scheme: String,
    pub dataset_format: String,
    pub model_format: String,
    pub attribution_format: String,
    /// Resolved effective plan (defaults plus overrides).
    pub plan: BenchmarkPlan,
    pub gate_skips: Vec<GateSkip>,
    pub warnings: Vec<String>,
    /// Resolved front-end configuration, when a front end drove the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolved_config: Option<serde_json::Value>,
}

impl RunManifest {
    pub fn new(plan: BenchmarkPlan, gate_skips: Vec<GateSkip>) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            stream_scheme: STREAM_SCHEME.to_string(),
            dataset_format: DATASET_FORMAT_VERSION.to_string(),
            model_format: MODEL_FORMAT_VERSION.to_string(),
            attribution_format: ATTRIBUTION_FORMAT_VERSION.to_string(),
            plan,
            gate_skips,
            warnings: Vec::new(),
            resolved_config: None,
        }
    }
}

pub fn records_to_csv<F: Scalar>(records: &[MetricRecord<F>]) -> String {
    let mut out = String::from(RECORDS_HEADER);
    out.push('\n');
    for r in records {
        let value = r.value.map(|v| format!("{v}")).unwrap_or_default();
        out.push_str(&io::csv_line(&[
            r.metric.clone(),
            r.dataset.clone(),
            r.model.clone(),
            r.explainer.clone(),
            r.instance.to_string(),
            value,
            r.status.label(),
        ]));
    }
    out
}

pub fn read_records_csv<F: Scalar>(path: &Path) -> Result<Vec<MetricRecord<F>>, HarnessError> {
    let rows = io::read_csv(path).map_err(|e| HarnessError::io(path.display().to_string(), e))?;
    let mut records = Vec::new();
    let bad = |row: usize, msg: String| {
        HarnessError::InvalidParameter(format!("{}: row {row}: {msg}", path.display()))
    };
    for (idx, row) in rows.iter().enumerate() {
        if idx == 0 {
            if row.join(",") != RECORDS_HEADER {
                return Err(bad(0, format!("unexpected header {:?}", row.join(","))));
            }
            continue;
        }
        if row.len() != 7 {
            return Err(bad(idx, format!("{} fields, expected 7", row.len())));
        }
        let instance: usize =
            row[4].parse().map_err(|_| bad(idx, format!("bad instance {:?}", row[4])))?;
        let value = if row[5].is_empty() {
            None
        } else {
            Some(row[5].parse::<F>().map_err(|_| bad(idx, format!("bad value {:?}", row[5])))?)
        };
        let status = RecordStatus::parse(&row[6])
            .ok_or_else(|| bad(idx, format!("unknown status {:?}", row[6])))?;
        records.push(MetricRecord {
            metric: row[0].clone(),
            dataset: row[1].clone(),
            model: row[2].clone(),
            explainer: row[3].clone(),
            instance,
            value,
            status,
        });
    }
    Ok(records)
}

pub fn stats_to_csv<F: Scalar>(stats: &[AggregateStats<F>]) -> String {
    let mut out = String::from(STATS_HEADER);
    out.push('\n');
    for s in stats {
        out.push_str(&io::csv_line(&[
            s.group.label(),
            format!("{}", s.mean),
            format!("{}", s.median),
            format!("{}", s.q1),
            format!("{}", s.q3),
            format!("{}", s.min),
            format!("{}", s.max),
            s.count.to_string(),
            s.degenerate_count.to_string(),
        ]));
    }
    out
}

// Boxplot geometry. The y axis maps the padded value range linearly onto
// the plot area; x slots are evenly spaced per explainer.
pub const SVG_HEIGHT: f64 = 360.0;
pub const PLOT_TOP: f64 = 20.0;
pub const PLOT_BOTTOM_MARGIN: f64 = 60.0;
pub const PLOT_LEFT: f64 = 60.0;
pub const SLOT_WIDTH: f64 = 90.0;
pub const BOX_WIDTH: f64 = 50.0;

/// Linear y-axis mapping used by the box geometry.
pub fn y_to_pixel(value: f64, lo: f64, hi: f64) -> f64 {
    let plot_height = SVG_HEIGHT - PLOT_TOP - PLOT_BOTTOM_MARGIN;
    PLOT_TOP + (hi - value) / (hi - lo) * plot_height
}

/// Padded value bounds over a set of stats rows.
pub fn value_bounds<F: Scalar>(stats: &[AggregateStats<F>]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in stats {
        lo = lo.min(s.min.to_f64().unwrap());
        hi = hi.max(s.max.to_f64().unwrap());
    }
    let pad = ((hi - lo) * 0.05).max(1e-9);
    (lo - pad, hi + pad)
}

/// Render one metric's boxplot: a box per explainer with Q1..Q3 body,
/// solid median line, dotted mean line and min/max whiskers.
pub fn boxplot_svg<F: Scalar>(metric: &str, stats: &[AggregateStats<F>]) -> String {
    let (lo, hi) = value_bounds(stats);
    let width = PLOT_LEFT + SLOT_WIDTH * stats.len() as f64 + 20.0;
    let baseline_y = SVG_HEIGHT - PLOT_BOTTOM_MARGIN;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.2}\" height=\"{SVG_HEIGHT:.2}\" viewBox=\"0 0 {width:.2} {SVG_HEIGHT:.2}\">\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{PLOT_LEFT:.2}\" y=\"14.00\" font-size=\"13\" font-family=\"sans-serif\">{metric}</text>\n"
    ));
    svg.push_str(&format!(
        "  <line x1=\"{PLOT_LEFT:.2}\" y1=\"{baseline_y:.2}\" x2=\"{:.2}\" y2=\"{baseline_y:.2}\" stroke=\"black\"/>\n",
        width - 20.0
    ));
    // Axis reference labels.
    for (value, label_y) in [(hi, y_to_pixel(hi, lo, hi)), (lo, y_to_pixel(lo, lo, hi))] {
        svg.push_str(&format!(
            "  <text x=\"4.00\" y=\"{:.2}\" font-size=\"10\" font-family=\"sans-serif\">{value:.3}</text>\n",
            label_y + 3.0
        ));
    }
    for (i, s) in stats.iter().enumerate() {
        let cx = PLOT_LEFT + (i as f64 + 0.5) * SLOT_WIDTH;
        let x0 = cx - BOX_WIDTH / 2.0;
        let q1 = y_to_pixel(s.q1.to_f64().unwrap(), lo, hi);
        let q3 = y_to_pixel(s.q3.to_f64().unwrap(), lo, hi);
        let median = y_to_pixel(s.median.to_f64().unwrap(), lo, hi);
        let mean = y_to_pixel(s.mean.to_f64().unwrap(), lo, hi);
        let min = y_to_pixel(s.min.to_f64().unwrap(), lo, hi);
        let max = y_to_pixel(s.max.to_f64().unwrap(), lo, hi);
        svg.push_str(&format!(
            "  <line x1=\"{cx:.2}\" y1=\"{min:.2}\" x2=\"{cx:.2}\" y2=\"{max:.2}\" stroke=\"black\" stroke-width=\"1\"/>\n"
        ));
        for whisker in [min, max] {
            svg.push_str(&format!(
                "  <line x1=\"{:.2}\" y1=\"{whisker:.2}\" x2=\"{:.2}\" y2=\"{whisker:.2}\" stroke=\"black\"/>\n",
                cx - 12.0,
                cx + 12.0
            ));
        }
        svg.push_str(&format!(
            "  <rect class=\"box\" x=\"{x0:.2}\" y=\"{q3:.2}\" width=\"{BOX_WIDTH:.2}\" height=\"{:.2}\" fill=\"#9ecae1\" stroke=\"black\"/>\n",
            q1 - q3
        ));
        svg.push_str(&format!(
            "  <line class=\"median\" x1=\"{x0:.2}\" y1=\"{median:.2}\" x2=\"{:.2}\" y2=\"{median:.2}\" stroke=\"black\" stroke-width=\"2\"/>\n",
            x0 + BOX_WIDTH
        ));
        svg.push_str(&format!(
            "  <line class=\"mean\" x1=\"{x0:.2}\" y1=\"{mean:.2}\" x2=\"{:.2}\" y2=\"{mean:.2}\" stroke=\"black\" stroke-dasharray=\"4 3\"/>\n",
            x0 + BOX_WIDTH
        ));
        svg.push_str(&format!(
            "  <text x=\"{cx:.2}\" y=\"{:.2}\" font-size=\"11\" font-family=\"sans-serif\" text-anchor=\"middle\">{}</text>\n",
            baseline_y + 16.0,
            s.group.explainer
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Write the full report set into `out_dir`.
pub fn emit_report<F: Scalar>(
    out_dir: &Path,
    records: &[MetricRecord<F>],
    stats: &[AggregateStats<F>],
    manifest: &RunManifest,
) -> Result<(), HarnessError> {
    let write = |name: &str, content: &str| {
        io::write_text(&out_dir.join(name), content)
            .map_err(|e| HarnessError::io(out_dir.join(name).display().to_string(), e))
    };
    write("records.csv", &records_to_csv(records))?;
    write("stats.csv", &stats_to_csv(stats))?;
    io::write_json(&out_dir.join("stats.json"), &stats)
        .map_err(|e| HarnessError::io(out_dir.join("stats.json").display().to_string(), e))?;
    io::write_json(&out_dir.join("run_manifest.json"), manifest)
        .map_err(|e| HarnessError::io(out_dir.join("run_manifest.json").display().to_string(), e))?;

    // One boxplot per metric over the (explainer, metric) pooled groups.
    let plot_stats = crate::harness::aggregate(records, GroupBy::ExplainerMetric, AggregationMode::PooledInstances);
    if let Ok(plot_stats) = plot_stats {
        let mut metrics: Vec<&str> = plot_stats.iter().map(|s| s.group.metric.as_str()).collect();
        metrics.sort_unstable();
        metrics.dedup();
        for metric in metrics {
            let rows: Vec<AggregateStats<F>> =
                plot_stats.iter().filter(|s| s.group.metric == metric).cloned().collect();
            write(&format!("boxplot_{metric}.svg"), &boxplot_svg(metric, &rows))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::GroupKey;

    fn record(metric: &str, instance: usize, value: Option<f64>) -> MetricRecord<f64> {
        MetricRecord {
            metric: metric.into(),
            dataset: "gaussian_middle_uni".into(),
            model: "temporal_conv".into(),
            explainer: "saliency".into(),
            instance,
            value,
            status: if value.is_some() {
                RecordStatus::Ok
            } else {
                RecordStatus::Skipped("no_ground_truth".into())
            },
        }
    }

    #[test]
    fn records_csv_round_trips() {
        let records = vec![
            record("complexity", 0, Some(1.25)),
            record("complexity", 1, None),
            record("relevance_rank", 0, Some(0.5)),
        ];
        let csv = records_to_csv(&records);
        assert!(csv.starts_with(RECORDS_HEADER));
        let path = std::env::temp_dir().join(format!("xtsc_records_{}.csv", std::process::id()));
        std::fs::write(&path, &csv).unwrap();
        let back: Vec<MetricRecord<f64>> = read_records_csv(&path).unwrap();
        assert_eq!(back, records);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn stats_csv_has_the_documented_column_order() {
        let stats = vec![AggregateStats::<f64> {
            group: GroupKey {
                explainer: "saliency".into(),
                metric: "complexity".into(),
                dataset: None,
                model: None,
            },
            mean: 1.5,
            median: 1.25,
            q1: 1.0,
            q3: 2.0,
            min: 0.5,
            max: 3.0,
            count: 10,
            degenerate_count: 1,
        }];
        let csv = stats_to_csv(&stats);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(STATS_HEADER));
        assert_eq!(lines.next(), Some("saliency/complexity,1.5,1.25,1,2,0.5,3,10,1"));
    }

    #[test]
    fn box_geometry_respects_the_declared_axis_mapping() {
        let stats = vec![AggregateStats::<f64> {
            group: GroupKey {
                explainer: "saliency".into(),
                metric: "complexity".into(),
                dataset: None,
                model: None,
            },
            mean: 2.0,
            median: 1.8,
            q1: 1.2,
            q3: 2.6,
            min: 0.4,
            max: 3.2,
            count: 50,
            degenerate_count: 0,
        }];
        let svg = boxplot_svg("complexity", &stats);
        let (lo, hi) = value_bounds(&stats);
        let expect_y = y_to_pixel(2.6, lo, hi);
        let expect_h = y_to_pixel(1.2, lo, hi) - expect_y;
        let rect_line = svg.lines().find(|l| l.contains("class=\"box\"")).unwrap();
        assert!(rect_line.contains(&format!("y=\"{expect_y:.2}\"")), "{rect_line}");
        assert!(rect_line.contains(&format!("height=\"{expect_h:.2}\"")), "{rect_line}");
        // Median solid, mean dotted.
        assert!(svg.contains("class=\"median\""));
        let mean_line = svg.lines().find(|l| l.contains("class=\"mean\"")).unwrap();
        assert!(mean_line.contains("stroke-dasharray"));
    }

    #[test]
    fn emit_report_is_deterministic() {
        let records = vec![record("complexity", 0, Some(1.0)), record("complexity", 1, Some(2.0))];
        let stats = crate::harness::aggregate(
            &records,
            GroupBy::ExplainerMetric,
            AggregationMode::PooledInstances,
        )
        .unwrap();
        let manifest = RunManifest::new(crate::harness::BenchmarkPlan::new(7), vec![]);
        let dir_a = std::env::temp_dir().join(format!("xtsc_rep_a_{}", std::process::id()));
        let dir_b = std::env::temp_dir().join(format!("xtsc_rep_b_{}", std::process::id()));
        emit_report(&dir_a, &records, &stats, &manifest).unwrap();
        emit_report(&dir_b, &records, &stats, &manifest).unwrap();
        for name in ["records.csv", "stats.csv", "stats.json", "run_manifest.json", "boxplot_complexity.svg"] {
            let a = std::fs::read(dir_a.join(name)).unwrap();
            let b = std::fs::read(dir_b.join(name)).unwrap();
            assert_eq!(a, b, "{name} differs");
        }
        std::fs::remove_dir_all(&dir_a).ok();
        std::fs::remove_dir_all(&dir_b).ok();
    }
}
