//! Metric rows and delimited outputs.
//!
//! An evaluation produces one [`ReportRow`] per (orchestrator, device count,
//! seed) cell, written as `report.csv`. From those raw rows the plot emitter
//! derives one small CSV per figure — failed-task percentages (overall and
//! per application), VM utilization, service time, processing time — each
//! aggregated over seeds as mean, min, max, and standard error, plus a
//! manifest listing every emitted file.
//!
//! All output is deterministic: rows are sorted by (orchestrator rank,
//! device count, seed), columns are fixed, and floats print in Rust's
//! shortest-round-trip form.

use anyhow::{bail, Context, Result};
use edgesim_core::workload::AppKind;
use edgesim_core::{PolicyKind, RunMetrics};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// One evaluated cell, flattened for CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub orchestrator: String,
    pub device_count: usize,
    pub seed: u64,
    pub generated: u64,
    pub completed: u64,
    pub censored: u64,
    pub success: u64,
    pub fail_capacity: u64,
    pub fail_deadline: u64,
    pub fail_mobility: u64,
    pub failed_pct: f64,
    pub failed_pct_augmented_reality: f64,
    pub failed_pct_pervasive_health: f64,
    pub failed_pct_image_rendering: f64,
    pub failed_pct_infotainment: f64,
    pub avg_service_s: f64,
    pub avg_processing_edge_s: f64,
    pub avg_processing_cloud_s: f64,
    pub avg_edge_utilization_pct: f64,
    pub avg_cloud_utilization_pct: f64,
    pub cumulative_reward: i64,
}

impl ReportRow {
    pub fn from_metrics(
        orchestrator: PolicyKind,
        device_count: usize,
        seed: u64,
        metrics: &RunMetrics,
    ) -> ReportRow {
        let overall = metrics.overall();
        let app_failed = |app: AppKind| metrics.app_outcomes(app).failed_pct();
        ReportRow {
            orchestrator: orchestrator.name().to_string(),
            device_count,
            seed,
            generated: metrics.generated(),
            completed: overall.completed(),
            censored: metrics.censored,
            success: overall.success,
            fail_capacity: overall.fail_capacity,
            fail_deadline: overall.fail_deadline,
            fail_mobility: overall.fail_mobility,
            failed_pct: overall.failed_pct(),
            failed_pct_augmented_reality: app_failed(AppKind::AugmentedReality),
            failed_pct_pervasive_health: app_failed(AppKind::PervasiveHealth),
            failed_pct_image_rendering: app_failed(AppKind::ImageRendering),
            failed_pct_infotainment: app_failed(AppKind::Infotainment),
            avg_service_s: metrics.avg_service_time_s(),
            avg_processing_edge_s: metrics.processing_edge.mean_s(),
            avg_processing_cloud_s: metrics.processing_cloud.mean_s(),
            avg_edge_utilization_pct: metrics.avg_edge_utilization_pct,
            avg_cloud_utilization_pct: metrics.avg_cloud_utilization_pct,
            cumulative_reward: metrics.cumulative_reward(),
        }
    }

    fn orchestrator_rank(&self) -> usize {
        PolicyKind::from_name(&self.orchestrator)
            .map(|k| PolicyKind::ALL.iter().position(|x| *x == k).unwrap())
            .unwrap_or(usize::MAX)
    }
}

/// Canonical row order for all outputs.
pub fn sort_rows(rows: &mut [ReportRow]) {
    rows.sort_by(|a, b| {
        a.orchestrator_rank()
            .cmp(&b.orchestrator_rank())
            .then(a.device_count.cmp(&b.device_count))
            .then(a.seed.cmp(&b.seed))
    });
}

pub fn write_report_csv(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_report_csv(path: &Path) -> Result<Vec<ReportRow>> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let rows: Result<Vec<ReportRow>, _> = reader.deserialize().collect();
    rows.with_context(|| format!("parsing {}", path.display()))
}

/// Mean / min / max / standard error of one metric across seeds.
#[derive(Debug, Clone, Serialize)]
struct Aggregate {
    mean: f64,
    min: f64,
    max: f64,
    stderr: f64,
}

fn aggregate(values: &[f64]) -> Aggregate {
    assert!(!values.is_empty());
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in values {
        min = min.min(v);
        max = max.max(v);
    }
    let stderr = if values.len() < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    };
    Aggregate { mean, min, max, stderr }
}

/// Groups rows by (orchestrator, device_count) preserving canonical order.
fn grouped(rows: &[ReportRow]) -> Vec<(&str, usize, Vec<&ReportRow>)> {
    let mut sorted: Vec<&ReportRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        a.orchestrator_rank()
            .cmp(&b.orchestrator_rank())
            .then(a.device_count.cmp(&b.device_count))
            .then(a.seed.cmp(&b.seed))
    });
    let mut groups: Vec<(&str, usize, Vec<&ReportRow>)> = Vec::new();
    for row in sorted {
        match groups.last_mut() {
            Some((orch, density, members))
                if *orch == row.orchestrator && *density == row.device_count =>
            {
                members.push(row);
            }
            _ => groups.push((&row.orchestrator, row.device_count, vec![row])),
        }
    }
    groups
}

/// Labeled value series within one (orchestrator, device_count) group:
/// extra label columns plus the per-seed values to aggregate.
type Series = Vec<(Vec<String>, Vec<f64>)>;

fn write_grouped_csv(
    path: &Path,
    rows: &[ReportRow],
    extra_header: &[&str],
    metric_name: &str,
    series: impl Fn(&[&ReportRow]) -> Series,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    let min_col = format!("{metric_name}_min");
    let max_col = format!("{metric_name}_max");
    let stderr_col = format!("{metric_name}_stderr");
    let mut header = vec!["orchestrator", "device_count"];
    header.extend_from_slice(extra_header);
    header.extend_from_slice(&[metric_name, &min_col, &max_col, &stderr_col]);
    writer.write_record(&header)?;
    for (orchestrator, device_count, members) in grouped(rows) {
        for (labels, values) in series(&members) {
            let agg = aggregate(&values);
            let mut record = vec![orchestrator.to_string(), device_count.to_string()];
            record.extend(labels);
            for v in [agg.mean, agg.min, agg.max, agg.stderr] {
                record.push(format!("{v}"));
            }
            writer.write_record(&record)?;
        }
    }
    writer.flush()?;
    Ok(())
}

type AppColumn = (&'static str, fn(&ReportRow) -> f64);

const APP_COLUMNS: [AppColumn; 4] = [
    ("augmented_reality", |r| r.failed_pct_augmented_reality),
    ("pervasive_health", |r| r.failed_pct_pervasive_health),
    ("image_rendering", |r| r.failed_pct_image_rendering),
    ("infotainment", |r| r.failed_pct_infotainment),
];

/// Emit every figure-backing CSV plus a manifest; returns the files written.
pub fn emit_plot_data(rows: &[ReportRow], out_dir: &Path) -> Result<Vec<PathBuf>> {
    if rows.is_empty() {
        bail!("the report holds no rows; nothing to plot");
    }
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let mut written = Vec::new();
    let mut emit = |name: &str,
                    extra: &[&str],
                    metric: &str,
                    series: &dyn Fn(&[&ReportRow]) -> Series|
     -> Result<()> {
        let path = out_dir.join(name);
        write_grouped_csv(&path, rows, extra, metric, series)?;
        written.push(path);
        Ok(())
    };

    emit("fig_failed_tasks.csv", &[], "failed_pct", &|members| {
        vec![(vec![], members.iter().map(|r| r.failed_pct).collect())]
    })?;
    emit(
        "fig_failed_tasks_by_app.csv",
        &["application"],
        "failed_pct",
        &|members| {
            APP_COLUMNS
                .iter()
                .map(|(app, getter)| {
                    (
                        vec![app.to_string()],
                        members.iter().map(|r| getter(r)).collect(),
                    )
                })
                .collect()
        },
    )?;
    emit("fig_service_time.csv", &[], "avg_service_s", &|members| {
        vec![(vec![], members.iter().map(|r| r.avg_service_s).collect())]
    })?;
    emit(
        "fig_processing_time.csv",
        &["tier"],
        "avg_processing_s",
        &|members| {
            vec![
                (
                    vec!["edge".to_string()],
                    members.iter().map(|r| r.avg_processing_edge_s).collect(),
                ),
                (
                    vec!["cloud".to_string()],
                    members.iter().map(|r| r.avg_processing_cloud_s).collect(),
                ),
            ]
        },
    )?;
    emit(
        "fig_vm_utilization.csv",
        &["tier"],
        "avg_utilization_pct",
        &|members| {
            vec![
                (
                    vec!["edge".to_string()],
                    members.iter().map(|r| r.avg_edge_utilization_pct).collect(),
                ),
                (
                    vec!["cloud".to_string()],
                    members
                        .iter()
                        .map(|r| r.avg_cloud_utilization_pct)
                        .collect(),
                ),
            ]
        },
    )?;

    let manifest_path = out_dir.join("manifest.txt");
    let mut manifest = String::new();
    for path in &written {
        let name = path.file_name().unwrap().to_string_lossy();
        let data_rows = std::fs::read_to_string(path)?.lines().count().saturating_sub(1);
        manifest.push_str(&format!("{name} rows={data_rows}\n"));
    }
    std::fs::write(&manifest_path, manifest)?;
    written.push(manifest_path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(orchestrator: &str, device_count: usize, seed: u64, failed: f64) -> ReportRow {
        ReportRow {
            orchestrator: orchestrator.to_string(),
            device_count,
            seed,
            generated: 100,
            completed: 90,
            censored: 10,
            success: 80,
            fail_capacity: 4,
            fail_deadline: 5,
            fail_mobility: 1,
            failed_pct: failed,
            failed_pct_augmented_reality: failed,
            failed_pct_pervasive_health: 0.0,
            failed_pct_image_rendering: 0.0,
            failed_pct_infotainment: 0.0,
            avg_service_s: 0.5,
            avg_processing_edge_s: 0.2,
            avg_processing_cloud_s: 0.1,
            avg_edge_utilization_pct: 3.0,
            avg_cloud_utilization_pct: 1.0,
            cumulative_reward: 70,
        }
    }

    #[test]
    fn rows_sort_by_policy_rank_then_density_then_seed() {
        let mut rows = vec![
            row("random", 60, 1, 50.0),
            row("network", 120, 2, 10.0),
            row("network", 60, 2, 10.0),
            row("network", 60, 1, 10.0),
        ];
        sort_rows(&mut rows);
        let order: Vec<(String, usize, u64)> = rows
            .iter()
            .map(|r| (r.orchestrator.clone(), r.device_count, r.seed))
            .collect();
        assert_eq!(
            order,
            vec![
                ("network".into(), 60, 1),
                ("network".into(), 60, 2),
                ("network".into(), 120, 2),
                ("random".into(), 60, 1),
            ]
        );
    }

    #[test]
    fn report_csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.csv");
        let rows = vec![row("network", 60, 1, 12.5), row("random", 60, 1, 50.0)];
        write_report_csv(&path, &rows).unwrap();
        assert_eq!(read_report_csv(&path).unwrap(), rows);
    }

    #[test]
    fn aggregation_matches_hand_arithmetic() {
        let agg = aggregate(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(agg.mean, 2.5);
        assert_eq!(agg.min, 1.0);
        assert_eq!(agg.max, 4.0);
        // Sample variance 5/3, stderr = sqrt(5/3/4).
        assert!((agg.stderr - (5.0 / 12.0f64).sqrt()).abs() < 1e-12);
        assert_eq!(aggregate(&[7.0]).stderr, 0.0);
    }

    #[test]
    fn plot_emission_covers_every_figure_and_counts_rows() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![
            row("network", 60, 1, 10.0),
            row("network", 60, 2, 20.0),
            row("network", 120, 1, 30.0),
            row("random", 60, 1, 50.0),
            row("random", 120, 1, 60.0),
            row("random", 120, 2, 70.0),
        ];
        let files = emit_plot_data(&rows, dir.path()).unwrap();
        assert_eq!(files.len(), 6);
        let failed = std::fs::read_to_string(dir.path().join("fig_failed_tasks.csv")).unwrap();
        // 2 orchestrators x 2 densities = 4 data rows.
        assert_eq!(failed.lines().count(), 5);
        let first_data = failed.lines().nth(1).unwrap();
        assert_eq!(first_data, "network,60,15,10,20,5");
        let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
        assert!(manifest.contains("fig_failed_tasks.csv rows=4"));
        assert!(manifest.contains("fig_failed_tasks_by_app.csv rows=16"));

        let empty: Vec<ReportRow> = vec![];
        assert!(emit_plot_data(&empty, dir.path()).is_err());
    }

    #[test]
    fn emission_is_byte_stable() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let rows = vec![row("hybrid", 60, 1, 33.0), row("hybrid", 60, 2, 35.5)];
        emit_plot_data(&rows, dir_a.path()).unwrap();
        emit_plot_data(&rows, dir_b.path()).unwrap();
        for name in [
            "fig_failed_tasks.csv",
            "fig_failed_tasks_by_app.csv",
            "fig_service_time.csv",
            "fig_processing_time.csv",
            "fig_vm_utilization.csv",
            "manifest.txt",
        ] {
            let a = std::fs::read(dir_a.path().join(name)).unwrap();
            let b = std::fs::read(dir_b.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} must be byte-identical");
        }
    }
}
