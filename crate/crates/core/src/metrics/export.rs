use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use super::{ci_half_width, PatientRecord, SummaryReport};
use crate::flow::TraceRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Text,
}

/// Per-replication reports for one variant together with the pooled report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportSet {
    pub label: String,
    pub per_replication: Vec<SummaryReport>,
    pub pooled: SummaryReport,
}

impl ReportSet {
    /// `(name, pooled value, 95% CI half-width across replications)`.
    pub fn pooled_with_ci(&self) -> Vec<(String, Option<f64>, Option<f64>)> {
        let per_rep: Vec<Vec<(String, Option<f64>)>> =
            self.per_replication.iter().map(|r| r.metrics()).collect();
        self.pooled
            .metrics()
            .into_iter()
            .enumerate()
            .map(|(i, (name, value))| {
                let xs: Vec<f64> = per_rep.iter().filter_map(|m| m[i].1).filter(|x| x.is_finite()).collect();
                (name, value, ci_half_width(&xs))
            })
            .collect()
    }
}

fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x}"),
        _ => String::new(),
    }
}

fn io_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

/// Writes `summary.csv` (one row per replication plus a `pooled` row, each
/// metric followed by its `_ci95` column) or `summary.txt`.
pub fn export_report(set: &ReportSet, path: &Path, format: ReportFormat) -> io::Result<()> {
    match format {
        ReportFormat::Csv => write_csv(set, path),
        ReportFormat::Text => fs::write(path, render_text(set)),
    }
}

fn write_csv(set: &ReportSet, path: &Path) -> io::Result<()> {
    let pooled = set.pooled_with_ci();
    let mut w = csv::Writer::from_path(path).map_err(io_err)?;
    let mut header = vec!["row".to_string(), "label".to_string()];
    for (name, _, _) in &pooled {
        header.push(name.clone());
        header.push(format!("{name}_ci95"));
    }
    w.write_record(&header).map_err(io_err)?;
    for rep in &set.per_replication {
        let mut row = vec![
            rep.replication.map(|r| r.to_string()).unwrap_or_default(),
            set.label.clone(),
        ];
        for (_, v) in rep.metrics() {
            row.push(cell(v));
            row.push(String::new());
        }
        w.write_record(&row).map_err(io_err)?;
    }
    let mut row = vec!["pooled".to_string(), set.label.clone()];
    for (_, v, ci) in &pooled {
        row.push(cell(*v));
        row.push(cell(*ci));
    }
    w.write_record(&row).map_err(io_err)?;
    w.flush()
}

fn render_text(set: &ReportSet) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "variant: {}", set.label);
    let _ = writeln!(s, "replications: {}", set.per_replication.len());
    let _ = writeln!(s, "measured days (total): {}", set.pooled.measured_days);
    let _ = writeln!(s);
    let rows = set.pooled_with_ci();
    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(6).max(6);
    let _ = writeln!(s, "{:<width$}  {:>14}  {:>12}", "metric", "pooled", "ci95");
    for (name, v, ci) in rows {
        let Some(v) = v.filter(|x| x.is_finite()) else {
            continue;
        };
        let ci = ci.map(|c| format!("{c:.4}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(s, "{name:<width$}  {v:>14.4}  {ci:>12}");
    }
    s
}

/// One row per accepted patient record.
pub fn write_patient_log(records: &[PatientRecord], path: &Path) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(io_err)?;
    w.write_record([
        "replication",
        "patient_id",
        "origin_ed",
        "origin_facility",
        "age_group",
        "alpha",
        "disposition_time",
        "placement_time",
        "coordination_hours",
        "travel_hours",
        "distance_miles",
        "destination_unit",
        "destination_facility",
        "los_hours",
        "requests_sent",
        "searches",
        "transferred",
        "censored",
    ])
    .map_err(io_err)?;
    for r in records {
        w.write_record([
            r.replication.to_string(),
            r.patient_id.to_string(),
            r.origin_ed.to_string(),
            r.origin_facility.to_string(),
            r.age_group.to_string(),
            r.alpha.to_string(),
            r.disposition_time.to_string(),
            cell(r.placement_time),
            cell(r.coordination_hours),
            r.travel_hours.to_string(),
            r.distance_miles.to_string(),
            r.destination_unit.as_deref().unwrap_or("").to_string(),
            r.destination_facility.as_deref().unwrap_or("").to_string(),
            cell(r.los_hours),
            r.requests_sent.to_string(),
            r.searches.to_string(),
            r.transferred.to_string(),
            r.censored.to_string(),
        ])
        .map_err(io_err)?;
    }
    w.flush()
}

/// `time_hours,event_type,entity_id,detail` rows in processing order.
pub fn write_trace(rows: &[TraceRow], path: &Path) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(io_err)?;
    w.write_record(["time_hours", "event_type", "entity_id", "detail"]).map_err(io_err)?;
    for r in rows {
        w.write_record([r.time_hours.to_string().as_str(), r.event_type, &r.entity_id, &r.detail])
            .map_err(io_err)?;
    }
    w.flush()
}
