//! Replicated runs of one or more scenario variants, policy comparisons with
//! rank tests, and one-factor sensitivity sweeps.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::flow::{run_replication, PlacementPolicy, Region, ReplicationOutput, ReplicationSeeds};
use crate::metrics::{
    ci_half_width, export_report, summarize, summarize_pooled, write_patient_log, write_trace, MetricGroup,
    PatientRecord, ReportFormat, ReportSet, SummaryError,
};
use crate::num::mean;
use crate::scenario::{validate_scenario, ScenarioConfig, Violation};
use crate::sim::variant_seed;
use crate::stats::{kruskal_wallis, pairwise_compare, welch_t_test, StatsError, TestResult};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid scenario:\n{}", format_violations(.0))]
    Validation(Vec<Violation>),
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("variant `{label}`: {source}")]
    Summary {
        label: String,
        #[source]
        source: SummaryError,
    },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

impl ExperimentError {
    /// Bad inputs, as opposed to failures while running or writing.
    pub fn is_input_error(&self) -> bool {
        matches!(self, ExperimentError::Validation(_) | ExperimentError::Invalid(_))
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| format!("  {x}")).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub label: String,
    pub policy: PlacementPolicy,
    pub rate_multiplier: f64,
    pub los_multiplier: f64,
}

impl Variant {
    pub fn of(base: &ScenarioConfig, label: impl Into<String>) -> Variant {
        Variant {
            label: label.into(),
            policy: base.policy,
            rate_multiplier: base.rate_multiplier,
            los_multiplier: base.los_multiplier,
        }
    }
}

/// A base scenario and the variants to run against it. Variant `i` draws from
/// `variant_seed(base.seed, i)`; with common random numbers every variant
/// uses the base seed.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub base: ScenarioConfig,
    pub variants: Vec<Variant>,
    pub crn: bool,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let mut seen = BTreeSet::new();
        for v in &self.variants {
            if !seen.insert(v.label.as_str()) {
                return Err(ExperimentError::Invalid(format!("duplicate variant label `{}`", v.label)));
            }
        }
        for i in 0..self.variants.len() {
            let violations = validate_scenario(&self.config(i));
            if !violations.is_empty() {
                return Err(ExperimentError::Validation(violations));
            }
        }
        Ok(())
    }

    pub fn config(&self, i: usize) -> ScenarioConfig {
        let v = &self.variants[i];
        let mut cfg = self.base.clone();
        cfg.policy = v.policy;
        cfg.rate_multiplier = v.rate_multiplier;
        cfg.los_multiplier = v.los_multiplier;
        cfg.seed = self.seeds(i).service;
        cfg
    }

    pub fn seeds(&self, i: usize) -> ReplicationSeeds {
        if self.crn {
            ReplicationSeeds::uniform(self.base.seed)
        } else {
            ReplicationSeeds::uniform(variant_seed(self.base.seed, i))
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub trace: bool,
}

/// All replications of one variant plus their summaries.
#[derive(Debug, Clone)]
pub struct VariantRun {
    pub label: String,
    pub outputs: Vec<ReplicationOutput>,
    pub reports: ReportSet,
}

impl VariantRun {
    pub fn records(&self) -> impl Iterator<Item = &PatientRecord> {
        self.outputs.iter().flat_map(|o| o.records.iter())
    }

    /// Per-replication values of `f`, skipping replications where it is undefined.
    pub fn per_replication(&self, f: impl Fn(&crate::metrics::SummaryReport) -> Option<f64>) -> Vec<f64> {
        self.reports.per_replication.iter().filter_map(f).collect()
    }
}

/// Runs `cfg.replications` replications in parallel (results kept in
/// replication order) and summarizes them.
pub fn run_scenario(
    cfg: &ScenarioConfig,
    label: &str,
    seeds: ReplicationSeeds,
    opts: RunOptions,
) -> Result<VariantRun, ExperimentError> {
    let violations = validate_scenario(cfg);
    if !violations.is_empty() {
        return Err(ExperimentError::Validation(violations));
    }
    let region = Region::compile(cfg);
    let outputs: Vec<ReplicationOutput> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| run_replication(cfg, &region, rep, seeds, opts.trace))
        .collect();
    let summary_err = |source| ExperimentError::Summary { label: label.to_string(), source };
    let per_replication = outputs
        .iter()
        .map(|o| summarize(label, Some(o.replication), &o.records, &o.units, o.measured_days))
        .collect::<Result<Vec<_>, _>>()
        .map_err(summary_err)?;
    let pooled = summarize_pooled(
        label,
        outputs.iter().map(|o| (&o.records[..], &o.units[..], o.measured_days)),
    )
    .map_err(summary_err)?;
    Ok(VariantRun {
        label: label.to_string(),
        outputs,
        reports: ReportSet {
            label: label.to_string(),
            per_replication,
            pooled,
        },
    })
}

pub fn run_plan_variant(plan: &ExperimentPlan, i: usize, opts: RunOptions) -> Result<VariantRun, ExperimentError> {
    run_scenario(&plan.config(i), &plan.variants[i].label, plan.seeds(i), opts)
}

/// Directory-safe form of a variant label.
pub fn label_slug(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' || c == '_' { c } else { '-' })
        .collect()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OutputOptions {
    pub patient_log: bool,
    pub trace: bool,
}

/// Writes `summary.csv`, `summary.txt` and the optional patient log and
/// traces into `<dir>/<label>/`. Files are staged in a sibling directory
/// and moved into place together.
pub fn write_variant(run: &VariantRun, dir: &Path, opts: OutputOptions) -> Result<PathBuf, ExperimentError> {
    let slug = label_slug(&run.label);
    let final_dir = dir.join(&slug);
    let staging = dir.join(format!(".{slug}.partial"));
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ExperimentError::Io { path, source }
    };
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(io_err(&staging))?;
    }
    fs::create_dir_all(&staging).map_err(io_err(&staging))?;

    let p = staging.join("summary.csv");
    export_report(&run.reports, &p, ReportFormat::Csv).map_err(io_err(&p))?;
    let p = staging.join("summary.txt");
    export_report(&run.reports, &p, ReportFormat::Text).map_err(io_err(&p))?;
    if opts.patient_log {
        let records: Vec<PatientRecord> = run.records().cloned().collect();
        let p = staging.join("patients.csv");
        write_patient_log(&records, &p).map_err(io_err(&p))?;
    }
    if opts.trace {
        for o in &run.outputs {
            if let Some(rows) = &o.trace {
                let p = staging.join(format!("trace_rep{:02}.csv", o.replication));
                write_trace(rows, &p).map_err(io_err(&p))?;
            }
        }
    }

    if final_dir.exists() {
        fs::remove_dir_all(&final_dir).map_err(io_err(&final_dir))?;
    }
    fs::rename(&staging, &final_dir).map_err(io_err(&final_dir))?;
    Ok(final_dir)
}

fn write_file(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| ExperimentError::Io { path: parent.to_path_buf(), source })?;
    }
    fs::write(path, contents).map_err(|source| ExperimentError::Io { path: path.to_path_buf(), source })
}

fn cell(v: Option<f64>) -> String {
    v.filter(|x| x.is_finite()).map(|x| format!("{x}")).unwrap_or_default()
}

/// Mean and 95% half-width of per-replication values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: Option<f64>,
    pub ci95: Option<f64>,
}

impl Estimate {
    pub fn of(xs: &[f64]) -> Estimate {
        Estimate { mean: mean(xs), ci95: ci_half_width(xs) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub label: String,
    pub policy: PlacementPolicy,
    pub coordination: Vec<f64>,
    pub delay: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairRow {
    pub metric: &'static str,
    pub a: String,
    pub b: String,
    pub u: f64,
    pub p: f64,
    pub p_bonferroni: f64,
    /// Welch t-test p value for the same pair, when defined.
    pub welch_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub group: MetricGroup,
    pub rows: Vec<CompareRow>,
    pub kruskal_coordination: Option<TestResult<f64>>,
    pub kruskal_delay: Option<TestResult<f64>>,
    pub pairs: Vec<PairRow>,
}

impl CompareReport {
    pub fn pair(&self, metric: &str, a: &str, b: &str) -> Option<&PairRow> {
        self.pairs.iter().find(|p| p.metric == metric && p.a == a && p.b == b)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("section,metric,label,other,n,mean,ci95,statistic,p_value,p_bonferroni,welch_p\n");
        for r in &self.rows {
            for (metric, xs) in [("coordination_hours", &r.coordination), ("delay_hours", &r.delay)] {
                let e = Estimate::of(xs);
                let _ = writeln!(
                    s,
                    "variant,{metric},{},,{},{},{},,,,",
                    r.label,
                    xs.len(),
                    cell(e.mean),
                    cell(e.ci95)
                );
            }
        }
        for (metric, kw) in [("coordination_hours", &self.kruskal_coordination), ("delay_hours", &self.kruskal_delay)] {
            if let Some(kw) = kw {
                let n: usize = kw.n.iter().sum();
                let _ = writeln!(s, "kruskal-wallis,{metric},all,,{n},,,{},{},,", kw.statistic, kw.p_value);
            }
        }
        for p in &self.pairs {
            let _ = writeln!(
                s,
                "mann-whitney,{},{},{},,,,{},{},{},{}",
                p.metric,
                p.a,
                p.b,
                p.u,
                p.p,
                p.p_bonferroni,
                cell(p.welch_p)
            );
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "group: {}", self.group);
        let _ = writeln!(s);
        let w = self.rows.iter().map(|r| r.label.len()).max().unwrap_or(7).max(7);
        let _ = writeln!(s, "{:<w$}  {:>4}  {:>22}  {:>22}", "variant", "reps", "coordination h (ci95)", "delay h (ci95)");
        let fmt = |e: Estimate| match (e.mean, e.ci95) {
            (Some(m), Some(c)) => format!("{m:.3} ({c:.3})"),
            (Some(m), None) => format!("{m:.3}"),
            _ => "-".into(),
        };
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<w$}  {:>4}  {:>22}  {:>22}",
                r.label,
                r.coordination.len(),
                fmt(Estimate::of(&r.coordination)),
                fmt(Estimate::of(&r.delay))
            );
        }
        let _ = writeln!(s);
        for (metric, kw) in [("coordination", &self.kruskal_coordination), ("delay", &self.kruskal_delay)] {
            match kw {
                Some(kw) => {
                    let _ = writeln!(s, "kruskal-wallis {metric}: H = {:.4}, p = {:.4}", kw.statistic, kw.p_value);
                }
                None => {
                    let _ = writeln!(s, "kruskal-wallis {metric}: not enough data");
                }
            }
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "pairwise mann-whitney (bonferroni over all pairs):");
        for p in &self.pairs {
            let welch = p.welch_p.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                s,
                "  {:<12} {} vs {}: U = {}, p = {:.4}, adjusted p = {:.4}, welch p = {welch}",
                p.metric, p.a, p.b, p.u, p.p, p.p_bonferroni
            );
        }
        s
    }
}

fn kw_or_none(samples: &[&[f64]]) -> Option<TestResult<f64>> {
    kruskal_wallis(samples).ok()
}

/// Runs each variant, then compares per-replication means of coordination
/// time and treatment delay for `group` across variants.
pub fn compare(
    plan: &ExperimentPlan,
    group: MetricGroup,
    opts: RunOptions,
    mut each: impl FnMut(&VariantRun) -> Result<(), ExperimentError>,
) -> Result<CompareReport, ExperimentError> {
    if plan.variants.len() < 2 {
        return Err(ExperimentError::Invalid("compare needs at least two policies".into()));
    }
    plan.validate()?;
    let mut rows = Vec::new();
    for (i, v) in plan.variants.iter().enumerate() {
        let run = run_plan_variant(plan, i, opts)?;
        each(&run)?;
        rows.push(CompareRow {
            label: v.label.clone(),
            policy: v.policy,
            coordination: run.per_replication(|r| r.group(group).mean_coordination_hours),
            delay: run.per_replication(|r| r.group(group).mean_delay_hours),
        });
    }
    let coord: Vec<&[f64]> = rows.iter().map(|r| &r.coordination[..]).collect();
    let delay: Vec<&[f64]> = rows.iter().map(|r| &r.delay[..]).collect();
    let mut pairs = Vec::new();
    for (metric, samples) in [("coordination", &coord), ("delay", &delay)] {
        if samples.iter().any(|s| s.is_empty()) {
            continue;
        }
        for pr in pairwise_compare(samples)? {
            pairs.push(PairRow {
                metric,
                a: rows[pr.i].label.clone(),
                b: rows[pr.j].label.clone(),
                u: pr.test.statistic,
                p: pr.test.p_value,
                p_bonferroni: pr.adjusted_p,
                welch_p: welch_t_test(samples[pr.i], samples[pr.j]).ok().map(|w| w.test.p_value),
            });
        }
    }
    Ok(CompareReport {
        group,
        kruskal_coordination: kw_or_none(&coord),
        kruskal_delay: kw_or_none(&delay),
        rows,
        pairs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Rate,
    Los,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Rate => "rate",
            SweepAxis::Los => "los",
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "rate" => Ok(SweepAxis::Rate),
            "los" => Ok(SweepAxis::Los),
            other => Err(format!("unknown sweep axis `{other}` (rate, los)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub multiplier: f64,
    pub label: String,
    pub coordination: Vec<f64>,
    pub delay: Vec<f64>,
    pub distance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub group: MetricGroup,
    pub points: Vec<SweepPoint>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "axis,multiplier,label,replications,mean_coordination_hours,coordination_ci95,\
             mean_delay_hours,delay_ci95,mean_distance_miles,distance_ci95\n",
        );
        for p in &self.points {
            let (c, d, m) = (Estimate::of(&p.coordination), Estimate::of(&p.delay), Estimate::of(&p.distance));
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                self.axis.name(),
                p.multiplier,
                p.label,
                p.coordination.len(),
                cell(c.mean),
                cell(c.ci95),
                cell(d.mean),
                cell(d.ci95),
                cell(m.mean),
                cell(m.ci95)
            );
        }
        s
    }
}

pub fn sweep_plan(base: &ScenarioConfig, axis: SweepAxis, grid: &[f64], crn: bool) -> Result<ExperimentPlan, ExperimentError> {
    if grid.is_empty() {
        return Err(ExperimentError::Invalid("sweep grid is empty".into()));
    }
    if let Some(bad) = grid.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
        return Err(ExperimentError::Invalid(format!("sweep multipliers must be > 0, got {bad}")));
    }
    let variants = grid
        .iter()
        .map(|&g| {
            let mut v = Variant::of(base, format!("{}-{g}", axis.name()));
            match axis {
                SweepAxis::Rate => v.rate_multiplier = g,
                SweepAxis::Los => v.los_multiplier = g,
            }
            v
        })
        .collect();
    Ok(ExperimentPlan { base: base.clone(), variants, crn })
}

/// One replicated run per grid multiplier. Coordination, delay and travel
/// distance are per-replication means over `group`.
pub fn sweep(
    plan: &ExperimentPlan,
    axis: SweepAxis,
    group: MetricGroup,
    opts: RunOptions,
    mut each: impl FnMut(&VariantRun) -> Result<(), ExperimentError>,
) -> Result<SweepReport, ExperimentError> {
    plan.validate()?;
    let mut points = Vec::new();
    for (i, v) in plan.variants.iter().enumerate() {
        let run = run_plan_variant(plan, i, opts)?;
        each(&run)?;
        points.push(SweepPoint {
            multiplier: match axis {
                SweepAxis::Rate => v.rate_multiplier,
                SweepAxis::Los => v.los_multiplier,
            },
            label: v.label.clone(),
            coordination: run.per_replication(|r| r.group(group).mean_coordination_hours),
            delay: run.per_replication(|r| r.group(group).mean_delay_hours),
            distance: run.per_replication(|r| r.group(group).mean_distance_miles),
        });
    }
    Ok(SweepReport { axis, group, points })
}

pub fn write_text(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    write_file(path, contents)
}
