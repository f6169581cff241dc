use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bedflow::estimators::{
    build_scenario_params, estimate_accept_prob, estimate_ed_proportions, estimate_ed_rates, estimate_mean_los,
    estimate_non_ed_rate, estimate_review_times, read_hccis, read_ref_ed_log, read_transfer_log, write_provenance,
    EstimateError, Estimates, HccisTable, DAYS_PER_YEAR,
};
use bedflow::experiments::{
    compare, run_scenario, sweep, sweep_plan, write_text, write_variant, ExperimentError, ExperimentPlan,
    OutputOptions, RunOptions, SweepAxis, Variant,
};
use bedflow::flow::ReplicationSeeds;
use bedflow::metrics::MetricGroup;
use bedflow::scenario::{load_scenario, save_scenario, validate_scenario, ScenarioError};
use bedflow::{PlacementPolicy, ScenarioConfig};

#[derive(Parser)]
#[command(name = "bedflow", version, about = "ED-to-inpatient psychiatric placement simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run replications of one scenario and write its summary.
    Run(RunArgs),
    /// Run several policies and compare them with rank tests.
    Compare(CompareArgs),
    /// Vary the arrival-rate or length-of-stay multiplier over a grid.
    Sweep(SweepArgs),
    /// Estimate scenario parameters from logs and survey tables.
    Estimate(EstimateArgs),
    /// Check a scenario without running it.
    Validate(ValidateArgs),
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    /// baseline, by-acceptance, concurrent-proximity or concurrent-acceptance
    #[arg(long)]
    policy: Option<String>,
    /// Concurrent requests per round
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    replications: Option<u32>,
    #[arg(long)]
    horizon_days: Option<u32>,
    #[arg(long)]
    warmup_days: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rate_multiplier: Option<f64>,
    #[arg(long)]
    los_multiplier: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write patients.csv
    #[arg(long)]
    patient_log: bool,
    /// Also write per-replication event traces
    #[arg(long)]
    trace: bool,
    /// Share random streams across variants
    #[arg(long)]
    crn: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated `name` or `name:m`, e.g. baseline,concurrent-proximity:2
    #[arg(long, value_delimiter = ',', required = true)]
    policies: Vec<String>,
    /// Patient group compared, e.g. vulnerable-transferred, all, adult-internal
    #[arg(long, default_value = "vulnerable-transferred")]
    group: String,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    axis: String,
    /// Comma-separated multipliers (1.0 = baseline) or percentages such as 50%
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.75,1.0,1.25,1.5")]
    grid: Vec<String>,
    #[arg(long, default_value = "vulnerable-transferred")]
    group: String,
}

#[derive(Args)]
struct EstimateArgs {
    /// Roster scenario whose parameters are overwritten by the estimates
    #[arg(long)]
    scenario: PathBuf,
    /// `timestamp,needs_ip` rows from the reference ED
    #[arg(long)]
    ed_log: Option<PathBuf>,
    /// `patient_id,facility_id,t1,t2,decision`
    #[arg(long)]
    transfer_log: Option<PathBuf>,
    /// Annual survey table
    #[arg(long)]
    hccis: Option<PathBuf>,
    /// Defaults to the roster's reference facility
    #[arg(long)]
    reference_facility: Option<String>,
    /// Defaults to the reference facility's first unit
    #[arg(long)]
    reference_unit: Option<String>,
    /// Direct admissions per day at the reference unit
    #[arg(long)]
    ref_non_ed_rate: Option<f64>,
    /// Mean daily ED registrations at the reference facility; defaults to
    /// the survey's annual registrations over 365
    #[arg(long)]
    n_rf_ed: Option<f64>,
    #[arg(long, default_value = "out/estimated")]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    scenario: PathBuf,
}

enum Failure {
    Input(String),
    Runtime(String),
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<EstimateError> for Failure {
    fn from(e: EstimateError) -> Self {
        Failure::Input(e.to_string())
    }
}

fn input<T>(r: Result<T, String>) -> Result<T, Failure> {
    r.map_err(Failure::Input)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// Loads the scenario and applies command-line overrides, then re-validates.
fn load(c: &Common) -> Result<ScenarioConfig, Failure> {
    let mut cfg = load_scenario(&c.scenario)?;
    if let Some(name) = &c.policy {
        cfg.policy = input(PlacementPolicy::from_name(name, c.m))?;
    }
    if let Some(m) = c.m {
        cfg.policy = match cfg.policy {
            PlacementPolicy::ConcurrentProximity { .. } => PlacementPolicy::ConcurrentProximity { m },
            PlacementPolicy::ConcurrentAcceptance { .. } => PlacementPolicy::ConcurrentAcceptance { m },
            p => return Err(Failure::Input(format!("--m does not apply to policy `{p}`"))),
        };
    }
    if let Some(v) = c.replications {
        cfg.replications = v;
    }
    if let Some(v) = c.horizon_days {
        cfg.horizon_days = v;
    }
    if let Some(v) = c.warmup_days {
        cfg.warmup_days = v;
    }
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(v) = c.rate_multiplier {
        cfg.rate_multiplier = v;
    }
    if let Some(v) = c.los_multiplier {
        cfg.los_multiplier = v;
    }
    let violations = validate_scenario(&cfg);
    if !violations.is_empty() {
        return Err(ExperimentError::Validation(violations).into());
    }
    Ok(cfg)
}

fn output_opts(c: &Common) -> OutputOptions {
    OutputOptions {
        patient_log: c.patient_log,
        trace: c.trace,
    }
}

fn cmd_run(a: RunArgs) -> Result<(), Failure> {
    let c = &a.common;
    let cfg = load(c)?;
    let label = cfg.policy.to_string();
    eprintln!("running {} replications of {label}", cfg.replications);
    let run = run_scenario(&cfg, &label, ReplicationSeeds::uniform(cfg.seed), RunOptions { trace: c.trace })?;
    let dir = write_variant(&run, &c.out.join("run"), output_opts(c))?;
    print_headline(&run.reports.pooled);
    println!("wrote {}", dir.display());
    Ok(())
}

fn print_headline(r: &bedflow::SummaryReport) {
    use bedflow::metrics::{Cohort, Route};
    let f = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into());
    println!("{}", r.label);
    for cohort in Cohort::ALL {
        let cs = r.cohort(cohort);
        let t = cs.route(Route::Transferred);
        println!(
            "  {:<10} accepted {:>8}  transferred {:>6}%  delay {:>8} h  transferred delay {:>8} h  censored {}",
            cohort.name(),
            cs.accepted,
            f(cs.pct_transferred),
            f(cs.route(Route::Any).mean_delay_hours),
            f(t.mean_delay_hours),
            cs.censored
        );
    }
    println!("  occupancy {}", f(r.occupancy_overall));
}

fn parse_policy_spec(s: &str) -> Result<PlacementPolicy, String> {
    s.trim().parse()
}

fn cmd_compare(a: CompareArgs) -> Result<(), Failure> {
    let c = &a.common;
    let cfg = load(c)?;
    let group: MetricGroup = input(a.group.parse())?;
    let policies = a
        .policies
        .iter()
        .map(|s| parse_policy_spec(s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(Failure::Input)?;
    if policies.len() < 2 {
        return Err(Failure::Input("compare needs at least two policies in --policies".into()));
    }
    let variants = policies
        .iter()
        .map(|p| Variant {
            label: p.to_string(),
            policy: *p,
            rate_multiplier: cfg.rate_multiplier,
            los_multiplier: cfg.los_multiplier,
        })
        .collect();
    let plan = ExperimentPlan { base: cfg, variants, crn: c.crn };
    let dir = c.out.join("compare");
    let opts = output_opts(c);
    let report = compare(&plan, group, RunOptions { trace: c.trace }, |run| {
        eprintln!("finished {}", run.label);
        write_variant(run, &dir, opts).map(|_| ())
    })?;
    write_text(&dir.join("comparison.csv"), &report.to_csv())?;
    let text = report.to_text();
    write_text(&dir.join("comparison.txt"), &text)?;
    print!("{text}");
    println!("wrote {}", dir.display());
    Ok(())
}

fn parse_grid(values: &[String]) -> Result<Vec<f64>, String> {
    values
        .iter()
        .map(|v| {
            let v = v.trim();
            let parsed = match v.strip_suffix('%') {
                Some(pct) => pct.trim().parse::<f64>().map(|x| x / 100.0),
                None => v.parse::<f64>(),
            };
            parsed.map_err(|_| format!("bad grid value `{v}`"))
        })
        .collect()
}

fn cmd_sweep(a: SweepArgs) -> Result<(), Failure> {
    let c = &a.common;
    let cfg = load(c)?;
    let axis: SweepAxis = input(a.axis.parse())?;
    let group: MetricGroup = input(a.group.parse())?;
    let grid = input(parse_grid(&a.grid))?;
    let plan = sweep_plan(&cfg, axis, &grid, c.crn)?;
    let dir = c.out.join(format!("sweep-{}", axis.name()));
    let opts = output_opts(c);
    let report = sweep(&plan, axis, group, RunOptions { trace: c.trace }, |run| {
        eprintln!("finished {}", run.label);
        write_variant(run, &dir, opts).map(|_| ())
    })?;
    let csv = report.to_csv();
    write_text(&dir.join("sweep.csv"), &csv)?;
    print!("{csv}");
    println!("wrote {}", dir.display());
    Ok(())
}

fn cmd_estimate(a: EstimateArgs) -> Result<(), Failure> {
    let roster = load_scenario(&a.scenario)?;
    let hccis = match &a.hccis {
        Some(p) => read_hccis(p)?,
        None => HccisTable::default(),
    };
    let reference_facility = a
        .reference_facility
        .clone()
        .or_else(|| roster.reference_facility().map(|f| f.facility_id.clone()));
    let reference_unit = a.reference_unit.clone().or_else(|| {
        let rf = reference_facility.as_deref()?;
        roster
            .facilities
            .iter()
            .find(|f| f.facility_id == rf)
            .and_then(|f| f.ip_units.first())
            .map(|u| u.unit_id.clone())
    });

    let mut est = Estimates {
        reference_unit: reference_unit.clone(),
        ..Estimates::default()
    };

    if let Some(p) = &a.ed_log {
        let n_rf_ed = match a.n_rf_ed {
            Some(n) => n,
            None => {
                let rf = reference_facility
                    .as_deref()
                    .ok_or_else(|| Failure::Input("no reference facility; pass --reference-facility".into()))?;
                let reg = hccis.ed_registrations(rf).ok_or_else(|| {
                    Failure::Input(format!("no survey registrations for `{rf}`; pass --n-rf-ed"))
                })?;
                reg as f64 / DAYS_PER_YEAR
            }
        };
        let props = estimate_ed_proportions(&read_ref_ed_log(p, n_rf_ed)?)?;
        let eds: Vec<&str> = roster
            .facilities
            .iter()
            .filter(|f| f.has_ed && hccis.ed_registrations(&f.facility_id).is_some())
            .map(|f| f.facility_id.as_str())
            .collect();
        est.ed_rates = estimate_ed_rates(&props, &hccis, &eds)?;
    }
    if a.hccis.is_some() {
        est.mean_los = estimate_mean_los(&hccis)?;
        est.beds = hccis
            .unit_rows()
            .map(|(u, r)| (u.to_string(), r.beds))
            .collect();
        if let Some(rate) = a.ref_non_ed_rate {
            let unit = reference_unit
                .as_deref()
                .ok_or_else(|| Failure::Input("no reference unit; pass --reference-unit".into()))?;
            est.non_ed_rates = estimate_non_ed_rate(&hccis, rate, unit)?;
        }
    }
    if let Some(p) = &a.transfer_log {
        let log = read_transfer_log(p)?;
        est.review_hours = estimate_review_times(&log);
        est.accept_prob = estimate_accept_prob(&log);
    }

    let overlay = build_scenario_params(&roster, &est);
    for gap in &overlay.gaps {
        eprintln!("warning: {gap}");
    }
    let violations = validate_scenario(&overlay.config);
    if !violations.is_empty() {
        return Err(ExperimentError::Validation(violations).into());
    }
    let path = save_scenario(&overlay.config, &a.out).map_err(|e| Failure::Runtime(e.to_string()))?;
    write_provenance(&overlay, &a.out.join("provenance.csv")).map_err(|e| Failure::Runtime(e.to_string()))?;
    println!(
        "wrote {} ({} parameters estimated, {} defaults)",
        path.display(),
        overlay.provenance.len() - overlay.defaults_used(),
        overlay.defaults_used()
    );
    Ok(())
}

fn cmd_validate(a: ValidateArgs) -> Result<(), Failure> {
    let cfg = load_scenario(&a.scenario)?;
    println!(
        "{}: ok ({} facilities, {} units, {} beds, {} travel legs)",
        display(&a.scenario),
        cfg.facilities.len(),
        cfg.units().count(),
        cfg.units().map(|u| u64::from(u.bed_count)).sum::<u64>(),
        cfg.travel.len()
    );
    Ok(())
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
