//! Scenario parameters from reference-hospital logs and annual survey tables:
//! weekday admission proportions, ED and direct-admission rates, mean length
//! of stay, review times and acceptance probabilities.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate, NaiveDateTime};

use crate::num::mean;
use crate::scenario::{ScenarioConfig, Weekday, HOURS_PER_DAY};

pub const DAYS_PER_YEAR: f64 = 365.0;

pub type WeekdayRates = BTreeMap<Weekday, f64>;

#[derive(Debug, thiserror::Error)]
pub enum EstimateError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {message}")]
    Csv { path: PathBuf, line: u64, message: String },
    #[error("log has no rows")]
    EmptyLog,
    #[error("log spans {days} days; at least 7 are needed")]
    ShortSpan { days: i64 },
    #[error("facility `{0}` has no survey row")]
    MissingFacility(String),
    #[error("reference unit `{0}` has no survey row")]
    MissingReferenceUnit(String),
    #[error("reference unit `{0}` reports zero admissions")]
    ZeroReferenceVolume(String),
    #[error("unit `{0}` reports zero admissions")]
    ZeroAdmissions(String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefEdRow {
    pub timestamp: NaiveDateTime,
    pub needs_ip: bool,
}

/// Reference ED arrivals plus its mean daily registrations.
#[derive(Debug, Clone, PartialEq)]
pub struct RefEdLog {
    pub rows: Vec<RefEdRow>,
    pub n_rf_ed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HccisRow {
    pub facility_id: String,
    pub annual_ed_registrations: u64,
    pub unit_id: Option<String>,
    pub annual_admissions: u64,
    pub annual_patient_days: u64,
    pub beds: u32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HccisTable {
    pub rows: Vec<HccisRow>,
}

impl HccisTable {
    pub fn ed_registrations(&self, facility_id: &str) -> Option<u64> {
        self.rows
            .iter()
            .filter(|r| r.facility_id == facility_id)
            .map(|r| r.annual_ed_registrations)
            .max()
    }

    pub fn unit(&self, unit_id: &str) -> Option<&HccisRow> {
        self.rows.iter().find(|r| r.unit_id.as_deref() == Some(unit_id))
    }

    pub fn unit_rows(&self) -> impl Iterator<Item = (&str, &HccisRow)> {
        self.rows.iter().filter_map(|r| r.unit_id.as_deref().map(|u| (u, r)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Accept,
    Reject,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferRow {
    pub patient_id: String,
    pub facility_id: String,
    /// Hours on any fixed origin.
    pub t1: f64,
    pub t2: f64,
    pub decision: Decision,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransferLog {
    pub rows: Vec<TransferRow>,
}

/// `rho[d]` = mean daily needs-IP arrivals on weekday `d` divided by `n_rf_ed`.
/// Every calendar date between the first and last arrival counts, including
/// dates with no arrivals.
pub fn estimate_ed_proportions(log: &RefEdLog) -> Result<WeekdayRates, EstimateError> {
    if !(log.n_rf_ed.is_finite() && log.n_rf_ed > 0.0) {
        return Err(EstimateError::Invalid("mean daily ED registrations must be > 0".into()));
    }
    let first = log.rows.iter().map(|r| r.timestamp.date()).min().ok_or(EstimateError::EmptyLog)?;
    let last = log.rows.iter().map(|r| r.timestamp.date()).max().unwrap();
    let span = (last - first).num_days() + 1;
    if span < 7 {
        return Err(EstimateError::ShortSpan { days: span });
    }
    let mut counts: BTreeMap<NaiveDate, u64> = BTreeMap::new();
    for r in log.rows.iter().filter(|r| r.needs_ip) {
        *counts.entry(r.timestamp.date()).or_default() += 1;
    }
    let mut per_day: BTreeMap<Weekday, Vec<f64>> = BTreeMap::new();
    for date in first.iter_days().take(span as usize) {
        let n = counts.get(&date).copied().unwrap_or(0) as f64;
        per_day.entry(Weekday::from_chrono(date.weekday())).or_default().push(n);
    }
    let means: WeekdayRates = per_day
        .into_iter()
        .map(|(d, xs)| (d, mean(&xs).unwrap_or(0.0)))
        .collect();
    proportions_from_means(&means, log.n_rf_ed)
}

/// Same ratio starting from already-averaged daily counts.
pub fn proportions_from_means(means: &WeekdayRates, n_rf_ed: f64) -> Result<WeekdayRates, EstimateError> {
    if !(n_rf_ed.is_finite() && n_rf_ed > 0.0) {
        return Err(EstimateError::Invalid("mean daily ED registrations must be > 0".into()));
    }
    let mut out = WeekdayRates::new();
    for d in Weekday::ALL {
        let rho = means.get(&d).copied().unwrap_or(0.0) / n_rf_ed;
        if !(0.0..=1.0).contains(&rho) {
            return Err(EstimateError::Invalid(format!("proportion for {} is {rho}, outside [0, 1]", d.name())));
        }
        out.insert(d, rho);
    }
    Ok(out)
}

/// `lambda[k][d] = rho[d] * registrations_k / 365` for each facility in `eds`.
pub fn estimate_ed_rates(
    props: &WeekdayRates,
    hccis: &HccisTable,
    eds: &[&str],
) -> Result<BTreeMap<String, WeekdayRates>, EstimateError> {
    let mut out = BTreeMap::new();
    for &k in eds {
        let reg = hccis.ed_registrations(k).ok_or_else(|| EstimateError::MissingFacility(k.to_string()))?;
        let daily = reg as f64 / DAYS_PER_YEAR;
        let rates = Weekday::ALL
            .iter()
            .map(|&d| (d, props.get(&d).copied().unwrap_or(0.0) * daily))
            .collect();
        out.insert(k.to_string(), rates);
    }
    Ok(out)
}

/// Direct-admission rate per unit, scaled from the reference unit's rate by
/// annual admissions.
pub fn estimate_non_ed_rate(
    hccis: &HccisTable,
    ref_daily_non_ed: f64,
    ref_unit: &str,
) -> Result<BTreeMap<String, f64>, EstimateError> {
    let r = hccis
        .unit(ref_unit)
        .ok_or_else(|| EstimateError::MissingReferenceUnit(ref_unit.to_string()))?;
    if r.annual_admissions == 0 {
        return Err(EstimateError::ZeroReferenceVolume(ref_unit.to_string()));
    }
    let n_ref = r.annual_admissions as f64 / DAYS_PER_YEAR;
    Ok(hccis
        .unit_rows()
        .map(|(u, row)| {
            let n_f = row.annual_admissions as f64 / DAYS_PER_YEAR;
            (u.to_string(), ref_daily_non_ed * n_f / n_ref)
        })
        .collect())
}

/// Mean length of stay in hours: patient days times 24 over admissions.
pub fn estimate_mean_los(hccis: &HccisTable) -> Result<BTreeMap<String, f64>, EstimateError> {
    let mut out = BTreeMap::new();
    for (u, row) in hccis.unit_rows() {
        if row.annual_admissions == 0 {
            return Err(EstimateError::ZeroAdmissions(u.to_string()));
        }
        out.insert(
            u.to_string(),
            row.annual_patient_days as f64 * HOURS_PER_DAY / row.annual_admissions as f64,
        );
    }
    Ok(out)
}

/// Mean response gap per facility. Each row is one contact, so repeated
/// contacts by the same patient count separately.
pub fn estimate_review_times(log: &TransferLog) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for r in &log.rows {
        let e = acc.entry(r.facility_id.as_str()).or_default();
        e.0 += r.t2 - r.t1;
        e.1 += 1;
    }
    acc.into_iter().map(|(h, (s, n))| (h.to_string(), s / n as f64)).collect()
}

/// Accepted over contacted, per facility.
pub fn estimate_accept_prob(log: &TransferLog) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for r in &log.rows {
        let e = acc.entry(r.facility_id.as_str()).or_default();
        e.0 += usize::from(r.decision == Decision::Accept);
        e.1 += 1;
    }
    acc.into_iter().map(|(h, (a, n))| (h.to_string(), a as f64 / n as f64)).collect()
}

/// Estimator outputs available for an overlay. Empty maps mean "not estimated".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Estimates {
    /// Keyed by facility id.
    pub ed_rates: BTreeMap<String, WeekdayRates>,
    /// Keyed by unit id.
    pub non_ed_rates: BTreeMap<String, f64>,
    pub mean_los: BTreeMap<String, f64>,
    pub beds: BTreeMap<String, u32>,
    /// Keyed by facility id.
    pub review_hours: BTreeMap<String, f64>,
    pub accept_prob: BTreeMap<String, f64>,
    pub reference_unit: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Estimated,
    Default,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Estimated => "estimated",
            Source::Default => "default",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub entity: String,
    pub parameter: &'static str,
    pub source: Source,
    pub value: String,
}

/// A unit or ED parameter that fell back to a default.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CoverageGap {
    pub entity: String,
    pub parameter: &'static str,
}

impl fmt::Display for CoverageGap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} not estimated, default applied", self.entity, self.parameter)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOverlay {
    pub config: ScenarioConfig,
    pub provenance: Vec<Provenance>,
    pub gaps: Vec<CoverageGap>,
}

impl ScenarioOverlay {
    pub fn defaults_used(&self) -> usize {
        self.provenance.iter().filter(|p| p.source == Source::Default).count()
    }
}

/// Merges estimates into `roster`. Review time and acceptance probability
/// default to the mean over estimated facilities (or the roster value when
/// nothing was estimated); other parameters keep the roster value.
pub fn build_scenario_params(roster: &ScenarioConfig, est: &Estimates) -> ScenarioOverlay {
    let mut cfg = roster.clone();
    let mut provenance = Vec::new();
    let mut gaps = Vec::new();
    let regional = |m: &BTreeMap<String, f64>| {
        let v: Vec<f64> = m.values().copied().collect();
        mean(&v)
    };
    let mean_review = regional(&est.review_hours);
    let mean_gamma = regional(&est.accept_prob);

    let mut note = |entity: &str, parameter: &'static str, found: bool, value: String| {
        let source = if found { Source::Estimated } else { Source::Default };
        if !found {
            gaps.push(CoverageGap { entity: entity.to_string(), parameter });
        }
        provenance.push(Provenance { entity: entity.to_string(), parameter, source, value });
    };

    for fac in &mut cfg.facilities {
        if let Some(ed) = fac.ed.as_mut() {
            let rates = est.ed_rates.get(&fac.facility_id);
            if let Some(r) = rates {
                ed.daily_rates = r.clone();
            }
            let shown = Weekday::ALL
                .iter()
                .map(|d| format!("{:.4}", ed.rate_on(*d)))
                .collect::<Vec<_>>()
                .join(" ");
            note(&ed.ed_id, "daily_rates", rates.is_some(), shown);
        }
        for unit in &mut fac.ip_units {
            let id = unit.unit_id.clone();
            let fid = &unit.facility_id;

            let v = est.non_ed_rates.get(&id).copied();
            unit.non_ed_rate = v.unwrap_or(unit.non_ed_rate);
            note(&id, "non_ed_rate", v.is_some(), unit.non_ed_rate.to_string());

            let v = est.mean_los.get(&id).copied();
            unit.mean_los_hours = v.unwrap_or(unit.mean_los_hours);
            note(&id, "mean_los_hours", v.is_some(), unit.mean_los_hours.to_string());

            let v = est.beds.get(&id).copied().filter(|&b| b > 0);
            unit.bed_count = v.unwrap_or(unit.bed_count);
            note(&id, "bed_count", v.is_some(), unit.bed_count.to_string());

            let v = est.review_hours.get(fid).copied();
            unit.mean_review_hours = v.or(mean_review).unwrap_or(unit.mean_review_hours);
            note(&id, "mean_review_hours", v.is_some(), unit.mean_review_hours.to_string());

            let v = est.accept_prob.get(fid).copied();
            unit.accept_prob = v.or(mean_gamma).unwrap_or(unit.accept_prob);
            note(&id, "accept_prob", v.is_some(), unit.accept_prob.to_string());
        }
    }

    let ref_los = est.reference_unit.as_ref().and_then(|u| est.mean_los.get(u)).copied();
    cfg.dists.reference_mean_los = ref_los.unwrap_or(cfg.dists.reference_mean_los);
    note("dists", "reference_mean_los", ref_los.is_some(), cfg.dists.reference_mean_los.to_string());

    ScenarioOverlay { config: cfg, provenance, gaps }
}

/// Writes `entity,parameter,source,value` rows.
pub fn write_provenance(overlay: &ScenarioOverlay, path: &Path) -> Result<(), EstimateError> {
    let io = |e: std::io::Error| EstimateError::Io { path: path.to_path_buf(), source: e };
    let mut w = csv::Writer::from_path(path).map_err(|e| io(e.into()))?;
    let mut write = |rec: [&str; 4]| w.write_record(rec).map_err(|e| io(e.into()));
    write(["entity", "parameter", "source", "value"])?;
    for p in &overlay.provenance {
        write([&p.entity, p.parameter, &p.source.to_string(), &p.value])?;
    }
    w.flush().map_err(io)
}

fn open_csv(path: &Path, header: &[&str]) -> Result<csv::Reader<std::fs::File>, EstimateError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, 1, e.to_string()))?;
    let got: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_err(path, 1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if got != header {
        return Err(csv_err(path, 1, format!("expected header `{}`", header.join(","))));
    }
    Ok(rdr)
}

fn csv_err(path: &Path, line: u64, message: String) -> EstimateError {
    EstimateError::Csv { path: path.to_path_buf(), line, message }
}

fn records(
    path: &Path,
    header: &[&str],
) -> Result<Vec<(u64, csv::StringRecord)>, EstimateError> {
    let mut rdr = open_csv(path, header)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            csv_err(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        out.push((line, rec));
    }
    Ok(out)
}

const TIMESTAMP_FORMATS: [&str; 4] = ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"];

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

/// A timestamp or a plain number of hours.
fn parse_hours(s: &str) -> Option<f64> {
    if let Ok(h) = s.parse::<f64>() {
        return h.is_finite().then_some(h);
    }
    parse_timestamp(s).map(|t| t.and_utc().timestamp() as f64 / 3600.0)
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "y" => Some(true),
        "0" | "false" | "no" | "n" => Some(false),
        _ => None,
    }
}

/// `timestamp,needs_ip`
pub fn read_ref_ed_log(path: &Path, n_rf_ed: f64) -> Result<RefEdLog, EstimateError> {
    let mut rows = Vec::new();
    for (line, rec) in records(path, &["timestamp", "needs_ip"])? {
        let timestamp = parse_timestamp(&rec[0])
            .ok_or_else(|| csv_err(path, line, format!("bad timestamp `{}`", &rec[0])))?;
        let needs_ip = parse_bool(&rec[1]).ok_or_else(|| csv_err(path, line, format!("bad needs_ip `{}`", &rec[1])))?;
        rows.push(RefEdRow { timestamp, needs_ip });
    }
    Ok(RefEdLog { rows, n_rf_ed })
}

/// `patient_id,facility_id,t1,t2,decision`
pub fn read_transfer_log(path: &Path) -> Result<TransferLog, EstimateError> {
    let mut rows = Vec::new();
    for (line, rec) in records(path, &["patient_id", "facility_id", "t1", "t2", "decision"])? {
        let t1 = parse_hours(&rec[2]).ok_or_else(|| csv_err(path, line, format!("bad t1 `{}`", &rec[2])))?;
        let t2 = parse_hours(&rec[3]).ok_or_else(|| csv_err(path, line, format!("bad t2 `{}`", &rec[3])))?;
        if t2 < t1 {
            return Err(csv_err(path, line, "t2 precedes t1".into()));
        }
        let decision = match rec[4].to_ascii_lowercase().as_str() {
            "accept" => Decision::Accept,
            "reject" => Decision::Reject,
            other => return Err(csv_err(path, line, format!("bad decision `{other}`"))),
        };
        rows.push(TransferRow {
            patient_id: rec[0].to_string(),
            facility_id: rec[1].to_string(),
            t1,
            t2,
            decision,
        });
    }
    Ok(TransferLog { rows })
}

/// `facility_id,annual_ed_registrations,unit_id,annual_admissions,annual_patient_days,beds`;
/// unit fields are empty on rows for facilities without a unit.
pub fn read_hccis(path: &Path) -> Result<HccisTable, EstimateError> {
    let header = [
        "facility_id",
        "annual_ed_registrations",
        "unit_id",
        "annual_admissions",
        "annual_patient_days",
        "beds",
    ];
    let mut rows = Vec::new();
    let mut seen_units = BTreeSet::new();
    for (line, rec) in records(path, &header)? {
        let int = |i: usize| -> Result<u64, EstimateError> {
            if rec[i].is_empty() {
                return Ok(0);
            }
            rec[i]
                .parse()
                .map_err(|_| csv_err(path, line, format!("{}: expected a nonnegative integer, got `{}`", header[i], &rec[i])))
        };
        let unit_id = (!rec[2].is_empty()).then(|| rec[2].to_string());
        if let Some(u) = &unit_id {
            if !seen_units.insert(u.clone()) {
                return Err(csv_err(path, line, format!("duplicate unit `{u}`")));
            }
        }
        let row = HccisRow {
            facility_id: rec[0].to_string(),
            annual_ed_registrations: int(1)?,
            unit_id,
            annual_admissions: int(3)?,
            annual_patient_days: int(4)?,
            beds: u32::try_from(int(5)?).map_err(|_| csv_err(path, line, "beds out of range".into()))?,
        };
        if row.annual_patient_days > 0 && row.annual_admissions == 0 {
            return Err(csv_err(path, line, "patient days without admissions".into()));
        }
        rows.push(row);
    }
    Ok(HccisTable { rows })
}
