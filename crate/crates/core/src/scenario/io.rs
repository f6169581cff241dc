use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    validate_scenario, AgeGroup, DistributionSpec, Facility, ScenarioConfig, TravelLeg,
    TravelMatrix, Triangular, Violation,
};
use crate::flow::PlacementPolicy;

const TRAVEL_HEADER: [&str; 4] = ["ed_id", "unit_id", "drive_hours", "distance_miles"];
const LOS_HEADER: [&str; 1] = ["los_hours"];

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: parse error: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: line {line}: {message}")]
    Csv {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("invalid scenario: {}", format_violations(.0))]
    Validation(Vec<Violation>),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

fn default_horizon() -> u32 {
    ScenarioConfig::DEFAULT_HORIZON_DAYS
}
fn default_warmup() -> u32 {
    ScenarioConfig::DEFAULT_WARMUP_DAYS
}
fn default_replications() -> u32 {
    ScenarioConfig::DEFAULT_REPLICATIONS
}
fn one() -> f64 {
    1.0
}
fn default_travel_file() -> String {
    "travel.csv".into()
}
fn default_los_file() -> String {
    "los_samples.csv".into()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistsFile {
    reference_mean_los: f64,
    alpha_triangular: Triangular,
    age_mix: BTreeMap<AgeGroup, f64>,
}

/// On-disk layout of `scenario.toml`. Large tables live in CSV side files
/// resolved relative to the scenario file.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default = "default_horizon")]
    horizon_days: u32,
    #[serde(default = "default_warmup")]
    warmup_days: u32,
    #[serde(default = "default_replications")]
    replications: u32,
    #[serde(default)]
    seed: u64,
    #[serde(default = "one")]
    rate_multiplier: f64,
    #[serde(default = "one")]
    los_multiplier: f64,
    #[serde(default = "default_travel_file")]
    travel_file: String,
    #[serde(default = "default_los_file")]
    los_samples_file: String,
    #[serde(default)]
    policy: PlacementPolicy,
    dists: DistsFile,
    facilities: Vec<Facility>,
}

fn read_text(path: &Path) -> Result<String, ScenarioError> {
    fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_error(path: &Path, err: &csv::Error) -> ScenarioError {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    ScenarioError::Csv {
        path: path.to_path_buf(),
        line,
        message: err.to_string(),
    }
}

fn open_csv(path: &Path, expected: &[&str]) -> Result<csv::Reader<fs::File>, ScenarioError> {
    let file = fs::File::open(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = rdr.headers().map_err(|e| csv_error(path, &e))?;
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(ScenarioError::Csv {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header `{}`", expected.join(",")),
        });
    }
    Ok(rdr)
}

#[derive(Debug, Serialize, Deserialize)]
struct TravelRow {
    ed_id: String,
    unit_id: String,
    drive_hours: f64,
    distance_miles: f64,
}

pub fn read_travel(path: &Path) -> Result<TravelMatrix, ScenarioError> {
    let mut rdr = open_csv(path, &TRAVEL_HEADER)?;
    let mut matrix = TravelMatrix::new();
    for row in rdr.deserialize::<TravelRow>() {
        let row = row.map_err(|e| csv_error(path, &e))?;
        if matrix.get(&row.ed_id, &row.unit_id).is_some() {
            return Err(ScenarioError::Parse {
                path: path.to_path_buf(),
                message: format!("duplicate travel row for ({}, {})", row.ed_id, row.unit_id),
            });
        }
        matrix.insert(
            row.ed_id,
            row.unit_id,
            TravelLeg {
                drive_hours: row.drive_hours,
                distance_miles: row.distance_miles,
            },
        );
    }
    Ok(matrix)
}

#[derive(Debug, Serialize, Deserialize)]
struct LosRow {
    los_hours: f64,
}

pub fn read_los_samples(path: &Path) -> Result<Vec<f64>, ScenarioError> {
    let mut rdr = open_csv(path, &LOS_HEADER)?;
    rdr.deserialize::<LosRow>()
        .map(|r| r.map(|r| r.los_hours).map_err(|e| csv_error(path, &e)))
        .collect()
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_write_err(path: &Path, e: csv::Error) -> ScenarioError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => ScenarioError::Parse {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

pub fn write_travel(path: &Path, travel: &TravelMatrix) -> Result<(), ScenarioError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_write_err(path, e))?;
    for (ed, unit, leg) in travel.iter() {
        w.serialize(TravelRow {
            ed_id: ed.to_string(),
            unit_id: unit.to_string(),
            drive_hours: leg.drive_hours,
            distance_miles: leg.distance_miles,
        })
        .map_err(|e| csv_write_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_los_samples(path: &Path, samples: &[f64]) -> Result<(), ScenarioError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_write_err(path, e))?;
    for &s in samples {
        w.serialize(LosRow { los_hours: s })
            .map_err(|e| csv_write_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

/// Reads `scenario.toml` and its CSV side files, then validates the result.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig, ScenarioError> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let file: ScenarioFile = toml::from_str(&text).map_err(|e| ScenarioError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let travel = read_travel(&base.join(&file.travel_file))?;
    let los_samples = read_los_samples(&base.join(&file.los_samples_file))?;

    let cfg = ScenarioConfig {
        facilities: file.facilities,
        travel,
        dists: DistributionSpec {
            los_samples,
            reference_mean_los: file.dists.reference_mean_los,
            alpha_triangular: file.dists.alpha_triangular,
            age_mix: file.dists.age_mix,
        },
        horizon_days: file.horizon_days,
        warmup_days: file.warmup_days,
        replications: file.replications,
        policy: file.policy,
        seed: file.seed,
        rate_multiplier: file.rate_multiplier,
        los_multiplier: file.los_multiplier,
    };
    let violations = validate_scenario(&cfg);
    if !violations.is_empty() {
        return Err(ScenarioError::Validation(violations));
    }
    Ok(cfg)
}

/// Writes `scenario.toml`, `travel.csv` and `los_samples.csv` into `dir` and
/// returns the path of the scenario file.
pub fn save_scenario(cfg: &ScenarioConfig, dir: impl AsRef<Path>) -> Result<PathBuf, ScenarioError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let file = ScenarioFile {
        horizon_days: cfg.horizon_days,
        warmup_days: cfg.warmup_days,
        replications: cfg.replications,
        seed: cfg.seed,
        rate_multiplier: cfg.rate_multiplier,
        los_multiplier: cfg.los_multiplier,
        travel_file: default_travel_file(),
        los_samples_file: default_los_file(),
        policy: cfg.policy,
        dists: DistsFile {
            reference_mean_los: cfg.dists.reference_mean_los,
            alpha_triangular: cfg.dists.alpha_triangular,
            age_mix: cfg.dists.age_mix.clone(),
        },
        facilities: cfg.facilities.clone(),
    };
    let text = toml::to_string(&file).map_err(|e| ScenarioError::Parse {
        path: dir.to_path_buf(),
        message: e.to_string(),
    })?;
    let scenario_path = dir.join("scenario.toml");
    fs::write(&scenario_path, text).map_err(io_err(&scenario_path))?;
    write_travel(&dir.join(default_travel_file()), &cfg.travel)?;
    write_los_samples(&dir.join(default_los_file()), &cfg.dists.los_samples)?;
    Ok(scenario_path)
}
