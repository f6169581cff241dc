mod common;

use std::fmt::Write as _;
use std::fs;

use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};

use bedflow::estimators::{
    build_scenario_params, estimate_accept_prob, estimate_ed_proportions, estimate_ed_rates, estimate_mean_los,
    estimate_non_ed_rate, estimate_review_times, read_hccis, read_ref_ed_log, read_transfer_log, write_provenance,
    EstimateError, Estimates, Source,
};
use bedflow::scenario::{validate_scenario, Weekday};

fn full_estimates() -> Estimates {
    let cfg = common::small_region();
    let mut est = Estimates::default();
    for (fac, _) in cfg.eds() {
        est.ed_rates.insert(fac.facility_id.clone(), Weekday::ALL.iter().map(|&d| (d, 1.25)).collect());
    }
    for f in &cfg.facilities {
        est.review_hours.insert(f.facility_id.clone(), 2.0);
        est.accept_prob.insert(f.facility_id.clone(), 0.5);
    }
    for u in cfg.units() {
        est.non_ed_rates.insert(u.unit_id.clone(), 0.2);
        est.mean_los.insert(u.unit_id.clone(), 100.0);
        est.beds.insert(u.unit_id.clone(), 7);
    }
    est.reference_unit = Some("A-ADULT".into());
    est
}

#[test]
fn full_coverage_uses_no_defaults() {
    let overlay = build_scenario_params(&common::small_region(), &full_estimates());
    assert_eq!(overlay.defaults_used(), 0);
    assert!(overlay.gaps.is_empty());
    assert!(validate_scenario(&overlay.config).is_empty());
    assert_eq!(overlay.config.dists.reference_mean_los, 100.0);
    for u in overlay.config.units() {
        assert_eq!((u.bed_count, u.accept_prob, u.mean_review_hours), (7, 0.5, 2.0));
    }
}

#[test]
fn missing_facility_gets_regional_mean_and_a_flag() {
    let mut est = full_estimates();
    est.review_hours.insert("A".into(), 1.0);
    est.review_hours.remove("C");
    est.accept_prob.insert("A".into(), 0.2);
    est.accept_prob.remove("C");
    let overlay = build_scenario_params(&common::small_region(), &est);
    let c = overlay.config.units().find(|u| u.unit_id == "C-YOUTH").unwrap();
    // mean over A, B, D
    assert!((c.mean_review_hours - 5.0 / 3.0).abs() < 1e-12);
    assert!((c.accept_prob - 1.2 / 3.0).abs() < 1e-12);
    let flagged: Vec<_> = overlay.gaps.iter().map(|g| (g.entity.as_str(), g.parameter)).collect();
    assert_eq!(
        flagged,
        [
            ("C-ADULT", "mean_review_hours"),
            ("C-ADULT", "accept_prob"),
            ("C-YOUTH", "mean_review_hours"),
            ("C-YOUTH", "accept_prob"),
        ]
    );
}

#[test]
fn nothing_estimated_keeps_roster_and_flags_everything() {
    let roster = common::small_region();
    let overlay = build_scenario_params(&roster, &Estimates::default());
    assert_eq!(overlay.config, roster);
    let units = roster.units().count();
    let eds = roster.eds().count();
    assert_eq!(overlay.gaps.len(), units * 5 + eds + 1);
    assert!(overlay.provenance.iter().all(|p| p.source == Source::Default));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("provenance.csv");
    write_provenance(&overlay, &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("entity,parameter,source,value\n"));
    assert_eq!(text.lines().count(), overlay.provenance.len() + 1);
}

/// Writes synthetic raw data from known parameters, reads it back through the
/// CSV readers and checks the estimates recover the truth.
#[test]
fn synthetic_raw_data_recovers_parameters() {
    let roster = common::small_region();
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n_rf_ed = 100.0;
    let weeks = 200;
    let profile = [1.0, 3.0, 2.5, 2.5, 2.0, 2.5, 1.5];

    let mut ed = String::from("timestamp,needs_ip\n");
    let start = NaiveDate::from_ymd_opt(2022, 1, 2).unwrap(); // Sunday
    for i in 0..weeks * 7 {
        let date = start + Duration::days(i);
        let n = Poisson::new(profile[(i % 7) as usize]).unwrap().sample(&mut rng) as u32;
        writeln!(ed, "{date} 03:00:00,false").unwrap();
        for k in 0..n {
            writeln!(ed, "{date} {:02}:15:00,true", 8 + k % 12).unwrap();
        }
    }
    fs::write(dir.path().join("ed.csv"), ed).unwrap();

    let truth_gamma = [("A", 0.6), ("C", 0.3), ("D", 0.9)];
    let truth_review = [("A", 1.5), ("C", 3.0), ("D", 0.5)];
    let mut log = String::from("patient_id,facility_id,t1,t2,decision\n");
    for p in 0..3000 {
        let (fid, gamma) = truth_gamma[p % 3];
        let t1 = p as f64 * 0.7;
        let gap = Exp::new(1.0 / truth_review[p % 3].1).unwrap().sample(&mut rng);
        let decision = if rng.random::<f64>() < gamma { "accept" } else { "reject" };
        writeln!(log, "P{p},{fid},{t1},{},{decision}", t1 + gap).unwrap();
    }
    fs::write(dir.path().join("transfers.csv"), log).unwrap();

    let hccis = "facility_id,annual_ed_registrations,unit_id,annual_admissions,annual_patient_days,beds\n\
                 A,36500,A-ADULT,730,2920,8\n\
                 A,36500,A-YOUTH,365,1825,4\n\
                 B,18250,,,,\n\
                 C,27375,C-ADULT,1460,4380,10\n\
                 D,0,D-ALL,365,1460,6\n";
    fs::write(dir.path().join("hccis.csv"), hccis).unwrap();

    let ed_log = read_ref_ed_log(&dir.path().join("ed.csv"), n_rf_ed).unwrap();
    let transfers = read_transfer_log(&dir.path().join("transfers.csv")).unwrap();
    let table = read_hccis(&dir.path().join("hccis.csv")).unwrap();

    let rho = estimate_ed_proportions(&ed_log).unwrap();
    for d in Weekday::ALL {
        assert!((rho[&d] * n_rf_ed - profile[d.index()]).abs() < 0.4, "{d:?}");
    }
    let ed_rates = estimate_ed_rates(&rho, &table, &["A", "B", "C"]).unwrap();
    let b_monday = ed_rates["B"][&Weekday::Monday];
    assert!((b_monday - rho[&Weekday::Monday] * 50.0).abs() < 1e-9);

    let review = estimate_review_times(&transfers);
    let gamma = estimate_accept_prob(&transfers);
    for ((fid, g), (_, r)) in truth_gamma.iter().zip(truth_review) {
        assert!((gamma[*fid] - g).abs() < 0.05, "{fid} gamma {}", gamma[*fid]);
        assert!((review[*fid] - r).abs() < 0.15 * r, "{fid} review {}", review[*fid]);
    }

    let los = estimate_mean_los(&table).unwrap();
    assert_eq!(los["A-ADULT"], 96.0);
    assert_eq!(los["C-ADULT"], 72.0);
    let non_ed = estimate_non_ed_rate(&table, 0.5, "A-ADULT").unwrap();
    assert_eq!(non_ed["C-ADULT"], 1.0);
    assert_eq!(non_ed["A-YOUTH"], 0.25);

    let est = Estimates {
        ed_rates,
        non_ed_rates: non_ed,
        mean_los: los,
        beds: table.unit_rows().map(|(u, r)| (u.to_string(), r.beds)).collect(),
        review_hours: review,
        accept_prob: gamma,
        reference_unit: Some("A-ADULT".into()),
    };
    let overlay = build_scenario_params(&roster, &est);
    assert!(validate_scenario(&overlay.config).is_empty());
    // C-YOUTH and D-ADULT have no HCCIS row.
    let gap_units: Vec<_> = overlay.gaps.iter().map(|g| g.entity.as_str()).collect();
    assert!(gap_units.contains(&"C-YOUTH") && gap_units.contains(&"D-ADULT"));
    assert!(!gap_units.contains(&"A-ADULT"));
}

#[test]
fn reader_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    fs::write(&path, "patient_id,facility_id,t1,t2,decision\nP1,A,1,2,accept\nP2,A,5,3,reject\n").unwrap();
    match read_transfer_log(&path).unwrap_err() {
        EstimateError::Csv { line, .. } => assert_eq!(line, 3),
        other => panic!("unexpected {other}"),
    }
    fs::write(&path, "patient_id,facility_id,t1,t2,decision\nP1,A,1,two,accept\n").unwrap();
    let err = read_transfer_log(&path).unwrap_err().to_string();
    assert!(err.contains("line 2") && err.contains("two"), "{err}");

    fs::write(&path, "timestamp,needs_ip\n2023-01-01 00:00:00,true\n").unwrap();
    let log = read_ref_ed_log(&path, 10.0).unwrap();
    assert!(matches!(estimate_ed_proportions(&log), Err(EstimateError::ShortSpan { days: 1 })));
}
