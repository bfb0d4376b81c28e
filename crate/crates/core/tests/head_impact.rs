//! Golden checks against the published soft-material impact experiment.

use std::fs;
use std::path::PathBuf;

use robust_doe::anova::{one_way_anova, tukey_hsd};
use robust_doe::design::{run_schedule, Plan, ResponseTable};
use robust_doe::optimize::{
    analyze_confirmation, optimal_levels, predict, Combination, ConfirmationRuns, DEFAULT_DELTA_DB,
};
use robust_doe::report::{analyze, factor_groups, AnalysisOptions, Provenance};
use robust_doe::stats::{main_effects, run_summaries, SnrCriterion};

const STB: SnrCriterion = SnrCriterion::SmallerTheBetter;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/head-impact").join(name)
}

fn dataset() -> (Plan, ResponseTable) {
    let plan = Plan::from_json(&fs::read_to_string(data("plan.json")).unwrap()).unwrap();
    let table = ResponseTable::read_csv(&plan, fs::File::open(data("responses.csv")).unwrap()).unwrap();
    (plan, table)
}

// Published per-run mean, SD and S/N.
const TABLE3: [(f64, f64, f64); 9] = [
    (6.74, 3.92, -17.45),
    (6.75, 3.18, -17.19),
    (6.67, 3.43, -17.19),
    (6.02, 3.80, -16.61),
    (6.51, 3.55, -17.06),
    (6.46, 3.54, -16.99),
    (6.40, 3.50, -16.92),
    (6.68, 3.60, -17.27),
    (6.06, 2.78, -16.21),
];

#[test]
fn plan_schedules_twenty_seven_measurements() {
    let (plan, _) = dataset();
    let schedule = run_schedule(&plan);
    assert_eq!(schedule.len(), 27);
    let first = &schedule[0];
    assert_eq!((first.run, first.noise_level), (1, 1));
    assert_eq!(first.controls[0].value.label, "1 mm");
    assert_eq!(first.controls[1].value.label, "0.2 MPa");
    let run4 = schedule.iter().find(|s| s.run == 4 && s.noise_level == 1).unwrap();
    assert_eq!(run4.controls[0].value.value, Some(3.0));
    assert_eq!(run4.controls[1].value.value, Some(0.2));
    assert_eq!(plan.annotations().len(), 2);
}

#[test]
fn ingested_cell() {
    let (_, table) = dataset();
    assert_eq!(table.get(0, 2), 10.75);
    assert_eq!(table.unit(), "g");
}

#[test]
fn run_summaries_match_published() {
    let (_, table) = dataset();
    let s = run_summaries(&table, STB).unwrap();
    for (i, (got, want)) in s.iter().zip(TABLE3).enumerate() {
        assert!((got.mean - want.0).abs() <= 0.01, "run {} mean {}", i + 1, got.mean);
        assert!((got.sd - want.1).abs() <= 0.01, "run {} sd {}", i + 1, got.sd);
        assert!((got.snr - want.2).abs() <= 0.01, "run {} snr {}", i + 1, got.snr);
    }
}

#[test]
fn main_effects_spot_values() {
    let (plan, table) = dataset();
    let e = main_effects(&plan, &table, STB).unwrap();
    let a1 = &e.factor("A").unwrap().levels[0];
    assert!((a1.mean - 6.72).abs() <= 0.02 && (a1.spread - 0.04).abs() <= 0.02);
    assert!((a1.snr - -17.28).abs() <= 0.01);
    let x3 = &e.factor("X").unwrap().levels[2];
    assert!((x3.mean - 10.10).abs() <= 0.02 && (x3.spread - 0.61).abs() <= 0.02);
    assert!((x3.snr - -20.09).abs() <= 0.01);
    // grand S/N is the mean of the nine row ratios
    assert!((e.grand_snr - -16.99).abs() < 0.01);
}

#[test]
fn anova_thickness_and_velocity() {
    let (plan, table) = dataset();
    let groups = factor_groups(&plan, &table);
    let a = one_way_anova(&groups[0].2).unwrap();
    assert_eq!((a.df_factor, a.df_error, a.df_total), (2, 24, 26));
    assert!((a.ss_factor - 0.81).abs() <= 0.1);
    assert!((a.p - 0.96).abs() <= 0.01);
    let x = one_way_anova(&groups[2].2).unwrap();
    assert!((x.ss_factor - 216.63).abs() <= 0.5);
    assert!((x.ss_error - 5.04).abs() <= 0.1);
    assert!((x.f / 515.63 - 1.0).abs() <= 0.02);
    assert!(x.p < 1e-15);
}

#[test]
fn tukey_on_velocity_and_thickness() {
    let (plan, table) = dataset();
    let groups = factor_groups(&plan, &table);
    let x = tukey_hsd(&groups[2].2, 0.05).unwrap();
    assert!(x.pairs.iter().all(|p| p.significant));
    assert!((x.q_critical - 3.532).abs() < 0.005);
    let a = tukey_hsd(&groups[0].2, 0.05).unwrap();
    assert!(a.pairs.iter().all(|p| !p.significant));
}

#[test]
fn optimal_levels_and_predictions() {
    let (plan, table) = dataset();
    let e = main_effects(&plan, &table, STB).unwrap();
    let sel = optimal_levels(&e, DEFAULT_DELTA_DB);
    assert_eq!(sel.factors[0].best_level, 3);
    assert_eq!(sel.factors[0].near_optimal, vec![2, 3]);
    assert_eq!(sel.factors[1].best_level, 3);
    assert_eq!(sel.factors[1].near_optimal, vec![1, 3]);
    let names: Vec<String> = sel.recommended.iter().map(ToString::to_string).collect();
    assert_eq!(names, ["A2-B1", "A2-B3", "A3-B1", "A3-B3"]);

    // A1 and B2 trail by 0.48 and 0.37 dB, so a half-decibel window admits both
    let wide = optimal_levels(&e, 0.5);
    assert_eq!(wide.factors[0].near_optimal, vec![1, 2, 3]);
    assert_eq!(wide.factors[1].near_optimal, vec![1, 2, 3]);

    let sel = optimal_levels(&e, 0.0);
    assert_eq!(sel.recommended.len(), 1);
    assert_eq!(sel.recommended[0].to_string(), "A3-B3");
    assert_eq!(optimal_levels(&e, 100.0).recommended.len(), 9);

    let p = predict(&e, &Combination::parse("A2-B1", &plan).unwrap()).unwrap();
    assert!((p.predicted_snr - -16.89).abs() < 0.01, "{}", p.predicted_snr);
}

// Published confirmation Mean (SD) cells.
const TABLE9: [(&str, [(f64, f64); 3]); 4] = [
    ("A2-B1", [(2.67, 0.50), (5.81, 0.83), (9.78, 0.37)]),
    ("A2-B3", [(2.97, 0.74), (5.56, 0.89), (10.01, 0.74)]),
    ("A3-B1", [(2.74, 0.41), (6.22, 0.08), (9.93, 0.28)]),
    ("A3-B3", [(3.22, 0.20), (6.62, 0.40), (8.63, 0.11)]),
];

#[test]
fn confirmation_runs_match_published() {
    let (plan, table) = dataset();
    let e = main_effects(&plan, &table, STB).unwrap();
    let runs = ConfirmationRuns::read_csv(&plan, fs::File::open(data("confirmation.csv")).unwrap()).unwrap();
    let report = analyze_confirmation(&plan, &table, &e, &runs).unwrap();
    assert_eq!(report.combinations.len(), 4);
    for (c, (name, cells)) in report.combinations.iter().zip(TABLE9) {
        assert_eq!(c.combination.to_string(), name);
        for (cell, (m, sd)) in c.cells.iter().zip(cells) {
            assert!((cell.mean - m).abs() <= 0.01, "{name} {}: {}", cell.noise_level, cell.mean);
            assert!((cell.sd.unwrap() - sd).abs() <= 0.01, "{name} {}", cell.noise_level);
        }
        // every combination is also a main-array row
        assert!(c.versus_row.is_some());
    }
}

#[test]
fn pipeline_gates_tukey_on_significance() {
    let (plan, table) = dataset();
    let options = AnalysisOptions::default();
    let bundle = analyze(&plan, &table, None, options, Provenance::new(vec![], options)).unwrap();
    assert_eq!(bundle.tukey.len(), 1);
    assert!(bundle.tukey_for("X").is_some());
    assert!(bundle.tukey_for("A").is_none() && bundle.tukey_for("B").is_none());
    let b = bundle.anova_for("B").unwrap();
    assert!((b.ss_factor - 0.39).abs() <= 0.1 && (b.p - 0.98).abs() <= 0.01);
}
