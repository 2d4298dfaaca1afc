//! Every example is compiled into this test binary and run at small sizes.

use std::path::PathBuf;

use dah90_sim::analysis::wilcoxon_test;
use dah90_sim::dgm::ComponentModelParams;
use dah90_sim::missingness::MechanismName;
use dah90_sim::statcore::RngStream;

#[path = "../examples/generate_cohort.rs"]
mod generate_cohort;
#[path = "../examples/validate_mechanism.rs"]
mod validate_mechanism;
#[path = "../examples/wilcoxon_analysis.rs"]
mod wilcoxon_analysis;
#[path = "../examples/impute_methods.rs"]
mod impute_methods;
#[path = "../examples/run_scenario.rs"]
mod run_scenario;
#[path = "../examples/calibrate.rs"]
mod calibrate;

#[test]
fn generate_cohort_example() {
    let s = generate_cohort::run_example(20_000, 3, &ComponentModelParams::default()).unwrap();
    assert_eq!(s.n, 20_000);
    assert!(s.quantiles.windows(2).all(|w| w[0] <= w[1]));
    assert!(s.zero_dah >= s.deaths);
}

#[test]
fn validate_mechanism_example() {
    let r = validate_mechanism::run_example(MechanismName::MarSex, 50_000, 4).unwrap();
    assert_eq!(r.sample_size, 50_000);
    assert!(validate_mechanism::run_example(MechanismName::Custom, 10, 1).is_err());
}

#[test]
fn wilcoxon_example() {
    let out = wilcoxon_analysis::run_example().unwrap();
    assert_eq!(out.len(), 3);
    assert!((out[2].1 - 0.1).abs() < 1e-12);
}

#[test]
fn exact_permutation_oracle_on_tiny_samples() {
    // C(4,2) = 6 splits, two of which are as extreme as complete separation.
    assert!((wilcoxon_analysis::exact_p_value(&[1.0, 2.0], &[3.0, 4.0]) - 2.0 / 6.0).abs() < 1e-12);
    assert_eq!(wilcoxon_analysis::exact_p_value(&[5.0, 5.0], &[5.0, 5.0]), 1.0);
}

/// Without ties, the normal approximation stays within 0.05 of the exact
/// permutation p-value for equal arms of 3 to 6. Two per arm is too coarse
/// for any such bound.
#[test]
fn normal_approximation_tracks_exact_test() {
    let mut rng = RngStream::new(11, 0);
    for n in 3..=6 {
        for _ in 0..60 {
            let mut values: Vec<f64> = (0..87).map(f64::from).collect();
            for i in 0..2 * n {
                let j = i + rng.index(values.len() - i);
                values.swap(i, j);
            }
            let (y0, y1) = (&values[..n], &values[n..2 * n]);
            let approx = wilcoxon_test(y0, y1).unwrap().p_value;
            let exact = wilcoxon_analysis::exact_p_value(y0, y1);
            assert!((approx - exact).abs() < 0.05, "n={n} {y0:?} {y1:?}: {approx} vs {exact}");
        }
    }
}

#[test]
fn impute_methods_example() {
    let out = impute_methods::run_example(5, 0.25).unwrap();
    assert_eq!(out.len(), 1 + impute_methods::methods().len());
    for (label, est) in &out {
        let e = est.as_ref().unwrap_or_else(|m| panic!("{label}: {m}"));
        assert!((0.0..=1.0).contains(&e.p_value));
    }
}

#[test]
fn run_scenario_example_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("config/null_mcar.toml");
    let result = run_scenario::run_example(&config, Some(30), 2, dir.path()).unwrap();
    assert_eq!(result.replications.len(), 30);
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    assert!(dir.path().join("meta.json").exists());
}

#[test]
fn calibrate_example_small() {
    let report = calibrate::run_example(20_000, 100, 2).unwrap();
    assert!(report.multiplier >= report.admissible.0 && report.multiplier < report.admissible.1);
    assert!((report.effect.median_diff - 2.0).abs() <= 0.25);
}
