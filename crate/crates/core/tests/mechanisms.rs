//! Missingness mechanisms against closed-form softmax oracles.

use dah90_sim::dgm::{build_covariate_pool, generate_cohort, ComponentModelParams, CovariateRow};
use dah90_sim::harness::reference_rates;
use dah90_sim::harness::Stratum;
use dah90_sim::missingness::{apply_mechanism, MechanismName, MechanismSpec, Status};
use dah90_sim::statcore::RngStream;

/// Independent softmax: `[complete, partial, missing]` for given linear predictors.
fn oracle(eta_missing: f64, eta_partial: f64) -> [f64; 3] {
    let d = 1.0 + eta_missing.exp() + eta_partial.exp();
    [1.0 / d, eta_partial.exp() / d, eta_missing.exp() / d]
}

fn oracle_for(spec: &MechanismSpec, age_high: bool, female: bool, y: f64) -> [f64; 3] {
    let x = [1.0, f64::from(age_high), f64::from(female), y];
    let eta = |c: &[f64; 4]| c.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
    oracle(eta(&spec.alpha), eta(&spec.beta))
}

#[test]
fn mcar_rates_are_exact() {
    let p = oracle_for(&MechanismSpec::mcar(), false, false, 0.0);
    for (a, b) in p.iter().zip([0.95, 0.02, 0.03]) {
        assert!((a - b).abs() < 1e-3, "{p:?}");
    }
}

#[test]
fn mar_age_strata() {
    let spec = MechanismSpec::mar_age();
    let young = oracle_for(&spec, false, false, 0.0);
    let e1 = (-1.0f64).exp();
    let exact = [1.0 / (1.0 + 2.0 * e1), e1 / (1.0 + 2.0 * e1), e1 / (1.0 + 2.0 * e1)];
    for (a, b) in young.iter().zip(exact) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!((young[0] - 0.576).abs() < 1e-3 && (young[1] - 0.212).abs() < 1e-3);
    // The rounded reference for this stratum is 59/20/20.
    let reference = reference_rates(MechanismName::MarAge);
    let (_, r) = reference.iter().find(|(s, _)| *s == Stratum::AgeLow).unwrap();
    for (a, b) in young.iter().zip(r) {
        assert!((a - b).abs() < 0.015, "{young:?} vs {r:?}");
    }
    let old = oracle_for(&spec, true, false, 0.0);
    assert!((old[0] - 0.88).abs() < 0.01);
}

#[test]
fn sex_does_not_enter_mar_age() {
    let spec = MechanismSpec::mar_age();
    for age in [false, true] {
        assert_eq!(oracle_for(&spec, age, false, 40.0), oracle_for(&spec, age, true, 0.0));
    }
}

fn covariate_key(c: &CovariateRow) -> usize {
    usize::from(c.age_high) * 2 + usize::from(c.sex_female)
}

/// Among participants with something to mask, the simulated status mix in
/// each age-by-sex cell matches the softmax within four standard errors.
#[test]
fn simulated_status_matches_softmax_by_cell() {
    let root = RngStream::new(99, 0);
    let pool = build_covariate_pool(198, &mut root.substream(0)).unwrap();
    let cohort = generate_cohort(120_000, &pool, &ComponentModelParams::default(), &mut root.substream(1)).unwrap();
    for name in [MechanismName::MarAge, MechanismName::MarSex, MechanismName::MarAgeSex, MechanismName::Mcar] {
        let spec = MechanismSpec::named(name).unwrap();
        let masked = apply_mechanism(&cohort, &spec, &mut root.substream(2)).unwrap();
        let mut counts = [[0usize; 3]; 4];
        for m in masked.iter().filter(|m| m.base.outcome.window > 1) {
            let s = Status::ALL.iter().position(|s| *s == m.status).unwrap();
            counts[covariate_key(&m.base.covariates)][s] += 1;
        }
        for (key, c) in counts.iter().enumerate() {
            let n: usize = c.iter().sum();
            if n < 500 {
                continue;
            }
            let p = oracle_for(&spec, key >= 2, key % 2 == 1, 0.0);
            for k in 0..3 {
                let se = (p[k] * (1.0 - p[k]) / n as f64).sqrt();
                let obs = c[k] as f64 / n as f64;
                assert!((obs - p[k]).abs() < 4.0 * se + 1e-9, "{} cell {key} status {k}: {obs} vs {}", name.as_str(), p[k]);
            }
        }
    }
}

#[test]
fn empty_window_is_always_complete() {
    let root = RngStream::new(5, 0);
    let pool = build_covariate_pool(198, &mut root.substream(0)).unwrap();
    let mut params = ComponentModelParams::default();
    params.extended_stay.zero_prob_logit_coeffs = [-50.0, 0.0, 0.0, 0.0, 0.0];
    params.extended_stay.log_mu_coeffs = [10.0, 0.0, 0.0, 0.0, 0.0];
    let cohort = generate_cohort(2000, &pool, &params, &mut root.substream(1)).unwrap();
    let all_missing = MechanismSpec::custom("all_missing", [30.0, 0.0, 0.0, 0.0], [0.0; 4], false);
    let masked = apply_mechanism(&cohort, &all_missing, &mut root.substream(2)).unwrap();
    for m in &masked {
        if m.base.outcome.window == 0 {
            assert_eq!(m.status, Status::Complete);
        } else {
            assert_eq!(m.status, Status::Missing);
        }
    }
    assert!(masked.iter().any(|m| m.base.outcome.window == 0));
}
