//! Replication loop and Monte Carlo aggregation.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use super::ScenarioConfig;
use crate::analysis::{pool_estimates, pool_median_p, wilcoxon_test_with, WilcoxonOptions};
use crate::dgm::{build_covariate_pool, generate_cohort, Arm, CovariateRow, ParticipantRecord};
use crate::error::{Error, Result};
use crate::impute::{apply_method, ArmSamples, Handled, MethodSpec};
use crate::missingness::apply_mechanism;
use crate::statcore::rng::label_of;
use crate::statcore::RngStream;

const COHORT_STREAM: u64 = 1;
const MECHANISM_STREAM: u64 = 2;
const POOL_STREAM: u64 = u64::MAX;

/// Pooled analysis of one method in one replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub p_value: f64,
    pub theta: f64,
    pub median_diff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationResult {
    pub rep: u64,
    /// One entry per analysis, `FullData` first then the configured methods.
    pub outcomes: Vec<Result<Estimate, String>>,
}

/// The covariate pool of a scenario; fixed across replications.
pub fn scenario_pool(config: &ScenarioConfig) -> Result<Vec<CovariateRow>> {
    let mut rng = RngStream::new(config.base_seed, POOL_STREAM);
    build_covariate_pool(config.covariate_pool_size, &mut rng)
}

fn split_arms(cohort: &[ParticipantRecord]) -> ArmSamples {
    let mut s = ArmSamples::default();
    for r in cohort {
        let y = f64::from(r.outcome.dah90);
        match r.arm {
            Arm::Control => s.control.push(y),
            Arm::Experimental => s.experimental.push(y),
        }
    }
    s
}

fn analyse(samples: &ArmSamples, opts: WilcoxonOptions) -> Result<Estimate> {
    let t = wilcoxon_test_with(&samples.control, &samples.experimental, opts)?;
    Ok(Estimate {
        p_value: t.p_value,
        theta: t.theta_hat,
        median_diff: t.median_diff,
    })
}

fn analyse_handled(handled: &Handled, opts: WilcoxonOptions) -> Result<Estimate> {
    match handled {
        Handled::Single(s) => analyse(s, opts),
        Handled::Imputed(sets) => {
            let per: Vec<Estimate> = sets.iter().map(|d| analyse(&d.by_arm(), opts)).collect::<Result<_>>()?;
            let p: Vec<f64> = per.iter().map(|e| e.p_value).collect();
            let th: Vec<f64> = per.iter().map(|e| e.theta).collect();
            let md: Vec<f64> = per.iter().map(|e| e.median_diff).collect();
            let (theta, median_diff) = pool_estimates(&th, &md)?;
            Ok(Estimate {
                p_value: pool_median_p(&p)?,
                theta,
                median_diff,
            })
        }
    }
}

/// Generate, mask and analyse one replicate trial.
pub fn run_replication(config: &ScenarioConfig, pool: &[CovariateRow], rep: u64) -> Result<ReplicationResult> {
    let root = RngStream::new(config.base_seed, rep);
    let cohort = generate_cohort(config.n, pool, &config.dgm_params, &mut root.substream(COHORT_STREAM))?;
    let masked = apply_mechanism(&cohort, &config.mechanism, &mut root.substream(MECHANISM_STREAM))?;
    let opts = WilcoxonOptions {
        continuity_correction: config.continuity_correction,
    };
    let mut outcomes = Vec::with_capacity(config.methods.len() + 1);
    outcomes.push(analyse(&split_arms(&cohort), opts).map_err(|e| e.to_string()));
    for method in &config.methods {
        let rng = root.substream(label_of(&method.label()));
        let est = apply_method(&masked, method, &rng).and_then(|h| analyse_handled(&h, opts));
        outcomes.push(est.map_err(|e| e.to_string()));
    }
    Ok(ReplicationResult { rep, outcomes })
}

/// Monte Carlo summary of one analysis across replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    /// `None` for the full-data reference analysis.
    pub method: Option<MethodSpec>,
    pub reps_effective: usize,
    pub rejections: usize,
    pub rejection_rate: f64,
    pub rejection_mc_se: f64,
    pub mean_theta: f64,
    pub mc_se_theta: f64,
    pub mean_median_diff: f64,
    pub mc_se_median_diff: f64,
    pub failures: usize,
    pub first_failure: Option<String>,
}

impl MethodSummary {
    pub fn name(&self) -> &'static str {
        self.method.as_ref().map_or("FullData", |m| m.kind.as_str())
    }

    pub fn label(&self) -> String {
        self.method.as_ref().map_or_else(|| "FullData".into(), MethodSpec::label)
    }
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Summaries in the same order as `ReplicationResult::outcomes`.
pub fn aggregate(config: &ScenarioConfig, reps: &[ReplicationResult]) -> Vec<MethodSummary> {
    let methods: Vec<Option<MethodSpec>> = std::iter::once(None).chain(config.methods.iter().cloned().map(Some)).collect();
    methods
        .into_iter()
        .enumerate()
        .map(|(j, method)| {
            let mut ok = Vec::with_capacity(reps.len());
            let mut failures = 0;
            let mut first_failure = None;
            for r in reps {
                match &r.outcomes[j] {
                    Ok(e) => ok.push(*e),
                    Err(msg) => {
                        failures += 1;
                        first_failure.get_or_insert_with(|| msg.clone());
                    }
                }
            }
            let n = ok.len();
            let rejections = ok.iter().filter(|e| e.p_value < config.alpha_level).count();
            let rate = if n > 0 { rejections as f64 / n as f64 } else { f64::NAN };
            let th: Vec<f64> = ok.iter().map(|e| e.theta).collect();
            let md: Vec<f64> = ok.iter().map(|e| e.median_diff).collect();
            let (mean_theta, mc_se_theta) = mean_and_se(&th);
            let (mean_median_diff, mc_se_median_diff) = mean_and_se(&md);
            MethodSummary {
                method,
                reps_effective: n,
                rejections,
                rejection_rate: rate,
                rejection_mc_se: (rate * (1.0 - rate) / n as f64).sqrt(),
                mean_theta,
                mc_se_theta,
                mean_median_diff,
                mc_se_median_diff,
                failures,
                first_failure,
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub config: ScenarioConfig,
    pub summaries: Vec<MethodSummary>,
    pub replications: Vec<ReplicationResult>,
    pub threads: usize,
    pub wall_time: Duration,
}

impl ScenarioResult {
    pub fn summary(&self, label: &str) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.label() == label)
    }

    pub fn full_data(&self) -> &MethodSummary {
        &self.summaries[0]
    }
}

/// Run every replication on a pool of `threads` workers. Results do not
/// depend on the thread count.
pub fn run_scenario(config: &ScenarioConfig, threads: usize) -> Result<ScenarioResult> {
    config.validate()?;
    let start = Instant::now();
    let pool = scenario_pool(config)?;
    let workers = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let reps: Vec<ReplicationResult> = workers.install(|| {
        (0..config.replications as u64)
            .into_par_iter()
            .map(|rep| run_replication(config, &pool, rep))
            .collect::<Result<_>>()
    })?;
    Ok(ScenarioResult {
        config: config.clone(),
        summaries: aggregate(config, &reps),
        replications: reps,
        threads: threads.max(1),
        wall_time: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgm::Scenario;
    use crate::impute::Engine;
    use crate::missingness::MechanismSpec;

    fn all_methods() -> Vec<MethodSpec> {
        vec![
            MethodSpec::complete_case(),
            MethodSpec::complete_case_derived(),
            MethodSpec::mi_composite(Engine::Norm).with_imputations(3),
            MethodSpec::mi_composite(Engine::Pmm).with_imputations(3),
            MethodSpec::mi_components(Engine::Norm).with_imputations(3),
            MethodSpec::mi_components(Engine::Pmm).with_imputations(3),
            MethodSpec::mi_components_binomial().with_imputations(3),
        ]
    }

    fn small(mechanism: MechanismSpec) -> ScenarioConfig {
        ScenarioConfig {
            n: 200,
            replications: 6,
            base_seed: 11,
            ..ScenarioConfig::new("t", Scenario::Null, mechanism, all_methods())
        }
    }

    #[test]
    fn no_missingness_gives_identical_p_values() {
        let c = small(MechanismSpec::none());
        let pool = scenario_pool(&c).unwrap();
        for rep in 0..3 {
            let r = run_replication(&c, &pool, rep).unwrap();
            let full = r.outcomes[0].clone().unwrap();
            for o in &r.outcomes {
                assert_eq!(o.clone().unwrap(), full);
            }
        }
    }

    #[test]
    fn replication_is_deterministic() {
        let c = small(MechanismSpec::mar_age());
        let pool = scenario_pool(&c).unwrap();
        assert_eq!(run_replication(&c, &pool, 4).unwrap(), run_replication(&c, &pool, 4).unwrap());
        assert_ne!(run_replication(&c, &pool, 4).unwrap(), run_replication(&c, &pool, 5).unwrap());
    }

    #[test]
    fn full_data_ignores_method_list() {
        let a = small(MechanismSpec::mcar());
        let b = ScenarioConfig {
            methods: vec![MethodSpec::complete_case()],
            ..a.clone()
        };
        let ra = run_scenario(&a, 1).unwrap();
        let rb = run_scenario(&b, 1).unwrap();
        assert_eq!(ra.full_data(), rb.full_data());
    }

    #[test]
    fn failures_are_counted_not_fatal() {
        let mut c = small(MechanismSpec::custom("heavy", [4.0, 0.0, 0.0, 0.0], [-50.0, 0.0, 0.0, 0.0], false));
        c.n = 20;
        c.methods = vec![MethodSpec::mi_composite(Engine::Pmm).with_donors(10).with_imputations(2)];
        let r = run_scenario(&c, 1).unwrap();
        let s = &r.summaries[1];
        assert_eq!(s.failures + s.reps_effective, 6);
        assert!(s.failures > 0);
        assert!(s.first_failure.is_some());
        assert_eq!(r.full_data().failures, 0);
    }

    #[test]
    fn aggregation_identities() {
        let r = run_scenario(&small(MechanismSpec::mar_age()), 2).unwrap();
        for s in &r.summaries {
            let scaled = s.rejection_rate * s.reps_effective as f64;
            assert!((scaled - scaled.round()).abs() < 1e-9);
            let r = s.rejection_rate;
            assert!((s.rejection_mc_se - (r * (1.0 - r) / s.reps_effective as f64).sqrt()).abs() < 1e-15);
        }
    }
}
