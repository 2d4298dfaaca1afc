//! Calibration of the treatment effect under the Alternative scenario.

use serde::Serialize;

use super::{run_scenario, ScenarioConfig};
use crate::analysis::{median_diff, prob_index};
use crate::dgm::{build_covariate_pool, generate_cohort, Arm, ComponentModelParams, Scenario};
use crate::error::{Error, Result};
use crate::statcore::RngStream;

const EVAL_STREAM: u64 = u64::MAX - 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOptions {
    pub target_median_diff: f64,
    pub target_power: f64,
    /// Accepted distance of the large-sample median difference from target.
    pub median_tolerance: f64,
    pub power_band: (f64, f64),
    pub eval_size: usize,
    pub power_reps: usize,
    pub max_multiplier: f64,
    pub threads: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            target_median_diff: 2.0,
            target_power: 0.90,
            median_tolerance: 0.25,
            power_band: (0.85, 0.95),
            eval_size: 100_000,
            power_reps: 2000,
            max_multiplier: 8.0,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LargeSampleEffect {
    pub multiplier: f64,
    pub median_diff: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub multiplier: f64,
    pub params: ComponentModelParams,
    pub effect: LargeSampleEffect,
    /// Multipliers whose large-sample median difference is on target.
    pub admissible: (f64, f64),
    pub power: f64,
    pub power_mc_se: f64,
    /// Every power evaluation as `(multiplier, power)`.
    pub power_trace: Vec<(f64, f64)>,
}

fn scaled(base: &ComponentModelParams, multiplier: f64) -> ComponentModelParams {
    base.clone().with_scenario(Scenario::Alternative).with_treatment_scaled(multiplier)
}

/// Median difference and probabilistic index of a large cohort. The same
/// random numbers are used for every multiplier, so the result moves
/// smoothly with it.
pub fn large_sample_effect(
    base: &ComponentModelParams,
    multiplier: f64,
    eval_size: usize,
    seed: u64,
) -> Result<LargeSampleEffect> {
    let root = RngStream::new(seed, EVAL_STREAM);
    let pool = build_covariate_pool(eval_size.min(100_000), &mut root.substream(0))?;
    let cohort = generate_cohort(eval_size, &pool, &scaled(base, multiplier), &mut root.substream(1))?;
    let mut arms = [Vec::new(), Vec::new()];
    for r in &cohort {
        arms[r.arm.index()].push(f64::from(r.outcome.dah90));
    }
    let (y0, y1) = (&arms[Arm::Control.index()], &arms[Arm::Experimental.index()]);
    Ok(LargeSampleEffect {
        multiplier,
        median_diff: median_diff(y0, y1)?,
        theta: prob_index(y0, y1)?,
    })
}

/// Full-data power at the scenario's sample size.
pub fn power_at(config: &ScenarioConfig, params: &ComponentModelParams, reps: usize, threads: usize) -> Result<(f64, f64)> {
    let c = ScenarioConfig {
        scenario: Scenario::Alternative,
        dgm_params: params.clone().with_scenario(Scenario::Alternative),
        methods: Vec::new(),
        replications: reps,
        ..config.clone()
    };
    let r = run_scenario(&c, threads)?;
    let s = r.full_data();
    Ok((s.rejection_rate, s.rejection_mc_se))
}

/// Smallest multiplier in `[0, hi]` whose median difference reaches `level`.
fn first_reaching(level: f64, hi: f64, effect: &dyn Fn(f64) -> Result<f64>) -> Result<f64> {
    let top = effect(hi)?;
    if top < level {
        return Err(Error::Calibration(format!(
            "median difference {top} at multiplier {hi} does not reach {level}"
        )));
    }
    let (mut lo, mut hi) = (0.0, hi);
    while hi - lo > 1e-4 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if effect(mid)? >= level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Find a treatment multiplier giving the target median difference in large
/// samples and, among those, power closest to the target at the scenario's
/// sample size.
pub fn calibrate_alternative(config: &ScenarioConfig, opts: &CalibrationOptions) -> Result<CalibrationReport> {
    let base = &config.dgm_params;
    let seed = config.base_seed;
    let md = |m: f64| large_sample_effect(base, m, opts.eval_size, seed).map(|e| e.median_diff);
    // Integer outcomes make even a null median difference jump by a day,
    // so the sanity check uses the probabilistic index.
    let null = large_sample_effect(base, 0.0, opts.eval_size, seed)?;
    if (null.theta - 0.5).abs() > 0.01 {
        return Err(Error::Calibration(format!("probabilistic index {} without treatment effect", null.theta)));
    }
    let lo = first_reaching(opts.target_median_diff - opts.median_tolerance, opts.max_multiplier, &md)?;
    let hi = first_reaching(opts.target_median_diff + opts.median_tolerance, opts.max_multiplier, &md)?;
    // `hi` is the first multiplier past the target; step back inside.
    let hi_in = lo + 0.999 * (hi - lo);
    if hi_in <= lo || (md(hi_in)? - opts.target_median_diff).abs() > opts.median_tolerance {
        return Err(Error::Calibration(format!(
            "no multiplier in [0, {}] gives a median difference within {} of {} (jumps at {lo}, {hi})",
            opts.max_multiplier, opts.median_tolerance, opts.target_median_diff
        )));
    }

    let on_target = |m: f64| -> Result<bool> { Ok((md(m)? - opts.target_median_diff).abs() <= opts.median_tolerance) };
    let mut trace = Vec::new();
    // (multiplier, power, se) for every evaluation whose median difference
    // is on target; the effect need not be monotone under common numbers.
    let mut admissible = Vec::new();
    let mut power = |m: f64| -> Result<f64> {
        let (p, se) = power_at(config, &scaled(base, m), opts.power_reps, opts.threads)?;
        trace.push((m, p));
        if on_target(m)? {
            admissible.push((m, p, se));
        }
        Ok(p)
    };
    let p_lo = power(lo)?;
    let p_hi = power(hi_in)?;
    if p_lo < opts.target_power && p_hi > opts.target_power {
        let (mut a, mut b) = (lo, hi_in);
        for _ in 0..8 {
            let mid = 0.5 * (a + b);
            if power(mid)? < opts.target_power {
                a = mid;
            } else {
                b = mid;
            }
        }
    }
    let Some(&(multiplier, pw, se)) = admissible
        .iter()
        .min_by(|x, y| (x.1 - opts.target_power).abs().total_cmp(&(y.1 - opts.target_power).abs()))
    else {
        return Err(Error::Calibration(format!(
            "no evaluated multiplier in [{lo:.4}, {hi:.4}) kept the median difference on target"
        )));
    };
    if !(opts.power_band.0..=opts.power_band.1).contains(&pw) {
        return Err(Error::Calibration(format!(
            "power {pw:.4} at multiplier {multiplier:.4} outside [{}, {}]; admissible multipliers [{lo:.4}, {hi:.4}) give power {p_lo:.4}..{p_hi:.4}",
            opts.power_band.0, opts.power_band.1
        )));
    }
    let params = scaled(base, multiplier);
    let effect = large_sample_effect(base, multiplier, opts.eval_size, seed)?;
    Ok(CalibrationReport {
        multiplier,
        params,
        effect,
        admissible: (lo, hi),
        power: pw,
        power_mc_se: se,
        power_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_multiplier_has_no_effect() {
        let e = large_sample_effect(&ComponentModelParams::default(), 0.0, 20_000, 5).unwrap();
        // Integer sample medians of equal laws can still differ by a day.
        assert!(e.median_diff.abs() <= 1.0, "{}", e.median_diff);
        assert!((e.theta - 0.5).abs() < 0.01, "{}", e.theta);
    }

    #[test]
    fn effect_grows_with_multiplier() {
        let base = ComponentModelParams::default();
        let a = large_sample_effect(&base, 0.5, 20_000, 5).unwrap();
        let b = large_sample_effect(&base, 2.0, 20_000, 5).unwrap();
        assert!(b.theta > a.theta && a.theta > 0.5);
        assert!(b.median_diff >= a.median_diff);
    }

    #[test]
    fn unreachable_target_is_a_calibration_error() {
        let config = ScenarioConfig::new("c", Scenario::Alternative, crate::missingness::MechanismSpec::mcar(), vec![]);
        let opts = CalibrationOptions {
            target_median_diff: 60.0,
            eval_size: 5_000,
            ..CalibrationOptions::default()
        };
        assert!(matches!(calibrate_alternative(&config, &opts), Err(Error::Calibration(_))));
    }
}
