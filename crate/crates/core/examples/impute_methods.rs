//! Mask one simulated trial and analyse it with every handling strategy:
//! complete case, derived complete case and the multiple-imputation variants.
//!
//! ```text
//! cargo run --release --example impute_methods -- [seed] [missing_fraction]
//! ```

use dah90_sim::dgm::{build_covariate_pool, generate_cohort, ComponentModelParams, Scenario};
use dah90_sim::error::Result;
use dah90_sim::harness::{run_replication, scenario_pool, Estimate, ScenarioConfig};
use dah90_sim::impute::{Engine, MethodSpec};
use dah90_sim::missingness::{apply_mechanism, MechanismSpec, Status};
use dah90_sim::statcore::RngStream;

pub fn methods() -> Vec<MethodSpec> {
    vec![
        MethodSpec::complete_case(),
        MethodSpec::complete_case_derived(),
        MethodSpec::mi_composite(Engine::Norm),
        MethodSpec::mi_composite(Engine::Pmm),
        MethodSpec::mi_components(Engine::Norm),
        MethodSpec::mi_components(Engine::Pmm),
        MethodSpec::mi_components_binomial(),
    ]
}

pub fn run_example(seed: u64, missing_fraction: f64) -> Result<Vec<(String, std::result::Result<Estimate, String>)>> {
    let mechanism = MechanismSpec::mar_age_with_missing_fraction(missing_fraction)?;

    // Status mix of a fresh cohort under this mechanism.
    let root = RngStream::new(seed, 0);
    let pool = build_covariate_pool(198, &mut root.substream(0))?;
    let cohort = generate_cohort(1280, &pool, &ComponentModelParams::default(), &mut root.substream(1))?;
    let masked = apply_mechanism(&cohort, &mechanism, &mut root.substream(2))?;
    for s in Status::ALL {
        let k = masked.iter().filter(|m| m.status == s).count();
        println!("{s:?}: {k} ({:.1}%)", 100.0 * k as f64 / masked.len() as f64);
    }

    let mut config = ScenarioConfig::new("impute_methods", Scenario::Null, mechanism, methods());
    config.base_seed = seed;
    config.validate()?;
    let rep = run_replication(&config, &scenario_pool(&config)?, 0)?;
    let labels = std::iter::once("FullData".to_string()).chain(config.methods.iter().map(|m| m.label()));
    let out: Vec<_> = labels.zip(rep.outcomes).collect();
    println!("\n{:<34} {:>8} {:>8} {:>8}", "method", "p", "theta", "md");
    for (label, est) in &out {
        match est {
            Ok(e) => println!("{label:<34} {:>8.4} {:>8.4} {:>8.2}", e.p_value, e.theta, e.median_diff),
            Err(msg) => println!("{label:<34} failed: {msg}"),
        }
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seed = args.first().map_or(Ok(7), |a| a.parse()).expect("seed must be an integer");
    let frac = args.get(1).map_or(Ok(0.25), |a| a.parse()).expect("fraction must be a number");
    run_example(seed, frac)?;
    Ok(())
}
