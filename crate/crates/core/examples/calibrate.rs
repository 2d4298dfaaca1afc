//! Calibrate the treatment effect of the Alternative scenario: find the
//! multiplier giving a large-sample median difference of 2 days, then tune
//! it within that window towards 90% full-data power.
//!
//! ```text
//! cargo run --release --example calibrate -- [eval_size] [power_reps] [threads]
//! ```

use dah90_sim::error::Result;
use dah90_sim::harness::{calibrate_alternative, CalibrationOptions, CalibrationReport, ScenarioConfig};
use dah90_sim::dgm::Scenario;
use dah90_sim::missingness::MechanismSpec;

pub fn run_example(eval_size: usize, power_reps: usize, threads: usize) -> Result<CalibrationReport> {
    let mut config = ScenarioConfig::new("calibrate", Scenario::Alternative, MechanismSpec::none(), Vec::new());
    config.base_seed = 20240602;
    let opts = CalibrationOptions {
        eval_size,
        power_reps,
        threads,
        ..CalibrationOptions::default()
    };
    let report = calibrate_alternative(&config, &opts)?;
    println!(
        "admissible multipliers [{:.4}, {:.4})",
        report.admissible.0, report.admissible.1
    );
    for (m, p) in &report.power_trace {
        println!("  multiplier {m:.4}: power {p:.4}");
    }
    println!(
        "chosen {:.4}: median diff {}, theta {:.4}, power {:.4} (se {:.4})",
        report.multiplier, report.effect.median_diff, report.effect.theta, report.power, report.power_mc_se
    );
    Ok(report)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let eval = args.first().map_or(100_000, |a| a.parse().expect("eval_size must be an integer"));
    let reps = args.get(1).map_or(2000, |a| a.parse().expect("power_reps must be an integer"));
    let threads = args.get(2).map_or(4, |a| a.parse().expect("threads must be an integer"));
    let report = run_example(eval, reps, threads)?;
    print!("\n{}", report.params.to_toml());
    Ok(())
}
