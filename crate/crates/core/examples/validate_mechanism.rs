//! Tabulate complete/partial/missing frequencies of a named missingness
//! mechanism on a large simulated cohort, next to its reference rates.
//!
//! ```text
//! cargo run --release --example validate_mechanism -- [MNAR_Age] [n] [seed]
//! ```

use dah90_sim::dgm::ComponentModelParams;
use dah90_sim::error::{Error, Result};
use dah90_sim::harness::{validate_mechanism, MechanismReport};
use dah90_sim::missingness::{MechanismName, MechanismSpec};

pub fn run_example(name: MechanismName, n: usize, seed: u64) -> Result<MechanismReport> {
    let spec = MechanismSpec::named(name).ok_or_else(|| Error::Config(format!("{} has no fixed coefficients", name.as_str())))?;
    let report = validate_mechanism(&spec, &ComponentModelParams::default(), n, seed)?;
    print!("{report}");
    Ok(report)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let names: Vec<MechanismName> = match args.first() {
        Some(a) => vec![a.parse()?],
        None => ["MCAR", "MAR_Age", "MAR_Sex", "MAR_AgeSex", "MNAR_Age"]
            .iter()
            .map(|s| s.parse())
            .collect::<Result<_>>()?,
    };
    let n = args.get(1).map_or(Ok(200_000), |a| a.parse()).expect("n must be an integer");
    let seed = args.get(2).map_or(Ok(1), |a| a.parse()).expect("seed must be an integer");
    for name in names {
        run_example(name, n, seed)?;
        println!();
    }
    Ok(())
}
