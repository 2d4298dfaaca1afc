//! Run a scenario config end to end and write summary.csv and meta.json.
//!
//! ```text
//! cargo run --release --example run_scenario -- [config.toml] [reps] [threads] [out_dir]
//! ```

use std::path::{Path, PathBuf};

use dah90_sim::error::Result;
use dah90_sim::harness::{run_scenario, write_outputs, ScenarioConfig, ScenarioResult};

pub fn run_example(config: &Path, reps: Option<usize>, threads: usize, out: &Path) -> Result<ScenarioResult> {
    let mut c = ScenarioConfig::from_path(config)?;
    if let Some(r) = reps {
        c.replications = r;
    }
    c.validate()?;
    let result = run_scenario(&c, threads)?;
    write_outputs(&result, out, false)?;
    println!("{} ({} reps, {} threads, {:.2}s)", c.name, c.replications, threads, result.wall_time.as_secs_f64());
    for s in &result.summaries {
        println!(
            "  {:<34} rejection {:.4} ± {:.4}  theta {:.4}  failures {}",
            s.label(),
            s.rejection_rate,
            s.rejection_mc_se,
            s.mean_theta,
            s.failures
        );
    }
    Ok(result)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let default_config = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("config/null_mcar.toml");
    let config = args.first().map_or(default_config, PathBuf::from);
    let reps = args.get(1).map(|a| a.parse().expect("reps must be an integer"));
    let threads = args.get(2).map_or(4, |a| a.parse().expect("threads must be an integer"));
    let out = args.get(3).map_or(PathBuf::from("out"), PathBuf::from);
    run_example(&config, reps, threads, &out)?;
    println!("wrote {}", out.display());
    Ok(())
}
