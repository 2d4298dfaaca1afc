//! Simulate one trial cohort from the component model and summarise DAH90.
//!
//! ```text
//! cargo run --example generate_cohort -- [n] [seed] [params.toml]
//! ```

use dah90_sim::dgm::{build_covariate_pool, generate_cohort, Arm, ComponentModelParams, ParticipantRecord};
use dah90_sim::error::Result;
use dah90_sim::statcore::RngStream;

pub struct CohortSummary {
    pub n: usize,
    pub deaths: usize,
    pub zero_dah: usize,
    pub no_extended_stay: usize,
    pub no_readmission: usize,
    pub above_75: usize,
    /// 10th, 25th, 50th, 75th and 90th percentiles of DAH90.
    pub quantiles: [u32; 5],
    pub arm_medians: [f64; 2],
}

fn quantile(sorted: &[u32], q: f64) -> u32 {
    sorted[((sorted.len() - 1) as f64 * q).round() as usize]
}

pub fn summarise(cohort: &[ParticipantRecord]) -> CohortSummary {
    let mut y: Vec<u32> = cohort.iter().map(|r| r.outcome.dah90).collect();
    y.sort_unstable();
    let count = |f: &dyn Fn(&ParticipantRecord) -> bool| cohort.iter().filter(|r| f(r)).count();
    let arm_median = |arm: Arm| {
        let v: Vec<f64> = cohort.iter().filter(|r| r.arm == arm).map(|r| f64::from(r.outcome.dah90)).collect();
        dah90_sim::statcore::median(&v).unwrap_or(f64::NAN)
    };
    CohortSummary {
        n: cohort.len(),
        deaths: count(&|r| r.outcome.death),
        zero_dah: count(&|r| r.outcome.dah90 == 0),
        no_extended_stay: count(&|r| r.outcome.extended_stay == 0),
        no_readmission: count(&|r| r.outcome.readmission_days == 0),
        above_75: count(&|r| r.outcome.dah90 > 75),
        quantiles: [0.1, 0.25, 0.5, 0.75, 0.9].map(|q| quantile(&y, q)),
        arm_medians: [arm_median(Arm::Control), arm_median(Arm::Experimental)],
    }
}

pub fn run_example(n: usize, seed: u64, params: &ComponentModelParams) -> Result<CohortSummary> {
    let root = RngStream::new(seed, 0);
    let pool = build_covariate_pool(198, &mut root.substream(0))?;
    let cohort = generate_cohort(n, &pool, params, &mut root.substream(1))?;
    for r in cohort.iter().take(5) {
        let o = &r.outcome;
        println!(
            "id {:>3} {:?} age_high={} female={} bmi={:.1}: stay 4+{} readmitted {} of {} days, death={} -> DAH90 {}",
            r.id, r.arm, r.covariates.age_high, r.covariates.sex_female, r.covariates.bmi,
            o.extended_stay, o.readmission_days, o.window, o.death, o.dah90
        );
    }
    let s = summarise(&cohort);
    let pct = |k: usize| 100.0 * k as f64 / s.n as f64;
    println!("n = {}", s.n);
    println!("deaths {:.2}%, DAH90 = 0 {:.2}%, DAH90 > 75 {:.1}%", pct(s.deaths), pct(s.zero_dah), pct(s.above_75));
    println!("no extended stay {:.1}%, no readmission {:.1}%", pct(s.no_extended_stay), pct(s.no_readmission));
    println!("DAH90 percentiles 10/25/50/75/90: {:?}", s.quantiles);
    println!("median by arm: control {}, experimental {}", s.arm_medians[0], s.arm_medians[1]);
    Ok(s)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n = args.first().map_or(Ok(100_000), |a| a.parse()).expect("n must be an integer");
    let seed = args.get(1).map_or(Ok(1), |a| a.parse()).expect("seed must be an integer");
    let params = match args.get(2) {
        Some(path) => ComponentModelParams::from_toml(&std::fs::read_to_string(path)?)?,
        None => ComponentModelParams::default(),
    };
    run_example(n, seed, &params)?;
    Ok(())
}
