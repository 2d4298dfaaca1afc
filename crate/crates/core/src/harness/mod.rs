//! Scenario configuration, the replication loop, calibration of the
//! Alternative scenario, mechanism validation and output files.

mod calibrate;
mod config;
mod output;
mod run;
mod validate;

pub use calibrate::{calibrate_alternative, large_sample_effect, power_at, CalibrationOptions, CalibrationReport, LargeSampleEffect};
pub use config::ScenarioConfig;
pub use output::{format_real, write_meta, write_outputs, write_replications, write_summary, SUMMARY_HEADER};
pub use run::{
    aggregate, run_replication, run_scenario, scenario_pool, Estimate, MethodSummary, ReplicationResult,
    ScenarioResult,
};
pub use validate::{reference_rates, validate_mechanism, MechanismReport, Stratum, StratumRow};
