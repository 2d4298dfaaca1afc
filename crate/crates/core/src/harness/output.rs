//! `summary.csv`, `replications.csv.gz` and `meta.json`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use flate2::write::GzEncoder;
use flate2::Compression;
use serde_json::json;

use super::{ScenarioResult, MethodSummary};
use crate::error::Result;

pub const SUMMARY_HEADER: [&str; 14] = [
    "scenario",
    "mechanism",
    "method",
    "engine",
    "k",
    "M",
    "reps_effective",
    "rejection_rate",
    "rejection_mc_se",
    "mean_theta",
    "mc_se_theta",
    "mean_median_diff",
    "mc_se_median_diff",
    "failures",
];

/// Six significant digits in the style of C's `%g`.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    } else {
        trim(&format!("{x:.*}", (5 - exp) as usize))
    }
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(w)
}

fn summary_row(result: &ScenarioResult, s: &MethodSummary) -> Vec<String> {
    let c = &result.config;
    let (engine, k, m) = match &s.method {
        None => (String::new(), String::new(), String::new()),
        Some(spec) => {
            let mut engine = spec.engine_label().to_string();
            if spec.uses_pmm() && spec.pmm_matching == crate::impute::PmmMatching::Type0 {
                engine.push_str("-type0");
            }
            if spec.kind == crate::impute::MethodKind::MiComponents && !spec.clamp_components {
                engine.push_str("-unclamped");
            }
            let k = if spec.uses_pmm() { spec.donors_k.to_string() } else { String::new() };
            let m = if spec.kind.is_mi() { spec.num_imputations.to_string() } else { String::new() };
            (engine, k, m)
        }
    };
    vec![
        c.scenario.to_string(),
        c.mechanism.label.clone(),
        s.name().to_string(),
        engine,
        k,
        m,
        s.reps_effective.to_string(),
        format_real(s.rejection_rate),
        format_real(s.rejection_mc_se),
        format_real(s.mean_theta),
        format_real(s.mc_se_theta),
        format_real(s.mean_median_diff),
        format_real(s.mc_se_median_diff),
        s.failures.to_string(),
    ]
}

pub fn write_summary<W: Write>(result: &ScenarioResult, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(SUMMARY_HEADER)?;
    for s in &result.summaries {
        out.write_record(summary_row(result, s))?;
    }
    out.flush()?;
    Ok(())
}

/// Per-replication estimates, gzip-compressed.
pub fn write_replications<W: Write>(result: &ScenarioResult, w: W) -> Result<()> {
    let gz = GzEncoder::new(w, Compression::default());
    let mut out = csv_writer(gz);
    out.write_record(["rep", "method", "p_value", "theta", "median_diff", "error"])?;
    let labels: Vec<String> = result.summaries.iter().map(MethodSummary::label).collect();
    for r in &result.replications {
        for (label, o) in labels.iter().zip(&r.outcomes) {
            let rep = r.rep.to_string();
            match o {
                Ok(e) => out.write_record([
                    rep.as_str(),
                    label,
                    &format_real(e.p_value),
                    &format_real(e.theta),
                    &format_real(e.median_diff),
                    "",
                ])?,
                Err(msg) => out.write_record([rep.as_str(), label, "", "", "", msg])?,
            }
        }
    }
    out.into_inner().map_err(|e| e.into_error())?.finish()?;
    Ok(())
}

pub fn write_meta<W: Write>(result: &ScenarioResult, w: W) -> Result<()> {
    let meta = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "seed": result.config.base_seed,
        "replications": result.config.replications,
        "threads": result.threads,
        "wall_time_seconds": result.wall_time.as_secs_f64(),
        "config": result.config,
        "methods": result.summaries.iter().map(|s| json!({
            "label": s.label(),
            "failures": s.failures,
            "first_failure": s.first_failure,
        })).collect::<Vec<_>>(),
    });
    serde_json::to_writer_pretty(w, &meta)?;
    Ok(())
}

/// Write all output files into `dir`, creating it if needed.
pub fn write_outputs(result: &ScenarioResult, dir: &Path, replications: bool) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_summary(result, BufWriter::new(File::create(dir.join("summary.csv"))?))?;
    if replications {
        write_replications(result, BufWriter::new(File::create(dir.join("replications.csv.gz"))?))?;
    }
    let mut meta = BufWriter::new(File::create(dir.join("meta.json"))?);
    write_meta(result, &mut meta)?;
    meta.flush()?;
    Ok(())
}
