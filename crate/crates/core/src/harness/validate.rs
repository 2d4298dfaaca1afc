//! Empirical status frequencies of a missingness mechanism.

use serde::Serialize;

use crate::dgm::{build_covariate_pool, generate_cohort, ComponentModelParams};
use crate::error::{invalid, Result};
use crate::missingness::{apply_mechanism, MechanismName, MechanismSpec, Status};
use crate::statcore::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Stratum {
    Overall,
    AgeLow,
    AgeHigh,
    Male,
    Female,
    /// DAH90 = 0.
    YZero,
    /// 0 < DAH90 < 70.
    YMid,
    /// DAH90 ≥ 70.
    YHigh,
}

impl Stratum {
    pub const ALL: [Stratum; 8] = [
        Stratum::Overall,
        Stratum::AgeLow,
        Stratum::AgeHigh,
        Stratum::Male,
        Stratum::Female,
        Stratum::YZero,
        Stratum::YMid,
        Stratum::YHigh,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stratum::Overall => "overall",
            Stratum::AgeLow => "Age=0",
            Stratum::AgeHigh => "Age=1",
            Stratum::Male => "male",
            Stratum::Female => "female",
            Stratum::YZero => "y=0",
            Stratum::YMid => "0<y<70",
            Stratum::YHigh => "y>=70",
        }
    }

    /// Covariate strata, as opposed to outcome strata.
    pub fn is_covariate(self) -> bool {
        !matches!(self, Stratum::YZero | Stratum::YMid | Stratum::YHigh)
    }

    fn contains(self, age_high: bool, female: bool, y: u32) -> bool {
        match self {
            Stratum::Overall => true,
            Stratum::AgeLow => !age_high,
            Stratum::AgeHigh => age_high,
            Stratum::Male => !female,
            Stratum::Female => female,
            Stratum::YZero => y == 0,
            Stratum::YMid => y > 0 && y < 70,
            Stratum::YHigh => y >= 70,
        }
    }
}

/// Reference (complete, partial, missing) percentages for the named
/// mechanisms.
pub fn reference_rates(name: MechanismName) -> Vec<(Stratum, [f64; 3])> {
    use Stratum::*;
    let rows: &[(Stratum, [f64; 3])] = match name {
        MechanismName::Mcar => &[(Overall, [95.0, 2.0, 3.0])],
        MechanismName::MarAge => &[
            (Overall, [86.0, 8.0, 6.0]),
            (AgeLow, [59.0, 20.0, 20.0]),
            (AgeHigh, [88.0, 7.0, 4.0]),
        ],
        MechanismName::MarSex => &[
            (Overall, [83.0, 8.0, 9.0]),
            (Male, [86.0, 7.0, 7.0]),
            (Female, [77.0, 10.0, 13.0]),
        ],
        MechanismName::MarAgeSex => &[
            (Overall, [77.0, 13.0, 10.0]),
            (AgeLow, [45.0, 19.0, 36.0]),
            (AgeHigh, [80.0, 12.0, 8.0]),
            (Male, [79.0, 12.0, 9.0]),
            (Female, [72.0, 13.0, 15.0]),
        ],
        MechanismName::MnarAge => &[
            (Overall, [75.0, 20.0, 5.0]),
            (AgeLow, [62.0, 25.0, 13.0]),
            (AgeHigh, [76.0, 20.0, 4.0]),
            (YZero, [54.0, 36.0, 10.0]),
            (YMid, [70.0, 23.0, 6.0]),
            (YHigh, [76.0, 19.0, 5.0]),
        ],
        MechanismName::Custom => &[],
    };
    rows.iter().map(|(s, r)| (*s, r.map(|v| v / 100.0))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratumRow {
    pub stratum: Stratum,
    pub count: usize,
    /// Fractions in the order complete, partial, missing.
    pub observed: [f64; 3],
    pub target: Option<[f64; 3]>,
    pub deviation: Option<[f64; 3]>,
}

impl StratumRow {
    pub fn max_abs_deviation(&self) -> Option<f64> {
        self.deviation.map(|d| d.iter().fold(0.0, |m, v| f64::max(m, v.abs())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MechanismReport {
    pub mechanism: String,
    pub sample_size: usize,
    pub rows: Vec<StratumRow>,
}

impl MechanismReport {
    pub fn row(&self, stratum: Stratum) -> Option<&StratumRow> {
        self.rows.iter().find(|r| r.stratum == stratum)
    }
}

impl std::fmt::Display for MechanismReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "mechanism {} (n = {})", self.mechanism, self.sample_size)?;
        writeln!(f, "{:<9} {:>7}  {:>22}  {:>22}  {:>8}", "stratum", "count", "observed (C/P/M)", "reference", "max|dev|")?;
        let pct = |v: [f64; 3]| format!("{:5.1} {:5.1} {:5.1}", v[0] * 100.0, v[1] * 100.0, v[2] * 100.0);
        for r in &self.rows {
            writeln!(
                f,
                "{:<9} {:>7}  {:>22}  {:>22}  {:>8}",
                r.stratum.as_str(),
                r.count,
                pct(r.observed),
                r.target.map(pct).unwrap_or_default(),
                r.max_abs_deviation().map(|d| format!("{:.4}", d)).unwrap_or_default(),
            )?;
        }
        Ok(())
    }
}

/// Simulate `sample_size` participants, apply the mechanism and tabulate
/// status frequencies by stratum next to the reference rates.
pub fn validate_mechanism(
    spec: &MechanismSpec,
    dgm: &ComponentModelParams,
    sample_size: usize,
    seed: u64,
) -> Result<MechanismReport> {
    if sample_size < 10_000 {
        return Err(invalid!("mechanism validation needs at least 10^4 participants"));
    }
    let root = RngStream::new(seed, 0);
    let pool = build_covariate_pool(198, &mut root.substream(0))?;
    let cohort = generate_cohort(sample_size, &pool, dgm, &mut root.substream(1))?;
    let masked = apply_mechanism(&cohort, spec, &mut root.substream(2))?;
    let targets = reference_rates(spec.name);
    let rows = Stratum::ALL
        .iter()
        .map(|&stratum| {
            let mut counts = [0usize; 3];
            for m in &masked {
                let c = &m.base.covariates;
                if stratum.contains(c.age_high, c.sex_female, m.base.outcome.dah90) {
                    let k = Status::ALL.iter().position(|s| *s == m.status).unwrap();
                    counts[k] += 1;
                }
            }
            let total: usize = counts.iter().sum();
            let observed = counts.map(|c| if total > 0 { c as f64 / total as f64 } else { f64::NAN });
            let target = targets.iter().find(|(s, _)| *s == stratum).map(|(_, t)| *t);
            StratumRow {
                stratum,
                count: total,
                observed,
                target,
                deviation: target.map(|t| [0, 1, 2].map(|i| observed[i] - t[i])),
            }
        })
        .collect();
    Ok(MechanismReport {
        mechanism: spec.label.clone(),
        sample_size,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn references_sum_to_about_one() {
        for name in MechanismName::NAMED {
            for (_, r) in reference_rates(name) {
                assert!((r.iter().sum::<f64>() - 1.0).abs() <= 0.011, "{name:?} {r:?}");
            }
        }
    }

    #[test]
    fn small_samples_rejected() {
        let dgm = ComponentModelParams::default();
        assert!(validate_mechanism(&MechanismSpec::mcar(), &dgm, 100, 1).is_err());
    }

    #[test]
    fn report_counts_are_consistent() {
        let dgm = ComponentModelParams::default();
        let r = validate_mechanism(&MechanismSpec::mar_sex(), &dgm, 20_000, 3).unwrap();
        let n = |s| r.row(s).unwrap().count;
        assert_eq!(n(Stratum::Overall), 20_000);
        assert_eq!(n(Stratum::Male) + n(Stratum::Female), 20_000);
        assert_eq!(n(Stratum::AgeLow) + n(Stratum::AgeHigh), 20_000);
        assert_eq!(n(Stratum::YZero) + n(Stratum::YMid) + n(Stratum::YHigh), 20_000);
        assert!(r.row(Stratum::Female).unwrap().target.is_some());
        assert!(r.row(Stratum::AgeLow).unwrap().target.is_none());
        assert!(r.to_string().contains("female"));
    }
}
