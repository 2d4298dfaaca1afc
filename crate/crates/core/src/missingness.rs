//! Missingness mechanisms for the post-discharge period.
//!
//! Each participant receives a status (Complete, Partial or Missing) from a
//! multinomial-logit model on age, sex and the true DAH90. Partial records
//! lose a Beta(2, 4) fraction of their post-discharge window; the number of
//! readmission days still visible is hypergeometric (MAR) or the smallest
//! value consistent with hiding as many hospital days as possible (MNAR).
//! The initial stay and death are never masked.

use serde::{Deserialize, Serialize};

use crate::dgm::{CovariateRow, ParticipantRecord, P_AGE_HIGH};
use crate::error::{invalid, Error, Result};
use crate::statcore::{draw_beta, draw_hypergeometric, draw_multinomial_index, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MechanismName {
    #[serde(rename = "MCAR")]
    Mcar,
    #[serde(rename = "MAR_Age")]
    MarAge,
    #[serde(rename = "MAR_Sex")]
    MarSex,
    #[serde(rename = "MAR_AgeSex")]
    MarAgeSex,
    #[serde(rename = "MNAR_Age")]
    MnarAge,
    Custom,
}

impl MechanismName {
    pub const NAMED: [MechanismName; 5] = [
        MechanismName::Mcar,
        MechanismName::MarAge,
        MechanismName::MarSex,
        MechanismName::MarAgeSex,
        MechanismName::MnarAge,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MechanismName::Mcar => "MCAR",
            MechanismName::MarAge => "MAR_Age",
            MechanismName::MarSex => "MAR_Sex",
            MechanismName::MarAgeSex => "MAR_AgeSex",
            MechanismName::MnarAge => "MNAR_Age",
            MechanismName::Custom => "Custom",
        }
    }
}

impl std::str::FromStr for MechanismName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let all = MechanismName::NAMED.iter().chain([&MechanismName::Custom]);
        all.into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .copied()
            .ok_or_else(|| invalid!("unknown mechanism {s:?}"))
    }
}

/// Coefficients of the status model. `alpha` drives full missingness and
/// `beta` partial missingness; both are laid out as
/// `[intercept, age_high, sex_female, dah90]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MechanismConfig", into = "MechanismConfig")]
pub struct MechanismSpec {
    pub name: MechanismName,
    pub label: String,
    pub alpha: [f64; 4],
    pub beta: [f64; 4],
    pub mnar_masking: bool,
}

impl MechanismSpec {
    pub fn named(name: MechanismName) -> Option<Self> {
        let (alpha, beta) = match name {
            MechanismName::Mcar => ([-3.455, 0.0, 0.0, 0.0], [-3.86, 0.0, 0.0, 0.0]),
            MechanismName::MarAge => ([-1.0, -2.0, 0.0, 0.0], [-1.0, -1.5, 0.0, 0.0]),
            MechanismName::MarSex => ([-2.5, 0.0, 0.8, 0.0], [-2.5, 0.0, 0.5, 0.0]),
            MechanismName::MarAgeSex => ([-0.5, -2.0, 0.5, 0.0], [-1.0, -1.0, 0.2, 0.0]),
            // The partial-status outcome coefficient is negative: partial
            // missingness falls as DAH90 rises in every reported stratum.
            MechanismName::MnarAge => ([-0.1, -1.5, 0.0, -0.018], [-0.1, -0.5, 0.0, -0.01]),
            MechanismName::Custom => return None,
        };
        Some(Self {
            name,
            label: name.as_str().to_string(),
            alpha,
            beta,
            mnar_masking: name == MechanismName::MnarAge,
        })
    }

    pub fn mcar() -> Self {
        Self::named(MechanismName::Mcar).unwrap()
    }

    pub fn mar_age() -> Self {
        Self::named(MechanismName::MarAge).unwrap()
    }

    pub fn mar_sex() -> Self {
        Self::named(MechanismName::MarSex).unwrap()
    }

    pub fn mar_age_sex() -> Self {
        Self::named(MechanismName::MarAgeSex).unwrap()
    }

    pub fn mnar_age() -> Self {
        Self::named(MechanismName::MnarAge).unwrap()
    }

    pub fn custom(label: impl Into<String>, alpha: [f64; 4], beta: [f64; 4], mnar_masking: bool) -> Self {
        Self {
            name: MechanismName::Custom,
            label: label.into(),
            alpha,
            beta,
            mnar_masking,
        }
    }

    /// Status model that leaves (practically) every record complete.
    pub fn none() -> Self {
        Self::custom("None", [-50.0, 0.0, 0.0, 0.0], [-50.0, 0.0, 0.0, 0.0], false)
    }

    /// MAR-Age variant whose intercepts are scaled by `factor`.
    pub fn mar_age_scaled(factor: f64) -> Self {
        let mut s = Self::mar_age();
        s.alpha[0] *= factor;
        s.beta[0] *= factor;
        s.name = MechanismName::Custom;
        s.label = format!("MAR_Age_x{factor:.4}");
        s
    }

    /// MAR-Age variant with the given expected fraction of non-complete
    /// participants under the covariate age marginal. Found by bisection on the
    /// intercept scale factor.
    pub fn mar_age_with_missing_fraction(target: f64) -> Result<Self> {
        let base = Self::mar_age();
        let noncomplete = |factor: f64| {
            let mut s = base.clone();
            s.alpha[0] *= factor;
            s.beta[0] *= factor;
            [(false, 1.0 - P_AGE_HIGH), (true, P_AGE_HIGH)]
                .iter()
                .map(|&(age_high, w)| {
                    let row = CovariateRow {
                        age_high,
                        sex_female: false,
                        bmi: 28.0,
                        site: 0,
                    };
                    let (m, p) = linear_predictors(&row, 0.0, &s);
                    w * (1.0 - status_probs(m, p)[0])
                })
                .sum::<f64>()
        };
        // Larger factors push the intercepts down and shrink missingness.
        let (mut lo, mut hi) = (-10.0, 10.0);
        if !(noncomplete(hi) < target && noncomplete(lo) > target) {
            return Err(invalid!("missing fraction {target} not reachable"));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if noncomplete(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut s = Self::mar_age_scaled(0.5 * (lo + hi));
        s.label = format!("MAR_Age_{:.0}pct", target * 100.0);
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha.iter().chain(&self.beta).any(|v| !v.is_finite()) {
            return Err(invalid!("mechanism coefficients must be finite"));
        }
        if let Some(named) = Self::named(self.name) {
            if named.alpha != self.alpha || named.beta != self.beta || named.mnar_masking != self.mnar_masking {
                return Err(invalid!("{} coefficients differ from the named mechanism", self.label));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MechanismConfig {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mnar_masking: Option<bool>,
    /// Rescale MAR_Age to this expected non-complete fraction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    missing_fraction: Option<f64>,
}

impl TryFrom<MechanismConfig> for MechanismSpec {
    type Error = Error;

    fn try_from(c: MechanismConfig) -> Result<Self> {
        let name: MechanismName = c.name.parse()?;
        let spec = match MechanismSpec::named(name) {
            Some(_) if c.missing_fraction.is_some() => {
                if name != MechanismName::MarAge || c.alpha.is_some() || c.beta.is_some() {
                    return Err(invalid!("missing_fraction only rescales MAR_Age"));
                }
                MechanismSpec::mar_age_with_missing_fraction(c.missing_fraction.unwrap_or_default())?
            }
            None if c.missing_fraction.is_some() => {
                return Err(invalid!("missing_fraction only rescales MAR_Age"));
            }
            Some(named) => {
                if c.alpha.is_some() || c.beta.is_some() || c.mnar_masking.is_some() {
                    return Err(invalid!(
                        "mechanism {} has fixed coefficients; use name = \"Custom\" to supply alpha/beta",
                        name.as_str()
                    ));
                }
                named
            }
            None => {
                let (Some(alpha), Some(beta)) = (c.alpha, c.beta) else {
                    return Err(invalid!("Custom mechanism needs both alpha and beta"));
                };
                MechanismSpec::custom(
                    c.label.clone().unwrap_or_else(|| "Custom".into()),
                    alpha,
                    beta,
                    c.mnar_masking.unwrap_or(false),
                )
            }
        };
        let spec = match c.label {
            Some(label) => MechanismSpec { label, ..spec },
            None => spec,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<MechanismSpec> for MechanismConfig {
    fn from(s: MechanismSpec) -> Self {
        let custom = s.name == MechanismName::Custom;
        MechanismConfig {
            name: s.name.as_str().to_string(),
            label: (s.label != s.name.as_str()).then_some(s.label),
            alpha: custom.then_some(s.alpha),
            beta: custom.then_some(s.beta),
            mnar_masking: custom.then_some(s.mnar_masking),
            missing_fraction: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Status {
    Complete,
    Partial,
    Missing,
}

impl Status {
    pub const ALL: [Status; 3] = [Status::Complete, Status::Partial, Status::Missing];
}

/// A participant together with what the trial would actually observe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedRecord {
    pub base: ParticipantRecord,
    pub status: Status,
    /// Observed post-discharge days.
    pub w_obs: u32,
    /// Unobserved post-discharge days.
    pub w_mis: u32,
    /// Readmission days seen within the observed days.
    pub yr_obs: u32,
}

impl MaskedRecord {
    pub fn complete(base: ParticipantRecord) -> Self {
        let o = base.outcome;
        Self {
            base,
            status: Status::Complete,
            w_obs: o.window,
            w_mis: 0,
            yr_obs: o.readmission_days,
        }
    }

    pub fn check(&self) -> Result<()> {
        let o = &self.base.outcome;
        let yr = o.readmission_days;
        let ok = self.w_obs + self.w_mis == o.window
            && self.yr_obs <= yr.min(self.w_obs)
            && yr - self.yr_obs <= self.w_mis
            && match self.status {
                Status::Complete => self.w_mis == 0 && self.yr_obs == yr,
                Status::Missing => self.w_obs == 0 && self.yr_obs == 0,
                Status::Partial => self.w_obs > 0 && self.w_mis > 0,
            };
        if ok {
            Ok(())
        } else {
            Err(Error::InvariantViolation(format!("inconsistent masked record {self:?}")))
        }
    }
}

/// `(η_missing, η_partial)` for one participant with true outcome `y`.
pub fn linear_predictors(row: &CovariateRow, y: f64, spec: &MechanismSpec) -> (f64, f64) {
    let x = [1.0, row.age(), row.sex(), y];
    let eta = |c: &[f64; 4]| c.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
    (eta(&spec.alpha), eta(&spec.beta))
}

/// Softmax status probabilities `[complete, partial, missing]`.
pub fn status_probs(eta_missing: f64, eta_partial: f64) -> [f64; 3] {
    let top = eta_missing.max(eta_partial).max(0.0);
    let e = [(-top).exp(), (eta_partial - top).exp(), (eta_missing - top).exp()];
    let d: f64 = e.iter().sum();
    [e[0] / d, e[1] / d, e[2] / d]
}

/// `w_mis` for a hidden fraction of a window: round half up, clamped to `[1, w]`.
pub fn hidden_days(frac: f64, window: u32) -> u32 {
    ((frac * f64::from(window) + 0.5).floor() as u32).clamp(1, window)
}

/// Mask part of a post-discharge window. Returns `(w_obs, w_mis, yr_obs)`.
pub fn mask_partial_window(window: u32, yr: u32, mnar_masking: bool, rng: &mut RngStream) -> Result<(u32, u32, u32)> {
    if window == 0 {
        return Err(invalid!("cannot partially mask an empty window"));
    }
    let frac = draw_beta(2.0, 4.0, rng)?;
    mask_with_hidden_days(window, yr, hidden_days(frac, window), mnar_masking, rng)
}

/// Masking step once the number of hidden days is fixed.
pub fn mask_with_hidden_days(
    window: u32,
    yr: u32,
    w_mis: u32,
    mnar_masking: bool,
    rng: &mut RngStream,
) -> Result<(u32, u32, u32)> {
    if w_mis > window || yr > window {
        return Err(invalid!("w_mis {w_mis} / yR {yr} exceed window {window}"));
    }
    let w_obs = window - w_mis;
    let yr_obs = if mnar_masking {
        yr.saturating_sub(w_mis)
    } else {
        draw_hypergeometric(u64::from(window), u64::from(yr), u64::from(w_obs), rng)? as u32
    };
    Ok((w_obs, w_mis, yr_obs))
}

fn mask_one(record: ParticipantRecord, spec: &MechanismSpec, rng: &mut RngStream) -> Result<MaskedRecord> {
    let o = record.outcome;
    // Statuses are always drawn so every record consumes the same randomness.
    let (em, ep) = linear_predictors(&record.covariates, f64::from(o.dah90), spec);
    let status = Status::ALL[draw_multinomial_index(&status_probs(em, ep), rng)?];
    if o.window == 0 {
        return Ok(MaskedRecord::complete(record));
    }
    Ok(match status {
        Status::Complete => MaskedRecord::complete(record),
        Status::Missing => MaskedRecord {
            base: record,
            status,
            w_obs: 0,
            w_mis: o.window,
            yr_obs: 0,
        },
        Status::Partial => {
            let (w_obs, w_mis, yr_obs) = mask_partial_window(o.window, o.readmission_days, spec.mnar_masking, rng)?;
            if w_obs == 0 {
                MaskedRecord {
                    base: record,
                    status: Status::Missing,
                    w_obs: 0,
                    w_mis,
                    yr_obs: 0,
                }
            } else {
                MaskedRecord {
                    base: record,
                    status,
                    w_obs,
                    w_mis,
                    yr_obs,
                }
            }
        }
    })
}

pub fn apply_mechanism(
    cohort: &[ParticipantRecord],
    spec: &MechanismSpec,
    rng: &mut RngStream,
) -> Result<Vec<MaskedRecord>> {
    cohort.iter().map(|r| mask_one(r.clone(), spec, rng)).collect()
}
