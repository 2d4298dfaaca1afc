//! Synthetic trial cohorts for the DAH90 outcome.
//!
//! Each participant's outcome is built from three components: an extended
//! initial stay beyond the protocol minimum (right-censored zero-inflated
//! Poisson inverse-Gaussian), days in readmission within the remaining
//! window (zero-adjusted beta-binomial) and death (Bernoulli). DAH90 is the
//! number of days left at home, or zero for deaths.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::statcore::{
    draw_beta_binomial, draw_inverse_gaussian, draw_normal, draw_poisson, logistic, RngStream,
};

/// Length of the follow-up period in days.
pub const FOLLOW_UP_DAYS: u32 = 90;

/// Marginals of the interim covariate sample.
pub const P_FEMALE: f64 = 0.328;
pub const P_AGE_HIGH: f64 = 0.909;
/// Share of women among participants aged 51 or younger.
pub const P_FEMALE_AGE_LOW: f64 = 0.6;
pub const BMI_MEAN: f64 = 28.0;
pub const BMI_SD: f64 = 5.0;
pub const BMI_RANGE: (f64, f64) = (15.0, 60.0);
pub const SITES: u8 = 6;

const DEFAULT_PARAMS: &str = include_str!("../config/dgm_default.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Arm {
    /// Standard oxygen therapy.
    Control,
    /// High-flow nasal therapy.
    Experimental,
}

impl Arm {
    pub const BOTH: [Arm; 2] = [Arm::Control, Arm::Experimental];

    pub fn index(self) -> usize {
        match self {
            Arm::Control => 0,
            Arm::Experimental => 1,
        }
    }

    pub fn indicator(self) -> f64 {
        self.index() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovariateRow {
    /// Older than 51 years.
    pub age_high: bool,
    pub sex_female: bool,
    /// Body-mass index in kg/m².
    pub bmi: f64,
    pub site: u8,
}

impl CovariateRow {
    pub fn age(&self) -> f64 {
        f64::from(u8::from(self.age_high))
    }

    pub fn sex(&self) -> f64 {
        f64::from(u8::from(self.sex_female))
    }

    /// BMI on the standardised scale used by the outcome model.
    pub fn bmi_z(&self) -> f64 {
        (self.bmi - BMI_MEAN) / BMI_SD
    }
}

/// The three DAH90 components of one participant and the derived quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentOutcome {
    pub min_stay: u32,
    pub extended_stay: u32,
    pub total_initial_stay: u32,
    pub window: u32,
    pub readmission_days: u32,
    pub death: bool,
    pub dah90: u32,
}

impl ComponentOutcome {
    pub fn new(min_stay: u32, extended_stay: u32, readmission_days: u32, death: bool) -> Result<Self> {
        let dah90 = compose_dah90(min_stay, extended_stay, readmission_days, death)?;
        let total_initial_stay = min_stay + extended_stay;
        Ok(Self {
            min_stay,
            extended_stay,
            total_initial_stay,
            window: FOLLOW_UP_DAYS - total_initial_stay,
            readmission_days,
            death,
            dah90,
        })
    }

    pub fn check(&self) -> Result<()> {
        let rebuilt = Self::new(self.min_stay, self.extended_stay, self.readmission_days, self.death)?;
        if rebuilt != *self {
            return Err(Error::InvariantViolation(format!(
                "inconsistent component outcome {self:?}"
            )));
        }
        Ok(())
    }
}

/// DAH90 from its components: `(90 - (p + yE) - yR)` for survivors, 0 for deaths.
pub fn compose_dah90(min_stay: u32, extended_stay: u32, readmission_days: u32, death: bool) -> Result<u32> {
    if min_stay > FOLLOW_UP_DAYS || extended_stay > FOLLOW_UP_DAYS - min_stay {
        return Err(Error::InvariantViolation(format!(
            "initial stay {min_stay}+{extended_stay} exceeds {FOLLOW_UP_DAYS} days"
        )));
    }
    let window = FOLLOW_UP_DAYS - min_stay - extended_stay;
    if readmission_days > window {
        return Err(Error::InvariantViolation(format!(
            "{readmission_days} readmission days exceed the {window}-day post-discharge window"
        )));
    }
    Ok(if death { 0 } else { window - readmission_days })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantRecord {
    pub id: u32,
    pub arm: Arm,
    pub covariates: CovariateRow,
    pub outcome: ComponentOutcome,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// Treatment coefficients are ignored; both arms share one outcome law.
    #[default]
    Null,
    Alternative,
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scenario::Null => "Null",
            Scenario::Alternative => "Alternative",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtendedStayParams {
    /// Logit of the probability of no extended stay.
    pub zero_prob_logit_coeffs: [f64; 5],
    /// Log of the inverse-Gaussian mean.
    pub log_mu_coeffs: [f64; 5],
    pub ig_shape: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadmissionParams {
    /// Logit of the probability of no readmission.
    pub zero_prob_logit_coeffs: [f64; 6],
    /// Logit of the beta-binomial mean proportion.
    pub mu_logit_coeffs: [f64; 6],
    pub dispersion: f64,
}

const TREATMENT: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentModelParams {
    #[serde(default)]
    pub scenario: Scenario,
    pub min_stay: u32,
    pub death_prob: f64,
    pub extended_stay: ExtendedStayParams,
    pub readmission: ReadmissionParams,
}

impl Default for ComponentModelParams {
    fn default() -> Self {
        Self::from_toml(DEFAULT_PARAMS).expect("bundled default parameters are valid")
    }
}

impl ComponentModelParams {
    pub fn from_toml(text: &str) -> Result<Self> {
        let p: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("parameters serialise")
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_stay > FOLLOW_UP_DAYS {
            return Err(invalid!("min_stay {} exceeds follow-up", self.min_stay));
        }
        if !(0.0..=1.0).contains(&self.death_prob) {
            return Err(invalid!("death_prob {} outside [0, 1]", self.death_prob));
        }
        if !(self.extended_stay.ig_shape > 0.0) {
            return Err(invalid!("ig_shape must be positive"));
        }
        if !(self.readmission.dispersion > 0.0) {
            return Err(invalid!("readmission dispersion must be positive"));
        }
        let all = self
            .extended_stay
            .zero_prob_logit_coeffs
            .iter()
            .chain(&self.extended_stay.log_mu_coeffs)
            .chain(&self.readmission.zero_prob_logit_coeffs)
            .chain(&self.readmission.mu_logit_coeffs);
        if all.into_iter().any(|c| !c.is_finite()) {
            return Err(invalid!("component-model coefficients must be finite"));
        }
        Ok(())
    }

    /// Longest possible extended stay, `90 - p`.
    pub fn censor_at(&self) -> u32 {
        FOLLOW_UP_DAYS - self.min_stay
    }

    pub fn with_scenario(mut self, scenario: Scenario) -> Self {
        self.scenario = scenario;
        self
    }

    /// Multiply every treatment coefficient by `factor`.
    pub fn with_treatment_scaled(mut self, factor: f64) -> Self {
        self.extended_stay.zero_prob_logit_coeffs[TREATMENT] *= factor;
        self.extended_stay.log_mu_coeffs[TREATMENT] *= factor;
        self.readmission.zero_prob_logit_coeffs[TREATMENT] *= factor;
        self.readmission.mu_logit_coeffs[TREATMENT] *= factor;
        self
    }

    fn treatment(&self, arm: Arm) -> f64 {
        match self.scenario {
            Scenario::Null => 0.0,
            Scenario::Alternative => arm.indicator(),
        }
    }

    fn stay_predictors(&self, row: &CovariateRow, arm: Arm) -> [f64; 5] {
        [1.0, row.age(), row.sex(), row.bmi_z(), self.treatment(arm)]
    }

    fn readmission_predictors(&self, row: &CovariateRow, arm: Arm, extended_stay: u32) -> [f64; 6] {
        let [a, b, c, d, e] = self.stay_predictors(row, arm);
        [a, b, c, d, e, f64::from(extended_stay)]
    }
}

fn lin<const N: usize>(coeffs: &[f64; N], x: &[f64; N]) -> f64 {
    coeffs.iter().zip(x).map(|(c, v)| c * v).sum()
}

/// Synthetic covariate pool matching the observed sex and age marginals.
///
/// The female and older-than-51 counts are exactly `round(P·n)`. Sixty percent of the
/// younger rows are female (`P_FEMALE_AGE_LOW`), the rest of the women are
/// older; rows are then shuffled. BMI is a Normal(28, 5²) truncated to
/// [15, 60] and the site is uniform over six centres.
pub fn build_covariate_pool(pool_size: usize, rng: &mut RngStream) -> Result<Vec<CovariateRow>> {
    if pool_size == 0 {
        return Err(invalid!("covariate pool must have at least one row"));
    }
    let count = |p: f64, of: usize| (p * of as f64).round() as usize;
    let old = count(P_AGE_HIGH, pool_size);
    let young = pool_size - old;
    let female = count(P_FEMALE, pool_size);
    let young_female = count(P_FEMALE_AGE_LOW, young).min(female);
    let old_female = (female - young_female).min(old);
    let mut cells: Vec<(bool, bool)> = Vec::with_capacity(pool_size);
    cells.extend(std::iter::repeat_n((false, true), young_female));
    cells.extend(std::iter::repeat_n((false, false), young - young_female));
    cells.extend(std::iter::repeat_n((true, true), old_female));
    cells.extend(std::iter::repeat_n((true, false), old - old_female));
    cells.shuffle(rng);
    let (age_high, female): (Vec<bool>, Vec<bool>) = cells.into_iter().unzip();
    let mut pool = Vec::with_capacity(pool_size);
    for i in 0..pool_size {
        let bmi = loop {
            let b = draw_normal(BMI_MEAN, BMI_SD, rng)?;
            if (BMI_RANGE.0..=BMI_RANGE.1).contains(&b) {
                break b;
            }
        };
        pool.push(CovariateRow {
            age_high: age_high[i],
            sex_female: female[i],
            bmi,
            site: rng.index(SITES as usize) as u8,
        });
    }
    Ok(pool)
}

/// Extended initial stay from the right-censored zero-inflated PIG model.
pub fn sample_extended_stay(
    row: &CovariateRow,
    arm: Arm,
    params: &ComponentModelParams,
    rng: &mut RngStream,
) -> Result<u32> {
    let x = params.stay_predictors(row, arm);
    let p_zero = logistic(lin(&params.extended_stay.zero_prob_logit_coeffs, &x));
    if rng.bernoulli(p_zero) {
        return Ok(0);
    }
    let mu = lin(&params.extended_stay.log_mu_coeffs, &x).exp();
    let lambda = draw_inverse_gaussian(mu, params.extended_stay.ig_shape, rng)?;
    let count = draw_poisson(lambda, rng)?;
    Ok(count.min(u64::from(params.censor_at())) as u32)
}

const TRUNCATION_REDRAWS: usize = 1000;

/// Days in readmission within the post-discharge window (zero-adjusted
/// beta-binomial with the window as denominator).
pub fn sample_readmissions(
    row: &CovariateRow,
    arm: Arm,
    extended_stay: u32,
    window: u32,
    params: &ComponentModelParams,
    rng: &mut RngStream,
) -> Result<u32> {
    if window == 0 {
        return Ok(0);
    }
    let x = params.readmission_predictors(row, arm, extended_stay);
    let p_zero = logistic(lin(&params.readmission.zero_prob_logit_coeffs, &x));
    if rng.bernoulli(p_zero) {
        return Ok(0);
    }
    let mu = logistic(lin(&params.readmission.mu_logit_coeffs, &x)).clamp(1e-12, 1.0 - 1e-12);
    for _ in 0..TRUNCATION_REDRAWS {
        let k = draw_beta_binomial(u64::from(window), mu, params.readmission.dispersion, rng)?;
        if k >= 1 {
            return Ok(k as u32);
        }
    }
    Ok(1)
}

pub fn sample_death(params: &ComponentModelParams, rng: &mut RngStream) -> bool {
    rng.bernoulli(params.death_prob)
}

/// Sample all components of one participant and compose DAH90.
pub fn sample_outcome(
    row: &CovariateRow,
    arm: Arm,
    params: &ComponentModelParams,
    rng: &mut RngStream,
) -> Result<ComponentOutcome> {
    let death = sample_death(params, rng);
    let extended = sample_extended_stay(row, arm, params, rng)?;
    let window = FOLLOW_UP_DAYS - params.min_stay - extended;
    let readmissions = sample_readmissions(row, arm, extended, window, params, rng)?;
    ComponentOutcome::new(params.min_stay, extended, readmissions, death)
}

/// Permuted blocks of two: every block holds one participant per arm.
pub fn block_randomise(n: usize, rng: &mut RngStream) -> Vec<Arm> {
    let mut arms = Vec::with_capacity(n);
    while arms.len() + 2 <= n {
        if rng.bernoulli(0.5) {
            arms.extend([Arm::Control, Arm::Experimental]);
        } else {
            arms.extend([Arm::Experimental, Arm::Control]);
        }
    }
    if arms.len() < n {
        arms.push(if rng.bernoulli(0.5) { Arm::Control } else { Arm::Experimental });
    }
    arms
}

/// A cohort of `n` participants with covariates bootstrapped from `pool`.
pub fn generate_cohort(
    n: usize,
    pool: &[CovariateRow],
    params: &ComponentModelParams,
    rng: &mut RngStream,
) -> Result<Vec<ParticipantRecord>> {
    if pool.is_empty() {
        return Err(invalid!("empty covariate pool"));
    }
    params.validate()?;
    let arms = block_randomise(n, rng);
    arms.into_iter()
        .enumerate()
        .map(|(i, arm)| {
            let covariates = pool[rng.index(pool.len())];
            let outcome = sample_outcome(&covariates, arm, params, rng)?;
            Ok(ParticipantRecord {
                id: i as u32,
                arm,
                covariates,
                outcome,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statcore::median;

    fn row() -> CovariateRow {
        CovariateRow {
            age_high: true,
            sex_female: false,
            bmi: 28.0,
            site: 0,
        }
    }

    #[test]
    fn compose_examples() {
        assert_eq!(compose_dah90(4, 0, 0, false).unwrap(), 86);
        assert_eq!(compose_dah90(4, 10, 5, true).unwrap(), 0);
        assert_eq!(compose_dah90(4, 86, 0, false).unwrap(), 0);
        assert!(compose_dah90(4, 87, 0, false).is_err());
        assert!(compose_dah90(4, 80, 7, false).is_err());
    }

    #[test]
    fn default_params_load() {
        let p = ComponentModelParams::default();
        assert_eq!(p.min_stay, 4);
        assert_eq!(p.death_prob, 0.01);
        assert_eq!(p.censor_at(), 86);
        assert_eq!(p.scenario, Scenario::Null);
        let back = ComponentModelParams::from_toml(&p.to_toml()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn pool_of_one() {
        let mut r = RngStream::new(1, 0);
        let pool = build_covariate_pool(1, &mut r).unwrap();
        assert_eq!(pool.len(), 1);
        assert!(pool[0].bmi >= 15.0 && pool[0].bmi <= 60.0);
        assert!(pool[0].site < SITES);
        assert!(build_covariate_pool(0, &mut r).is_err());
    }

    #[test]
    fn pool_of_198_reproduces_interim_counts() {
        let mut r = RngStream::new(1, 0);
        let pool = build_covariate_pool(198, &mut r).unwrap();
        assert_eq!(pool.iter().filter(|c| c.sex_female).count(), 65);
        assert_eq!(pool.iter().filter(|c| c.age_high).count(), 180);
        assert_eq!(pool.iter().filter(|c| !c.age_high && c.sex_female).count(), 11);
    }

    #[test]
    fn huge_zero_inflation_gives_zero_stay() {
        let mut p = ComponentModelParams::default();
        p.extended_stay.zero_prob_logit_coeffs = [50.0, 0.0, 0.0, 0.0, 0.0];
        let mut r = RngStream::new(2, 0);
        for _ in 0..1000 {
            assert_eq!(sample_extended_stay(&row(), Arm::Control, &p, &mut r).unwrap(), 0);
        }
    }

    #[test]
    fn long_stays_are_censored() {
        let mut p = ComponentModelParams::default();
        p.extended_stay.zero_prob_logit_coeffs = [-50.0, 0.0, 0.0, 0.0, 0.0];
        p.extended_stay.log_mu_coeffs = [200f64.ln(), 0.0, 0.0, 0.0, 0.0];
        // A tight mixing law; with a small shape most IG mass sits far below the mean.
        p.extended_stay.ig_shape = 1e5;
        let mut r = RngStream::new(3, 0);
        let n = 10_000;
        let below = (0..n)
            .filter(|_| sample_extended_stay(&row(), Arm::Control, &p, &mut r).unwrap() < 86)
            .count();
        assert!((below as f64 / n as f64) < 0.01, "{below}");
    }

    #[test]
    fn extended_stay_is_right_skewed() {
        let p = ComponentModelParams::default();
        let mut r = RngStream::new(4, 0);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| f64::from(sample_extended_stay(&row(), Arm::Control, &p, &mut r).unwrap()))
            .collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let med = median(&xs).unwrap();
        assert!(mean > med, "mean {mean} median {med}");
        let mut counts = vec![0usize; 87];
        xs.iter().for_each(|&x| counts[x as usize] += 1);
        let mode = (0..87).max_by_key(|&i| counts[i]).unwrap();
        assert!(mode <= 5, "mode {mode}");
    }

    #[test]
    fn readmissions_zero_window_and_forced_zero() {
        let mut p = ComponentModelParams::default();
        let mut r = RngStream::new(5, 0);
        assert_eq!(sample_readmissions(&row(), Arm::Control, 86, 0, &p, &mut r).unwrap(), 0);
        p.readmission.zero_prob_logit_coeffs = [60.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        for _ in 0..1000 {
            assert_eq!(sample_readmissions(&row(), Arm::Control, 3, 83, &p, &mut r).unwrap(), 0);
        }
    }

    #[test]
    fn readmissions_zero_inflated_and_skewed() {
        let p = ComponentModelParams::default();
        let mut r = RngStream::new(6, 0);
        let xs: Vec<u32> = (0..100_000)
            .map(|_| sample_readmissions(&row(), Arm::Control, 2, 84, &p, &mut r).unwrap())
            .collect();
        let zeros = xs.iter().filter(|&&x| x == 0).count() as f64 / xs.len() as f64;
        assert!(zeros > 0.5, "{zeros}");
        assert!(xs.iter().all(|&x| x <= 84));
        let positive: Vec<f64> = xs.iter().filter(|&&x| x > 0).map(|&x| f64::from(x)).collect();
        let mean = positive.iter().sum::<f64>() / positive.len() as f64;
        assert!(mean > median(&positive).unwrap());
    }

    #[test]
    fn death_frequency() {
        let mut p = ComponentModelParams::default();
        let mut r = RngStream::new(7, 0);
        p.death_prob = 0.0;
        assert!((0..1000).all(|_| !sample_death(&p, &mut r)));
        p.death_prob = 1.0;
        assert!((0..1000).all(|_| sample_death(&p, &mut r)));
        p.death_prob = 0.01;
        let n = 1_000_000;
        let d = (0..n).filter(|_| sample_death(&p, &mut r)).count() as f64 / n as f64;
        assert!((d - 0.01).abs() < 0.0003, "{d}");
    }

    #[test]
    fn arms_balanced() {
        let mut r = RngStream::new(8, 0);
        for n in [1280, 7, 2, 1] {
            let arms = block_randomise(n, &mut r);
            let ones = arms.iter().filter(|a| **a == Arm::Experimental).count();
            assert!(ones == n / 2 || ones == n.div_ceil(2));
        }
    }

    #[test]
    fn null_outcome_ignores_arm() {
        let p = ComponentModelParams::default().with_treatment_scaled(3.0);
        for seed in 0..200 {
            let a = sample_outcome(&row(), Arm::Control, &p, &mut RngStream::new(seed, 1)).unwrap();
            let b = sample_outcome(&row(), Arm::Experimental, &p, &mut RngStream::new(seed, 1)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn dah90_marginal_shape() {
        let p = ComponentModelParams::default();
        let mut r = RngStream::new(9, 0);
        let pool = build_covariate_pool(198, &mut r).unwrap();
        let cohort = generate_cohort(100_000, &pool, &p, &mut r).unwrap();
        let y: Vec<f64> = cohort.iter().map(|c| f64::from(c.outcome.dah90)).collect();
        let zero = y.iter().filter(|&&v| v == 0.0).count() as f64 / y.len() as f64;
        assert!(zero > 0.005 && zero < 0.06, "P(y=0) = {zero}");
        assert!(median(&y).unwrap() >= 75.0);
    }
}
