//! Missing-data handling strategies.
//!
//! Complete-case variants drop records; the multiple-imputation variants
//! fill in either the composite DAH90 (`mi_composite`) or the readmission
//! component followed by passive reconstruction of DAH90 (`mi_components`,
//! `mi_components_binomial`). Imputation always runs separately per arm,
//! each arm on its own substream.

use serde::{Deserialize, Serialize};

use crate::dgm::{compose_dah90, Arm, FOLLOW_UP_DAYS};
use crate::error::{invalid, Error, Result};
use crate::missingness::{MaskedRecord, Status};
use crate::statcore::linalg::{spd_inverse, spd_solve};
use crate::statcore::{
    draw_binomial, draw_mvnormal, draw_normal, draw_scaled_inv_chisq, logistic, solve_least_squares,
    DesignMatrix, LeastSquaresFit, Matrix, RngStream,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MethodKind {
    CompleteCase,
    CompleteCaseDerived,
    #[serde(rename = "MIComposite")]
    MiComposite,
    #[serde(rename = "MIComponents")]
    MiComponents,
    #[serde(rename = "MIComponentsBinomial")]
    MiComponentsBinomial,
}

impl MethodKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodKind::CompleteCase => "CompleteCase",
            MethodKind::CompleteCaseDerived => "CompleteCaseDerived",
            MethodKind::MiComposite => "MIComposite",
            MethodKind::MiComponents => "MIComponents",
            MethodKind::MiComponentsBinomial => "MIComponentsBinomial",
        }
    }

    pub fn is_mi(self) -> bool {
        matches!(
            self,
            MethodKind::MiComposite | MethodKind::MiComponents | MethodKind::MiComponentsBinomial
        )
    }

    fn uses_engine(self) -> bool {
        matches!(self, MethodKind::MiComposite | MethodKind::MiComponents)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Bayesian linear regression draw.
    #[default]
    Norm,
    /// Predictive mean matching.
    Pmm,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Norm => "norm",
            Engine::Pmm => "pmm",
        }
    }
}

/// Which coefficients PMM uses on each side of the distance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PmmMatching {
    /// Recipients use the drawn coefficients, donors the least-squares fit.
    #[default]
    Type1,
    /// Both sides use the least-squares fit.
    Type0,
}

fn default_k() -> usize {
    5
}

fn default_m() -> usize {
    35
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub kind: MethodKind,
    #[serde(default)]
    pub engine: Engine,
    #[serde(default = "default_k")]
    pub donors_k: usize,
    #[serde(default = "default_m")]
    pub num_imputations: usize,
    #[serde(default)]
    pub pmm_matching: PmmMatching,
    /// Round and clamp imputed readmission days into `[0, w]`.
    #[serde(default = "yes")]
    pub clamp_components: bool,
}

impl MethodSpec {
    pub fn new(kind: MethodKind) -> Self {
        Self {
            kind,
            engine: Engine::Norm,
            donors_k: default_k(),
            num_imputations: default_m(),
            pmm_matching: PmmMatching::Type1,
            clamp_components: true,
        }
    }

    pub fn complete_case() -> Self {
        Self::new(MethodKind::CompleteCase)
    }

    pub fn complete_case_derived() -> Self {
        Self::new(MethodKind::CompleteCaseDerived)
    }

    pub fn mi_composite(engine: Engine) -> Self {
        Self {
            engine,
            ..Self::new(MethodKind::MiComposite)
        }
    }

    pub fn mi_components(engine: Engine) -> Self {
        Self {
            engine,
            ..Self::new(MethodKind::MiComponents)
        }
    }

    pub fn mi_components_binomial() -> Self {
        Self::new(MethodKind::MiComponentsBinomial)
    }

    pub fn with_donors(mut self, k: usize) -> Self {
        self.donors_k = k;
        self
    }

    pub fn with_imputations(mut self, m: usize) -> Self {
        self.num_imputations = m;
        self
    }

    pub fn engine_label(&self) -> &'static str {
        if self.kind.uses_engine() {
            self.engine.as_str()
        } else {
            ""
        }
    }

    pub fn uses_pmm(&self) -> bool {
        self.kind.uses_engine() && self.engine == Engine::Pmm
    }

    /// Human-readable and stable identifier, also used to key substreams.
    pub fn label(&self) -> String {
        let mut s = self.kind.as_str().to_string();
        if self.kind.uses_engine() {
            s.push('(');
            s.push_str(self.engine.as_str());
            if self.engine == Engine::Pmm {
                s.push_str(&format!(",k={}", self.donors_k));
                if self.pmm_matching == PmmMatching::Type0 {
                    s.push_str(",type0");
                }
            }
            if self.kind == MethodKind::MiComponents && !self.clamp_components {
                s.push_str(",unclamped");
            }
            s.push(')');
        }
        if self.kind.is_mi() {
            s.push_str(&format!("[M={}]", self.num_imputations));
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind.is_mi() && self.num_imputations < 2 {
            return Err(invalid!("{}: need at least 2 imputations", self.label()));
        }
        if self.uses_pmm() && self.donors_k == 0 {
            return Err(invalid!("{}: donors_k must be positive", self.label()));
        }
        Ok(())
    }
}

/// Analysis-ready outcomes split by arm.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArmSamples {
    pub control: Vec<f64>,
    pub experimental: Vec<f64>,
}

impl ArmSamples {
    fn push(&mut self, arm: Arm, y: f64) {
        match arm {
            Arm::Control => self.control.push(y),
            Arm::Experimental => self.experimental.push(y),
        }
    }

    fn require_two_per_arm(self, what: &str) -> Result<Self> {
        if self.control.len() < 2 || self.experimental.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "{what}: {} control and {} experimental records retained",
                self.control.len(),
                self.experimental.len()
            )));
        }
        Ok(self)
    }
}

/// One completed copy of the trial data.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletedDataset {
    pub arm: Vec<Arm>,
    pub value: Vec<f64>,
    pub imputed: Vec<bool>,
}

impl CompletedDataset {
    fn observed(masked: &[MaskedRecord], observed_value: impl Fn(&MaskedRecord) -> f64) -> Self {
        Self {
            arm: masked.iter().map(|m| m.base.arm).collect(),
            value: masked.iter().map(observed_value).collect(),
            imputed: vec![false; masked.len()],
        }
    }

    pub fn by_arm(&self) -> ArmSamples {
        let mut out = ArmSamples::default();
        for (a, v) in self.arm.iter().zip(&self.value) {
            out.push(*a, *v);
        }
        out
    }
}

fn observed_dah90(m: &MaskedRecord) -> f64 {
    f64::from(m.base.outcome.dah90)
}

/// Analyse only records whose post-discharge period is fully observed.
pub fn complete_case(masked: &[MaskedRecord]) -> Result<ArmSamples> {
    let mut out = ArmSamples::default();
    for m in masked.iter().filter(|m| m.status == Status::Complete) {
        out.push(m.base.arm, observed_dah90(m));
    }
    out.require_two_per_arm("complete case")
}

/// Complete cases plus every death, whose DAH90 is known to be zero.
pub fn complete_case_derived(masked: &[MaskedRecord]) -> Result<ArmSamples> {
    let mut out = ArmSamples::default();
    for m in masked {
        if m.base.outcome.death {
            out.push(m.base.arm, 0.0);
        } else if m.status == Status::Complete {
            out.push(m.base.arm, observed_dah90(m));
        }
    }
    out.require_two_per_arm("complete case (derived)")
}

/// Posterior draw of a normal linear imputation model.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraw {
    pub beta_tilde: Vec<f64>,
    pub sigma_tilde_sq: f64,
    pub beta_hat: Vec<f64>,
    pub sigma_hat_sq: f64,
    pub xtx_inverse: Matrix,
}

fn fit_imputation_model(x_obs: &DesignMatrix, y_obs: &[f64]) -> Result<LeastSquaresFit> {
    if x_obs.rows() <= x_obs.cols() {
        return Err(Error::InsufficientData(format!(
            "{} observed rows for {} imputation-model columns",
            x_obs.rows(),
            x_obs.cols()
        )));
    }
    solve_least_squares(x_obs, y_obs)
}

/// Draw `σ̃² ~ (n-p)σ̂²/χ²_{n-p}` and `β̃ ~ N(β̂, σ̃²(XᵀX)⁻¹)` from a fitted model.
pub fn draw_posterior(fit: &LeastSquaresFit, n_obs: usize, rng: &mut RngStream) -> Result<PosteriorDraw> {
    let p = fit.coefficients.len();
    let (beta_tilde, sigma_tilde_sq) = if fit.residual_variance == 0.0 {
        (fit.coefficients.clone(), 0.0)
    } else {
        let s2 = draw_scaled_inv_chisq((n_obs - p) as u64, fit.residual_variance, rng)?;
        let beta = draw_mvnormal(&fit.coefficients, &fit.xtx_inverse.scaled(s2), rng)?;
        (beta, s2)
    };
    Ok(PosteriorDraw {
        beta_tilde,
        sigma_tilde_sq,
        beta_hat: fit.coefficients.clone(),
        sigma_hat_sq: fit.residual_variance,
        xtx_inverse: fit.xtx_inverse.clone(),
    })
}

/// Least-squares fit of the observed rows followed by one posterior draw.
pub fn fit_and_draw(x_obs: &DesignMatrix, y_obs: &[f64], rng: &mut RngStream) -> Result<PosteriorDraw> {
    let fit = fit_imputation_model(x_obs, y_obs)?;
    draw_posterior(&fit, x_obs.rows(), rng)
}

/// Draws from the conditional predictive distribution `N(xᵀβ̃, σ̃²)`.
pub fn impute_norm(draw: &PosteriorDraw, x_mis: &DesignMatrix, rng: &mut RngStream) -> Result<Vec<f64>> {
    let sd = draw.sigma_tilde_sq.sqrt();
    x_mis
        .predict(&draw.beta_tilde)
        .into_iter()
        .map(|mu| draw_normal(mu, sd, rng))
        .collect()
}

/// Donor predictions sorted by value, ties by donor index.
struct DonorIndex {
    sorted: Vec<(f64, usize)>,
}

impl DonorIndex {
    fn new(predictions: &[f64]) -> Self {
        let mut sorted: Vec<(f64, usize)> = predictions.iter().copied().zip(0..).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Self { sorted }
    }

    /// The `k` donors closest to `target`; equidistant donors are taken in
    /// ascending index order.
    fn nearest(&self, target: f64, k: usize) -> Vec<usize> {
        let s = &self.sorted;
        let dist = |i: usize| (s[i].0 - target).abs();
        let split = s.partition_point(|d| d.0 < target);
        let (mut left, mut right) = (split, split);
        let mut picked: Vec<(f64, usize)> = Vec::with_capacity(k + 4);
        let mut kth = f64::INFINITY;
        loop {
            let l = (left > 0).then(|| dist(left - 1));
            let r = (right < s.len()).then(|| dist(right));
            let take_left = match (l, r) {
                (None, None) => break,
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (Some(a), Some(b)) => a <= b,
            };
            let d = if take_left { l.unwrap() } else { r.unwrap() };
            if picked.len() >= k && d > kth {
                break;
            }
            let pos = if take_left {
                left -= 1;
                left
            } else {
                right += 1;
                right - 1
            };
            picked.push((d, s[pos].1));
            if picked.len() == k {
                kth = d;
            }
        }
        picked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        picked.truncate(k);
        picked.into_iter().map(|(_, i)| i).collect()
    }
}

/// Predictive mean matching: each recipient takes the observed value of a
/// donor chosen uniformly among the `k` closest predicted means.
pub fn impute_pmm(
    draw: &PosteriorDraw,
    x_obs: &DesignMatrix,
    y_obs: &[f64],
    x_mis: &DesignMatrix,
    k: usize,
    matching: PmmMatching,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    if k == 0 || k > y_obs.len() {
        return Err(invalid!("PMM needs 1 <= k <= {} donors (k = {k})", y_obs.len()));
    }
    let donors = DonorIndex::new(&x_obs.predict(&draw.beta_hat));
    let target_coeffs = match matching {
        PmmMatching::Type1 => &draw.beta_tilde,
        PmmMatching::Type0 => &draw.beta_hat,
    };
    Ok(x_mis
        .predict(target_coeffs)
        .into_iter()
        .map(|t| {
            let nearest = donors.nearest(t, k);
            y_obs[nearest[rng.index(nearest.len())]]
        })
        .collect())
}

fn standardise(values: &mut [f64]) {
    let n = values.len() as f64;
    if n == 0.0 {
        return;
    }
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
    values.iter_mut().for_each(|v| *v = (*v - mean) / sd);
}

/// Imputation predictors for one arm: age, sex, within-arm standardised BMI
/// and optionally the extended stay.
fn predictors(records: &[&MaskedRecord], with_stay: bool) -> Vec<Vec<f64>> {
    let mut bmi: Vec<f64> = records.iter().map(|m| m.base.covariates.bmi).collect();
    standardise(&mut bmi);
    records
        .iter()
        .zip(bmi)
        .map(|(m, b)| {
            let c = &m.base.covariates;
            let mut row = vec![c.age(), c.sex(), b];
            if with_stay {
                row.push(f64::from(m.base.outcome.extended_stay));
            }
            row
        })
        .collect()
}

fn design(rows: &[Vec<f64>], which: &[usize]) -> DesignMatrix {
    let p = rows.first().map_or(0, Vec::len);
    DesignMatrix::with_intercept(which.iter().map(|&i| &rows[i]), p)
}

/// Indices into `masked` of each arm's records, in input order.
fn arm_indices(masked: &[MaskedRecord]) -> [Vec<usize>; 2] {
    let mut out = [Vec::new(), Vec::new()];
    for (i, m) in masked.iter().enumerate() {
        out[m.base.arm.index()].push(i);
    }
    out
}

/// Shared driver for the linear-model imputations. `target` extracts the
/// observed imputation target; `complete` turns an imputed target into the
/// final DAH90 for a record.
fn mi_linear(
    masked: &[MaskedRecord],
    spec: &MethodSpec,
    with_stay: bool,
    target: impl Fn(&MaskedRecord) -> f64,
    complete: impl Fn(&MaskedRecord, f64) -> Result<f64>,
    rng: &RngStream,
) -> Result<Vec<CompletedDataset>> {
    spec.validate()?;
    let m_total = spec.num_imputations;
    let mut datasets = vec![CompletedDataset::observed(masked, observed_dah90); m_total];
    for (arm, idx) in Arm::BOTH.iter().zip(arm_indices(masked)) {
        let records: Vec<&MaskedRecord> = idx.iter().map(|&i| &masked[i]).collect();
        let rows = predictors(&records, with_stay);
        let (obs, mis): (Vec<usize>, Vec<usize>) =
            (0..records.len()).partition(|&j| records[j].status == Status::Complete);
        if mis.is_empty() {
            continue;
        }
        let x_obs = design(&rows, &obs);
        let x_mis = design(&rows, &mis);
        let y_obs: Vec<f64> = obs.iter().map(|&j| target(records[j])).collect();
        let fit = fit_imputation_model(&x_obs, &y_obs)
            .map_err(|e| Error::InsufficientData(format!("arm {}: {e}", arm.index())))?;
        if spec.uses_pmm() && spec.donors_k > obs.len() {
            return Err(invalid!("arm {}: k = {} exceeds {} donors", arm.index(), spec.donors_k, obs.len()));
        }
        let mut arm_rng = rng.substream(arm.index() as u64);
        for ds in datasets.iter_mut() {
            let draw = draw_posterior(&fit, obs.len(), &mut arm_rng)?;
            let imputed = match spec.engine {
                Engine::Norm => impute_norm(&draw, &x_mis, &mut arm_rng)?,
                Engine::Pmm => impute_pmm(
                    &draw,
                    &x_obs,
                    &y_obs,
                    &x_mis,
                    spec.donors_k,
                    spec.pmm_matching,
                    &mut arm_rng,
                )?,
            };
            for (&j, v) in mis.iter().zip(imputed) {
                let i = idx[j];
                ds.value[i] = complete(&masked[i], v)?;
                ds.imputed[i] = true;
            }
        }
    }
    Ok(datasets)
}

/// Impute the composite: every non-complete record's DAH90 is treated as
/// missing, deaths included, and imputed on age, sex and BMI.
pub fn mi_composite(masked: &[MaskedRecord], spec: &MethodSpec, rng: &RngStream) -> Result<Vec<CompletedDataset>> {
    // Normal draws stay continuous and unclamped.
    mi_linear(masked, spec, false, observed_dah90, |_, v| Ok(v), rng)
}

/// Impute readmission days on age, sex, BMI and the extended stay, then
/// rebuild DAH90 from the components. Partial windows are discarded.
pub fn mi_components(masked: &[MaskedRecord], spec: &MethodSpec, rng: &RngStream) -> Result<Vec<CompletedDataset>> {
    let clamp = spec.clamp_components;
    mi_linear(
        masked,
        spec,
        true,
        |m| f64::from(m.base.outcome.readmission_days),
        |m, yr| {
            let o = &m.base.outcome;
            if o.death {
                return Ok(0.0);
            }
            if clamp {
                let yr = yr.round().clamp(0.0, f64::from(o.window)) as u32;
                Ok(f64::from(compose_dah90(o.min_stay, o.extended_stay, yr, false)?))
            } else {
                Ok(f64::from(FOLLOW_UP_DAYS - o.total_initial_stay) - yr)
            }
        },
        rng,
    )
}

/// Ridge strength per binomial trial, so the penalty keeps the same weight
/// relative to the log-likelihood whatever the window lengths.
const BINOMIAL_RIDGE_PER_TRIAL: f64 = 1e-4;
const BINOMIAL_MIN_RECORDS: usize = 10;

/// Penalised binomial-logit fit: mode and inverse penalised information.
#[derive(Debug, Clone)]
pub struct LogisticFit {
    pub coefficients: Vec<f64>,
    pub covariance: Matrix,
    pub iterations: usize,
}

/// Maximise `Σ [yᵢηᵢ - nᵢ log(1 + e^ηᵢ)] - λ/2 ‖β‖²` by damped Newton steps.
pub fn fit_binomial_logit(x: &DesignMatrix, successes: &[f64], trials: &[f64], ridge: f64) -> Result<LogisticFit> {
    let p = x.cols();
    let objective = |beta: &[f64]| -> f64 {
        let eta = x.predict(beta);
        let ll: f64 = eta
            .iter()
            .zip(successes.iter().zip(trials))
            .map(|(e, (y, n))| y * e - n * softplus(*e))
            .sum();
        ll - 0.5 * ridge * beta.iter().map(|b| b * b).sum::<f64>()
    };
    let mut beta = vec![0.0; p];
    let mut current = objective(&beta);
    for iter in 1..=200 {
        let eta = x.predict(&beta);
        let probs: Vec<f64> = eta.iter().map(|e| logistic(*e)).collect();
        let resid: Vec<f64> = (0..x.rows()).map(|i| successes[i] - trials[i] * probs[i]).collect();
        let weights: Vec<f64> = (0..x.rows()).map(|i| trials[i] * probs[i] * (1.0 - probs[i])).collect();
        let mut grad = x.xt_vec(&resid);
        for (g, b) in grad.iter_mut().zip(&beta) {
            *g -= ridge * b;
        }
        let mut info = x.gram(Some(&weights));
        for j in 0..p {
            info[(j, j)] += ridge;
        }
        let step = spd_solve(&info, &grad)?;
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + scale * s).collect();
            let value = objective(&cand);
            if value.is_finite() && value >= current - 1e-12 * current.abs() {
                accepted = Some((cand, value));
                break;
            }
            scale *= 0.5;
        }
        let Some((next, value)) = accepted else {
            return Err(Error::MethodFailure("binomial logit: line search failed".into()));
        };
        let moved = next.iter().zip(&beta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        beta = next;
        current = value;
        if moved < 1e-8 {
            let probs: Vec<f64> = x.predict(&beta).iter().map(|e| logistic(*e)).collect();
            let weights: Vec<f64> = (0..x.rows()).map(|i| trials[i] * probs[i] * (1.0 - probs[i])).collect();
            let mut info = x.gram(Some(&weights));
            for j in 0..p {
                info[(j, j)] += ridge;
            }
            return Ok(LogisticFit {
                coefficients: beta,
                covariance: spd_inverse(&info)?,
                iterations: iter,
            });
        }
    }
    Err(Error::MethodFailure("binomial logit did not converge".into()))
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Impute only the hidden part of each window: hidden readmission days are
/// binomial with a per-day probability from a logistic model fitted to the
/// observed days (age, sex, BMI, extended stay; standardised within arm).
pub fn mi_components_binomial(
    masked: &[MaskedRecord],
    num_imputations: usize,
    rng: &RngStream,
) -> Result<Vec<CompletedDataset>> {
    if num_imputations < 2 {
        return Err(invalid!("need at least 2 imputations"));
    }
    let mut datasets = vec![CompletedDataset::observed(masked, observed_dah90); num_imputations];
    for (arm, idx) in Arm::BOTH.iter().zip(arm_indices(masked)) {
        let records: Vec<&MaskedRecord> = idx.iter().map(|&i| &masked[i]).collect();
        let hidden: Vec<usize> = (0..records.len()).filter(|&j| records[j].w_mis > 0).collect();
        if hidden.is_empty() {
            continue;
        }
        let mut rows = predictors(&records, true);
        for col in [0, 1, 3] {
            let mut v: Vec<f64> = rows.iter().map(|r| r[col]).collect();
            standardise(&mut v);
            rows.iter_mut().zip(v).for_each(|(r, x)| r[col] = x);
        }
        let fit_rows: Vec<usize> = (0..records.len()).filter(|&j| records[j].w_obs > 0).collect();
        if fit_rows.len() < BINOMIAL_MIN_RECORDS {
            return Err(Error::InsufficientData(format!(
                "arm {}: {} records with observed post-discharge days",
                arm.index(),
                fit_rows.len()
            )));
        }
        let x_fit = design(&rows, &fit_rows);
        let y: Vec<f64> = fit_rows.iter().map(|&j| f64::from(records[j].yr_obs)).collect();
        let n: Vec<f64> = fit_rows.iter().map(|&j| f64::from(records[j].w_obs)).collect();
        let ridge = BINOMIAL_RIDGE_PER_TRIAL * n.iter().sum::<f64>();
        let fit = fit_binomial_logit(&x_fit, &y, &n, ridge)?;
        let x_hidden = design(&rows, &hidden);
        let mut arm_rng = rng.substream(arm.index() as u64);
        for ds in datasets.iter_mut() {
            let beta = draw_mvnormal(&fit.coefficients, &fit.covariance, &mut arm_rng)?;
            for (row, &j) in hidden.iter().enumerate() {
                let m = records[j];
                let prob = logistic(x_hidden.row(row).iter().zip(&beta).map(|(a, b)| a * b).sum());
                let extra = draw_binomial(u64::from(m.w_mis), prob, &mut arm_rng)? as u32;
                let o = &m.base.outcome;
                let value = compose_dah90(o.min_stay, o.extended_stay, m.yr_obs + extra, o.death)?;
                let i = idx[j];
                ds.value[i] = f64::from(value);
                ds.imputed[i] = true;
            }
        }
    }
    Ok(datasets)
}

/// Output of one handling strategy applied to one masked cohort.
#[derive(Debug, Clone)]
pub enum Handled {
    Single(ArmSamples),
    Imputed(Vec<CompletedDataset>),
}

pub fn apply_method(masked: &[MaskedRecord], spec: &MethodSpec, rng: &RngStream) -> Result<Handled> {
    spec.validate()?;
    Ok(match spec.kind {
        MethodKind::CompleteCase => Handled::Single(complete_case(masked)?),
        MethodKind::CompleteCaseDerived => Handled::Single(complete_case_derived(masked)?),
        MethodKind::MiComposite => Handled::Imputed(mi_composite(masked, spec, rng)?),
        MethodKind::MiComponents => Handled::Imputed(mi_components(masked, spec, rng)?),
        MethodKind::MiComponentsBinomial => {
            Handled::Imputed(mi_components_binomial(masked, spec.num_imputations, rng)?)
        }
    })
}
