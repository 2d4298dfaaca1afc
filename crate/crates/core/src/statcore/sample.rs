//! Random variate generators.
//!
//! Thin validated wrappers over `rand_distr` for the textbook families plus
//! the inverse-Gaussian and multivariate-normal generators used by the
//! outcome model and the imputation posterior.

use rand_distr::{Beta, Binomial, ChiSquared, Distribution, Hypergeometric, Poisson};

use super::linalg::{cholesky_psd, Matrix};
use super::rng::RngStream;
use crate::error::{invalid, Result};

pub fn draw_normal(mean: f64, sd: f64, rng: &mut RngStream) -> Result<f64> {
    if !(sd >= 0.0) || !mean.is_finite() || !sd.is_finite() {
        return Err(invalid!("normal needs finite mean and sd >= 0 (sd = {sd})"));
    }
    if sd == 0.0 {
        return Ok(mean);
    }
    let z: f64 = rand_distr::StandardNormal.sample(rng);
    Ok(mean + sd * z)
}

/// `df · scale / χ²_df`: the scaled inverse-χ² posterior of a variance.
pub fn draw_scaled_inv_chisq(df: u64, scale: f64, rng: &mut RngStream) -> Result<f64> {
    if df == 0 {
        return Err(invalid!("scaled inverse chi-square needs df >= 1"));
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(invalid!("scaled inverse chi-square needs scale > 0 (got {scale})"));
    }
    let chi = ChiSquared::new(df as f64).map_err(|e| invalid!("{e}"))?;
    loop {
        let c: f64 = chi.sample(rng);
        if c > 0.0 {
            return Ok(df as f64 * scale / c);
        }
    }
}

/// Multivariate normal draw `mean + L·z` with `LLᵀ = covariance`.
///
/// Singular positive semi-definite covariances are factored directly; an
/// indefinite matrix gets one retry with `1e-10` added to the diagonal.
pub fn draw_mvnormal(mean: &[f64], covariance: &Matrix, rng: &mut RngStream) -> Result<Vec<f64>> {
    let p = mean.len();
    if covariance.rows() != p || covariance.cols() != p {
        return Err(invalid!("covariance is {}x{}, mean has length {p}", covariance.rows(), covariance.cols()));
    }
    let l = match cholesky_psd(covariance) {
        Ok(l) => l,
        Err(_) => {
            let mut jittered = covariance.clone();
            for i in 0..p {
                jittered[(i, i)] += 1e-10;
            }
            cholesky_psd(&jittered)?
        }
    };
    if (0..p).all(|i| (0..=i).all(|j| l[(i, j)] == 0.0)) {
        return Ok(mean.to_vec());
    }
    let z: Vec<f64> = (0..p)
        .map(|_| rand_distr::StandardNormal.sample(rng))
        .collect();
    Ok((0..p)
        .map(|i| mean[i] + (0..=i).map(|j| l[(i, j)] * z[j]).sum::<f64>())
        .collect())
}

/// Inverse-Gaussian draw by the transformation-with-rejection method of
/// Michael, Schucany and Haas.
pub fn draw_inverse_gaussian(mu: f64, shape: f64, rng: &mut RngStream) -> Result<f64> {
    if !(mu > 0.0 && shape > 0.0) || !mu.is_finite() || !shape.is_finite() {
        return Err(invalid!("inverse Gaussian needs mu > 0 and shape > 0 (got {mu}, {shape})"));
    }
    let nu: f64 = rand_distr::StandardNormal.sample(rng);
    let y = nu * nu;
    // The two roots multiply to mu²; compute the larger without cancellation.
    let larger = mu + mu * mu * y / (2.0 * shape)
        + (mu / (2.0 * shape)) * (4.0 * mu * shape * y + mu * mu * y * y).sqrt();
    let smaller = mu * mu / larger;
    let u = rng.uniform();
    let x = if u <= mu / (mu + smaller) { smaller } else { larger };
    Ok(x.max(f64::MIN_POSITIVE))
}

pub fn draw_poisson(lambda: f64, rng: &mut RngStream) -> Result<u64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(invalid!("poisson needs finite lambda >= 0 (got {lambda})"));
    }
    if lambda == 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(lambda).map_err(|e| invalid!("poisson({lambda}): {e}"))?;
    let k: f64 = d.sample(rng);
    Ok(k as u64)
}

pub fn draw_beta(a: f64, b: f64, rng: &mut RngStream) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(invalid!("beta needs a > 0 and b > 0 (got {a}, {b})"));
    }
    let d = Beta::new(a, b).map_err(|e| invalid!("beta({a}, {b}): {e}"))?;
    Ok(d.sample(rng))
}

pub fn draw_binomial(trials: u64, p: f64, rng: &mut RngStream) -> Result<u64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid!("binomial probability {p} outside [0, 1]"));
    }
    if trials == 0 || p == 0.0 {
        return Ok(0);
    }
    if p == 1.0 {
        return Ok(trials);
    }
    let d = Binomial::new(trials, p).map_err(|e| invalid!("binomial: {e}"))?;
    Ok(d.sample(rng))
}

/// Beta-binomial with mean proportion `mu` and precision `dispersion`:
/// `p ~ Beta(mu·φ, (1-mu)·φ)`, then `Binomial(trials, p)`.
pub fn draw_beta_binomial(trials: u64, mu: f64, dispersion: f64, rng: &mut RngStream) -> Result<u64> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(invalid!("beta-binomial mean {mu} outside (0, 1)"));
    }
    if !(dispersion > 0.0) || !dispersion.is_finite() {
        return Err(invalid!("beta-binomial dispersion must be positive (got {dispersion})"));
    }
    if trials == 0 {
        return Ok(0);
    }
    let p = draw_beta(mu * dispersion, (1.0 - mu) * dispersion, rng)?;
    draw_binomial(trials, p, rng)
}

/// Number of successes when drawing `sample` items without replacement from
/// `population` items of which `successes` are marked.
pub fn draw_hypergeometric(population: u64, successes: u64, sample: u64, rng: &mut RngStream) -> Result<u64> {
    if successes > population || sample > population {
        return Err(invalid!(
            "hypergeometric needs successes ({successes}) and sample ({sample}) <= population ({population})"
        ));
    }
    let lo = sample.saturating_sub(population - successes);
    let hi = sample.min(successes);
    if lo == hi {
        return Ok(lo);
    }
    let d = Hypergeometric::new(population, successes, sample).map_err(|e| invalid!("hypergeometric: {e}"))?;
    Ok(d.sample(rng).clamp(lo, hi))
}

/// Index drawn with the given category probabilities.
pub fn draw_multinomial_index(probs: &[f64], rng: &mut RngStream) -> Result<usize> {
    if probs.is_empty() || probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(invalid!("probabilities must be finite and non-negative"));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(invalid!("probabilities sum to {total}, not 1"));
    }
    let u = rng.uniform() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
            acc += p;
            if u < acc {
                return Ok(i);
            }
        }
    }
    Ok(last_positive)
}
