//! Statistical primitives shared by the rest of the crate.

pub mod linalg;
pub mod rng;
pub mod sample;

pub use linalg::{solve_least_squares, DesignMatrix, LeastSquaresFit, Matrix};
pub use rng::RngStream;
pub use sample::{
    draw_beta, draw_beta_binomial, draw_binomial, draw_hypergeometric, draw_inverse_gaussian,
    draw_multinomial_index, draw_mvnormal, draw_normal, draw_poisson, draw_scaled_inv_chisq,
};

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Median of an unsorted sample; the mean of the two central order
/// statistics for even lengths. `None` when empty.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}
