//! The four objectives evaluated on polarity scores, and their derivatives with
//! respect to each score.
//!
//! These are the score-level halves of the training losses; the model-level
//! wrappers in the parent module run the polarity function first and push the
//! derivatives back through it.

use super::TrainError;
use crate::scalar::Scalar;

/// Scores and references of one AL pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlScores<T> {
    pub r_former: T,
    pub r_latter: T,
    pub p_former: T,
    pub p_latter: T,
}

fn batch_size<T: Scalar>(n: usize) -> Result<T, TrainError> {
    if n == 0 {
        Err(TrainError::EmptyBatch)
    } else {
        Ok(T::from_usize(n).expect("batch size fits the scalar"))
    }
}

/// `(1/N) Σ (r_latter − p_latter)² + λ_AL (1/N) Σ (r_former − p_former)²`
pub fn al_loss<T: Scalar>(items: &[AlScores<T>], lambda_al: T) -> Result<T, TrainError> {
    let n = batch_size::<T>(items.len())?;
    let latter: T = items
        .iter()
        .map(|s| (s.r_latter - s.p_latter).powi(2))
        .sum();
    let former: T = items
        .iter()
        .map(|s| (s.r_former - s.p_former).powi(2))
        .sum();
    Ok(latter / n + lambda_al * former / n)
}

/// `(∂L/∂p_former, ∂L/∂p_latter)` for one AL item in a batch of `n`.
pub fn al_score_grad<T: Scalar>(s: &AlScores<T>, lambda_al: T, n: T) -> (T, T) {
    let two = T::two();
    (
        -two * lambda_al * (s.r_former - s.p_former) / n,
        -two * (s.r_latter - s.p_latter) / n,
    )
}

/// Per-pair CA term `λ_CA (a − b)² + μ (2 − a² − b²)`.
pub fn ca_pair_term<T: Scalar>(a: T, b: T, lambda_ca: T, mu: T) -> T {
    lambda_ca * (a - b).powi(2) + mu * (T::two() - a * a - b * b)
}

/// Per-pair CO term `λ_CO (a + b)² + μ (2 − a² − b²)`.
pub fn co_pair_term<T: Scalar>(a: T, b: T, lambda_co: T, mu: T) -> T {
    lambda_co * (a + b).powi(2) + mu * (T::two() - a * a - b * b)
}

/// `λ_CA (1/N) Σ (p(y1) − p(y2))² + μ (1/N) Σ Σ_u (1 − p(u)²)`
pub fn ca_loss<T: Scalar>(pairs: &[(T, T)], lambda_ca: T, mu: T) -> Result<T, TrainError> {
    let n = batch_size::<T>(pairs.len())?;
    Ok(pairs
        .iter()
        .map(|&(a, b)| ca_pair_term(a, b, lambda_ca, mu))
        .sum::<T>()
        / n)
}

/// `λ_CO (1/N) Σ (p(z1) + p(z2))² + μ (1/N) Σ Σ_u (1 − p(u)²)`
pub fn co_loss<T: Scalar>(pairs: &[(T, T)], lambda_co: T, mu: T) -> Result<T, TrainError> {
    let n = batch_size::<T>(pairs.len())?;
    Ok(pairs
        .iter()
        .map(|&(a, b)| co_pair_term(a, b, lambda_co, mu))
        .sum::<T>()
        / n)
}

pub fn ca_score_grad<T: Scalar>(a: T, b: T, lambda_ca: T, mu: T, n: T) -> (T, T) {
    let two = T::two();
    let diff = two * lambda_ca * (a - b);
    ((diff - two * mu * a) / n, (-diff - two * mu * b) / n)
}

pub fn co_score_grad<T: Scalar>(a: T, b: T, lambda_co: T, mu: T, n: T) -> (T, T) {
    let two = T::two();
    let sum = two * lambda_co * (a + b);
    ((sum - two * mu * a) / n, (sum - two * mu * b) / n)
}

/// `(1/N) Σ (R − p)²` over `(reference, score)` items.
pub fn acp_loss<T: Scalar>(items: &[(T, T)]) -> Result<T, TrainError> {
    let n = batch_size::<T>(items.len())?;
    Ok(items.iter().map(|&(r, p)| (r - p).powi(2)).sum::<T>() / n)
}

pub fn acp_score_grad<T: Scalar>(reference: T, score: T, n: T) -> T {
    -T::two() * (reference - score) / n
}
