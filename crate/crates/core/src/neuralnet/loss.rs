use super::graph::LOG_CLAMP;
use super::params::ParamStore;
use super::NnError;
use crate::scalar::Scalar;

/// Summed binary cross-entropy with log arguments clamped at 1e-12.
pub fn bce_loss<T: Scalar>(probs: &[T], targets: &[T]) -> Result<T, NnError> {
    if probs.len() != targets.len() {
        return Err(NnError::DimensionMismatch(format!("{} probabilities, {} targets", probs.len(), targets.len())));
    }
    let clamp = T::of(LOG_CLAMP);
    Ok(probs
        .iter()
        .zip(targets)
        .map(|(&p, &y)| -(y * p.max(clamp).ln() + (T::one() - y) * (T::one() - p).max(clamp).ln()))
        .sum())
}

/// Cross-entropy plus `l2 · Σ‖W‖²` over the weight matrices of `params`.
pub fn loss<T: Scalar>(probs: &[T], targets: &[T], params: &ParamStore<T>, l2: T) -> Result<T, NnError> {
    Ok(bce_loss(probs, targets)? + l2 * params.l2_norm_sq())
}
