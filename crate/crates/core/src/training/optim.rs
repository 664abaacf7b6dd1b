use super::TrainError;
use crate::scalar::Scalar;

/// Classical momentum update, in place:
/// `v ← momentum·v − lr·g`, then `θ ← θ + v`.
pub fn momentum_step<T: Scalar>(
    params: &mut [T],
    grads: &[T],
    velocity: &mut [T],
    learning_rate: T,
    momentum: T,
) -> Result<(), TrainError> {
    if grads.len() != params.len() || velocity.len() != params.len() {
        return Err(TrainError::ShapeMismatch {
            params: params.len(),
            grads: grads.len(),
            velocity: velocity.len(),
        });
    }
    for ((p, &g), v) in params.iter_mut().zip(grads).zip(velocity.iter_mut()) {
        *v = momentum * *v - learning_rate * g;
        *p += *v;
    }
    Ok(())
}
