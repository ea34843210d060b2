//! Belief formation: what each actor infers about the exogenous factor, how it
//! is stored, and the learned expectation derived from memory.

use crate::model::MemoryBuffer;
use crate::scalar::Scalar;

/// Principal's estimate of the exogenous factor, based on the effort she incited.
#[inline]
pub fn estimate_exogenous<S: Scalar>(outcome: S, incited_effort: S) -> S {
    outcome - incited_effort
}

/// Agent's observation of the exogenous factor, based on his actual effort.
#[inline]
pub fn observe_exogenous<S: Scalar>(outcome: S, actual_effort: S) -> S {
    outcome - actual_effort
}

/// Stores `value`, evicting the oldest entry if the buffer is full.
pub fn remember<S: Scalar>(mut buffer: MemoryBuffer<S>, value: S) -> MemoryBuffer<S> {
    buffer.push(value);
    buffer
}

/// Mean of the remembered values, or `prior` for an empty memory.
pub fn learned_expectation<S: Scalar>(buffer: &MemoryBuffer<S>, prior: S) -> S {
    if buffer.is_empty() {
        return prior;
    }
    let sum = buffer.entries().fold(S::zero(), |acc, v| acc + v);
    sum / S::lit(buffer.len() as f64)
}
