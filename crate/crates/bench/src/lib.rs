//! Shared fixtures for the benchmarks.

use qrenewal::laplace::{Ordering, RenewalSpec};
use qrenewal::{DensityMatrix, ModifiedWtdSequence, SuperOp, WaitingTime};

/// Amplitude-damped qubit with three modified intervals ahead of the base.
pub fn modified_qubit(ordering: Ordering) -> RenewalSpec {
    let base = WaitingTime::exponential(1.0).unwrap();
    let modified = [1.0, 7.0, 5.0].iter().map(|r| WaitingTime::exponential(*r).unwrap()).collect();
    RenewalSpec::renewal(
        SuperOp::decay_generator([1.1 * 3.0; 3]),
        SuperOp::amplitude_damping(0.8).unwrap(),
        ModifiedWtdSequence::new(base, modified),
        ordering,
    )
    .unwrap()
}

pub fn excited() -> DensityMatrix {
    DensityMatrix::from_bloch([0.0, 0.0, -1.0]).unwrap()
}
