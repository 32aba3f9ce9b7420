//! Quantum renewal processes.
//!
//! Piecewise open-system dynamics in which Lindblad semigroup evolution is
//! interrupted by CPT jump channels at renewal-distributed times. The crate
//! builds the Laplace-domain maps, memory kernels and inhomogeneous terms of
//! these processes, propagates them in the time domain by three independent
//! routes (numerical Laplace inversion, Monte Carlo unraveling and a truncated
//! Dyson series), and checks that the resulting maps are completely positive
//! and trace preserving.

pub mod error;
pub mod laplace;
pub mod legitimacy;
pub mod linalg;
pub mod quad;
pub mod superop;
pub mod trajectory;
pub mod wtd;

pub use error::{Error, Result};
pub use laplace::{LaplaceMapFamily, MatrixFunction, Ordering, RenewalSpec, Side, TalbotOptions};
pub use superop::{CptReport, DensityMatrix, LindbladGenerator, OperatorBasis, SpectralData, SuperOp};
pub use legitimacy::{CheckReport, KernelConstruction, SamplePoint, SuiteOptions, SuiteReport};
pub use trajectory::{DysonOptions, DysonOutput, EnsembleResult, Representation, Trajectory, Variant};
pub use wtd::{JumpCounts, ModifiedWtdSequence, SemiMarkovSpec, WaitingTime};
