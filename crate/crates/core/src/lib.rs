//! Floquet analysis, dynamics and closed-form oracles for a sinusoidally
//! driven rotor with the complex potential `K (sin x + i λ cos x) sin(ωt + φ)`.
//!
//! The linear problem lives on the truncated momentum ladder `n ∈ [-M, M]`;
//! the nonlinear Gross-Pitaevskii variant runs on a periodic position grid.

// `!(x > 0.0)` guards are kept because they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod banded;
pub mod error;
pub mod expm;
pub mod floquet;
pub mod gpe;
pub mod model;
pub mod observables;
pub mod propagation;
pub mod three_level;

pub use error::{Error, Result};
pub use floquet::{FloquetSpectrum, StateClass, StateTag};
pub use model::{CouplingPair, DriveParams, MomentumState};
pub use observables::CurrentStats;
pub use propagation::{PropagatorConfig, Scheme, TimeSeries};

/// Complex scalar used throughout; identical to `faer::c64`.
pub type C64 = num_complex::Complex64;

/// Runs dense linear algebra on the calling thread. Parallel kernels may
/// split reductions differently with the pool size, so callers that need
/// bitwise-reproducible output across worker counts should call this once
/// and parallelize over independent problems instead.
pub fn use_sequential_kernels() {
    faer::set_global_parallelism(faer::Par::Seq);
}
