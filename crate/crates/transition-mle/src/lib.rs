//! Maximum likelihood estimation of a single-cycle Markov transition matrix
//! from panel data observed every `T` cycles.
//!
//! When the `T`-th root of the interval MLE is not a valid transition matrix,
//! the single-cycle MLE must be found by constrained optimization. This crate
//! provides the full pipeline:
//!
//! * [`params::interval_mle`] — row-normalized counts, the MLE over the
//!   observation interval;
//! * [`spectral`] — eigendecomposition, enumeration of real primary roots,
//!   and stochasticity checks;
//! * [`likelihood`] — the multinomial log-likelihood in the Θ
//!   parameterization and its analytic gradient through matrix powers;
//! * [`optimizer`] — log-barrier quasi-Newton maximization;
//! * [`grid`] / [`search`] — simplex start grids and the parallel multi-start
//!   search with a durable, resumable record store;
//! * [`analysis`] — rank curves, plateau detection, maximizer-uniqueness
//!   diagnostics, and plot-data emission.
//!
//! The `parallel` feature (on by default) runs searches on a rayon worker
//! pool; without it every search runs sequentially with identical results.

pub mod analysis;
pub mod error;
pub mod fixtures;
pub mod grid;
pub mod io;
pub mod likelihood;
pub mod matrix;
pub mod optimizer;
pub mod params;
pub mod search;
pub mod simulate;
pub mod spectral;
pub mod store;

pub use error::{Error, Result};
pub use likelihood::{GradientMatrix, LikelihoodContext};
pub use matrix::{
    frobenius_rel_error, linf_distance, matrix_power, CountMatrix, Mat, StochasticMatrix,
    TAU_STOCH,
};
pub use optimizer::{maximize, ConvergenceRecord, OptimizerSettings, Status};
pub use params::{interval_mle, theta_to_matrix, ConstraintMask, MaskEntry, ThetaParam};
pub use search::{run_search, resume_search, SearchReport};
pub use spectral::{eigen_decompose, enumerate_real_roots, principal_root, EigenStructure, RootCandidate};
