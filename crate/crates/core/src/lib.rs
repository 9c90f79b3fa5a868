//! Group and basis restricted nonnegative matrix factorization.
//!
//! Factorizes a nonnegative `n×p` matrix as `X ≈ W·A·S`, where chosen
//! leading columns of `W` hold known group indicators and chosen rows of `S`
//! hold known bases. Everything else is learned with masked multiplicative
//! updates that never increase `½‖X − WAS‖²`.
//!
//! Besides the solver ([`gbr`]) the crate carries an unconstrained two-factor
//! baseline ([`baseline`]), a synthetic benchmark generator with recovery
//! scoring ([`simgen`]), numerical checks of the update mathematics
//! ([`verify`]) and CSV matrix I/O ([`io`]).

pub mod baseline;
pub mod error;
pub mod fit;
pub mod gbr;
pub mod io;
pub mod matrix;
pub mod simgen;
pub mod verify;

pub use baseline::{nmf_fit, nmf_update_step, BaselineModel};
pub use error::{Error, Result};
pub use fit::{FitConfig, FitReport, Termination};
pub use gbr::{ConstraintSpec, Model};
pub use matrix::{frobenius_objective, gradient, reconstruct, Gradient, NonnegMatrix};
pub use simgen::{SimParams, SimTruth};
