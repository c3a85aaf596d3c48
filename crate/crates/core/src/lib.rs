//! Reduction of large overconstrained Tukey regression problems
//! `min_x ||Ax - b||_M` to small weighted instances.
//!
//! Two reductions are provided:
//!
//! * [`rowsample`]: recursive Lewis-weight row sampling that keeps heavy
//!   coordinates deterministically and halves the support at every step.
//! * [`msketch`]: a data-oblivious multi-level sign-hash sketch with level
//!   weights `beta * b^h` and an optional clipped estimator.
//!
//! Reduced instances are solved with weighted IRLS ([`solver`]). The
//! [`bench`] module reproduces approximation-ratio sweeps over sketch sizes on
//! Gaussian data with injected outliers, and [`hardgen`] builds Tukey
//! instances from 3-SAT formulas.

pub mod bench;
pub mod error;
pub mod hardgen;
pub mod heavy;
pub mod io;
pub mod lewis;
pub mod linalg;
pub mod loss;
pub mod msketch;
pub mod rng;
pub mod rowsample;
pub mod solver;

pub use error::{Error, Result};
pub use linalg::{Mat, RegressionInstance};
pub use loss::{LossKind, LossSpec};
