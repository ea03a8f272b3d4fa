//! Linesearch Newton-CG methods for strongly convex minimization when the
//! objective is only available through noisy values and the derivatives
//! through random estimates.
//!
//! Three outer drivers share one iteration engine:
//!
//! * [`solvers::run_bounded`]: function values carry noise bounded by a known
//!   `eps_f`, and the Armijo test is relaxed by `2 eps_f`.
//! * [`solvers::run_dynamic`]: function values carry noise that is driven down
//!   with the predicted decrease, and the classical Armijo test is used.
//! * [`finite_sum::run_finite_sum`]: exact function values of a finite sum,
//!   with subsampled gradients (adaptive accuracy loop) and Hessians.
//!
//! The inner solver is truncated CG started from the zero vector
//! ([`cg::truncated_cg`]). The [`theory`] module evaluates the closed-form
//! step-size thresholds and expected hitting-time bounds, [`audit`] checks the
//! per-iteration inequalities on recorded traces, and [`harness`] runs seeded
//! Monte-Carlo batches.

pub mod audit;
pub mod cg;
pub mod error;
pub mod finite_sum;
pub mod harness;
pub mod linalg;
pub mod oracles;
pub mod problems;
pub mod rng;
pub mod solvers;
pub mod theory;

pub use cg::{truncated_cg, CgResult, ForcingTerm, SpectrumBounds};
pub use error::{NcgError, Result};
pub use linalg::{LinearOperator, Matrix, Vector};
pub use problems::{FiniteSum, Problem};
pub use solvers::{StopReason, Trace};
