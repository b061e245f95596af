//! Solvers for continuous-time linear-quadratic control problems.
//!
//! The crate covers four related problem families built on one dense
//! stationary-equation kernel:
//!
//! - [`lqr`]: ergodic-cost LQR under linear state feedback, with exact
//!   policy gradients and a gradient-descent driver.
//! - [`drifted`]: LQR with a constant drift intercept and the closed-form
//!   optimal policy intercept.
//! - [`mfc`]: mean-field control, reduced to two decoupled LQR blocks.
//! - [`mfg`]: mean-field games solved by fixed-point iteration over the
//!   mean-field state, with best-response and mean-update maps.
//!
//! [`stationary`] holds the Lyapunov/Riccati kernel and [`sim`] an
//! Euler-Maruyama Monte Carlo oracle used to validate the analytic path.

pub mod drifted;
pub mod error;
pub mod lqr;
pub mod mfc;
pub mod mfg;
pub mod sim;
pub mod stationary;

pub use error::{Error, Result};
