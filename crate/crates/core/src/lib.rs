//! Solvers for linear-quadratic deep structured games.
//!
//! A *deep structured* game couples `n` players through weighted linear
//! regressions of their states and actions (the *deep state* `x̄ = Σ αᵢ xᵢ`
//! and *deep action* `ū = Σ αᵢ uᵢ`). This crate computes:
//!
//! * exact subgame-perfect Nash equilibria under perfect / deep-state
//!   sharing, via a non-standard Riccati recursion whose dimension does not
//!   grow with the number of players ([`riccati`], [`equilibrium`]);
//! * approximate no-sharing equilibria that substitute a deterministic
//!   prediction for the unobserved deep state ([`equilibrium::sapde`],
//!   [`equilibrium::swmfe`]);
//! * exact performance gaps of those strategies by backward Lyapunov
//!   recursions, and deviation benefits by a stacked best-response oracle
//!   ([`gap`]);
//! * Monte Carlo estimates of all of the above as an independent
//!   cross-check ([`sim`]);
//! * runtime checks of the solvability conditions ([`riccati::check_assumptions`]).
//!
//! Everything is deterministic given the inputs; simulation results are
//! reproducible bit-for-bit from a seed regardless of thread count.

pub mod equilibrium;
mod error;
pub mod gap;
pub mod gauge;
pub mod linalg;
pub mod model;
pub mod reference;
pub mod riccati;
pub mod sim;

pub use error::{Error, Result};
