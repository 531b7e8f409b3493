//! Positivity-preserving solvers for nonlinear systems `u' = -F(u) u + g(u)`
//! with diagonal `F >= 0` and `g >= 0`, and a Lie-splitting scheme for the
//! 1-D Keener-Tyson Belousov-Zhabotinsky reaction-diffusion system.
//!
//! - [`model`]: problem data, the BZ preset and the max norm.
//! - [`picard`]: successive approximation with exact integrating factors.
//! - [`semi_implicit`]: the step `u_i <- (u_i + g_i dt)/(1 + f_i dt)`,
//!   nonnegative for every `dt > 0`.
//! - [`splitting`]: reaction / FTCS-diffusion splitting on a 1-D grid, which
//!   keeps `(q, 1)^2` invariant when `dt <= dx^2 / max(2, 2d)`.
//! - [`analysis`]: region checks, `ubar`, order fits.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod model;
pub mod picard;
pub mod semi_implicit;
pub mod splitting;
pub mod trajectory;

pub use analysis::{
    bz_cubic, check_region, convergence_order, first_entry_step, forward_euler_counterexample,
    ubar, Bound, Region, RegionChecker, Violation, ViolationReport,
};
pub use error::{Error, Result};
pub use model::{bz_reaction_model, evaluate_rhs, max_norm, BzParams, ModelSpec, StateVec};
pub use picard::{
    existence_horizon, picard_step, solve_picard, ExistenceEstimate, PicardOptions,
    PicardSolution,
};
pub use semi_implicit::{de_step, solve_de, DeConfig};
pub use splitting::{
    cell_average, diffusion_substep, macro_step, reaction_substep, run_splitting,
    run_splitting_with, stability_limit, Boundary, Field1D, Grid1D, SplitRun, SplitState,
};
pub use trajectory::{TimeGrid, Trajectory};
