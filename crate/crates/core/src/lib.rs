//! Discrete-time solvers for backward stochastic differential equations with
//! zero, one or two reflecting barriers and stochastic Lipschitz generators.
//!
//! * [`stochastic`]: Brownian paths, the Black–Scholes market, and the two
//!   conditional-expectation backends (recombining lattice, regression Monte Carlo).
//! * [`solver`]: plain, penalized, clamped and Picard backward schemes.
//! * [`diagnostics`]: Skorokhod residuals, comparison checks, a priori ratios,
//!   barrier crossing times and penalization convergence studies.
//! * [`game`]: game (Israeli) option pricing and an independent Dynkin-game tree.
//!
//! Everything numerical is generic over [`Scalar`] (`f32`, `f64`); the `*F64`
//! aliases below are the concrete types most callers want.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod game;
pub mod grid;
pub mod norms;
pub mod problem;
pub mod scalar;
pub mod solution;
pub mod solver;
pub mod stochastic;
pub mod weights;

pub use error::{Error, Result};
pub use grid::{build_grid, TimeGrid};
pub use norms::{beta_distance, beta_norms, NormReport};
pub use problem::{Generator, ProblemData, StateFn};
pub use scalar::Scalar;
pub use solution::SolutionBundle;
pub use weights::{accumulate_weights, WeightProfile};

pub type TimeGridF64 = grid::TimeGrid<f64>;
pub type WeightProfileF64 = weights::WeightProfile<f64>;
pub type ProblemDataF64 = problem::ProblemData<f64>;
pub type SolutionF64 = solution::SolutionBundle<f64>;
pub type NormReportF64 = norms::NormReport<f64>;
pub type BackendF64 = stochastic::Backend<f64>;
pub type LatticeF64 = stochastic::Lattice<f64>;
pub type MarketSpecF64 = stochastic::MarketSpec<f64>;
pub type GameSpecF64 = game::GameSpec<f64>;

pub type TimeGridF32 = grid::TimeGrid<f32>;
pub type ProblemDataF32 = problem::ProblemData<f32>;
pub type SolutionF32 = solution::SolutionBundle<f32>;
pub type BackendF32 = stochastic::Backend<f32>;
