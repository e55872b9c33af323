//! Backward solvers: plain BSDE, penalized single/double barrier schemes,
//! clamped reflection and the Picard fixed point.
//!
//! All share one backward sweep. At step `i`, with `c = E_i[Y_{i+1}]` and
//! `Z_i = E_i[Y_{i+1} ΔB_i] / Δ_i`, the predictor solves
//! `Ỹ = c + f(t_i, x, Ỹ, Z_i) Δ_i` by fixed-point iteration (a contraction
//! because `μ(t_i) Δ_i < 1` is enforced), then reflection clamps
//! `Y_i = min(U, max(L, Ỹ))`.

mod bsde;
mod clamped;
mod penalty;
mod picard;
mod sweep;

pub use bsde::solve_bsde;
pub use clamped::solve_clamped;
pub use penalty::{
    penalize_generator, solve_penalized, solve_penalized_with, PenalizedGenerator, PenaltySchedule,
    PenaltyScheme,
};
pub use picard::{picard_solve, PicardConfig, PicardOutcome};

use crate::error::{invalid, Result};
use crate::grid::TimeGrid;
use crate::scalar::Scalar;
use crate::stochastic::Backend;
use crate::weights::WeightProfile;

fn check_inputs<F: Scalar>(backend: &Backend<F>, grid: &TimeGrid<F>, w: &WeightProfile<F>) -> Result<()> {
    backend.check_grid(grid)?;
    if w.n_nodes() != grid.n_steps() + 1 {
        return Err(invalid(format!(
            "weight profile has {} nodes, grid has {}",
            w.n_nodes(),
            grid.n_steps() + 1
        )));
    }
    Ok(())
}
