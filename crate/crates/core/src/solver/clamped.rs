use crate::error::Result;
use crate::grid::TimeGrid;
use crate::problem::ProblemData;
use crate::scalar::Scalar;
use crate::solution::{SolutionBundle, SolverKind};
use crate::stochastic::Backend;
use crate::weights::WeightProfile;

use super::check_inputs;
use super::sweep::{GeneratorDriver, Sweep};

/// Backward recursion with exact discrete reflection
/// `Y_i = min(U_i, max(L_i, Ỹ_i))`, `ΔK⁺_i = (L_i - Ỹ_i)⁺`, `ΔK⁻_i = (Ỹ_i - U_i)⁺`.
///
/// Absent barriers are not clamped, so dropping both reproduces [`super::solve_bsde`].
pub fn solve_clamped<F: Scalar>(
    problem: &ProblemData<F>,
    backend: &Backend<F>,
    grid: &TimeGrid<F>,
    w: &WeightProfile<F>,
) -> Result<SolutionBundle<F>> {
    check_inputs(backend, grid, w)?;
    problem.check_barriers(grid.nodes(), backend.states())?;
    Sweep {
        terminal: &problem.terminal,
        driver: &GeneratorDriver(problem.generator.as_ref()),
        clamp_lower: problem.lower.as_ref(),
        clamp_upper: problem.upper.as_ref(),
        penalty: None,
        kind: SolverKind::Clamped,
    }
    .run(backend, grid)
}
