use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::problem::{ProblemData, StateFn};
use crate::scalar::Scalar;
use crate::solution::{Levels, SolutionBundle};

fn residual<F: Scalar>(
    sol: &SolutionBundle<F>,
    grid: &TimeGrid<F>,
    barrier: Option<&StateFn<F>>,
    increments: &Levels<F>,
    gap: impl Fn(F, F) -> F,
    name: &str,
) -> Result<F> {
    let Some(b) = barrier else {
        if increments.iter().flatten().any(|v| *v != F::zero()) {
            return Err(Error::Inconsistency(format!("{name} reflection is nonzero without a {name} barrier")));
        }
        return Ok(F::zero());
    };
    let mut total = F::zero();
    for (i, dk) in increments.iter().enumerate() {
        let t = grid.node(i);
        let states = &sol.states[i];
        total = total + sol.expect(i, |k| gap(sol.y[i][k], b.eval(t, states[k])) * dk[k]);
    }
    Ok(total)
}

/// Path-averaged `(Σ_i (Y_i - L_i) ΔK⁺_i, Σ_i (U_i - Y_i) ΔK⁻_i)`.
pub fn skorokhod_residual<F: Scalar>(
    sol: &SolutionBundle<F>,
    problem: &ProblemData<F>,
    grid: &TimeGrid<F>,
) -> Result<(F, F)> {
    if sol.y.len() != grid.n_steps() + 1 {
        return Err(crate::error::invalid("solution and grid disagree on the number of levels"));
    }
    let lower = residual(sol, grid, problem.lower.as_ref(), &sol.dk_plus, |y, l| y - l, "lower")?;
    let upper = residual(sol, grid, problem.upper.as_ref(), &sol.dk_minus, |y, u| u - y, "upper")?;
    Ok((lower, upper))
}
