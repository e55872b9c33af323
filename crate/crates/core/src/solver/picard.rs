use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::TimeGrid;
use crate::norms::beta_distance;
use crate::problem::ProblemData;
use crate::scalar::Scalar;
use crate::solution::{Levels, SolutionBundle, SolverKind};
use crate::stochastic::Backend;
use crate::weights::WeightProfile;

use super::check_inputs;
use super::sweep::{Driver, Sweep};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig<F> {
    /// Stop once the squared distance of successive iterates is at most `tol`.
    pub tol: F,
    pub max_iter: usize,
    /// Exponent of the contraction norm; must exceed 5.
    pub beta: F,
}

impl<F: Scalar> PicardConfig<F> {
    pub fn new(tol: F, max_iter: usize, beta: F) -> Result<Self> {
        if !(tol > F::zero()) {
            return Err(invalid("Picard tolerance must be positive"));
        }
        if max_iter == 0 {
            return Err(invalid("Picard needs at least one iteration"));
        }
        if !(beta > F::lit(5.0)) {
            return Err(invalid(format!("Picard iteration needs beta > 5, got {beta}")));
        }
        Ok(Self { tol, max_iter, beta })
    }
}

impl<F: Scalar> Default for PicardConfig<F> {
    fn default() -> Self {
        Self {
            tol: F::lit(1e-8),
            max_iter: 25,
            beta: F::lit(crate::weights::DEFAULT_BETA),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PicardOutcome<F> {
    pub solution: SolutionBundle<F>,
    /// Squared distance between iterate `k` and `k - 1`, `k = 1, 2, ...`.
    pub trace: Vec<F>,
    pub converged: bool,
}

impl<F: Scalar> PicardOutcome<F> {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    /// `trace[k] / trace[k - 1]` for `k >= 1`.
    pub fn ratios(&self) -> Vec<F> {
        self.trace
            .windows(2)
            .map(|w| if w[0] > F::zero() { w[1] / w[0] } else { F::zero() })
            .collect()
    }
}

/// Generator frozen at the previous iterate: `g_i(k) = f(t_i, x_k, φ_i(k), ψ_i(k))`.
struct Frozen<F>(Levels<F>);

impl<F: Scalar> Driver<F> for Frozen<F> {
    #[inline]
    fn eval(&self, i: usize, k: usize, _t: F, _x: F, _y: F, _z: &[F]) -> F {
        self.0[i][k]
    }

    fn lipschitz_y(&self, _i: usize, _t: F) -> F {
        F::zero()
    }
}

fn freeze<F: Scalar>(
    problem: &ProblemData<F>,
    grid: &TimeGrid<F>,
    states: &Levels<F>,
    dim: usize,
    prev: Option<&SolutionBundle<F>>,
) -> Frozen<F> {
    let zero = vec![F::zero(); dim];
    let values = states
        .iter()
        .enumerate()
        .map(|(i, level)| {
            let t = grid.node(i);
            level
                .iter()
                .enumerate()
                .map(|(k, x)| match prev {
                    Some(s) => problem.generator.eval(t, *x, s.y[i][k], s.z_at(i, k)),
                    None => problem.generator.eval(t, *x, F::zero(), &zero),
                })
                .collect()
        })
        .collect();
    Frozen(values)
}

/// Fixed point of `(φ, ψ) ↦ (Y, Z)`, where `(Y, Z)` solves the reflected
/// problem with generator frozen at `(φ, ψ)`. The first iterate solves with
/// the generator frozen at zero; the trace then records distances of successive
/// iterates in the β-weighted norm, so a generator free of `(y, z)` converges
/// in one iteration.
pub fn picard_solve<F: Scalar>(
    problem: &ProblemData<F>,
    cfg: &PicardConfig<F>,
    backend: &Backend<F>,
    grid: &TimeGrid<F>,
    w: &WeightProfile<F>,
) -> Result<PicardOutcome<F>> {
    let cfg = PicardConfig::new(cfg.tol, cfg.max_iter, cfg.beta)?;
    check_inputs(backend, grid, w)?;
    problem.check_barriers(grid.nodes(), backend.states())?;
    let w = w.with_beta(cfg.beta);
    let states = backend.states().clone();
    let dim = backend.dim();

    let solve_frozen = |driver: &Frozen<F>| {
        Sweep {
            terminal: &problem.terminal,
            driver,
            clamp_lower: problem.lower.as_ref(),
            clamp_upper: problem.upper.as_ref(),
            penalty: None,
            kind: SolverKind::Picard,
        }
        .run(backend, grid)
    };

    let mut current = solve_frozen(&freeze(problem, grid, &states, dim, None))?;
    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..cfg.max_iter {
        let next = solve_frozen(&freeze(problem, grid, &states, dim, Some(&current)))?;
        let d = beta_distance(&next, &current, &w, grid)?;
        trace.push(d);
        current = next;
        if d <= cfg.tol {
            converged = true;
            break;
        }
    }
    current.meta.outer_iterations = trace.len();
    Ok(PicardOutcome {
        solution: current,
        trace,
        converged,
    })
}
