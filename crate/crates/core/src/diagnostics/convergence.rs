use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::norms::beta_distance;
use crate::problem::ProblemData;
use crate::scalar::Scalar;
use crate::solution::SolutionBundle;
use crate::solver::{solve_clamped, solve_penalized_with, PenaltySchedule, PenaltyScheme};
use crate::stochastic::Backend;
use crate::weights::WeightProfile;

/// Largest `(μ + n) Δ` accepted on the study grid.
pub const STIFFNESS_TARGET: f64 = 0.5;

const MONOTONE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow<F> {
    pub n: u64,
    /// `max (Yⁿ - U)⁺`.
    pub upper_violation: F,
    /// `max (L - Yⁿ)⁺`.
    pub lower_violation: F,
    pub scaled_upper: F,
    pub scaled_lower: F,
    /// Squared β-distance to the clamped reference.
    pub distance: F,
    pub y0: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport<F> {
    pub scheme: PenaltyScheme,
    /// Steps of the common grid every level was solved on.
    pub steps: usize,
    pub reference_y0: F,
    pub rows: Vec<ConvergenceRow<F>>,
    pub distance_nonincreasing: bool,
    pub violations_nonincreasing: bool,
    /// `Yⁿ` nondecreasing in `n` at every node (to 1e-10).
    pub y_nondecreasing: bool,
    /// `Yⁿ` nonincreasing in `n` at every node (to 1e-10).
    pub y_nonincreasing: bool,
}

impl<F: Scalar> ConvergenceReport<F> {
    /// `|Yⁿ_0 - Y_0| / |Y_0|` at the last level.
    pub fn final_relative_gap(&self) -> F {
        let last = self.rows[self.rows.len() - 1].y0;
        (last - self.reference_y0).abs() / self.reference_y0.abs()
    }
}

fn study_grid<F: Scalar>(problem: &ProblemData<F>, n_max: u64, grid: &TimeGrid<F>) -> Result<(TimeGrid<F>, bool)> {
    let n = if problem.has_barriers() { F::from_u64(n_max).unwrap_or(F::infinity()) } else { F::zero() };
    let stiffness = |g: &TimeGrid<F>| {
        (0..g.n_steps()).fold(F::zero(), |m, i| m.max((problem.generator.envelope(g.node(i)).0 + n) * g.step(i)))
    };
    let target = F::lit(STIFFNESS_TARGET);
    if stiffness(grid) <= target {
        return Ok((grid.clone(), false));
    }
    let mut factor = (stiffness(grid) / target).ceil().to_usize().unwrap_or(usize::MAX).max(2);
    loop {
        let g = grid.refined(factor)?;
        if stiffness(&g) <= target {
            return Ok((g, true));
        }
        factor *= 2;
    }
}

fn nodewise<F: Scalar>(a: &SolutionBundle<F>, b: &SolutionBundle<F>, ok: impl Fn(F, F) -> bool) -> bool {
    a.y.iter().zip(&b.y).flat_map(|(u, v)| u.iter().zip(v)).all(|(x, y)| ok(*x, *y))
}

/// Fully penalized study; see [`convergence_study_with`].
pub fn convergence_study<F: Scalar>(
    problem: &ProblemData<F>,
    schedule: &PenaltySchedule,
    backend: &dyn Fn(&TimeGrid<F>) -> Result<Backend<F>>,
    grid: &TimeGrid<F>,
    w: &WeightProfile<F>,
) -> Result<ConvergenceReport<F>> {
    convergence_study_with(problem, schedule, PenaltyScheme::Full, backend, grid, w)
}

/// Solves every schedule level on one common grid, refined (if needed) until
/// `(μ + n_max) Δ <= 1/2`, and compares each level with the clamped solution
/// on that grid. `backend` builds the conditional-expectation engine for a
/// grid; on a refined grid the weights are rebuilt from the generator envelope
/// with the same `ε`, `β`.
pub fn convergence_study_with<F: Scalar>(
    problem: &ProblemData<F>,
    schedule: &PenaltySchedule,
    scheme: PenaltyScheme,
    backend: &dyn Fn(&TimeGrid<F>) -> Result<Backend<F>>,
    grid: &TimeGrid<F>,
    w: &WeightProfile<F>,
) -> Result<ConvergenceReport<F>> {
    let (grid, refined) = study_grid(problem, schedule.max(), grid)?;
    let w = if refined {
        WeightProfile::from_envelope(problem.generator.as_ref(), &grid, w.eps, w.beta)?
    } else {
        w.clone()
    };
    let backend = backend(&grid)?;
    let reference = solve_clamped(problem, &backend, &grid, &w)?;
    let reference_y0 = reference.y0();

    let tol = F::lit(MONOTONE_TOL);
    let mut rows: Vec<ConvergenceRow<F>> = Vec::with_capacity(schedule.levels().len());
    let mut prev: Option<SolutionBundle<F>> = None;
    let (mut up, mut down) = (true, true);
    for &n in schedule.levels() {
        let annotate = |e: Error| Error::AtPenalty { n, source: Box::new(e) };
        let sol = solve_penalized_with(problem, n, scheme, &backend, &grid, &w).map_err(annotate)?;
        let (upper_violation, lower_violation) = sol.barrier_violations(problem);
        let distance = beta_distance(&sol, &reference, &w, &grid).map_err(annotate)?;
        let nf = F::from_u64(n).unwrap_or(F::infinity());
        if let Some(p) = &prev {
            up &= nodewise(p, &sol, |a, b| b >= a - tol);
            down &= nodewise(p, &sol, |a, b| b <= a + tol);
        }
        rows.push(ConvergenceRow {
            n,
            upper_violation,
            lower_violation,
            scaled_upper: nf * upper_violation,
            scaled_lower: nf * lower_violation,
            distance,
            y0: sol.y0(),
        });
        prev = Some(sol);
    }
    let slack = |a: F| a + F::lit(1e-14) * a.abs().max(F::one());
    let distance_nonincreasing = rows.windows(2).all(|r| r[1].distance <= slack(r[0].distance));
    let violations_nonincreasing = rows.windows(2).all(|r| {
        r[1].upper_violation <= slack(r[0].upper_violation) && r[1].lower_violation <= slack(r[0].lower_violation)
    });
    Ok(ConvergenceReport {
        scheme,
        steps: grid.n_steps(),
        reference_y0,
        rows,
        distance_nonincreasing,
        violations_nonincreasing,
        y_nondecreasing: up,
        y_nonincreasing: down,
    })
}
