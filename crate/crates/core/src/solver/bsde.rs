use crate::error::{invalid, Result};
use crate::grid::TimeGrid;
use crate::problem::ProblemData;
use crate::scalar::Scalar;
use crate::solution::{SolutionBundle, SolverKind};
use crate::stochastic::Backend;
use crate::weights::WeightProfile;

use super::check_inputs;
use super::sweep::{GeneratorDriver, Sweep};

/// Unreflected backward recursion; `K⁺ = K⁻ = 0`.
pub fn solve_bsde<F: Scalar>(
    problem: &ProblemData<F>,
    backend: &Backend<F>,
    grid: &TimeGrid<F>,
    w: &WeightProfile<F>,
) -> Result<SolutionBundle<F>> {
    if problem.has_barriers() {
        return Err(invalid("solve_bsde takes a problem without barriers"));
    }
    check_inputs(backend, grid, w)?;
    Sweep {
        terminal: &problem.terminal,
        driver: &GeneratorDriver(problem.generator.as_ref()),
        clamp_lower: None,
        clamp_upper: None,
        penalty: None,
        kind: SolverKind::Bsde,
    }
    .run(backend, grid)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::error::Error;
    use crate::grid::build_grid;
    use crate::problem::{LinearGenerator, StateFn, ZeroGenerator};
    use crate::stochastic::{Lattice, MarketSpec};

    fn weights(g: &TimeGrid<f64>, mu: f64) -> WeightProfile<f64> {
        crate::weights::accumulate_weights(&vec![mu; g.n_steps() + 1], &vec![0.0; g.n_steps() + 1], 1e-4, 6.0, g).unwrap()
    }

    #[test]
    fn constant_martingale() {
        let g = build_grid(1.0, 10).unwrap();
        let b: Backend<f64> = Lattice::brownian(&g).unwrap().into();
        let p = ProblemData::new(StateFn::constant(3.0), Arc::new(ZeroGenerator));
        let s = solve_bsde(&p, &b, &g, &weights(&g, 0.0)).unwrap();
        assert!(s.y.iter().flatten().all(|v| *v == 3.0));
        assert!(s.z.iter().flatten().all(|v| *v == 0.0));
        assert!(s.dk_plus.iter().chain(&s.dk_minus).flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn linear_discounting_closed_form() {
        let g = build_grid(1.0, 200).unwrap();
        let b: Backend<f64> = Lattice::brownian(&g).unwrap().into();
        let p = ProblemData::new(StateFn::constant(1.0), Arc::new(LinearGenerator { rate: -0.05 }));
        let s = solve_bsde(&p, &b, &g, &weights(&g, 0.05)).unwrap();
        let exact = (-0.05f64).exp();
        assert!((s.y0() - exact).abs() < 0.05 * 0.05 / 200.0 * 2.0);
        // implicit Euler gives exactly (1 + rΔ)^{-N}
        assert!((s.y0() - (1.0 + 0.05 / 200.0f64).powi(-200)).abs() < 1e-13);
    }

    #[test]
    fn tree_expectation_of_terminal_price() {
        let g = build_grid(1.0, 12).unwrap();
        let lat = Lattice::market(&MarketSpec::constant(100.0, 0.03, 0.0, 0.2), &g).unwrap();
        let measure = lat.measure().clone();
        let terminal = lat.states()[12].clone();
        let b: Backend<f64> = lat.into();
        let p = ProblemData::new(StateFn::new(|_, s| s), Arc::new(ZeroGenerator));
        let s = solve_bsde(&p, &b, &g, &weights(&g, 0.0)).unwrap();
        let direct: f64 = measure.marginals[12].iter().zip(&terminal).map(|(p, s)| p * s).sum();
        assert!((s.y0() - direct).abs() < 1e-10);
    }

    #[test]
    fn step_size_guard() {
        let g = build_grid(1.0, 2).unwrap();
        let b: Backend<f64> = Lattice::brownian(&g).unwrap().into();
        let p = ProblemData::new(StateFn::constant(1.0), Arc::new(LinearGenerator { rate: 3.0 }));
        assert!(matches!(
            solve_bsde(&p, &b, &g, &weights(&g, 3.0)),
            Err(Error::StepSizeTooLarge { .. })
        ));
    }

    #[test]
    fn rejects_barriers_and_foreign_grid() {
        let g = build_grid(1.0, 4).unwrap();
        let b: Backend<f64> = Lattice::brownian(&g).unwrap().into();
        let p = ProblemData::new(StateFn::constant(1.0), Arc::new(ZeroGenerator));
        assert!(solve_bsde(&p.clone().with_lower(StateFn::constant(0.0)), &b, &g, &weights(&g, 0.0)).is_err());
        let g2 = build_grid(1.0, 5).unwrap();
        assert!(solve_bsde(&p, &b, &g2, &weights(&g2, 0.0)).is_err());
    }
}
