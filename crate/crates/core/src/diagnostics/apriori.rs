use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::TimeGrid;
use crate::norms::beta_norms;
use crate::problem::ProblemData;
use crate::scalar::Scalar;
use crate::solution::SolutionBundle;
use crate::weights::WeightProfile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AprioriReport<F> {
    /// Solution size: sup, `aY` and `Z` norms plus `E|K⁺_T|² + E|K⁻_T|²`.
    pub lhs: F,
    /// Data size: terminal, generator at zero and barrier sup terms.
    pub rhs: F,
    /// `lhs / rhs`, or 0 when `rhs = 0`.
    pub ratio: F,
}

pub fn apriori_ratio<F: Scalar>(
    sol: &SolutionBundle<F>,
    problem: &ProblemData<F>,
    w: &WeightProfile<F>,
    grid: &TimeGrid<F>,
) -> Result<AprioriReport<F>> {
    let norms = beta_norms(sol, w, grid)?;
    let n = grid.n_steps();
    let paths = sol.path_index();
    let count = F::from_usize_lossy(paths.count());

    let mut k_terms = F::zero();
    for p in 0..paths.count() {
        let kp = sol.cumulative(&sol.dk_plus, &paths, p)[n];
        let km = sol.cumulative(&sol.dk_minus, &paths, p)[n];
        k_terms = k_terms + kp * kp + km * km;
    }
    let lhs = norms.sup_norm + norms.combined + k_terms / count;

    let tn = grid.node(n);
    let terminal = w.exp_weight(n)
        * sol.expect(n, |k| {
            let xi = problem.terminal.eval(tn, sol.states[n][k]);
            xi * xi
        });
    let zero = vec![F::zero(); sol.dim];
    let mut driver = F::zero();
    for i in 0..n {
        let t = grid.node(i);
        let f0 = sol.expect(i, |k| {
            let v = problem.generator.eval(t, sol.states[i][k], F::zero(), &zero);
            v * v
        });
        driver = driver + w.exp_weight(i) * f0 / w.a_sq()[i] * grid.step(i);
    }
    let mut barrier = F::zero();
    if problem.has_barriers() {
        for p in 0..paths.count() {
            let mut m = F::zero();
            for i in 0..=n {
                let (t, x) = (grid.node(i), sol.states[i][paths.node(p, i)]);
                let lo = problem.lower.as_ref().map_or(F::zero(), |l| l.eval(t, x).pos());
                let up = problem.upper.as_ref().map_or(F::zero(), |u| u.eval(t, x).neg_part());
                let e = w.exp_weight(i);
                m = m.max(e * e * (lo * lo + up * up));
            }
            barrier = barrier + m;
        }
        barrier = barrier / count;
    }
    let rhs = terminal + driver + barrier;
    let ratio = if rhs > F::zero() { lhs / rhs } else { F::zero() };
    Ok(AprioriReport { lhs, rhs, ratio })
}
