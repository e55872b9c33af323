//! β-weighted norms of discrete solutions, by left-endpoint quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::TimeGrid;
use crate::scalar::Scalar;
use crate::solution::SolutionBundle;
use crate::weights::WeightProfile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport<F> {
    /// `E[max_i e^{βA_i} |Y_i|²]`.
    pub sup_norm: F,
    /// `E[Σ_i e^{βA_i} a²_i |Y_i|² Δ_i]`.
    pub a_y_norm: F,
    /// `E[Σ_i e^{βA_i} |Z_i|² Δ_i]`.
    pub z_norm: F,
    /// `a_y_norm + z_norm`: the squared norm of `(Y, Z)` in the contraction space.
    pub combined: F,
}

fn check_dims<F: Scalar>(sol: &SolutionBundle<F>, w: &WeightProfile<F>, grid: &TimeGrid<F>) -> Result<()> {
    let nodes = grid.n_steps() + 1;
    if sol.y.len() != nodes || w.n_nodes() != nodes {
        return Err(invalid(format!(
            "dimension mismatch: grid has {nodes} nodes, solution {} levels, weights {} nodes",
            sol.y.len(),
            w.n_nodes()
        )));
    }
    Ok(())
}

/// Integrated terms for arbitrary per-node `Y` and `|Z|²` accessors.
fn integrated<F: Scalar>(
    sol: &SolutionBundle<F>,
    w: &WeightProfile<F>,
    grid: &TimeGrid<F>,
    y_at: impl Fn(usize, usize) -> F,
    z_sq_at: impl Fn(usize, usize) -> F,
) -> (F, F) {
    let mut ay = F::zero();
    let mut zz = F::zero();
    for i in 0..grid.n_steps() {
        let weight = w.exp_weight(i) * grid.step(i);
        let ey = sol.expect(i, |k| {
            let v = y_at(i, k);
            v * v
        });
        let ez = sol.expect(i, |k| z_sq_at(i, k));
        ay = ay + weight * w.a_sq()[i] * ey;
        zz = zz + weight * ez;
    }
    (ay, zz)
}

fn z_sq<F: Scalar>(z: &[F]) -> F {
    z.iter().fold(F::zero(), |acc, v| acc + *v * *v)
}

pub fn beta_norms<F: Scalar>(
    sol: &SolutionBundle<F>,
    w: &WeightProfile<F>,
    grid: &TimeGrid<F>,
) -> Result<NormReport<F>> {
    check_dims(sol, w, grid)?;
    let (a_y_norm, z_norm) = integrated(sol, w, grid, |i, k| sol.y[i][k], |i, k| z_sq(sol.z_at(i, k)));

    let paths = sol.path_index();
    let weights: Vec<F> = (0..sol.y.len()).map(|i| w.exp_weight(i)).collect();
    let mut total = F::zero();
    for p in 0..paths.count() {
        let mut m = F::zero();
        for (i, level) in sol.y.iter().enumerate() {
            let v = level[paths.node(p, i)];
            m = m.max(weights[i] * v * v);
        }
        total = total + m;
    }
    let sup_norm = total / F::from_usize_lossy(paths.count());

    Ok(NormReport {
        sup_norm,
        a_y_norm,
        z_norm,
        combined: a_y_norm + z_norm,
    })
}

/// Squared combined distance `‖(Y_a - Y_b, Z_a - Z_b)‖²`.
pub fn beta_distance<F: Scalar>(
    a: &SolutionBundle<F>,
    b: &SolutionBundle<F>,
    w: &WeightProfile<F>,
    grid: &TimeGrid<F>,
) -> Result<F> {
    check_dims(a, w, grid)?;
    if !a.same_shape(b) {
        return Err(invalid("solutions live on different grids or layouts"));
    }
    let (ay, zz) = integrated(
        a,
        w,
        grid,
        |i, k| a.y[i][k] - b.y[i][k],
        |i, k| {
            a.z_at(i, k)
                .iter()
                .zip(b.z_at(i, k))
                .fold(F::zero(), |acc, (x, y)| acc + (*x - *y) * (*x - *y))
        },
    );
    Ok(ay + zz)
}
