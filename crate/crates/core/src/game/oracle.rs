use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;
use crate::solution::Levels;
use crate::stochastic::Lattice;

use super::GameSpec;

/// Backward-induction value of the stopping game and its first-touch policies.
#[derive(Debug, Clone)]
pub struct DynkinValue<F> {
    pub value: F,
    pub values: Levels<F>,
    /// Nodes where stopping is optimal for the holder (`V = L`).
    pub holder_stop: Levels<bool>,
    /// Nodes where cancelling is optimal for the issuer (`V = U`).
    pub issuer_stop: Levels<bool>,
}

fn one_step<F: Scalar>(lattice: &Lattice<F>, spec: &GameSpec<F>, i: usize, next: &[F]) -> Vec<F> {
    let p = lattice.up_prob()[i];
    let disc = (-spec.market.rate.eval(lattice.grid().node(i)) * lattice.grid().step(i)).exp();
    (0..=i).map(|j| disc * ((F::one() - p) * next[j] + p * next[j + 1])).collect()
}

/// `V_N = ξ`, `V_i = min(U_i, max(L_i, e^{-r(t_i)Δ_i} E_i[V_{i+1}]))` on the
/// lattice nodes. Stop sets use `|V - payoff| <= tol`.
pub fn dynkin_tree_oracle<F: Scalar>(spec: &GameSpec<F>, lattice: &Lattice<F>, tol: F) -> Result<DynkinValue<F>> {
    let n = lattice.n_steps();
    let grid = lattice.grid();
    let states = lattice.states();
    let t_n = grid.node(n);
    let mut values = vec![Vec::new(); n + 1];
    values[n] = states[n].iter().map(|s| spec.terminal.eval(t_n, *s)).collect();
    for i in (0..n).rev() {
        let t = grid.node(i);
        let cont = one_step(lattice, spec, i, &values[i + 1]);
        let mut level = Vec::with_capacity(i + 1);
        for (j, c) in cont.into_iter().enumerate() {
            let (l, u) = (spec.lower_at(t, states[i][j]), spec.upper_at(t, states[i][j]));
            if l > u {
                return Err(Error::InconsistentBarriers {
                    node: i,
                    lower: l.as_f64(),
                    upper: u.as_f64(),
                });
            }
            level.push(u.min(l.max(c)));
        }
        values[i] = level;
    }
    let mark = |payoff: &dyn Fn(F, F) -> F| -> Levels<bool> {
        values
            .iter()
            .enumerate()
            .map(|(i, level)| {
                let t = grid.node(i);
                level
                    .iter()
                    .zip(&states[i])
                    .map(|(v, s)| (*v - payoff(t, *s)).abs() <= tol)
                    .collect()
            })
            .collect()
    };
    let holder_stop = mark(&|t, s| spec.lower_at(t, s));
    let issuer_stop = mark(&|t, s| spec.upper_at(t, s));
    Ok(DynkinValue {
        value: values[0][0],
        values,
        holder_stop,
        issuer_stop,
    })
}

/// Node values of the game when the holder stops on `holder_stop` and the
/// issuer on `issuer_stop`; a simultaneous stop pays `L`, and every stop at
/// maturity pays `ξ`.
pub fn evaluate_policy<F: Scalar>(
    spec: &GameSpec<F>,
    lattice: &Lattice<F>,
    holder_stop: &Levels<bool>,
    issuer_stop: &Levels<bool>,
) -> Result<Levels<F>> {
    let n = lattice.n_steps();
    let shaped = |m: &Levels<bool>| m.len() == n + 1 && m.iter().enumerate().all(|(i, l)| l.len() == i + 1);
    if !shaped(holder_stop) || !shaped(issuer_stop) {
        return Err(invalid("policy masks must match the lattice"));
    }
    let grid = lattice.grid();
    let states = lattice.states();
    let t_n = grid.node(n);
    let mut values = vec![Vec::new(); n + 1];
    values[n] = states[n].iter().map(|s| spec.terminal.eval(t_n, *s)).collect();
    for i in (0..n).rev() {
        let t = grid.node(i);
        let cont = one_step(lattice, spec, i, &values[i + 1]);
        values[i] = cont
            .into_iter()
            .enumerate()
            .map(|(j, c)| {
                if holder_stop[i][j] {
                    spec.lower_at(t, states[i][j])
                } else if issuer_stop[i][j] {
                    spec.upper_at(t, states[i][j])
                } else {
                    c
                }
            })
            .collect();
    }
    Ok(values)
}

/// First level at which the node sequence `path` (one node index per level) enters `mask`, or `N`.
pub fn first_touch(mask: &Levels<bool>, path: &[usize]) -> usize {
    let n = mask.len() - 1;
    (0..n).find(|&i| mask[i][path[i]]).unwrap_or(n)
}
