//! Recombining binomial lattice: exact one-step conditional expectations for
//! one-dimensional Markov problems.
//!
//! Node `j` of level `i` is reached by `j` up moves. The driving noise of a
//! step is the two-point variable standardised to mean 0 and variance `Δ_i`
//! under the tree probabilities, so `Z_i = E_i[Y_{i+1} ΔB_i] / Δ_i` reduces to
//! `sqrt(p(1-p)) (Y_up - Y_down) / sqrt(Δ_i)`.

use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::grid::TimeGrid;
use crate::scalar::Scalar;
use crate::solution::{LatticeMeasure, Levels};
use crate::stochastic::market::MarketSpec;

#[derive(Debug, Clone)]
pub struct Lattice<F> {
    grid: TimeGrid<F>,
    states: Arc<Levels<F>>,
    up_prob: Vec<F>,
    z_scale: Vec<F>,
    measure: Arc<LatticeMeasure<F>>,
}

impl<F: Scalar> Lattice<F> {
    /// Lattice on explicit node states with given per-step up probabilities.
    pub fn from_parts(grid: &TimeGrid<F>, states: Levels<F>, up_prob: Vec<F>) -> Result<Self> {
        let n = grid.n_steps();
        if states.len() != n + 1 || up_prob.len() != n {
            return Err(invalid("lattice levels do not match the grid"));
        }
        if let Some(i) = states.iter().enumerate().position(|(i, l)| l.len() != i + 1) {
            return Err(invalid(format!("lattice level {i} must have {} nodes", i + 1)));
        }
        if let Some(i) = up_prob
            .iter()
            .position(|p| !(*p >= F::zero() && *p <= F::one()))
        {
            return Err(invalid(format!(
                "up probability {} at step {i} outside [0, 1]; refine the grid",
                up_prob[i]
            )));
        }
        let z_scale = up_prob
            .iter()
            .zip(grid.steps())
            .map(|(p, d)| (*p * (F::one() - *p)).sqrt() / d.sqrt())
            .collect();

        let mut marginals = Vec::with_capacity(n + 1);
        marginals.push(vec![F::one()]);
        for (i, p) in up_prob.iter().enumerate() {
            let prev: &Vec<F> = &marginals[i];
            let q = F::one() - *p;
            let next: Vec<F> = (0..=i + 1)
                .map(|j| {
                    let stay = if j <= i { prev[j] * q } else { F::zero() };
                    let up = if j > 0 { prev[j - 1] * *p } else { F::zero() };
                    stay + up
                })
                .collect();
            marginals.push(next);
        }
        Ok(Self {
            grid: grid.clone(),
            states: Arc::new(states),
            measure: Arc::new(LatticeMeasure {
                marginals,
                up_prob: up_prob.clone(),
            }),
            up_prob,
            z_scale,
        })
    }

    /// Symmetric random walk for the Brownian level: `x_{i,j} = (2j - i) sqrt(Δ)`, `p = 1/2`.
    pub fn brownian(grid: &TimeGrid<F>) -> Result<Self> {
        if !grid.is_uniform() {
            return Err(invalid("lattice requires a uniform grid"));
        }
        let h = grid.step(0).sqrt();
        let states = (0..=grid.n_steps())
            .map(|i| {
                (0..=i)
                    .map(|j| F::from_usize_lossy(2 * j) * h - F::from_usize_lossy(i) * h)
                    .collect()
            })
            .collect();
        Self::from_parts(grid, states, vec![F::lit(0.5); grid.n_steps()])
    }

    /// Risk-neutral tree for the market: `u = e^{σ̄ sqrt(Δ)}`, `d = 1/u`,
    /// `p_i = (e^{r(t_i)Δ} - d) / (u - d)`. Recombination needs one spacing,
    /// so `σ̄` is the time average of `σ` over the grid.
    pub fn market(spec: &MarketSpec<F>, grid: &TimeGrid<F>) -> Result<Self> {
        if !grid.is_uniform() {
            return Err(invalid("lattice requires a uniform grid"));
        }
        if !(spec.s0 > F::zero()) {
            return Err(invalid(format!("initial price must be positive, got {}", spec.s0)));
        }
        let n = grid.n_steps();
        let sigmas = spec.sigma.sample(&grid.nodes()[..n]);
        if let Some(i) = sigmas.iter().position(|s| !(*s > F::zero())) {
            return Err(invalid(format!("lattice volatility must be positive, node {i} has {}", sigmas[i])));
        }
        let dt = grid.step(0);
        let sigma_bar = sigmas.iter().fold(F::zero(), |a, s| a + *s * dt) / grid.horizon();
        let h = sigma_bar * dt.sqrt();
        let (u, d) = (h.exp(), (-h).exp());
        let up_prob = grid.nodes()[..n]
            .iter()
            .map(|&t| ((spec.rate.eval(t) * dt).exp() - d) / (u - d))
            .collect();
        let states = (0..=n)
            .map(|i| {
                (0..=i)
                    .map(|j| {
                        let k = F::from_usize_lossy(2 * j) - F::from_usize_lossy(i);
                        spec.s0 * (k * h).exp()
                    })
                    .collect()
            })
            .collect();
        Self::from_parts(grid, states, up_prob)
    }

    pub fn grid(&self) -> &TimeGrid<F> {
        &self.grid
    }

    pub fn n_steps(&self) -> usize {
        self.grid.n_steps()
    }

    pub fn states(&self) -> &Arc<Levels<F>> {
        &self.states
    }

    pub fn up_prob(&self) -> &[F] {
        &self.up_prob
    }

    pub fn measure(&self) -> &Arc<LatticeMeasure<F>> {
        &self.measure
    }

    fn check_next(&self, step: usize, next: &[F]) -> Result<()> {
        if step >= self.n_steps() {
            return Err(invalid(format!("step {step} beyond lattice depth {}", self.n_steps())));
        }
        if next.len() != step + 2 {
            return Err(invalid(format!(
                "level {} has {} nodes, got {} values",
                step + 1,
                step + 2,
                next.len()
            )));
        }
        Ok(())
    }

    /// `E[V_{i+1} | node (i, j)]`.
    pub fn condexp(&self, step: usize, next: &[F]) -> Result<Vec<F>> {
        self.check_next(step, next)?;
        let p = self.up_prob[step];
        let q = F::one() - p;
        Ok(next.windows(2).map(|w| q * w[0] + p * w[1]).collect())
    }

    /// `E[V_{i+1} ΔB_i | node (i, j)] / Δ_i`.
    pub fn condexp_noise(&self, step: usize, next: &[F]) -> Result<Vec<F>> {
        self.check_next(step, next)?;
        let c = self.z_scale[step];
        Ok(next.windows(2).map(|w| c * (w[1] - w[0])).collect())
    }
}
