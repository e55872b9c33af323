//! Stochastic Lipschitz weights: `a² = μ + γ²` floored at `ε`, the
//! cumulative clock `A(t) = ∫ a²` and the exponent `β` of the weighted norms.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::grid::TimeGrid;
use crate::problem::Generator;
use crate::scalar::Scalar;

pub const DEFAULT_EPS: f64 = 1e-4;
pub const DEFAULT_BETA: f64 = 6.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightProfile<F> {
    pub mu: Vec<F>,
    pub gamma: Vec<F>,
    pub eps: F,
    pub beta: F,
    a_sq: Vec<F>,
    clock: Vec<F>,
}

impl<F: Scalar> WeightProfile<F> {
    /// `a²(t_i)`, floored at `eps`.
    pub fn a_sq(&self) -> &[F] {
        &self.a_sq
    }

    /// Cumulative clock `A(t_i)` by left-endpoint sums, `A(t_0) = 0`.
    pub fn clock(&self) -> &[F] {
        &self.clock
    }

    /// `e^{β A(t_i)}`.
    pub fn exp_weight(&self, i: usize) -> F {
        (self.beta * self.clock[i]).exp()
    }

    pub fn n_nodes(&self) -> usize {
        self.a_sq.len()
    }

    /// Same profile with a different exponent.
    pub fn with_beta(&self, beta: F) -> Self {
        Self {
            beta,
            ..self.clone()
        }
    }

    /// Profile whose `μ`, `γ` are the generator's declared envelope on the grid nodes.
    pub fn from_envelope(
        generator: &dyn Generator<F>,
        grid: &TimeGrid<F>,
        eps: F,
        beta: F,
    ) -> Result<Self> {
        let (mu, gamma): (Vec<F>, Vec<F>) =
            grid.nodes().iter().map(|&t| generator.envelope(t)).unzip();
        accumulate_weights(&mu, &gamma, eps, beta, grid)
    }
}

pub fn accumulate_weights<F: Scalar>(
    mu: &[F],
    gamma: &[F],
    eps: F,
    beta: F,
    grid: &TimeGrid<F>,
) -> Result<WeightProfile<F>> {
    let n_nodes = grid.n_steps() + 1;
    if mu.len() != n_nodes || gamma.len() != n_nodes {
        return Err(invalid(format!(
            "weight curves need {n_nodes} node values, got mu={} gamma={}",
            mu.len(),
            gamma.len()
        )));
    }
    if !(eps > F::zero()) {
        return Err(invalid(format!("floor eps must be positive, got {eps}")));
    }
    if !(beta >= F::zero()) || !beta.is_finite() {
        return Err(invalid(format!("beta must be nonnegative, got {beta}")));
    }
    if let Some(i) = mu.iter().position(|m| !(*m >= F::zero()) || !m.is_finite()) {
        return Err(invalid(format!("mu must be nonnegative, node {i} has {}", mu[i])));
    }
    if let Some(i) = gamma.iter().position(|g| !(*g >= F::zero()) || !g.is_finite()) {
        return Err(invalid(format!(
            "gamma must be nonnegative, node {i} has {}",
            gamma[i]
        )));
    }

    let a_sq: Vec<F> = mu
        .iter()
        .zip(gamma)
        .map(|(&m, &g)| (m + g * g).max(eps))
        .collect();
    let mut clock = Vec::with_capacity(n_nodes);
    let mut acc = F::zero();
    clock.push(acc);
    for (a, d) in a_sq.iter().zip(grid.steps()) {
        acc = acc + *a * *d;
        clock.push(acc);
    }
    Ok(WeightProfile {
        mu: mu.to_vec(),
        gamma: gamma.to_vec(),
        eps,
        beta,
        a_sq,
        clock,
    })
}
