//! Discrete time meshes.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Strictly increasing time nodes `0 = t_0 < ... < t_N = T`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeGrid<F> {
    nodes: Vec<F>,
    steps: Vec<F>,
    uniform: bool,
}

impl<F: Scalar> TimeGrid<F> {
    /// Uniform grid with `n` steps of size `horizon / n`.
    pub fn uniform(horizon: F, n: usize) -> Result<Self> {
        if !(horizon > F::zero()) || !horizon.is_finite() {
            return Err(invalid(format!("horizon must be positive, got {horizon}")));
        }
        if n == 0 {
            return Err(invalid("grid needs at least one step"));
        }
        let nf = F::from_usize_lossy(n);
        let step = horizon / nf;
        let mut nodes: Vec<F> = (0..n)
            .map(|i| horizon * F::from_usize_lossy(i) / nf)
            .collect();
        nodes.push(horizon);
        Ok(Self {
            nodes,
            steps: vec![step; n],
            uniform: true,
        })
    }

    /// Grid from explicit nodes; the first node must be zero.
    pub fn from_nodes(nodes: Vec<F>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(invalid("grid needs at least two nodes"));
        }
        if nodes[0] != F::zero() {
            return Err(invalid("first grid node must be 0"));
        }
        let steps: Vec<F> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        if let Some(i) = steps.iter().position(|d| !(*d > F::zero())) {
            return Err(invalid(format!("grid nodes not strictly increasing at {i}")));
        }
        let first = steps[0];
        let tol = F::lit(1e-12) * first;
        let uniform = steps.iter().all(|d| (*d - first).abs() <= tol);
        Ok(Self {
            nodes,
            steps,
            uniform,
        })
    }

    pub fn horizon(&self) -> F {
        self.nodes[self.nodes.len() - 1]
    }

    /// Number of steps `N`.
    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn nodes(&self) -> &[F] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> F {
        self.nodes[i]
    }

    pub fn steps(&self) -> &[F] {
        &self.steps
    }

    pub fn step(&self, i: usize) -> F {
        self.steps[i]
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    pub fn max_step(&self) -> F {
        self.steps.iter().fold(F::zero(), |m, d| m.max(*d))
    }

    /// Uniform grid over the same horizon with `factor` times as many steps.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::uniform(self.horizon(), self.n_steps() * factor)
    }
}

/// Uniform grid builder matching the `build_grid(T, N)` operation.
pub fn build_grid<F: Scalar>(horizon: F, n: usize) -> Result<TimeGrid<F>> {
    TimeGrid::uniform(horizon, n)
}
