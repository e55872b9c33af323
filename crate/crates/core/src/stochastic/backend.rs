use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::grid::TimeGrid;
use crate::scalar::Scalar;
use crate::solution::{Layout, Levels};
use crate::stochastic::lattice::Lattice;
use crate::stochastic::regression::RegressionBackend;

/// Conditional-expectation engine used by every backward solver.
#[derive(Debug, Clone)]
pub enum Backend<F> {
    Lattice(Arc<Lattice<F>>),
    Regression(Arc<RegressionBackend<F>>),
}

impl<F: Scalar> From<Lattice<F>> for Backend<F> {
    fn from(l: Lattice<F>) -> Self {
        Backend::Lattice(Arc::new(l))
    }
}

impl<F: Scalar> From<RegressionBackend<F>> for Backend<F> {
    fn from(r: RegressionBackend<F>) -> Self {
        Backend::Regression(Arc::new(r))
    }
}

impl<F: Scalar> Backend<F> {
    pub fn grid(&self) -> &TimeGrid<F> {
        match self {
            Backend::Lattice(l) => l.grid(),
            Backend::Regression(r) => r.grid(),
        }
    }

    pub fn n_steps(&self) -> usize {
        self.grid().n_steps()
    }

    /// Brownian dimension (components of `Z`).
    pub fn dim(&self) -> usize {
        match self {
            Backend::Lattice(_) => 1,
            Backend::Regression(r) => r.dim(),
        }
    }

    pub fn width(&self, level: usize) -> usize {
        match self {
            Backend::Lattice(_) => level + 1,
            Backend::Regression(r) => r.n_paths(),
        }
    }

    pub fn states(&self) -> &Arc<Levels<F>> {
        match self {
            Backend::Lattice(l) => l.states(),
            Backend::Regression(r) => r.states(),
        }
    }

    pub fn layout(&self) -> Layout<F> {
        match self {
            Backend::Lattice(l) => Layout::Lattice(l.measure().clone()),
            Backend::Regression(r) => Layout::Paths { n_paths: r.n_paths() },
        }
    }

    pub fn condexp(&self, step: usize, next: &[F]) -> Result<Vec<F>> {
        match self {
            Backend::Lattice(l) => l.condexp(step, next),
            Backend::Regression(r) => r.condexp(step, next),
        }
    }

    /// `E_i[V_{i+1} ΔB_i] / Δ_i`, row-major `width(i) × dim`.
    pub fn condexp_noise(&self, step: usize, next: &[F]) -> Result<Vec<F>> {
        match self {
            Backend::Lattice(l) => l.condexp_noise(step, next),
            Backend::Regression(r) => r.condexp_noise(step, next),
        }
    }

    /// Errors unless the backend was prepared on `grid`.
    pub fn check_grid(&self, grid: &TimeGrid<F>) -> Result<()> {
        if self.grid() != grid {
            return Err(invalid("backend was prepared for a different grid"));
        }
        Ok(())
    }
}

/// One-step conditional expectation `E[next | F_{t_step}]`.
pub fn condexp<F: Scalar>(backend: &Backend<F>, next_values: &[F], step: usize) -> Result<Vec<F>> {
    backend.condexp(step, next_values)
}
