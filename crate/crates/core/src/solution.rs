//! Discrete solution trajectories `(Y, Z, K⁺, K⁻)` on a lattice or a path ensemble.
//!
//! Reflection is stored as per-node increments `ΔK_i` (paired with `Y_i`), so
//! `K_{i+1} = K_i + ΔK_i` along any path and `K_0 = 0`. On a recombining
//! lattice the cumulative `K` is path dependent; path functionals there are
//! estimated on a fixed-seed sample of tree paths.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::problem::ProblemData;
use crate::scalar::Scalar;

pub type Levels<F> = Vec<Vec<F>>;

/// Tree paths drawn for path functionals on a lattice.
pub const LATTICE_PATH_SAMPLES: usize = 4096;
pub const LATTICE_PATH_SEED: u64 = 0x005E_ED0F_7EE5;

/// Node probabilities of a recombining binomial lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeMeasure<F> {
    /// `marginals[i][j]` = probability of reaching node `j` (number of up moves) at level `i`.
    pub marginals: Levels<F>,
    /// One-step up probability per level.
    pub up_prob: Vec<F>,
}

impl<F: Scalar> LatticeMeasure<F> {
    pub fn sample_paths(&self, count: usize, seed: u64) -> Vec<Vec<usize>> {
        let n = self.up_prob.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let mut j = 0usize;
                let mut path = Vec::with_capacity(n + 1);
                path.push(0);
                for p in &self.up_prob {
                    if rng.random::<f64>() < p.as_f64() {
                        j += 1;
                    }
                    path.push(j);
                }
                path
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layout<F> {
    /// Level `i` holds one value per simulated path; expectations are sample means.
    Paths { n_paths: usize },
    /// Level `i` holds `i + 1` lattice nodes; expectations use node marginals.
    Lattice(Arc<LatticeMeasure<F>>),
}

/// Node sequences over which path functionals are averaged.
#[derive(Debug, Clone)]
pub enum PathIndex {
    Identity(usize),
    Sampled(Vec<Vec<usize>>),
}

impl PathIndex {
    pub fn count(&self) -> usize {
        match self {
            PathIndex::Identity(n) => *n,
            PathIndex::Sampled(v) => v.len(),
        }
    }

    #[inline]
    pub fn node(&self, path: usize, level: usize) -> usize {
        match self {
            PathIndex::Identity(_) => path,
            PathIndex::Sampled(v) => v[path][level],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Bsde,
    Penalized,
    Clamped,
    Picard,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveMeta {
    pub solver: SolverKind,
    pub penalty: Option<u64>,
    /// Largest number of implicit-step iterations used at any node.
    pub max_inner_iterations: usize,
    /// Outer fixed-point iterations (Picard only).
    pub outer_iterations: usize,
}

impl SolveMeta {
    pub fn new(solver: SolverKind) -> Self {
        Self {
            solver,
            penalty: None,
            max_inner_iterations: 0,
            outer_iterations: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolutionBundle<F> {
    pub y: Levels<F>,
    /// `z[i]` is row-major `width(i) × dim`; the terminal level is zero.
    pub z: Levels<F>,
    pub dk_plus: Levels<F>,
    pub dk_minus: Levels<F>,
    pub dim: usize,
    pub times: Vec<F>,
    /// Markov state at every node, shared with the backend that produced it.
    pub states: Arc<Levels<F>>,
    pub layout: Layout<F>,
    pub meta: SolveMeta,
}

impl<F: Scalar> SolutionBundle<F> {
    /// Bundle over a path ensemble from raw per-level arrays; missing `Z`/`K`
    /// levels default to zero.
    pub fn from_paths(
        times: Vec<F>,
        states: Levels<F>,
        y: Levels<F>,
        dk_plus: Option<Levels<F>>,
        dk_minus: Option<Levels<F>>,
    ) -> Result<Self> {
        let n_paths = y.first().map_or(0, Vec::len);
        let zeros = || vec![vec![F::zero(); n_paths]; y.len()];
        let bundle = Self {
            z: zeros(),
            dk_plus: dk_plus.unwrap_or_else(zeros),
            dk_minus: dk_minus.unwrap_or_else(zeros),
            y,
            dim: 1,
            times,
            states: Arc::new(states),
            layout: Layout::Paths { n_paths },
            meta: SolveMeta::new(SolverKind::Synthetic),
        };
        bundle.check_shapes()?;
        Ok(bundle)
    }

    pub fn n_steps(&self) -> usize {
        self.y.len() - 1
    }

    pub fn width(&self, i: usize) -> usize {
        self.y[i].len()
    }

    pub fn is_lattice(&self) -> bool {
        matches!(self.layout, Layout::Lattice(_))
    }

    #[inline]
    pub fn z_at(&self, i: usize, k: usize) -> &[F] {
        &self.z[i][k * self.dim..(k + 1) * self.dim]
    }

    /// `E[g(k)]` over the nodes of level `i`.
    pub fn expect(&self, i: usize, g: impl Fn(usize) -> F) -> F {
        match &self.layout {
            Layout::Paths { n_paths } => {
                let s = (0..*n_paths).fold(F::zero(), |acc, k| acc + g(k));
                s / F::from_usize_lossy(*n_paths)
            }
            Layout::Lattice(m) => m.marginals[i]
                .iter()
                .enumerate()
                .fold(F::zero(), |acc, (k, p)| acc + *p * g(k)),
        }
    }

    /// `E[Y_0]`: the root value on a lattice, the path mean otherwise.
    pub fn y0(&self) -> F {
        self.expect(0, |k| self.y[0][k])
    }

    /// `E[Y_i]`, `E[Z_i]` (first component), `E[K⁺_i]`, `E[K⁻_i]` per level.
    pub fn mean_series(&self) -> Vec<[F; 4]> {
        let mut kp = F::zero();
        let mut km = F::zero();
        (0..=self.n_steps())
            .map(|i| {
                let row = [
                    self.expect(i, |k| self.y[i][k]),
                    self.expect(i, |k| self.z[i][k * self.dim]),
                    kp,
                    km,
                ];
                kp = kp + self.expect(i, |k| self.dk_plus[i][k]);
                km = km + self.expect(i, |k| self.dk_minus[i][k]);
                row
            })
            .collect()
    }

    pub fn path_index(&self) -> PathIndex {
        match &self.layout {
            Layout::Paths { n_paths } => PathIndex::Identity(*n_paths),
            Layout::Lattice(m) => {
                PathIndex::Sampled(m.sample_paths(LATTICE_PATH_SAMPLES, LATTICE_PATH_SEED))
            }
        }
    }

    /// Cumulative `K` (from `increments`) along one path, length `N + 1`, starting at 0.
    pub fn cumulative(&self, increments: &Levels<F>, paths: &PathIndex, path: usize) -> Vec<F> {
        let mut acc = F::zero();
        let mut out = Vec::with_capacity(self.y.len());
        out.push(acc);
        for (i, level) in increments.iter().enumerate().take(self.n_steps()) {
            acc = acc + level[paths.node(path, i)];
            out.push(acc);
        }
        out
    }

    pub fn check_shapes(&self) -> Result<()> {
        let levels = self.y.len();
        if levels < 2 {
            return Err(invalid("solution needs at least two time levels"));
        }
        for (name, arr) in [("z", &self.z), ("dk_plus", &self.dk_plus), ("dk_minus", &self.dk_minus)] {
            if arr.len() != levels {
                return Err(invalid(format!("{name} has {} levels, expected {levels}", arr.len())));
            }
        }
        if self.times.len() != levels || self.states.len() != levels {
            return Err(invalid("times/states do not match solution levels"));
        }
        for i in 0..levels {
            let w = self.y[i].len();
            let expected = match &self.layout {
                Layout::Paths { n_paths } => *n_paths,
                Layout::Lattice(_) => i + 1,
            };
            if w != expected
                || self.z[i].len() != w * self.dim
                || self.dk_plus[i].len() != w
                || self.dk_minus[i].len() != w
                || self.states[i].len() != w
            {
                return Err(invalid(format!("inconsistent widths at level {i}")));
            }
        }
        Ok(())
    }

    /// Same grid, layout and widths.
    pub fn same_shape(&self, other: &Self) -> bool {
        self.y.len() == other.y.len()
            && self.dim == other.dim
            && self.times == other.times
            && self.layout == other.layout
            && self.y.iter().zip(&other.y).all(|(a, b)| a.len() == b.len())
    }

    /// Largest deviation of `Y_N` from `ξ` (zero for every solver).
    pub fn terminal_error(&self, problem: &ProblemData<F>) -> F {
        let n = self.n_steps();
        let t = self.times[n];
        self.y[n]
            .iter()
            .zip(&self.states[n])
            .fold(F::zero(), |m, (y, x)| m.max((*y - problem.terminal.eval(t, *x)).abs()))
    }

    /// Smallest reflection increment (nonnegative for every valid bundle).
    pub fn min_increment(&self) -> F {
        self.dk_plus
            .iter()
            .chain(&self.dk_minus)
            .flatten()
            .fold(F::infinity(), |m, v| m.min(*v))
    }

    /// Largest `(Y - U)⁺` and `(L - Y)⁺` over all nodes.
    pub fn barrier_violations(&self, problem: &ProblemData<F>) -> (F, F) {
        let mut upper = F::zero();
        let mut lower = F::zero();
        for (i, level) in self.y.iter().enumerate() {
            let t = self.times[i];
            for (y, x) in level.iter().zip(&self.states[i]) {
                if let Some(u) = &problem.upper {
                    upper = upper.max((*y - u.eval(t, *x)).pos());
                }
                if let Some(l) = &problem.lower {
                    lower = lower.max((l.eval(t, *x) - *y).pos());
                }
            }
        }
        (upper, lower)
    }
}
