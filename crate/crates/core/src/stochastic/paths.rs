use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::grid::TimeGrid;
use crate::scalar::Scalar;
use crate::solution::Levels;

/// Brownian increments `ΔB_{i,p,c} ~ N(0, Δ_i)`.
///
/// Path `p` draws from its own ChaCha stream `(seed, p)`; within the stream the
/// word position is fixed by `(step, component)`, so values do not depend on
/// how paths are scheduled across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble<F> {
    pub n_paths: usize,
    pub dim: usize,
    pub n_steps: usize,
    pub seed: u64,
    /// Index `(step * n_paths + path) * dim + component`.
    increments: Vec<F>,
}

impl<F: Scalar> PathEnsemble<F> {
    #[inline]
    pub fn increment(&self, step: usize, path: usize, component: usize) -> F {
        self.increments[(step * self.n_paths + path) * self.dim + component]
    }

    /// All increments of one step, `n_paths × dim` row-major.
    pub fn step_slice(&self, step: usize) -> &[F] {
        let w = self.n_paths * self.dim;
        &self.increments[step * w..(step + 1) * w]
    }

    /// Brownian levels `B_i` of one component, starting at 0.
    pub fn levels(&self, component: usize) -> Levels<F> {
        let mut out = Vec::with_capacity(self.n_steps + 1);
        let mut cur = vec![F::zero(); self.n_paths];
        out.push(cur.clone());
        for i in 0..self.n_steps {
            for (p, b) in cur.iter_mut().enumerate() {
                *b = *b + self.increment(i, p, component);
            }
            out.push(cur.clone());
        }
        out
    }
}

pub fn simulate_brownian<F: Scalar>(
    grid: &TimeGrid<F>,
    n_paths: usize,
    dim: usize,
    seed: u64,
) -> Result<PathEnsemble<F>> {
    if n_paths == 0 {
        return Err(invalid("need at least one path"));
    }
    if dim == 0 {
        return Err(invalid("Brownian dimension must be at least 1"));
    }
    let n_steps = grid.n_steps();
    let sd: Vec<F> = grid.steps().iter().map(|d| d.sqrt()).collect();
    let per_path: Vec<Vec<F>> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64);
            let mut draws = Vec::with_capacity(n_steps * dim);
            for s in &sd {
                for _ in 0..dim {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    draws.push(*s * F::lit(z));
                }
            }
            draws
        })
        .collect();

    let mut increments = vec![F::zero(); n_steps * n_paths * dim];
    for (p, draws) in per_path.iter().enumerate() {
        for i in 0..n_steps {
            let dst = (i * n_paths + p) * dim;
            increments[dst..dst + dim].copy_from_slice(&draws[i * dim..(i + 1) * dim]);
        }
    }
    Ok(PathEnsemble {
        n_paths,
        dim,
        n_steps,
        seed,
        increments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    #[test]
    fn deterministic_single_path() {
        let g = build_grid(1.0, 7).unwrap();
        let a = simulate_brownian::<f64>(&g, 1, 1, 42).unwrap();
        let b = simulate_brownian::<f64>(&g, 1, 1, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate_brownian::<f64>(&g, 1, 1, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn path_values_do_not_depend_on_ensemble_size() {
        let g = build_grid(1.0, 5).unwrap();
        let small = simulate_brownian::<f64>(&g, 3, 2, 9).unwrap();
        let large = simulate_brownian::<f64>(&g, 50, 2, 9).unwrap();
        for i in 0..5 {
            for p in 0..3 {
                for c in 0..2 {
                    assert_eq!(small.increment(i, p, c), large.increment(i, p, c));
                }
            }
        }
    }

    #[test]
    fn unit_variance() {
        let g = build_grid(1.0, 1).unwrap();
        let e = simulate_brownian::<f64>(&g, 100_000, 1, 2024).unwrap();
        let xs = e.step_slice(0);
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var - 1.0).abs() < 0.03, "variance {var}");
        assert!(mean.abs() <= 5.0 * (1.0 / n).sqrt());
    }

    #[test]
    fn steps_uncorrelated() {
        let g = build_grid(1.0, 2).unwrap();
        let e = simulate_brownian::<f64>(&g, 100_000, 1, 77).unwrap();
        let (a, b) = (e.step_slice(0), e.step_slice(1));
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
        let va = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / n;
        let vb = b.iter().map(|y| (y - mb).powi(2)).sum::<f64>() / n;
        let rho = cov / (va * vb).sqrt();
        assert!(rho.abs() <= 0.01, "correlation {rho}");
        for (i, xs) in [a, b].iter().enumerate() {
            let m = xs.iter().sum::<f64>() / n;
            assert!(m.abs() <= 5.0 * (g.step(i) / n).sqrt());
        }
    }

    #[test]
    fn zero_paths_rejected() {
        let g = build_grid(1.0, 2).unwrap();
        assert!(simulate_brownian::<f64>(&g, 0, 1, 1).is_err());
        assert!(simulate_brownian::<f64>(&g, 1, 0, 1).is_err());
    }

    #[test]
    fn levels_accumulate() {
        let g = build_grid(1.0, 3).unwrap();
        let e = simulate_brownian::<f64>(&g, 4, 1, 5).unwrap();
        let b = e.levels(0);
        assert_eq!(b[0], vec![0.0; 4]);
        for p in 0..4 {
            let direct = e.increment(0, p, 0) + e.increment(1, p, 0) + e.increment(2, p, 0);
            assert!((b[3][p] - direct).abs() < 1e-15);
        }
    }
}
