//! Least-squares Monte Carlo backend: `E[V | X_i]` is the projection of `V`
//! on polynomials of the (transformed, standardised) state at step `i`.
//!
//! Normal equations are accumulated sequentially in path order, so fits are
//! bit-reproducible whatever the rayon pool size; only per-path evaluation
//! runs in parallel.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::TimeGrid;
use crate::problem::StateFn;
use crate::scalar::Scalar;
use crate::solution::Levels;
use crate::stochastic::market::MarketPaths;
use crate::stochastic::paths::PathEnsemble;

/// Largest supported polynomial degree.
pub const MAX_DEGREE: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateTransform {
    Identity,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisConfig {
    pub transform: StateTransform,
    pub degree: usize,
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self {
            transform: StateTransform::Log,
            degree: 3,
        }
    }
}

#[derive(Debug, Clone)]
struct StepFit<F> {
    t: F,
    center: F,
    scale: F,
    n_poly: usize,
    /// Extra features kept at this step: `(index, center, scale)`.
    extra: Vec<(usize, F, F)>,
    /// Lower Cholesky factor of the Gram matrix, row-major `n_basis²`.
    chol: Vec<F>,
}

impl<F: Scalar> StepFit<F> {
    fn n_basis(&self) -> usize {
        self.n_poly + self.extra.len()
    }

    #[inline]
    fn features(&self, x: F, transform: StateTransform, extra: &[StateFn<F>], out: &mut [F]) {
        let u = (transform_state(x, transform) - self.center) / self.scale;
        let mut v = F::one();
        for o in out.iter_mut().take(self.n_poly) {
            *o = v;
            v = v * u;
        }
        for (o, (j, c, s)) in out[self.n_poly..].iter_mut().zip(&self.extra) {
            *o = (extra[*j].eval(self.t, x) - *c) / *s;
        }
    }

    fn solve(&self, rhs: &mut [F]) {
        let n = self.n_basis();
        for i in 0..n {
            let mut s = rhs[i];
            for k in 0..i {
                s = s - self.chol[i * n + k] * rhs[k];
            }
            rhs[i] = s / self.chol[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = rhs[i];
            for k in i + 1..n {
                s = s - self.chol[k * n + i] * rhs[k];
            }
            rhs[i] = s / self.chol[i * n + i];
        }
    }
}

fn mean_spread<F: Scalar>(v: &[F]) -> (F, F, bool) {
    let n = F::from_usize_lossy(v.len());
    let center = v.iter().fold(F::zero(), |a, x| a + *x) / n;
    let spread = (v.iter().fold(F::zero(), |a, x| a + (*x - center) * (*x - center)) / n).sqrt();
    let degenerate = !(spread > F::lit(1e-12) * (F::one() + center.abs()));
    (center, if degenerate { F::one() } else { spread }, degenerate)
}

#[inline]
fn transform_state<F: Scalar>(x: F, t: StateTransform) -> F {
    match t {
        StateTransform::Identity => x,
        StateTransform::Log => x.ln(),
    }
}

fn cholesky<F: Scalar>(gram: &[F], n: usize) -> Option<Vec<F>> {
    let mut l = vec![F::zero(); n * n];
    let tol = F::lit(1e-12) * gram[0].abs().max(F::one());
    for i in 0..n {
        for j in 0..=i {
            let mut s = gram[i * n + j];
            for k in 0..j {
                s = s - l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > tol) {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Polynomials of degree `basis.degree` in the standardised, transformed
/// state, optionally augmented with feature functions `φ_j(t_i, x)` (for
/// instance the barriers of the problem being solved).
#[derive(Debug, Clone)]
pub struct RegressionBackend<F> {
    grid: TimeGrid<F>,
    states: Arc<Levels<F>>,
    noise: Arc<PathEnsemble<F>>,
    basis: BasisConfig,
    features: Vec<StateFn<F>>,
    fits: Vec<StepFit<F>>,
}

impl<F: Scalar> RegressionBackend<F> {
    pub fn new(
        grid: &TimeGrid<F>,
        states: Levels<F>,
        noise: Arc<PathEnsemble<F>>,
        basis: BasisConfig,
    ) -> Result<Self> {
        Self::with_features(grid, states, noise, basis, Vec::new())
    }

    pub fn with_features(
        grid: &TimeGrid<F>,
        states: Levels<F>,
        noise: Arc<PathEnsemble<F>>,
        basis: BasisConfig,
        features: Vec<StateFn<F>>,
    ) -> Result<Self> {
        let n = grid.n_steps();
        let n_paths = noise.n_paths;
        let n_basis = basis.degree + 1 + features.len();
        if basis.degree > MAX_DEGREE {
            return Err(invalid(format!("regression degree above {MAX_DEGREE} is not supported")));
        }
        if n_paths < n_basis {
            return Err(Error::UnderdeterminedRegression {
                paths: n_paths,
                basis: n_basis,
            });
        }
        if noise.n_steps != n || states.len() != n + 1 {
            return Err(invalid("states/noise do not match the grid"));
        }
        if states.iter().any(|l| l.len() != n_paths) {
            return Err(invalid("every state level needs one value per path"));
        }
        if basis.transform == StateTransform::Log && states.iter().flatten().any(|x| !(*x > F::zero())) {
            return Err(invalid("log basis needs positive states"));
        }
        let fits = states[..n]
            .iter()
            .enumerate()
            .map(|(i, level)| Self::fit_step(grid.node(i), level, basis, &features))
            .collect();
        Ok(Self {
            grid: grid.clone(),
            states: Arc::new(states),
            noise,
            basis,
            features,
            fits,
        })
    }

    /// Backend on market prices, regressing on polynomials of `log S` by default.
    pub fn from_market(
        grid: &TimeGrid<F>,
        market: &MarketPaths<F>,
        noise: Arc<PathEnsemble<F>>,
        basis: BasisConfig,
    ) -> Result<Self> {
        Self::new(grid, market.s.clone(), noise, basis)
    }

    /// Backend on the Brownian level of the first component.
    pub fn brownian(grid: &TimeGrid<F>, noise: Arc<PathEnsemble<F>>, degree: usize) -> Result<Self> {
        let states = noise.levels(0);
        Self::new(
            grid,
            states,
            noise,
            BasisConfig {
                transform: StateTransform::Identity,
                degree,
            },
        )
    }

    /// Standardises the basis on the step's cross-section and factors the
    /// Gram matrix, dropping constant features and then trailing basis
    /// functions until it is numerically positive definite.
    fn fit_step(t: F, level: &[F], basis: BasisConfig, features: &[StateFn<F>]) -> StepFit<F> {
        let u: Vec<F> = level.iter().map(|x| transform_state(*x, basis.transform)).collect();
        let (center, scale, degenerate) = mean_spread(&u);
        let mut fit = StepFit {
            t,
            center,
            scale,
            n_poly: if degenerate { 1 } else { basis.degree + 1 },
            extra: Vec::new(),
            chol: Vec::new(),
        };
        if !degenerate {
            for (j, f) in features.iter().enumerate() {
                let v: Vec<F> = level.iter().map(|x| f.eval(t, *x)).collect();
                let (c, s, flat) = mean_spread(&v);
                if !flat && v.iter().all(|x| x.is_finite()) {
                    fit.extra.push((j, c, s));
                }
            }
        }
        loop {
            let nb = fit.n_basis();
            let mut gram = vec![F::zero(); nb * nb];
            let mut phi = vec![F::zero(); nb];
            for x in level {
                fit.features(*x, basis.transform, features, &mut phi);
                for a in 0..nb {
                    for b in 0..=a {
                        gram[a * nb + b] = gram[a * nb + b] + phi[a] * phi[b];
                    }
                }
            }
            for a in 0..nb {
                for b in 0..a {
                    gram[b * nb + a] = gram[a * nb + b];
                }
            }
            if let Some(chol) = cholesky(&gram, nb) {
                fit.chol = chol;
                return fit;
            }
            if fit.extra.pop().is_none() {
                fit.n_poly -= 1;
            }
        }
    }

    pub fn grid(&self) -> &TimeGrid<F> {
        &self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.noise.n_paths
    }

    pub fn dim(&self) -> usize {
        self.noise.dim
    }

    pub fn basis(&self) -> BasisConfig {
        self.basis
    }

    pub fn states(&self) -> &Arc<Levels<F>> {
        &self.states
    }

    pub fn noise(&self) -> &Arc<PathEnsemble<F>> {
        &self.noise
    }

    /// Basis size actually used at `step` (1 where the state is deterministic).
    pub fn basis_size(&self, step: usize) -> usize {
        self.fits[step].n_basis()
    }

    /// Least-squares coefficients of `target` on the step-`step` basis.
    pub fn fit_coefficients(&self, step: usize, target: &[F]) -> Result<Vec<F>> {
        if step >= self.fits.len() {
            return Err(invalid(format!("step {step} beyond grid")));
        }
        if target.len() != self.n_paths() {
            return Err(invalid(format!(
                "expected {} targets, got {}",
                self.n_paths(),
                target.len()
            )));
        }
        let fit = &self.fits[step];
        let mut rhs = vec![F::zero(); fit.n_basis()];
        let mut phi = vec![F::zero(); fit.n_basis()];
        for (x, y) in self.states[step].iter().zip(target) {
            fit.features(*x, self.basis.transform, &self.features, &mut phi);
            for (r, f) in rhs.iter_mut().zip(&phi) {
                *r = *r + *f * *y;
            }
        }
        fit.solve(&mut rhs);
        Ok(rhs)
    }

    /// Fitted predictor evaluated at every path's step-`step` state.
    pub fn predict(&self, step: usize, coefficients: &[F]) -> Vec<F> {
        let fit = &self.fits[step];
        let transform = self.basis.transform;
        self.states[step]
            .par_iter()
            .map_init(
                || vec![F::zero(); fit.n_basis()],
                |phi, x| {
                    fit.features(*x, transform, &self.features, phi);
                    phi.iter().zip(coefficients).fold(F::zero(), |a, (f, c)| a + *f * *c)
                },
            )
            .collect()
    }

    pub fn condexp(&self, step: usize, next: &[F]) -> Result<Vec<F>> {
        let beta = self.fit_coefficients(step, next)?;
        Ok(self.predict(step, &beta))
    }

    /// `E[V_{i+1} ΔB_i | X_i] / Δ_i`, row-major `n_paths × dim`.
    pub fn condexp_noise(&self, step: usize, next: &[F]) -> Result<Vec<F>> {
        let n_paths = self.n_paths();
        let dim = self.dim();
        if next.len() != n_paths {
            return Err(invalid(format!("expected {n_paths} values, got {}", next.len())));
        }
        let dt = self.grid.step(step);
        let mut out = vec![F::zero(); n_paths * dim];
        for c in 0..dim {
            let target: Vec<F> = next
                .iter()
                .enumerate()
                .map(|(p, v)| *v * self.noise.increment(step, p, c) / dt)
                .collect();
            let pred = self.condexp(step, &target)?;
            for (p, v) in pred.into_iter().enumerate() {
                out[p * dim + c] = v;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::stochastic::market::{simulate_market, MarketSpec};
    use crate::stochastic::paths::simulate_brownian;

    fn market_backend(paths: usize, degree: usize) -> RegressionBackend<f64> {
        let g = build_grid(1.0, 4).unwrap();
        let e = Arc::new(simulate_brownian(&g, paths, 1, 11).unwrap());
        let m = simulate_market(&MarketSpec::constant(100.0, 0.05, 0.0, 0.2), &e, &g).unwrap();
        RegressionBackend::from_market(&g, &m, e, BasisConfig { transform: StateTransform::Log, degree }).unwrap()
    }

    #[test]
    fn constants_pass_through() {
        let b = market_backend(500, 3);
        for i in 0..4 {
            let v = b.condexp(i, &vec![2.5; 500]).unwrap();
            assert!(v.iter().all(|x| (x - 2.5).abs() < 1e-10));
        }
    }

    #[test]
    fn affine_targets_fit_exactly() {
        let b = market_backend(400, 1);
        let target: Vec<f64> = b.states()[2].iter().map(|s| 3.0 - 2.0 * s.ln()).collect();
        let fitted = b.condexp(2, &target).unwrap();
        for (f, t) in fitted.iter().zip(&target) {
            assert!((f - t).abs() <= 1e-10, "{f} vs {t}");
        }
    }

    #[test]
    fn residual_orthogonal_to_basis() {
        let b = market_backend(2000, 3);
        let target: Vec<f64> = b.states()[3].iter().map(|s| (100.0 - s).max(0.0)).collect();
        let fitted = b.condexp(3, &target).unwrap();
        let fit = &b.fits[3];
        let mut phi = [0.0; 4];
        let mut dots = [0.0; 4];
        for ((x, t), f) in b.states()[3].iter().zip(&target).zip(&fitted) {
            fit.features(*x, StateTransform::Log, &[], &mut phi);
            for k in 0..4 {
                dots[k] += phi[k] * (t - f);
            }
        }
        let scale: f64 = target.iter().map(|t| t * t).sum::<f64>().sqrt() * (2000f64).sqrt();
        for d in dots {
            assert!(d.abs() <= 1e-8 * scale, "dot {d}");
        }
        // projection never increases the mean square
        let ms = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64;
        assert!(ms(&fitted) <= ms(&target) + 1e-10);
    }

    #[test]
    fn deterministic_start_uses_mean() {
        let b = market_backend(300, 3);
        assert_eq!(b.basis_size(0), 1);
        let target: Vec<f64> = (0..300).map(|i| i as f64).collect();
        let v = b.condexp(0, &target).unwrap();
        assert!(v.iter().all(|x| (x - 149.5).abs() < 1e-9));
    }

    #[test]
    fn underdetermined() {
        let g = build_grid(1.0, 2).unwrap();
        let e = Arc::new(simulate_brownian::<f64>(&g, 3, 1, 1).unwrap());
        assert!(matches!(
            RegressionBackend::brownian(&g, e, 3),
            Err(Error::UnderdeterminedRegression { paths: 3, basis: 4 })
        ));
    }
}
