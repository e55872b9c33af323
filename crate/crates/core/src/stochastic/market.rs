use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::grid::TimeGrid;
use crate::problem::Curve;
use crate::scalar::Scalar;
use crate::solution::Levels;
use crate::stochastic::paths::PathEnsemble;

/// Black–Scholes coefficients: short rate `r`, risk premium `θ`, volatility `σ`.
#[derive(Debug, Clone)]
pub struct MarketSpec<F> {
    pub s0: F,
    pub rate: Curve<F>,
    pub premium: Curve<F>,
    pub sigma: Curve<F>,
}

impl<F: Scalar> MarketSpec<F> {
    pub fn constant(s0: F, rate: F, premium: F, sigma: F) -> Self {
        Self {
            s0,
            rate: Curve::constant(rate),
            premium: Curve::constant(premium),
            sigma: Curve::constant(sigma),
        }
    }

    /// Same market with zero risk premium (pricing measure).
    pub fn risk_neutral(&self) -> Self {
        Self {
            premium: Curve::constant(F::zero()),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct MarketPaths<F> {
    /// `s[i][p]`: asset price at node `i` on path `p`.
    pub s: Levels<F>,
    pub s0: F,
    pub rate: Vec<F>,
    pub premium: Vec<F>,
    pub sigma: Vec<F>,
}

/// Log-Euler scheme `S_{i+1} = S_i exp((r + θσ - σ²/2)Δ_i + σ ΔB_i)`.
pub fn simulate_market<F: Scalar>(
    spec: &MarketSpec<F>,
    paths: &PathEnsemble<F>,
    grid: &TimeGrid<F>,
) -> Result<MarketPaths<F>> {
    if !(spec.s0 > F::zero()) {
        return Err(invalid(format!("initial price must be positive, got {}", spec.s0)));
    }
    if paths.dim != 1 {
        return Err(invalid("market simulation needs a one-dimensional Brownian motion"));
    }
    if paths.n_steps != grid.n_steps() {
        return Err(invalid("path ensemble and grid disagree on the number of steps"));
    }
    let rate = spec.rate.sample(grid.nodes());
    let premium = spec.premium.sample(grid.nodes());
    let sigma = spec.sigma.sample(grid.nodes());
    if let Some(i) = sigma.iter().position(|s| !(*s >= F::zero())) {
        return Err(invalid(format!("volatility must be nonnegative, node {i} has {}", sigma[i])));
    }

    let half = F::lit(0.5);
    let drift: Vec<F> = (0..grid.n_steps())
        .map(|i| (rate[i] + premium[i] * sigma[i] - half * sigma[i] * sigma[i]) * grid.step(i))
        .collect();
    let mut s = Vec::with_capacity(grid.n_steps() + 1);
    s.push(vec![spec.s0; paths.n_paths]);
    for i in 0..grid.n_steps() {
        let prev: &Vec<F> = &s[i];
        let next: Vec<F> = prev
            .par_iter()
            .enumerate()
            .map(|(p, x)| *x * (drift[i] + sigma[i] * paths.increment(i, p, 0)).exp())
            .collect();
        s.push(next);
    }
    Ok(MarketPaths {
        s,
        s0: spec.s0,
        rate,
        premium,
        sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::stochastic::paths::simulate_brownian;

    #[test]
    fn frozen_market_is_constant() {
        let g = build_grid(1.0, 10).unwrap();
        let e = simulate_brownian::<f64>(&g, 20, 1, 1).unwrap();
        let m = simulate_market(&MarketSpec::constant(100.0, 0.0, 0.0, 0.0), &e, &g).unwrap();
        assert!(m.s.iter().flatten().all(|&x| x == 100.0));
    }

    #[test]
    fn deterministic_growth() {
        let g = build_grid(1.0, 10).unwrap();
        let e = simulate_brownian::<f64>(&g, 5, 1, 1).unwrap();
        let m = simulate_market(&MarketSpec::constant(100.0, 0.05, 0.0, 0.0), &e, &g).unwrap();
        for x in &m.s[10] {
            assert!((x - 100.0 * 0.05f64.exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn martingale_in_mean() {
        let g = build_grid(1.0, 10).unwrap();
        let e = simulate_brownian::<f64>(&g, 100_000, 1, 99).unwrap();
        let m = simulate_market(&MarketSpec::constant(100.0, 0.0, 0.0, 0.2), &e, &g).unwrap();
        let mean = m.s[10].iter().sum::<f64>() / 100_000.0;
        assert!((mean - 100.0).abs() < 1.0, "mean {mean}");
        assert!(m.s.iter().flatten().all(|&x| x > 0.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = build_grid(1.0, 4).unwrap();
        let e = simulate_brownian::<f64>(&g, 5, 1, 1).unwrap();
        assert!(simulate_market(&MarketSpec::constant(0.0, 0.0, 0.0, 0.2), &e, &g).is_err());
        assert!(simulate_market(&MarketSpec::constant(1.0, 0.0, 0.0, -0.2), &e, &g).is_err());
        let e2 = simulate_brownian::<f64>(&g, 5, 2, 1).unwrap();
        assert!(simulate_market(&MarketSpec::constant(1.0, 0.0, 0.0, 0.2), &e2, &g).is_err());
    }
}
