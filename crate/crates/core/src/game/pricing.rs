use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::TimeGrid;
use crate::scalar::Scalar;
use crate::solution::{Levels, SolutionBundle};
use crate::solver::{picard_solve, solve_clamped, solve_penalized_with, PenaltyScheme, PicardConfig};
use crate::stochastic::{
    simulate_brownian, simulate_market, Backend, BasisConfig, Lattice, RegressionBackend,
};
use crate::weights::{WeightProfile, DEFAULT_BETA, DEFAULT_EPS};

use super::GameSpec;

/// Distance to a payoff within which a node counts as a stopping node.
pub const REGION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Engine<F> {
    Clamped,
    Penalized { n: u64, scheme: PenaltyScheme },
    Picard(PicardConfig<F>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Continue,
    Exercise,
    Cancel,
    /// `L = U = Y`: both parties are indifferent.
    Both,
}

impl Region {
    pub fn code(self) -> char {
        match self {
            Region::Continue => 'c',
            Region::Exercise => 'e',
            Region::Cancel => 'x',
            Region::Both => 'b',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExerciseRegions {
    /// `|Y - L| <= tol`.
    pub holder: Levels<bool>,
    /// `|Y - U| <= tol`.
    pub issuer: Levels<bool>,
}

impl ExerciseRegions {
    pub fn from_solution<F: Scalar>(sol: &SolutionBundle<F>, spec: &GameSpec<F>, tol: F) -> Self {
        let mark = |payoff: &dyn Fn(F, F) -> F| -> Levels<bool> {
            sol.y
                .iter()
                .enumerate()
                .map(|(i, level)| {
                    let t = sol.times[i];
                    level
                        .iter()
                        .zip(&sol.states[i])
                        .map(|(y, s)| (*y - payoff(t, *s)).abs() <= tol)
                        .collect()
                })
                .collect()
        };
        Self {
            holder: mark(&|t, s| spec.lower_at(t, s)),
            issuer: mark(&|t, s| spec.upper_at(t, s)),
        }
    }

    pub fn region(&self, i: usize, k: usize) -> Region {
        match (self.holder[i][k], self.issuer[i][k]) {
            (false, false) => Region::Continue,
            (true, false) => Region::Exercise,
            (false, true) => Region::Cancel,
            (true, true) => Region::Both,
        }
    }

    /// One string of region codes per level.
    pub fn codes(&self) -> Vec<String> {
        (0..self.holder.len())
            .map(|i| (0..self.holder[i].len()).map(|k| self.region(i, k).code()).collect())
            .collect()
    }

    /// Node counts `[continue, exercise, cancel, both]`.
    pub fn counts(&self) -> [usize; 4] {
        let mut c = [0; 4];
        for i in 0..self.holder.len() {
            for k in 0..self.holder[i].len() {
                c[self.region(i, k) as usize] += 1;
            }
        }
        c
    }
}

#[derive(Debug, Clone)]
pub struct GamePrice<F> {
    pub value: F,
    pub regions: ExerciseRegions,
    pub solution: SolutionBundle<F>,
    /// Picard distances, when that engine ran.
    pub picard_trace: Vec<F>,
}

/// Risk-neutral lattice for the spec's market.
pub fn lattice_backend<F: Scalar>(spec: &GameSpec<F>, grid: &TimeGrid<F>) -> Result<Backend<F>> {
    Ok(Lattice::market(&spec.market.risk_neutral(), grid)?.into())
}

/// Risk-neutral regression Monte Carlo backend on simulated prices. The basis
/// is augmented with the exercise and cancellation payoffs.
pub fn regression_backend<F: Scalar>(
    spec: &GameSpec<F>,
    grid: &TimeGrid<F>,
    n_paths: usize,
    seed: u64,
    basis: BasisConfig,
) -> Result<Backend<F>> {
    let noise = Arc::new(simulate_brownian(grid, n_paths, 1, seed)?);
    let market = simulate_market(&spec.market.risk_neutral(), &noise, grid)?;
    let features = spec.lower.iter().chain(&spec.upper).cloned().collect();
    Ok(RegressionBackend::with_features(grid, market.s, noise, basis, features)?.into())
}

/// Game value at time 0 from the reflected solution with `f = -r y`. The
/// reported value is clipped to `[L(0, S_0), U(0, S_0)]`, where either party
/// would stop at once; only the penalized engine can land outside.
pub fn price_game_option<F: Scalar>(
    spec: &GameSpec<F>,
    engine: &Engine<F>,
    grid: &TimeGrid<F>,
    backend: &Backend<F>,
) -> Result<GamePrice<F>> {
    let problem = spec.problem(grid);
    problem.check_barriers(grid.nodes(), backend.states())?;
    let beta = match engine {
        Engine::Picard(cfg) => cfg.beta,
        _ => F::lit(DEFAULT_BETA),
    };
    let w = WeightProfile::from_envelope(problem.generator.as_ref(), grid, F::lit(DEFAULT_EPS), beta)?;
    let (solution, picard_trace) = match engine {
        Engine::Clamped => (solve_clamped(&problem, backend, grid, &w)?, Vec::new()),
        Engine::Penalized { n, scheme } => (solve_penalized_with(&problem, *n, *scheme, backend, grid, &w)?, Vec::new()),
        Engine::Picard(cfg) => {
            let out = picard_solve(&problem, cfg, backend, grid, &w)?;
            (out.solution, out.trace)
        }
    };
    let s0 = spec.market.s0;
    let t0 = grid.node(0);
    let value = solution.y0().max(spec.lower_at(t0, s0)).min(spec.upper_at(t0, s0));
    let regions = ExerciseRegions::from_solution(&solution, spec, F::lit(REGION_TOL));
    Ok(GamePrice {
        value,
        regions,
        solution,
        picard_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::dynkin_tree_oracle;
    use crate::grid::build_grid;
    use crate::problem::StateFn;
    use crate::stochastic::MarketSpec;

    fn spec(delta: f64) -> GameSpec<f64> {
        let put = StateFn::new(|_, s: f64| (100.0 - s).max(0.0));
        GameSpec::new(MarketSpec::constant(100.0, 0.05, 0.3, 0.25), put.clone())
            .with_lower(put)
            .with_upper(StateFn::new(move |_, s: f64| (100.0 - s).max(0.0) + delta))
    }

    #[test]
    fn clamped_lattice_matches_oracle() {
        let g = build_grid(1.0, 100).unwrap();
        let sp = spec(4.0);
        let b = lattice_backend(&sp, &g).unwrap();
        let Backend::Lattice(lat) = &b else { unreachable!() };
        let oracle = dynkin_tree_oracle(&sp, lat, 1e-9).unwrap();
        let price = price_game_option(&sp, &Engine::Clamped, &g, &b).unwrap();
        assert!((price.value - oracle.value).abs() < 1e-10, "{} vs {}", price.value, oracle.value);
        assert_eq!(price.regions.holder, oracle.holder_stop);
        assert_eq!(price.regions.issuer, oracle.issuer_stop);
    }

    #[test]
    fn price_within_immediate_payoffs() {
        let g = build_grid(1.0, 64).unwrap();
        let sp = spec(2.0);
        let b = lattice_backend(&sp, &g).unwrap();
        for engine in [
            Engine::Clamped,
            Engine::Penalized { n: 32, scheme: PenaltyScheme::Full },
            Engine::Picard(PicardConfig::default()),
        ] {
            let p = price_game_option(&sp, &engine, &g, &b).unwrap();
            assert!(p.value >= 0.0 && p.value <= 2.0, "{engine:?}: {}", p.value);
        }
    }

    #[test]
    fn raising_cancellation_never_lowers_price() {
        let g = build_grid(1.0, 64).unwrap();
        let b = lattice_backend(&spec(1.0), &g).unwrap();
        let mut last = 0.0;
        for delta in [1.0, 2.0, 4.0, 8.0, 1e6] {
            let p = price_game_option(&spec(delta), &Engine::Clamped, &g, &b).unwrap().value;
            assert!(p >= last - 1e-12);
            last = p;
        }
    }

    #[test]
    fn region_codes() {
        let r = ExerciseRegions {
            holder: vec![vec![true], vec![false, true]],
            issuer: vec![vec![true], vec![true, false]],
        };
        assert_eq!(r.codes(), vec!["b".to_string(), "xe".to_string()]);
        assert_eq!(r.counts(), [0, 1, 1, 1]);
    }
}
