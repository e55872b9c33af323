use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::TimeGrid;
use crate::problem::{Generator, ProblemData, StateFn};
use crate::scalar::Scalar;
use crate::solution::{SolutionBundle, SolverKind};
use crate::stochastic::Backend;
use crate::weights::WeightProfile;

use super::check_inputs;
use super::sweep::{GeneratorDriver, PenaltyBook, Sweep};

/// `fⁿ(t,x,y,z) = f(t,x,y,z) - n(y - U)⁺ + n(y - L)⁻` over the barriers present.
#[derive(Clone)]
pub struct PenalizedGenerator<F: Scalar> {
    pub base: Arc<dyn Generator<F>>,
    pub n: F,
    pub lower: Option<StateFn<F>>,
    pub upper: Option<StateFn<F>>,
}

impl<F: Scalar> Generator<F> for PenalizedGenerator<F> {
    fn eval(&self, t: F, x: F, y: F, z: &[F]) -> F {
        let mut v = self.base.eval(t, x, y, z);
        if let Some(u) = &self.upper {
            v = v - self.n * (y - u.eval(t, x)).pos();
        }
        if let Some(l) = &self.lower {
            v = v + self.n * (y - l.eval(t, x)).neg_part();
        }
        v
    }

    fn envelope(&self, t: F) -> (F, F) {
        let (mu, gamma) = self.base.envelope(t);
        if self.lower.is_some() || self.upper.is_some() {
            (mu + self.n, gamma)
        } else {
            (mu, gamma)
        }
    }
}

pub fn penalize_generator<F: Scalar>(
    f: Arc<dyn Generator<F>>,
    n: F,
    lower: Option<StateFn<F>>,
    upper: Option<StateFn<F>>,
) -> PenalizedGenerator<F> {
    PenalizedGenerator { base: f, n, lower, upper }
}

/// Which barriers are penalized; the others (if present) are clamped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyScheme {
    /// Penalize every barrier present.
    #[default]
    Full,
    /// Penalize `U`, reflect exactly on `L`.
    UpperPenaltyLowerReflect,
    /// Penalize `L`, reflect exactly on `U`.
    LowerPenaltyUpperReflect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PenaltySchedule {
    levels: Vec<u64>,
}

impl Default for PenaltySchedule {
    /// `1, 2, 4, ..., 256`.
    fn default() -> Self {
        Self {
            levels: (0..=8).map(|k| 1u64 << k).collect(),
        }
    }
}

impl PenaltySchedule {
    pub fn new(levels: Vec<u64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(invalid("penalty schedule is empty"));
        }
        if levels[0] == 0 || levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("penalty levels must be strictly increasing positive integers"));
        }
        Ok(Self { levels })
    }

    /// Doubling schedule `from, 2·from, ..., to`.
    pub fn doubling(from: u64, to: u64) -> Result<Self> {
        let mut levels = Vec::new();
        let mut n = from;
        while n <= to && n > 0 {
            levels.push(n);
            n *= 2;
        }
        Self::new(levels)
    }

    pub fn levels(&self) -> &[u64] {
        &self.levels
    }

    pub fn max(&self) -> u64 {
        self.levels[self.levels.len() - 1]
    }
}

/// Fully penalized scheme; see [`solve_penalized_with`].
pub fn solve_penalized<F: Scalar>(
    problem: &ProblemData<F>,
    n: u64,
    backend: &Backend<F>,
    grid: &TimeGrid<F>,
    w: &WeightProfile<F>,
) -> Result<SolutionBundle<F>> {
    solve_penalized_with(problem, n, PenaltyScheme::Full, backend, grid, w)
}

/// Runs the backward recursion on the penalized generator and books
/// `ΔKⁿ⁺_i = n(Y_i - L_i)⁻Δ_i`, `ΔKⁿ⁻_i = n(Y_i - U_i)⁺Δ_i`.
pub fn solve_penalized_with<F: Scalar>(
    problem: &ProblemData<F>,
    n: u64,
    scheme: PenaltyScheme,
    backend: &Backend<F>,
    grid: &TimeGrid<F>,
    w: &WeightProfile<F>,
) -> Result<SolutionBundle<F>> {
    check_inputs(backend, grid, w)?;
    let (pen_lower, clamp_lower) = match scheme {
        PenaltyScheme::UpperPenaltyLowerReflect => (None, problem.lower.as_ref()),
        _ => (problem.lower.as_ref(), None),
    };
    let (pen_upper, clamp_upper) = match scheme {
        PenaltyScheme::LowerPenaltyUpperReflect => (None, problem.upper.as_ref()),
        _ => (problem.upper.as_ref(), None),
    };
    if clamp_lower.is_some() || clamp_upper.is_some() {
        problem.check_barriers(grid.nodes(), backend.states())?;
    }
    let nf = F::from_u64(n).ok_or_else(|| invalid("penalty level not representable"))?;
    let generator = penalize_generator(problem.generator.clone(), nf, pen_lower.cloned(), pen_upper.cloned());
    let mut sol = Sweep {
        terminal: &problem.terminal,
        driver: &GeneratorDriver(&generator),
        clamp_lower,
        clamp_upper,
        penalty: Some(PenaltyBook {
            n: nf,
            lower: pen_lower,
            upper: pen_upper,
        }),
        kind: SolverKind::Penalized,
    }
    .run(backend, grid)?;
    sol.meta.penalty = Some(n);
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::grid::build_grid;
    use crate::problem::{LinearGenerator, ZeroGenerator};
    use crate::solver::{solve_bsde, solve_clamped};
    use crate::stochastic::{Lattice, MarketSpec};
    use crate::weights::accumulate_weights;

    fn zero_gen() -> Arc<dyn Generator<f64>> {
        Arc::new(ZeroGenerator)
    }

    #[test]
    fn penalty_inside_band_vanishes() {
        let g = penalize_generator(zero_gen(), 10.0, Some(StateFn::constant(0.0)), Some(StateFn::constant(2.0)));
        assert_eq!(g.eval(0.0, 0.0, 1.0, &[0.0]), 0.0);
    }

    #[test]
    fn upper_penalty_pushes_down() {
        let g = penalize_generator(zero_gen(), 10.0, None, Some(StateFn::constant(2.0)));
        assert_eq!(g.eval(0.0, 0.0, 3.0, &[0.0]), -10.0);
        assert_eq!(g.envelope(0.0), (10.0, 0.0));
    }

    #[test]
    fn lower_penalty_pushes_up() {
        let g = penalize_generator(zero_gen(), 4.0, Some(StateFn::constant(0.0)), None);
        assert_eq!(g.eval(0.0, 0.0, -0.5, &[0.0]), 2.0);
    }

    #[test]
    fn no_barrier_no_stiffness() {
        let g = penalize_generator(zero_gen(), 1000.0, None, None);
        assert_eq!(g.envelope(0.3), (0.0, 0.0));
    }

    #[test]
    fn schedule_validation() {
        assert_eq!(PenaltySchedule::default().levels(), &[1, 2, 4, 8, 16, 32, 64, 128, 256]);
        assert_eq!(PenaltySchedule::doubling(16, 256).unwrap().levels(), &[16, 32, 64, 128, 256]);
        assert!(PenaltySchedule::new(vec![]).is_err());
        assert!(PenaltySchedule::new(vec![0, 1]).is_err());
        assert!(PenaltySchedule::new(vec![4, 4]).is_err());
    }

    fn market(n: usize) -> (TimeGrid<f64>, Backend<f64>, WeightProfile<f64>) {
        let g = build_grid(1.0, n).unwrap();
        let b = Lattice::market(&MarketSpec::constant(100.0, 0.05, 0.0, 0.25), &g).unwrap().into();
        let w = accumulate_weights(&vec![0.05; n + 1], &vec![0.0; n + 1], 1e-4, 6.0, &g).unwrap();
        (g, b, w)
    }

    #[test]
    fn no_barriers_matches_bsde() {
        let (g, b, w) = market(40);
        let p = ProblemData::new(StateFn::new(|_, s: f64| s.sqrt()), Arc::new(LinearGenerator { rate: -0.05 }));
        let plain = solve_bsde(&p, &b, &g, &w).unwrap();
        for n in [1, 64, 100_000] {
            let pen = solve_penalized(&p, n, &b, &g, &w).unwrap();
            assert_eq!(pen.y, plain.y);
        }
    }

    #[test]
    fn unconstrained_zero_stays_zero() {
        let (g, b, w) = market(40);
        let p = ProblemData::new(StateFn::constant(0.0), zero_gen())
            .with_lower(StateFn::constant(-1.0))
            .with_upper(StateFn::constant(1.0));
        for n in [1, 8, 32] {
            let s = solve_penalized(&p, n, &b, &g, &w).unwrap();
            assert!(s.y.iter().flatten().all(|v| *v == 0.0));
            assert!(s.dk_plus.iter().chain(&s.dk_minus).flatten().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn american_put_approached_from_below() {
        let (g, b, w) = market(600);
        let put = StateFn::new(|_, s: f64| (100.0 - s).max(0.0));
        let p = ProblemData::new(put.clone(), Arc::new(LinearGenerator { rate: -0.05 })).with_lower(put);
        let reference = solve_clamped(&p, &b, &g, &w).unwrap().y0();
        let mut prev = f64::NEG_INFINITY;
        for n in [16, 32, 64, 128, 256] {
            let v = solve_penalized(&p, n, &b, &g, &w).unwrap().y0();
            assert!(v >= prev - 1e-12);
            assert!(v <= reference + 1e-12);
            prev = v;
        }
        assert!((reference - prev) / reference < 0.01);
    }

    #[test]
    fn stiffness_guard() {
        let (g, b, w) = market(10);
        let p = ProblemData::new(StateFn::constant(0.0), zero_gen()).with_upper(StateFn::constant(1.0));
        assert!(matches!(solve_penalized(&p, 10, &b, &g, &w), Err(Error::StepSizeTooLarge { .. })));
    }

    #[test]
    fn mixed_scheme_reflects_lower_exactly() {
        let (g, b, w) = market(300);
        let put = StateFn::new(|_, s: f64| (100.0 - s).max(0.0));
        let p = ProblemData::new(put.clone(), Arc::new(LinearGenerator { rate: -0.05 }))
            .with_lower(put.clone())
            .with_upper(put.shifted(4.0));
        let s = solve_penalized_with(&p, 64, PenaltyScheme::UpperPenaltyLowerReflect, &b, &g, &w).unwrap();
        let (_, lower_violation) = s.barrier_violations(&p);
        assert_eq!(lower_violation, 0.0);
        assert!(s.dk_minus.iter().flatten().any(|v| *v > 0.0));
    }
}
