//! Game (Israeli) options: the holder may exercise for `L`, the issuer may
//! cancel for `U >= L`, and `ξ` is paid if neither stops before maturity.
//! Pricing runs the reflected solvers with `f = -r y`; [`dynkin_tree_oracle`]
//! is an independent backward induction on the same lattice.

mod oracle;
mod pricing;

use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::grid::TimeGrid;
use crate::problem::{Curve, DiscountingGenerator, ProblemData, StateFn};
use crate::scalar::Scalar;
use crate::stochastic::MarketSpec;

pub use oracle::{dynkin_tree_oracle, evaluate_policy, first_touch, DynkinValue};
pub use pricing::{
    lattice_backend, price_game_option, regression_backend, Engine, ExerciseRegions, GamePrice, Region,
    REGION_TOL,
};

/// Market plus payoffs. A missing `lower` never pays (holder cannot exercise),
/// a missing `upper` means the issuer cannot cancel.
#[derive(Clone)]
pub struct GameSpec<F: Scalar> {
    pub market: MarketSpec<F>,
    pub lower: Option<StateFn<F>>,
    pub upper: Option<StateFn<F>>,
    pub terminal: StateFn<F>,
}

impl<F: Scalar> GameSpec<F> {
    pub fn new(market: MarketSpec<F>, terminal: StateFn<F>) -> Self {
        Self {
            market,
            lower: None,
            upper: None,
            terminal,
        }
    }

    pub fn with_lower(mut self, lower: StateFn<F>) -> Self {
        self.lower = Some(lower);
        self
    }

    pub fn with_upper(mut self, upper: StateFn<F>) -> Self {
        self.upper = Some(upper);
        self
    }

    /// Reflected problem priced on `grid`: barriers from the payoffs and
    /// `f = -r̂(t) y` with `r̂ = (e^{rΔ} - 1)/Δ`, so one implicit step discounts
    /// by exactly `e^{-rΔ}`.
    pub fn problem(&self, grid: &TimeGrid<F>) -> ProblemData<F> {
        let generator = DiscountingGenerator {
            rate: compounding_rate(&self.market.rate, grid),
        };
        ProblemData {
            terminal: self.terminal.clone(),
            generator: Arc::new(generator),
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            strict_separation: false,
        }
    }

    pub(crate) fn lower_at(&self, t: F, s: F) -> F {
        self.lower.as_ref().map_or(F::neg_infinity(), |l| l.eval(t, s))
    }

    pub(crate) fn upper_at(&self, t: F, s: F) -> F {
        self.upper.as_ref().map_or(F::infinity(), |u| u.eval(t, s))
    }
}

/// Step-wise simple rate equivalent to continuous compounding at `r(t_i)` over `[t_i, t_{i+1})`.
pub fn compounding_rate<F: Scalar>(rate: &Curve<F>, grid: &TimeGrid<F>) -> Curve<F> {
    let nodes = grid.nodes().to_vec();
    let rate = rate.clone();
    Curve::new(move |t| {
        let n = nodes.len() - 1;
        let i = nodes.partition_point(|s| *s <= t).saturating_sub(1).min(n - 1);
        let dt = nodes[i + 1] - nodes[i];
        let r = rate.eval(nodes[i]);
        if r == F::zero() {
            F::zero()
        } else {
            (r * dt).exp_m1() / dt
        }
    })
}

/// `J(τ, ν)` along one trajectory of asset prices (length `N + 1`):
/// `U_ν` if `ν < τ`, `L_τ` if `τ <= ν` and `τ < N`, and `ξ` once `τ ∧ ν = N`.
pub fn evaluate_payoff<F: Scalar>(
    spec: &GameSpec<F>,
    tau: usize,
    nu: usize,
    trajectory: &[F],
    grid: &TimeGrid<F>,
) -> Result<F> {
    let n = grid.n_steps();
    if trajectory.len() != n + 1 {
        return Err(invalid(format!("trajectory has {} points, grid {} nodes", trajectory.len(), n + 1)));
    }
    if tau > n || nu > n {
        return Err(invalid(format!("stopping indices ({tau}, {nu}) outside 0..={n}")));
    }
    let first = tau.min(nu);
    let (t, s) = (grid.node(first), trajectory[first]);
    Ok(if first == n {
        spec.terminal.eval(t, s)
    } else if nu < tau {
        spec.upper_at(t, s)
    } else {
        spec.lower_at(t, s)
    })
}
