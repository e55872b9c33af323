//! Problem data `(ξ, f, L, U)`: terminal payoff, generator and optional barriers.
//!
//! Every function is evaluated at a node `(t, x)` where `x` is the scalar
//! Markov state supplied by the conditional-expectation backend (an asset
//! price on market lattices/paths, the Brownian level otherwise).

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// A function of `(t, x)`: terminal payoffs and barriers.
#[derive(Clone)]
pub struct StateFn<F>(Arc<dyn Fn(F, F) -> F + Send + Sync>);

impl<F: Scalar> StateFn<F> {
    pub fn new(f: impl Fn(F, F) -> F + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn constant(c: F) -> Self {
        Self::new(move |_, _| c)
    }

    #[inline]
    pub fn eval(&self, t: F, x: F) -> F {
        (self.0)(t, x)
    }

    /// `self + c`.
    pub fn shifted(&self, c: F) -> Self {
        let inner = self.clone();
        Self::new(move |t, x| inner.eval(t, x) + c)
    }
}

impl<F> fmt::Debug for StateFn<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("StateFn(..)")
    }
}

/// A deterministic coefficient curve `t ↦ c(t)`.
#[derive(Clone)]
pub struct Curve<F>(Arc<dyn Fn(F) -> F + Send + Sync>);

impl<F: Scalar> Curve<F> {
    pub fn new(f: impl Fn(F) -> F + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn constant(c: F) -> Self {
        Self::new(move |_| c)
    }

    #[inline]
    pub fn eval(&self, t: F) -> F {
        (self.0)(t)
    }

    pub fn sample(&self, times: &[F]) -> Vec<F> {
        times.iter().map(|&t| self.eval(t)).collect()
    }
}

impl<F> fmt::Debug for Curve<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Curve(..)")
    }
}

/// Generator `f(t, x, y, z)` with a declared Lipschitz envelope
/// `|f(t,x,y,z) - f(t,x,y',z')| <= μ(t)|y-y'| + γ(t)|z-z'|`.
pub trait Generator<F: Scalar>: Send + Sync {
    fn eval(&self, t: F, x: F, y: F, z: &[F]) -> F;

    /// `(μ(t), γ(t))`.
    fn envelope(&self, t: F) -> (F, F);
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroGenerator;

impl<F: Scalar> Generator<F> for ZeroGenerator {
    fn eval(&self, _t: F, _x: F, _y: F, _z: &[F]) -> F {
        F::zero()
    }

    fn envelope(&self, _t: F) -> (F, F) {
        (F::zero(), F::zero())
    }
}

/// `f = rate · y`.
#[derive(Debug, Clone, Copy)]
pub struct LinearGenerator<F> {
    pub rate: F,
}

impl<F: Scalar> Generator<F> for LinearGenerator<F> {
    fn eval(&self, _t: F, _x: F, y: F, _z: &[F]) -> F {
        self.rate * y
    }

    fn envelope(&self, _t: F) -> (F, F) {
        (self.rate.abs(), F::zero())
    }
}

/// `f = c0 + cy · y + Σ cz_k z_k`.
#[derive(Debug, Clone)]
pub struct AffineGenerator<F> {
    pub c0: F,
    pub cy: F,
    pub cz: Vec<F>,
}

impl<F: Scalar> Generator<F> for AffineGenerator<F> {
    fn eval(&self, _t: F, _x: F, y: F, z: &[F]) -> F {
        let zz = self
            .cz
            .iter()
            .zip(z)
            .fold(F::zero(), |acc, (c, v)| acc + *c * *v);
        self.c0 + self.cy * y + zz
    }

    fn envelope(&self, _t: F) -> (F, F) {
        let g = self.cz.iter().fold(F::zero(), |acc, c| acc + *c * *c).sqrt();
        (self.cy.abs(), g)
    }
}

/// `f = -r(t) · y`.
#[derive(Debug, Clone)]
pub struct DiscountingGenerator<F> {
    pub rate: Curve<F>,
}

impl<F: Scalar> Generator<F> for DiscountingGenerator<F> {
    fn eval(&self, t: F, _x: F, y: F, _z: &[F]) -> F {
        -self.rate.eval(t) * y
    }

    fn envelope(&self, t: F) -> (F, F) {
        (self.rate.eval(t).abs(), F::zero())
    }
}

type GeneratorFn<F> = Arc<dyn Fn(F, F, F, &[F]) -> F + Send + Sync>;

/// User-supplied closure with constant declared envelope.
pub struct FnGenerator<F> {
    f: GeneratorFn<F>,
    mu: F,
    gamma: F,
}

impl<F: Scalar> FnGenerator<F> {
    pub fn new(mu: F, gamma: F, f: impl Fn(F, F, F, &[F]) -> F + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            mu,
            gamma,
        }
    }
}

impl<F: Scalar> Generator<F> for FnGenerator<F> {
    fn eval(&self, t: F, x: F, y: F, z: &[F]) -> F {
        (self.f)(t, x, y, z)
    }

    fn envelope(&self, _t: F) -> (F, F) {
        (self.mu, self.gamma)
    }
}

/// `f + c`, with the same envelope.
pub struct ShiftedGenerator<F: Scalar> {
    pub base: Arc<dyn Generator<F>>,
    pub shift: F,
}

impl<F: Scalar> Generator<F> for ShiftedGenerator<F> {
    fn eval(&self, t: F, x: F, y: F, z: &[F]) -> F {
        self.base.eval(t, x, y, z) + self.shift
    }

    fn envelope(&self, t: F) -> (F, F) {
        self.base.envelope(t)
    }
}

/// The data tuple `(ξ, f, L, U)`. Absent barriers stand for `-∞` / `+∞`.
#[derive(Clone)]
pub struct ProblemData<F: Scalar> {
    pub terminal: StateFn<F>,
    pub generator: Arc<dyn Generator<F>>,
    pub lower: Option<StateFn<F>>,
    pub upper: Option<StateFn<F>>,
    /// Require `L < U` at every node instead of `L <= U`.
    pub strict_separation: bool,
}

impl<F: Scalar> fmt::Debug for ProblemData<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemData")
            .field("lower", &self.lower.is_some())
            .field("upper", &self.upper.is_some())
            .field("strict_separation", &self.strict_separation)
            .finish()
    }
}

impl<F: Scalar> ProblemData<F> {
    pub fn new(terminal: StateFn<F>, generator: Arc<dyn Generator<F>>) -> Self {
        Self {
            terminal,
            generator,
            lower: None,
            upper: None,
            strict_separation: false,
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

    pub fn with_generator(mut self, generator: Arc<dyn Generator<F>>) -> Self {
        self.generator = generator;
        self
    }

    pub fn strict(mut self) -> Self {
        self.strict_separation = true;
        self
    }

    pub fn without_upper(&self) -> Self {
        Self {
            upper: None,
            ..self.clone()
        }
    }

    pub fn without_lower(&self) -> Self {
        Self {
            lower: None,
            ..self.clone()
        }
    }

    pub fn without_barriers(&self) -> Self {
        Self {
            lower: None,
            upper: None,
            ..self.clone()
        }
    }

    pub fn has_barriers(&self) -> bool {
        self.lower.is_some() || self.upper.is_some()
    }

    /// Checks barrier ordering at every node of `states` (one slice per time level)
    /// and terminal consistency `L(T) <= ξ <= U(T)` on the last level.
    pub fn check_barriers(&self, times: &[F], states: &[Vec<F>]) -> Result<()> {
        let n = times.len() - 1;
        if let (Some(lo), Some(up)) = (&self.lower, &self.upper) {
            for (i, (&t, level)) in times.iter().zip(states).enumerate() {
                for &x in level {
                    let (l, u) = (lo.eval(t, x), up.eval(t, x));
                    let bad = if self.strict_separation { !(l < u) } else { l > u };
                    if bad {
                        return Err(Error::InconsistentBarriers {
                            node: i,
                            lower: l.as_f64(),
                            upper: u.as_f64(),
                        });
                    }
                }
            }
        }
        let t = times[n];
        for &x in &states[n] {
            let xi = self.terminal.eval(t, x);
            if let Some(lo) = &self.lower {
                if xi < lo.eval(t, x) {
                    return Err(invalid(format!(
                        "terminal value {xi} below lower barrier {} at state {x}",
                        lo.eval(t, x)
                    )));
                }
            }
            if let Some(up) = &self.upper {
                if xi > up.eval(t, x) {
                    return Err(invalid(format!(
                        "terminal value {xi} above upper barrier {} at state {x}",
                        up.eval(t, x)
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Largest excess `|f(y,z) - f(y',z')| - (μ|y-y'| + γ|z-z'|)` over random probe
/// pairs; nonpositive (up to rounding) when the declared envelope holds.
pub fn probe_envelope<F: Scalar, R: Rng>(
    generator: &dyn Generator<F>,
    dim: usize,
    times: &[F],
    probes: usize,
    rng: &mut R,
) -> F {
    let mut worst = F::neg_infinity();
    let draw = |r: &mut R, scale: f64| F::lit((r.random::<f64>() * 2.0 - 1.0) * scale);
    for _ in 0..probes {
        let t = times[rng.random_range(0..times.len())];
        let x = F::lit(rng.random::<f64>() * 200.0);
        let y = draw(rng, 50.0);
        let y2 = draw(rng, 50.0);
        let z: Vec<F> = (0..dim).map(|_| draw(rng, 10.0)).collect();
        let z2: Vec<F> = (0..dim).map(|_| draw(rng, 10.0)).collect();
        let dz = z
            .iter()
            .zip(&z2)
            .fold(F::zero(), |acc, (a, b)| acc + (*a - *b) * (*a - *b))
            .sqrt();
        let (mu, gamma) = generator.envelope(t);
        let lhs = (generator.eval(t, x, y, &z) - generator.eval(t, x, y2, &z2)).abs();
        let rhs = mu * (y - y2).abs() + gamma * dz;
        worst = worst.max(lhs - rhs);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn builtins() -> Vec<Arc<dyn Generator<f64>>> {
        vec![
            Arc::new(ZeroGenerator),
            Arc::new(LinearGenerator { rate: -0.05 }),
            Arc::new(LinearGenerator { rate: 1.3 }),
            Arc::new(AffineGenerator {
                c0: 0.4,
                cy: -0.7,
                cz: vec![0.3, -0.2],
            }),
            Arc::new(DiscountingGenerator {
                rate: Curve::new(|t: f64| 0.02 + 0.05 * t),
            }),
        ]
    }

    #[test]
    fn builtin_generators_respect_envelope() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let times: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        for g in builtins() {
            let excess = probe_envelope(g.as_ref(), 2, &times, 1000, &mut rng);
            assert!(excess <= 1e-9, "excess {excess}");
        }
    }

    #[test]
    fn probing_flags_understated_envelope() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let liar = FnGenerator::new(0.1, 0.0, |_t, _x, y: f64, _z: &[f64]| 2.0 * y);
        assert!(probe_envelope(&liar, 1, &[0.0], 100, &mut rng) > 1.0);
    }

    #[test]
    fn barrier_checks() {
        let p = ProblemData::new(StateFn::constant(0.5), Arc::new(ZeroGenerator))
            .with_lower(StateFn::constant(0.0))
            .with_upper(StateFn::constant(1.0));
        let times = [0.0, 1.0];
        let states = vec![vec![0.0], vec![1.0, 2.0]];
        assert!(p.check_barriers(&times, &states).is_ok());

        let flipped = p.clone().with_upper(StateFn::constant(-1.0));
        assert!(matches!(
            flipped.check_barriers(&times, &states),
            Err(Error::InconsistentBarriers { .. })
        ));

        let touching = p
            .clone()
            .with_lower(StateFn::constant(0.5))
            .with_upper(StateFn::constant(0.5));
        assert!(touching.check_barriers(&times, &states).is_ok());
        assert!(touching.strict().check_barriers(&times, &states).is_err());

        let bad_terminal = ProblemData::new(StateFn::constant(2.0), Arc::new(ZeroGenerator))
            .with_upper(StateFn::constant(1.0));
        assert!(bad_terminal.check_barriers(&times, &states).is_err());
    }
}
