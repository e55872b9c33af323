use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::problem::{Generator, StateFn};
use crate::scalar::Scalar;
use crate::solution::{SolutionBundle, SolveMeta, SolverKind};
use crate::stochastic::Backend;

const MAX_INNER: usize = 10_000;
const PAR_THRESHOLD: usize = 2048;

/// Node-level view of a generator.
pub(crate) trait Driver<F: Scalar>: Sync {
    fn eval(&self, i: usize, k: usize, t: F, x: F, y: F, z: &[F]) -> F;

    /// Lipschitz constant in `y` at step `i`; zero means `f` ignores `y`.
    fn lipschitz_y(&self, i: usize, t: F) -> F;
}

pub(crate) struct GeneratorDriver<'a, F: Scalar>(pub &'a dyn Generator<F>);

impl<F: Scalar> Driver<F> for GeneratorDriver<'_, F> {
    #[inline]
    fn eval(&self, _i: usize, _k: usize, t: F, x: F, y: F, z: &[F]) -> F {
        self.0.eval(t, x, y, z)
    }

    fn lipschitz_y(&self, _i: usize, t: F) -> F {
        self.0.envelope(t).0
    }
}

/// Barriers whose penalty terms are booked into `K⁺` / `K⁻`.
pub(crate) struct PenaltyBook<'a, F> {
    pub n: F,
    pub lower: Option<&'a StateFn<F>>,
    pub upper: Option<&'a StateFn<F>>,
}

pub(crate) struct Sweep<'a, F: Scalar> {
    pub terminal: &'a StateFn<F>,
    pub driver: &'a dyn Driver<F>,
    pub clamp_lower: Option<&'a StateFn<F>>,
    pub clamp_upper: Option<&'a StateFn<F>>,
    pub penalty: Option<PenaltyBook<'a, F>>,
    pub kind: SolverKind,
}

struct NodeOut<F> {
    y: F,
    clamped: bool,
    dk_plus: F,
    dk_minus: F,
    iterations: usize,
}

/// Solves `y = c + g(y) dt` by fixed-point iteration.
#[inline]
fn implicit_step<F: Scalar>(c: F, dt: F, lipschitz: F, g: impl Fn(F) -> F) -> Option<(F, usize)> {
    if lipschitz == F::zero() {
        return Some((c + g(c) * dt, 1));
    }
    // rounding noise in the map is amplified by 1 / (1 - q), q = lipschitz * dt
    let tol = F::lit(4.0) * F::epsilon() / (F::one() - lipschitz * dt);
    let mut y = c;
    for it in 1..=MAX_INNER {
        let next = c + g(y) * dt;
        if (next - y).abs() <= tol * next.abs().max(F::one()) {
            return Some((next, it));
        }
        y = next;
    }
    None
}

impl<F: Scalar> Sweep<'_, F> {
    pub fn run(&self, backend: &Backend<F>, grid: &TimeGrid<F>) -> Result<SolutionBundle<F>> {
        let n = grid.n_steps();
        let dim = backend.dim();
        let states = backend.states().clone();
        let times = grid.nodes().to_vec();

        let mut y = vec![Vec::new(); n + 1];
        let mut z = vec![Vec::new(); n + 1];
        let mut dk_plus = vec![Vec::new(); n + 1];
        let mut dk_minus = vec![Vec::new(); n + 1];

        let t_n = grid.node(n);
        y[n] = states[n].iter().map(|x| self.terminal.eval(t_n, *x)).collect();
        z[n] = vec![F::zero(); states[n].len() * dim];
        dk_plus[n] = vec![F::zero(); states[n].len()];
        dk_minus[n] = vec![F::zero(); states[n].len()];

        // On path ensembles the regression target is the realized value
        // `R_i = Y_i + (R_{i+1} - E_i[R_{i+1}])`, reset to `Y_i` where reflection
        // acts; on a lattice it is `Y` itself.
        let multistep = matches!(backend, Backend::Regression(_));
        let mut target = y[n].clone();

        let mut max_inner = 0;
        for i in (0..n).rev() {
            let t = grid.node(i);
            let dt = grid.step(i);
            let lip = self.driver.lipschitz_y(i, t);
            if !(lip * dt < F::one()) {
                return Err(Error::StepSizeTooLarge {
                    node: i,
                    product: (lip * dt).as_f64(),
                });
            }
            let next = if multistep { &target } else { &y[i + 1] };
            let cont = backend.condexp(i, next)?;
            let zi = backend.condexp_noise(i, next)?;
            let xs = &states[i];

            let node = |k: usize| -> Result<NodeOut<F>> {
                let x = xs[k];
                let zk = &zi[k * dim..(k + 1) * dim];
                let (pred, iterations) =
                    implicit_step(cont[k], dt, lip, |v| self.driver.eval(i, k, t, x, v, zk))
                        .ok_or(Error::ImplicitStep { node: i })?;
                self.reflect(t, x, pred, dt, iterations).map_err(|e| match e {
                    Error::InconsistentBarriers { lower, upper, .. } => {
                        Error::InconsistentBarriers { node: i, lower, upper }
                    }
                    other => other,
                })
            };
            let out: Vec<NodeOut<F>> = if xs.len() >= PAR_THRESHOLD {
                (0..xs.len()).into_par_iter().map(node).collect::<Result<_>>()?
            } else {
                (0..xs.len()).map(node).collect::<Result<_>>()?
            };

            max_inner = out.iter().fold(max_inner, |m, o| m.max(o.iterations));
            if multistep {
                for (k, o) in out.iter().enumerate() {
                    target[k] = if o.clamped { o.y } else { o.y + (target[k] - cont[k]) };
                }
            }
            y[i] = out.iter().map(|o| o.y).collect();
            dk_plus[i] = out.iter().map(|o| o.dk_plus).collect();
            dk_minus[i] = out.iter().map(|o| o.dk_minus).collect();
            z[i] = zi;
        }

        let mut meta = SolveMeta::new(self.kind);
        meta.max_inner_iterations = max_inner;
        Ok(SolutionBundle {
            y,
            z,
            dk_plus,
            dk_minus,
            dim,
            times,
            states,
            layout: backend.layout(),
            meta,
        })
    }

    #[inline]
    fn reflect(&self, t: F, x: F, pred: F, dt: F, iterations: usize) -> Result<NodeOut<F>> {
        let mut out = NodeOut {
            y: pred,
            clamped: false,
            dk_plus: F::zero(),
            dk_minus: F::zero(),
            iterations,
        };
        if let Some(book) = &self.penalty {
            if let Some(l) = book.lower {
                out.dk_plus = book.n * (pred - l.eval(t, x)).neg_part() * dt;
            }
            if let Some(u) = book.upper {
                out.dk_minus = book.n * (pred - u.eval(t, x)).pos() * dt;
            }
        }
        let lo = self.clamp_lower.map(|l| l.eval(t, x));
        let up = self.clamp_upper.map(|u| u.eval(t, x));
        if let (Some(l), Some(u)) = (lo, up) {
            if l > u {
                return Err(Error::InconsistentBarriers {
                    node: 0,
                    lower: l.as_f64(),
                    upper: u.as_f64(),
                });
            }
        }
        if let Some(l) = lo {
            if pred < l {
                out.dk_plus = l - pred;
                out.y = l;
                out.clamped = true;
            }
        }
        if let Some(u) = up {
            if pred > u {
                out.dk_minus = pred - u;
                out.y = u;
                out.clamped = true;
            }
        }
        Ok(out)
    }
}
