use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;
use crate::solution::SolutionBundle;

/// Tolerance for declaring two solutions ordered.
pub const COMPARISON_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport<F> {
    /// `max (Y_A - Y_B)`; nonpositive when `Y_A <= Y_B` everywhere.
    pub y_violation: F,
    /// `max (K⁺_B - K⁺_A)`; nonpositive when `A` is pushed up at least as much.
    pub k_plus_violation: F,
    /// `max (K⁻_A - K⁻_B)`; nonpositive when `A` is pushed down at most as much.
    pub k_minus_violation: F,
    pub ordered: bool,
}

impl<F: Scalar> ComparisonReport<F> {
    /// Reflection ordering for single lower (or single upper) barrier problems.
    pub fn k_ordered(&self) -> bool {
        let tol = F::lit(COMPARISON_TOL);
        self.k_plus_violation <= tol && self.k_minus_violation <= tol
    }
}

/// Checks `Y_A <= Y_B` at every node and reports the reflection ordering.
///
/// `K` is compared through its increments on a lattice (which orders the
/// cumulative process along every tree path) and cumulatively along each
/// simulated path otherwise.
pub fn comparison_check<F: Scalar>(a: &SolutionBundle<F>, b: &SolutionBundle<F>) -> Result<ComparisonReport<F>> {
    if !a.same_shape(b) || a.states != b.states {
        return Err(invalid("compared solutions must share grid, layout and states"));
    }
    let neg = F::neg_infinity();
    let y_violation = a
        .y
        .iter()
        .zip(&b.y)
        .flat_map(|(ya, yb)| ya.iter().zip(yb))
        .fold(neg, |m, (x, y)| m.max(*x - *y));

    let (k_plus_violation, k_minus_violation) = if a.is_lattice() {
        let gap = |p: &Vec<Vec<F>>, q: &Vec<Vec<F>>| {
            p.iter()
                .zip(q)
                .flat_map(|(u, v)| u.iter().zip(v))
                .fold(neg, |m, (x, y)| m.max(*x - *y))
        };
        (gap(&b.dk_plus, &a.dk_plus), gap(&a.dk_minus, &b.dk_minus))
    } else {
        let paths = a.path_index();
        let mut kp = neg;
        let mut km = neg;
        for p in 0..paths.count() {
            let (pa, pb) = (a.cumulative(&a.dk_plus, &paths, p), b.cumulative(&b.dk_plus, &paths, p));
            kp = pa.iter().zip(&pb).fold(kp, |m, (x, y)| m.max(*y - *x));
            let (ma, mb) = (a.cumulative(&a.dk_minus, &paths, p), b.cumulative(&b.dk_minus, &paths, p));
            km = ma.iter().zip(&mb).fold(km, |m, (x, y)| m.max(*x - *y));
        }
        (kp, km)
    };
    Ok(ComparisonReport {
        y_violation,
        k_plus_violation,
        k_minus_violation,
        ordered: y_violation <= F::lit(COMPARISON_TOL),
    })
}
