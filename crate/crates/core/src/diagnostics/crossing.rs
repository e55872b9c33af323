use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::problem::ProblemData;
use crate::scalar::Scalar;
use crate::solution::SolutionBundle;

pub const DEFAULT_L_MAX: usize = 64;

/// Alternating touch times per path: `τ_0 = 0`, then the first later node with
/// `Y <= L`, then the first later node with `Y >= U`, and so on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossingTrace {
    pub times: Vec<Vec<usize>>,
    /// No further touch after the last recorded one, so the sequence settles at `N`.
    pub stationary: Vec<bool>,
    pub l_max: usize,
}

impl CrossingTrace {
    pub fn all_stationary(&self) -> bool {
        self.stationary.iter().all(|s| *s)
    }

    /// Largest number of touches recorded on any path.
    pub fn max_level(&self) -> usize {
        self.times.iter().map(|t| t.len() - 1).max().unwrap_or(0)
    }
}

/// Touch times of one trajectory; `y`, `l`, `u` share length `N + 1`.
/// Returns the indices (starting with 0) and the stationarity flag.
pub fn crossing_indices<F: Scalar>(y: &[F], l: &[F], u: &[F], l_max: usize) -> (Vec<usize>, bool) {
    let mut out = vec![0];
    let mut from = 1;
    let mut lower_next = true;
    loop {
        let hit = (from..y.len()).find(|&i| if lower_next { y[i] <= l[i] } else { y[i] >= u[i] });
        match hit {
            None => return (out, true),
            Some(_) if out.len() > l_max => return (out, false),
            Some(i) => {
                out.push(i);
                from = i + 1;
                lower_next = !lower_next;
            }
        }
    }
}

pub fn crossing_times<F: Scalar>(
    sol: &SolutionBundle<F>,
    problem: &ProblemData<F>,
    l_max: usize,
) -> Result<CrossingTrace> {
    let (Some(lo), Some(up)) = (&problem.lower, &problem.upper) else {
        return Err(invalid("crossing times need both barriers"));
    };
    let mut lv = Vec::with_capacity(sol.y.len());
    let mut uv = Vec::with_capacity(sol.y.len());
    for (i, level) in sol.states.iter().enumerate() {
        let t = sol.times[i];
        let l: Vec<F> = level.iter().map(|x| lo.eval(t, *x)).collect();
        let u: Vec<F> = level.iter().map(|x| up.eval(t, *x)).collect();
        if let Some(k) = (0..l.len()).find(|&k| !(l[k] < u[k])) {
            return Err(Error::InconsistentBarriers {
                node: i,
                lower: l[k].as_f64(),
                upper: u[k].as_f64(),
            });
        }
        lv.push(l);
        uv.push(u);
    }
    let paths = sol.path_index();
    let levels = sol.y.len();
    let mut times = Vec::with_capacity(paths.count());
    let mut stationary = Vec::with_capacity(paths.count());
    for p in 0..paths.count() {
        let pick = |a: &Vec<Vec<F>>| (0..levels).map(|i| a[i][paths.node(p, i)]).collect::<Vec<F>>();
        let (t, s) = crossing_indices(&pick(&sol.y), &pick(&lv), &pick(&uv), l_max);
        times.push(t);
        stationary.push(s);
    }
    Ok(CrossingTrace { times, stationary, l_max })
}
