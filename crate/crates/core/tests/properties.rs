use std::sync::Arc;

use drbsde::diagnostics::{comparison_check, crossing_indices};
use drbsde::problem::AffineGenerator;
use drbsde::solver::{solve_bsde, solve_clamped, solve_penalized_with, PenaltyScheme};
use drbsde::stochastic::{simulate_brownian, Backend, Lattice, MarketSpec, RegressionBackend};
use drbsde::{beta_norms, build_grid, ProblemData, StateFn, TimeGrid, WeightProfile};
use proptest::prelude::*;

fn put(k: f64) -> StateFn<f64> {
    StateFn::new(move |_, s: f64| (k - s).max(0.0))
}

fn weights(problem: &ProblemData<f64>, grid: &TimeGrid<f64>, beta: f64) -> WeightProfile<f64> {
    WeightProfile::from_envelope(problem.generator.as_ref(), grid, 1e-4, beta).unwrap()
}

fn market_lattice(sigma: f64, r: f64, grid: &TimeGrid<f64>) -> Backend<f64> {
    Lattice::market(&MarketSpec::constant(100.0, r, 0.0, sigma), grid).unwrap().into()
}

fn affine(c0: f64, cy: f64, cz: f64) -> Arc<AffineGenerator<f64>> {
    Arc::new(AffineGenerator { c0, cy, cz: vec![cz] })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn norms_are_quadratically_homogeneous(c in -3.0f64..3.0, k in 80.0f64..120.0, sigma in 0.1f64..0.4) {
        let grid = build_grid(1.0, 20).unwrap();
        let problem = ProblemData::new(put(k), affine(0.1, -0.05, 0.2));
        let sol = solve_bsde(&problem, &market_lattice(sigma, 0.05, &grid), &grid, &weights(&problem, &grid, 2.0)).unwrap();
        let mut scaled = sol.clone();
        scaled.y.iter_mut().flatten().for_each(|v| *v *= c);
        scaled.z.iter_mut().flatten().for_each(|v| *v *= c);
        let w = weights(&problem, &grid, 2.0);
        let a = beta_norms(&sol, &w, &grid).unwrap();
        let b = beta_norms(&scaled, &w, &grid).unwrap();
        let tol = 1e-10 * (1.0 + a.combined * c * c);
        prop_assert!((b.combined - c * c * a.combined).abs() <= tol);
        prop_assert!((b.sup_norm - c * c * a.sup_norm).abs() <= 1e-10 * (1.0 + a.sup_norm * c * c));
    }

    #[test]
    fn norms_grow_with_beta(b1 in 0.0f64..5.0, db in 0.0f64..5.0, k in 80.0f64..120.0) {
        let grid = build_grid(1.0, 20).unwrap();
        let problem = ProblemData::new(put(k), affine(0.3, 0.1, -0.2));
        let sol = solve_bsde(&problem, &market_lattice(0.25, 0.03, &grid), &grid, &weights(&problem, &grid, 1.0)).unwrap();
        let lo = beta_norms(&sol, &weights(&problem, &grid, b1), &grid).unwrap();
        let hi = beta_norms(&sol, &weights(&problem, &grid, b1 + db), &grid).unwrap();
        prop_assert!(hi.combined >= lo.combined * (1.0 - 1e-14));
        prop_assert!(hi.sup_norm >= lo.sup_norm * (1.0 - 1e-14));
    }

    #[test]
    fn crossings_alternate(y in prop::collection::vec(-2.0f64..2.0, 2..60), width in 0.1f64..1.5, l_max in 1usize..20) {
        let l = vec![-width; y.len()];
        let u = vec![width; y.len()];
        let (idx, stationary) = crossing_indices(&y, &l, &u, l_max);
        prop_assert_eq!(idx[0], 0);
        prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(idx.len() <= l_max + 1);
        for (j, &i) in idx.iter().enumerate().skip(1) {
            if j % 2 == 1 { prop_assert!(y[i] <= l[i]); } else { prop_assert!(y[i] >= u[i]); }
        }
        if stationary {
            let from = idx[idx.len() - 1] + 1;
            let lower_next = idx.len() % 2 == 1;
            let quiet = (from..y.len()).all(|i| if lower_next { y[i] > l[i] } else { y[i] < u[i] });
            prop_assert!(quiet);
        }
    }

    #[test]
    fn regression_projection_is_contractive(seed in 0u64..1000, degree in 0usize..5, shift in -2.0f64..2.0) {
        let grid = build_grid(1.0, 4).unwrap();
        let noise = Arc::new(simulate_brownian(&grid, 500, 1, seed).unwrap());
        let backend = RegressionBackend::brownian(&grid, noise, degree).unwrap();
        let states = backend.states().clone();
        let target: Vec<f64> = states[3].iter().map(|x| (x + shift).sin() + x * x).collect();
        let fitted = backend.condexp(2, &target).unwrap();
        let sq = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>();
        prop_assert!(sq(&fitted) <= sq(&target) * (1.0 + 1e-10));
        let residual: Vec<f64> = target.iter().zip(&fitted).map(|(a, b)| a - b).collect();
        prop_assert!(residual.iter().sum::<f64>().abs() <= 1e-8 * (1.0 + sq(&target).sqrt()));
    }

    #[test]
    fn lattice_expectation_preserves_martingales(n in 2usize..40, c in -5.0f64..5.0) {
        let grid = build_grid(1.0, n).unwrap();
        let lattice = Lattice::brownian(&grid).unwrap();
        let states = lattice.states().clone();
        for i in 0..n {
            let next: Vec<f64> = states[i + 1].iter().map(|x| c + x).collect();
            let e = lattice.condexp(i, &next).unwrap();
            for (v, x) in e.iter().zip(&states[i]) {
                prop_assert!((v - (c + x)).abs() <= 1e-12 * (1.0 + c.abs() + x.abs()));
            }
        }
    }

    #[test]
    fn ordered_data_give_ordered_solutions(
        k in 90.0f64..110.0, a in 0.0f64..2.0, b in 0.0f64..0.5, e in 0.0f64..1.0,
        cy in -0.1f64..0.1, cz in -0.2f64..0.2, sigma in 0.15f64..0.35,
    ) {
        let grid = build_grid(1.0, 30).unwrap();
        let backend = market_lattice(sigma, 0.04, &grid);
        let hi = ProblemData::new(put(k).shifted(1.0), affine(0.2, cy, cz))
            .with_lower(put(k))
            .with_upper(put(k).shifted(4.0));
        let lo = ProblemData::new(put(k).shifted(1.0 - a), affine(0.2 - b, cy, cz))
            .with_lower(put(k).shifted(-a - e))
            .with_upper(put(k).shifted(4.0 - a));
        let w = weights(&hi, &grid, 2.0);
        let s_lo = solve_clamped(&lo, &backend, &grid, &w).unwrap();
        let s_hi = solve_clamped(&hi, &backend, &grid, &w).unwrap();
        prop_assert!(comparison_check(&s_lo, &s_hi).unwrap().ordered);
    }

    #[test]
    fn clamped_solutions_satisfy_complementarity(k in 90.0f64..110.0, gap in 0.5f64..5.0, c0 in -1.0f64..1.0, sigma in 0.15f64..0.35) {
        let grid = build_grid(1.0, 30).unwrap();
        let backend = market_lattice(sigma, 0.05, &grid);
        let problem = ProblemData::new(put(k), affine(c0, -0.05, 0.1))
            .with_lower(put(k))
            .with_upper(put(k).shifted(gap));
        let sol = solve_clamped(&problem, &backend, &grid, &weights(&problem, &grid, 2.0)).unwrap();
        for i in 0..=grid.n_steps() {
            let t = grid.node(i);
            for (kk, &x) in sol.states[i].iter().enumerate() {
                let (l, u, y) = (put(k).eval(t, x), put(k).eval(t, x) + gap, sol.y[i][kk]);
                let (kp, km) = (sol.dk_plus[i][kk], sol.dk_minus[i][kk]);
                prop_assert!(l <= y && y <= u);
                prop_assert!(kp >= 0.0 && km >= 0.0);
                prop_assert!(kp * (y - l) == 0.0 && km * (u - y) == 0.0);
            }
        }
    }

    #[test]
    fn lower_reflected_penalization_stays_above_lower(k in 90.0f64..110.0, n in 1u64..64, sigma in 0.15f64..0.35) {
        let grid = build_grid(1.0, 200).unwrap();
        let backend = market_lattice(sigma, 0.05, &grid);
        let problem = ProblemData::new(put(k), affine(0.0, -0.05, 0.0))
            .with_lower(put(k))
            .with_upper(put(k).shifted(3.0));
        let w = weights(&problem, &grid, 2.0);
        let pen = solve_penalized_with(&problem, n, PenaltyScheme::UpperPenaltyLowerReflect, &backend, &grid, &w).unwrap();
        let clamped = solve_clamped(&problem, &backend, &grid, &w).unwrap();
        for i in 0..=grid.n_steps() {
            for (kk, &x) in pen.states[i].iter().enumerate() {
                prop_assert!(pen.y[i][kk] >= put(k).eval(grid.node(i), x));
                prop_assert!(pen.y[i][kk] >= clamped.y[i][kk] - 1e-10);
            }
        }
    }
}
