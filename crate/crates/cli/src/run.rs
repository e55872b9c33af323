use std::path::Path;
use std::sync::Arc;

use clap::ValueEnum;
use drbsde::diagnostics::{apriori_ratio, comparison_check, convergence_study_with, skorokhod_residual};
use drbsde::game::{dynkin_tree_oracle, price_game_option, Engine, GameSpec, REGION_TOL};
use drbsde::solver::{
    picard_solve, solve_bsde, solve_clamped, solve_penalized_with, PenaltySchedule,
};
use drbsde::stochastic::{simulate_brownian, simulate_market, Backend, Lattice, RegressionBackend};
use drbsde::{accumulate_weights, beta_norms, build_grid, ProblemData, SolutionBundle, StateFn, TimeGrid, WeightProfile};

use crate::config::{BackendKind, Format, ProblemSection, RunConfig, SolverChoice};
use crate::output::*;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Solve,
    Converge,
    Compare,
    Price,
}

/// Runs `command` and writes its artifacts under `out`.
pub fn run(command: Command, cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let grid = build_grid(cfg.grid.horizon, cfg.grid.steps)?;
    match command {
        Command::Solve => solve(cfg, &grid, out),
        Command::Converge => converge(cfg, &grid, out),
        Command::Compare => compare(cfg, &grid, out),
        Command::Price => price(cfg, &grid, out),
    }
}

fn barrier_features(sections: &[&ProblemSection]) -> Vec<StateFn<f64>> {
    sections
        .iter()
        .flat_map(|p| p.lower.iter().chain(&p.upper))
        .map(|b| b.state_fn())
        .collect()
}

fn build_backend(cfg: &RunConfig, grid: &TimeGrid<f64>, features: &[StateFn<f64>]) -> Result<Backend<f64>, CliError> {
    let market = cfg.market_spec();
    Ok(match cfg.engine.backend {
        BackendKind::Lattice => match &market {
            Some(m) => Lattice::market(m, grid)?.into(),
            None => Lattice::brownian(grid)?.into(),
        },
        BackendKind::Regression => {
            let noise = Arc::new(simulate_brownian(grid, cfg.simulation.n_paths, 1, cfg.simulation.seed)?);
            let states = match &market {
                Some(m) => simulate_market(m, &noise, grid)?.s,
                None => noise.levels(0),
            };
            RegressionBackend::with_features(grid, states, noise, cfg.basis(), features.to_vec())?.into()
        }
    })
}

fn weights(cfg: &RunConfig, problem: &ProblemData<f64>, grid: &TimeGrid<f64>) -> Result<WeightProfile<f64>, CliError> {
    let w = &cfg.weights;
    Ok(match (w.mu, w.gamma) {
        (None, None) => WeightProfile::from_envelope(problem.generator.as_ref(), grid, w.eps, w.beta)?,
        (mu, gamma) => {
            let nodes = grid.n_steps() + 1;
            let env: Vec<(f64, f64)> = grid.nodes().iter().map(|&t| problem.generator.envelope(t)).collect();
            let mu: Vec<f64> = env.iter().map(|e| mu.unwrap_or(e.0)).collect();
            let gamma: Vec<f64> = env.iter().map(|e| gamma.unwrap_or(e.1)).collect();
            debug_assert_eq!(mu.len(), nodes);
            accumulate_weights(&mu, &gamma, w.eps, w.beta, grid)?
        }
    })
}

fn solve_with(
    cfg: &RunConfig,
    problem: &ProblemData<f64>,
    backend: &Backend<f64>,
    grid: &TimeGrid<f64>,
    w: &WeightProfile<f64>,
) -> Result<(SolutionBundle<f64>, Option<PicardRecord>), CliError> {
    Ok(match cfg.engine.solver {
        SolverChoice::Bsde => (solve_bsde(problem, backend, grid, w)?, None),
        SolverChoice::Clamped => (solve_clamped(problem, backend, grid, w)?, None),
        SolverChoice::Penalized => (
            solve_penalized_with(problem, cfg.engine.penalty, cfg.engine.scheme, backend, grid, w)?,
            None,
        ),
        SolverChoice::Picard => {
            let out = picard_solve(problem, &cfg.picard(), backend, grid, w)?;
            let record = PicardRecord {
                iterations: out.iterations(),
                converged: out.converged,
                trace: out.trace.clone(),
            };
            (out.solution, Some(record))
        }
    })
}

fn solve(cfg: &RunConfig, grid: &TimeGrid<f64>, out: &Path) -> Result<(), CliError> {
    let problem = cfg.problem.build();
    let backend = build_backend(cfg, grid, &barrier_features(&[&cfg.problem]))?;
    let w = weights(cfg, &problem, grid)?;
    let (sol, picard) = solve_with(cfg, &problem, &backend, grid, &w)?;
    let (res_lo, res_up) = skorokhod_residual(&sol, &problem, grid)?;
    let (vio_up, vio_lo) = sol.barrier_violations(&problem);
    let summary = SolveSummary {
        solver: cfg.engine.solver,
        backend: cfg.engine.backend,
        steps: grid.n_steps(),
        seed: cfg.simulation.seed,
        y0: sol.y0(),
        norms: beta_norms(&sol, &w, grid)?,
        residuals: Pair {
            lower: res_lo,
            upper: res_up,
        },
        violations: Pair {
            lower: vio_lo,
            upper: vio_up,
        },
        terminal_error: sol.terminal_error(&problem),
        apriori: apriori_ratio(&sol, &problem, &w, grid)?,
        max_inner_iterations: sol.meta.max_inner_iterations,
        picard,
    };
    if cfg.wants(Format::Json) {
        write_json(out, "summary.json", &summary)?;
    }
    if cfg.wants(Format::Csv) {
        let rows = sol
            .mean_series()
            .into_iter()
            .zip(grid.nodes())
            .map(|(m, t)| vec![*t, m[0], m[1], m[2], m[3]]);
        write_file(out, "series.csv", &csv_table(SERIES_HEADER, rows))?;
    }
    Ok(())
}

fn converge(cfg: &RunConfig, grid: &TimeGrid<f64>, out: &Path) -> Result<(), CliError> {
    let problem = cfg.problem.build();
    let schedule = PenaltySchedule::new(cfg.engine.schedule.clone())?;
    let w = weights(cfg, &problem, grid)?;
    let features = barrier_features(&[&cfg.problem]);
    let factory = |g: &TimeGrid<f64>| build_backend(cfg, g, &features).map_err(|e| match e {
        CliError::Numeric(e) => e,
        other => drbsde::Error::InvalidArgument(other.to_string()),
    });
    let report = convergence_study_with(&problem, &schedule, cfg.engine.scheme, &factory, grid, &w)?;
    if cfg.wants(Format::Csv) {
        write_file(out, "convergence.csv", &csv_table(CONVERGENCE_HEADER, convergence_rows(&report)))?;
    }
    if cfg.wants(Format::Json) {
        let summary = ConvergeSummary {
            backend: cfg.engine.backend,
            seed: cfg.simulation.seed,
            report,
        };
        write_json(out, "summary.json", &summary)?;
    }
    Ok(())
}

fn compare(cfg: &RunConfig, grid: &TimeGrid<f64>, out: &Path) -> Result<(), CliError> {
    let Some(second) = &cfg.compare else {
        return Err(CliError::Config("field `compare`: required by the compare command".into()));
    };
    let (pa, pb) = (cfg.problem.build(), second.problem.build());
    let backend = build_backend(cfg, grid, &barrier_features(&[&cfg.problem, &second.problem]))?;
    let w = weights(cfg, &pa, grid)?;
    let (a, _) = solve_with(cfg, &pa, &backend, grid, &w)?;
    let (b, _) = solve_with(cfg, &pb, &backend, grid, &w)?;
    let report = comparison_check(&a, &b)?;
    let record = ComparisonRecord {
        solver: cfg.engine.solver,
        backend: cfg.engine.backend,
        seed: cfg.simulation.seed,
        first_y0: a.y0(),
        second_y0: b.y0(),
        k_ordered: report.k_ordered(),
        report,
    };
    write_json(out, "comparison.json", &record)
}

fn price(cfg: &RunConfig, grid: &TimeGrid<f64>, out: &Path) -> Result<(), CliError> {
    let Some(market) = cfg.market_spec() else {
        return Err(CliError::Config("field `market`: required by the price command".into()));
    };
    let engine = match cfg.engine.solver {
        SolverChoice::Clamped => Engine::Clamped,
        SolverChoice::Penalized => Engine::Penalized {
            n: cfg.engine.penalty,
            scheme: cfg.engine.scheme,
        },
        SolverChoice::Picard => Engine::Picard(cfg.picard()),
        SolverChoice::Bsde => {
            return Err(CliError::Config(
                "field `engine.solver`: price needs clamped, penalized or picard".into(),
            ))
        }
    };
    let p = &cfg.problem;
    let mut spec = GameSpec::new(market.clone(), p.terminal.state_fn());
    spec.lower = p.lower.as_ref().map(|l| l.state_fn());
    spec.upper = p.upper.as_ref().map(|u| u.state_fn());

    let oracle_lattice = Lattice::market(&market.risk_neutral(), grid)?;
    let oracle = dynkin_tree_oracle(&spec, &oracle_lattice, REGION_TOL)?;
    let backend = match cfg.engine.backend {
        BackendKind::Lattice => drbsde::game::lattice_backend(&spec, grid)?,
        BackendKind::Regression => drbsde::game::regression_backend(
            &spec,
            grid,
            cfg.simulation.n_paths,
            cfg.simulation.seed,
            cfg.basis(),
        )?,
    };
    let priced = price_game_option(&spec, &engine, grid, &backend)?;
    let gap = (priced.value - oracle.value).abs();
    let relative_gap = if oracle.value != 0.0 { gap / oracle.value.abs() } else { gap };
    let [continuation, exercise, cancel, both] = priced.regions.counts();
    let record = PriceRecord {
        solver: cfg.engine.solver,
        backend: cfg.engine.backend,
        steps: grid.n_steps(),
        seed: cfg.simulation.seed,
        oracle_value: oracle.value,
        engine_value: priced.value,
        relative_gap,
        regions: RegionCounts {
            continuation,
            exercise,
            cancel,
            both,
        },
        region_masks: priced.solution.is_lattice().then(|| priced.regions.codes()),
        picard_trace: matches!(engine, Engine::Picard(_)).then(|| priced.picard_trace.clone()),
    };
    write_json(out, "price.json", &record)
}
