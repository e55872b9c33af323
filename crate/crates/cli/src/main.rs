use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use drbsde_cli::{output::write_json, run, CliError, Command, RunConfig};

/// Doubly reflected BSDE solver and game option pricer.
#[derive(Debug, Parser)]
#[command(name = "drbsde", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output.directory`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Simulation seed (overrides `simulation.seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut cfg = match RunConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => return fail(&e, None),
    };
    if let Some(seed) = args.seed {
        cfg.simulation.seed = seed;
    }
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
    if let Some(n) = args.threads {
        if n == 0 {
            return fail(&CliError::Config("--threads must be positive".into()), None);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(&CliError::Io(e.to_string()), None);
        }
    }
    match run(args.command, &cfg, &out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e, Some(&out)),
    }
}

fn fail(e: &CliError, out: Option<&PathBuf>) -> ExitCode {
    let record = e.record();
    eprintln!("drbsde: {e}");
    eprintln!("{record}");
    if let (Some(dir), CliError::Numeric(_)) = (out, e) {
        let _ = write_json(dir, "error.json", &record);
    }
    ExitCode::from(e.exit_code() as u8)
}
