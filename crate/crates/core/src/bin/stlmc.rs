use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use stlmc::experiment::{run_experiment, write_outcome, ExperimentConfig, Mode};
use stlmc::fixtures::fixture_table;
use stlmc::Error;

/// Simulated tempering Langevin sampler and spectral verification runner.
#[derive(Debug, Parser)]
#[command(name = "stlmc", version)]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, required_unless_present = "list_fixtures")]
    config: Option<PathBuf>,
    /// Override the config's mode.
    #[arg(long)]
    mode: Option<Mode>,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: the config's `out`, else `stlmc-out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Print the built-in fixtures and exit.
    #[arg(long)]
    list_fixtures: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if cli.list_fixtures {
        print!("{}", fixture_table());
        return ExitCode::SUCCESS;
    }
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --jobs: {e}");
            return ExitCode::from(2);
        }
    }
    let path = cli.config.expect("required by clap");
    let mut cfg = match ExperimentConfig::load(&path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    if let Some(m) = cli.mode {
        cfg.mode = m;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let out = cli
        .out
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("stlmc-out"));
    let outcome = match run_experiment(&cfg, out) {
        Ok(o) => o,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(table) = &outcome.ladder_table {
        print!("{table}");
    }
    if let Err(e) = write_outcome(&cfg, &outcome) {
        eprintln!("error: writing {}: {e}", outcome.out_dir.display());
        return ExitCode::from(1);
    }
    let failed: Vec<_> = outcome.assertions.iter().filter(|a| !a.pass).collect();
    for a in &outcome.assertions {
        println!(
            "{} {}: observed {} threshold {}",
            if a.pass { "PASS" } else { "FAIL" },
            a.name,
            a.observed,
            a.threshold
        );
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!(
            "{} assertion(s) failed; see {}",
            failed.len(),
            outcome.out_dir.join(&outcome.report).display()
        );
        ExitCode::from(1)
    }
}
