use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;
use wrw_bench::{emit_report, run_monte_carlo, Algorithm, BenchError, MonteCarloOptions, ScenarioConfig};

/// Cubature Kalman smoothing benchmark.
#[derive(Debug, Parser)]
#[command(name = "wrw-smooth", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a Monte Carlo scenario and write its report.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Algorithms to run, overriding the scenario (repeatable).
        #[arg(long = "algo", value_name = "cks|acks|wrwacrts")]
        algorithms: Vec<Algorithm>,
        #[arg(long)]
        runs: Option<usize>,
        /// Base seed; run r uses seed + r.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory [default: the scenario's output_path, else ./out]
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// Compare the cubature filter and smoother against the linear oracle.
        #[arg(long)]
        oracle: bool,
    },
    /// Parse a scenario and check its invariants.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::Validate { scenario } => {
            let cfg = ScenarioConfig::load(&scenario)?;
            println!(
                "{}: ok ({} runs x {} steps, algorithms {})",
                scenario.display(),
                cfg.runs,
                cfg.steps,
                cfg.algorithms.iter().map(|a| a.label()).collect::<Vec<_>>().join(",")
            );
            Ok(())
        }
        Command::Run {
            scenario,
            algorithms,
            runs,
            seed,
            out,
            workers,
            oracle,
        } => {
            let mut cfg = ScenarioConfig::load(&scenario)?;
            if !algorithms.is_empty() {
                cfg.algorithms = algorithms;
            }
            if let Some(r) = runs {
                cfg.runs = r;
            }
            if let Some(s) = seed {
                cfg.base_seed = s;
            }
            cfg.validate()?;
            let out = out
                .or_else(|| cfg.output_path.as_ref().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("out"));

            let res = run_monte_carlo(&cfg, &MonteCarloOptions { workers, oracle })?;
            let files = emit_report(&res, &out)?;
            for f in &files {
                info!("wrote {}", f.display());
            }
            println!(
                "{:<10} {:>12} {:>12} {:>12} {:>12}",
                "algorithm", "pos (smooth)", "spd (smooth)", "pos (filt)", "spd (filt)"
            );
            for (algo, r) in &res.results {
                println!(
                    "{:<10} {:>12.4} {:>12.4} {:>12.4} {:>12.4}",
                    algo.label(),
                    r.smoothed.avg_position_rmse,
                    r.smoothed.avg_speed_rmse,
                    r.filtered.avg_position_rmse,
                    r.filtered.avg_speed_rmse
                );
            }
            if let Some(o) = &res.oracle {
                println!("oracle max |diff| over {} runs: {:e}", o.runs, o.max_abs_diff.max());
            }
            if !res.excluded_runs.is_empty() {
                println!("excluded runs: {:?}", res.excluded_runs);
            }
            println!("report: {}", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("WRW_SMOOTH_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
