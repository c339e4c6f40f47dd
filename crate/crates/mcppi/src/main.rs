use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mcppi::config::{parse_config, parse_config_file, schema_help, Mode};
use mcppi::{parse_seeds, run_experiment, ExperimentSpec};

#[derive(Parser)]
#[command(name = "mcppi", version, about = "Monte Carlo posterior policy iteration experiments")]
struct Cli {
    #[command(subcommand)]
    mode: Command,
}

#[derive(clap::Args)]
#[command(after_help = schema_help())]
struct RunArgs {
    /// TOML config; omitted keys take the mode's defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for trace_seed<N>.csv and summary.csv
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated seeds, ranges allowed (e.g. 0-24)
    #[arg(long, default_value = "0-24")]
    seeds: String,
    /// Record per-iteration wall time (makes outputs non-reproducible)
    #[arg(long)]
    wall_time: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Black-box optimization of a test function
    Bbo(RunArgs),
    /// Open-loop episodic policy search on a control task
    Episodic(RunArgs),
    /// Receding-horizon control on a control task
    Mpc(RunArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match cli.mode {
        Command::Bbo(a) => (Mode::Bbo, a),
        Command::Episodic(a) => (Mode::Episodic, a),
        Command::Mpc(a) => (Mode::Mpc, a),
    };
    let config = match &args.config {
        Some(path) => parse_config_file(path, mode),
        None => parse_config("", mode),
    };
    let spec = config.and_then(|config| {
        Ok(ExperimentSpec { config, out_dir: args.out.clone(), seeds: parse_seeds(&args.seeds)?, wall_time: args.wall_time })
    });
    let spec = match spec {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run_experiment(&spec) {
        Ok(report) => {
            for o in report.outcomes.iter().filter(|o| o.summary.status != "ok") {
                eprintln!("seed {}: {}", o.summary.seed, o.summary.status);
            }
            println!(
                "{} seeds, {} failed; results in {}",
                report.outcomes.len(),
                report.failures,
                spec.out_dir.display()
            );
            if report.failures == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
