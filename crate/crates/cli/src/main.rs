use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qpresponse_cli::{run, CliError, Command, RunConfig};

#[derive(Parser)]
#[command(
    name = "qpresponse",
    version,
    about = "Quasi-periodic response solutions of ε ẍ + ẋ + ε g(x) = ε f(ωt)"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,

    /// JSON run config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides the config's `out`, default ".").
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Accepted for interface stability; every algorithm is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for the parallel sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Divisor table and partial Bryuno sums.
    Bryuno,
    /// Response solution at one ε.
    Solve,
    /// Bifurcation curve c(ε) over a grid.
    Sweep,
    /// Coefficients of the ε expansion.
    Series,
    /// Tree enumeration with scale and cluster counting checks.
    Trees,
    /// Trajectory started on or near the response solution.
    Simulate,
    /// Sign scan of the bifurcation residual at an even-order zero.
    Probe,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Command {
        match s {
            Sub::Bryuno => Command::Bryuno,
            Sub::Solve => Command::Solve,
            Sub::Sweep => Command::Sweep,
            Sub::Series => Command::Series,
            Sub::Trees => Command::Trees,
            Sub::Simulate => Command::Simulate,
            Sub::Probe => Command::Probe,
        }
    }
}

fn fail(e: CliError, code: u8) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(code)
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let Some(path) = cli.config else {
        return fail(
            CliError {
                error: "usage".into(),
                message: "--config PATH is required".into(),
            },
            2,
        );
    };
    if let Some(seed) = cli.seed {
        log::debug!("seed {seed} ignored");
    }
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
        {
            log::warn!("thread pool: {e}");
        }
    }
    let cfg = match RunConfig::load(&path) {
        Ok(c) => c,
        Err(e) => return fail(e, 2),
    };
    let out = cli
        .out
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    match run(cli.command.into(), &cfg, &out) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(e, 1),
    }
}
