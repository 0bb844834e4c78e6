use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use tidual_cli::{load_config, run, Command, Overrides, RunConfig};

/// Solver and duality verifier for optimal consumption with a randomly
/// terminating income.
#[derive(Debug, Parser)]
#[command(name = "tidual", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also render SVG plots (`figures`).
    #[arg(long, global = true)]
    svg: bool,
    #[arg(long, global = true)]
    a: Option<f64>,
    #[arg(long, global = true)]
    eta: Option<f64>,
    #[arg(long, global = true)]
    r: Option<f64>,
    /// Initial wealth for `simulate` and `verify`.
    #[arg(long, global = true)]
    x: Option<f64>,
    #[arg(long, global = true)]
    paths: Option<usize>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long, global = true)]
    tmax: Option<f64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(path) => match load_config(path) {
            Ok(cfg) => cfg,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        },
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: cli.seed,
        out: cli.out,
        svg: cli.svg,
        a: cli.a,
        eta: cli.eta,
        r: cli.r,
        x: cli.x,
        paths: cli.paths,
        dt: cli.dt,
        t_max: cli.tmax,
    });
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match run(cli.command, &cfg) {
        Ok(outcome) if outcome.success() => ExitCode::SUCCESS,
        Ok(outcome) => {
            eprintln!("hard checks failed: {}", outcome.hard_failures.join(", "));
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
