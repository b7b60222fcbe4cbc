use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use diskqm_cli::config::*;
use diskqm_cli::runner::{run, Failure};

/// Quasimodes of the unit disk: experiments from the command line or a JSON config.
#[derive(Parser)]
#[command(name = "diskqm", version)]
struct Cli {
    /// Root seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory (default `out/<kind>`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bessel zeros j_{m,k}.
    Modes(ModesParams),
    /// A billiard trajectory.
    Trace(TraceParams),
    /// Build quasimodes and write them as JSON.
    Build(QuasimodeParams),
    /// Mass and phase-space diagnostics of quasimodes.
    Analyze(AnalyzeParams),
    /// Floquet bands of the effective operator on a periodic torus.
    Effective(EffectiveParams),
    /// Observability-constant sweep κ(λ).
    Sweep(SweepParams),
    /// Run a JSON config; `--out` overrides its output directory.
    Run { config: PathBuf },
    /// Print the JSON schema of configs.
    Schema,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(n) = std::env::var("DISKQM_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("config error at `DISKQM_THREADS`: expected a positive integer, got {n:?}");
                return ExitCode::from(2);
            }
        }
    }
    let experiment = match cli.command {
        Command::Modes(p) => Experiment::Modes(p),
        Command::Trace(p) => Experiment::Trace(p),
        Command::Build(p) => Experiment::Build(p),
        Command::Analyze(p) => Experiment::Analyze(p),
        Command::Effective(p) => Experiment::Effective(p),
        Command::Sweep(p) => Experiment::Sweep(p),
        Command::Schema => {
            let schema = schemars::schema_for!(ExperimentConfig);
            println!("{}", serde_json::to_string_pretty(&schema).expect("schema serializes"));
            return ExitCode::SUCCESS;
        }
        Command::Run { config } => {
            let loaded = std::fs::read_to_string(&config)
                .map_err(|e| Failure::Config(format!("cannot read {}: {e}", config.display())))
                .and_then(|text| ExperimentConfig::from_json(&text).map_err(Failure::from));
            return match loaded {
                Ok(mut cfg) => {
                    if cli.out.is_some() {
                        cfg.output = cli.out;
                    }
                    finish(&cfg)
                }
                Err(e) => report(e),
            };
        }
    };
    let cfg = ExperimentConfig {
        schema: SCHEMA_VERSION.into(),
        seed: cli.seed,
        output: cli.out,
        experiment,
    };
    finish(&cfg)
}

fn finish(cfg: &ExperimentConfig) -> ExitCode {
    match run(cfg, true) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => report(e),
    }
}

fn report(e: Failure) -> ExitCode {
    eprintln!("{e}");
    ExitCode::from(e.exit_code())
}
