use std::path::PathBuf;
use std::process::exit;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use fns_cli::commands::{self, EXIT_USAGE};
use fns_cli::config::{load_config, RunConfig};

#[derive(Parser)]
#[command(
    name = "fns",
    version,
    about = "Truncated Fourier-lattice solver workbench: solve, verify, bootstrap, bench"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the Picard iteration and write run artifacts
    Solve(RunArgs),
    /// Re-measure every estimate on a stored run (uses the manifest's config)
    Verify(RunArgs),
    /// Decay-upgrade induction and terminal fits on a stored run (ladder
    /// settings come from this config, the run's identity from its manifest)
    Bootstrap(RunArgs),
    /// Time the fft route against the direct oracle, gated on agreement
    Bench(BenchArgs),
    /// Print the complete default configuration as TOML
    PrintDefaultConfig,
}

#[derive(Args)]
struct RunArgs {
    /// Config file (TOML); omitted keys take their defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory override
    #[arg(long)]
    out: Option<PathBuf>,
    /// Rayon thread-pool size override
    #[arg(long)]
    threads: Option<usize>,
    /// Data seed override (solve and bench; stored runs keep their seed)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated truncation radii to time
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
}

fn resolve(args: &RunArgs) -> Result<RunConfig, i32> {
    let mut cfg = match &args.config {
        Some(path) => load_config(path).map_err(|e| {
            eprintln!("config error: {e:#}");
            EXIT_USAGE
        })?,
        None => RunConfig::default(),
    };
    if let Some(out) = &args.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.data.seed = seed;
    }
    if let Some(n) = args.threads {
        // a second build_global in one process is a no-op; overriding again
        // is not supported, so ignore the error
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(cfg)
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            exit(code);
        }
    };

    let outcome = match &cli.cmd {
        Cmd::PrintDefaultConfig => {
            print!("{}", RunConfig::default().to_toml());
            Ok(0)
        }
        Cmd::Solve(args) => match resolve(args) {
            Ok(cfg) => commands::run_solve(&cfg),
            Err(code) => Ok(code),
        },
        Cmd::Verify(args) => match resolve(args) {
            Ok(cfg) => commands::run_verify(&cfg),
            Err(code) => Ok(code),
        },
        Cmd::Bootstrap(args) => match resolve(args) {
            Ok(cfg) => commands::run_bootstrap(&cfg),
            Err(code) => Ok(code),
        },
        Cmd::Bench(args) => match resolve(&args.run) {
            Ok(cfg) => {
                let radii = args.radii.clone().unwrap_or_else(|| vec![4.0, 8.0, 16.0, 32.0]);
                commands::run_bench(&cfg, &radii)
            }
            Err(code) => Ok(code),
        },
    };

    match outcome {
        Ok(code) => exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            exit(1);
        }
    }
}
