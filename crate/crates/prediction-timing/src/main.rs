//! Thin command-line front end over [`prediction_timing::runner`].
//!
//! Exit codes: 0 success, 2 domain error, 3 capacity refusal,
//! 4 verification failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

use prediction_timing::runner::{CommandKind, RunConfig};

#[derive(Parser)]
#[command(
    name = "prediction-timing",
    version,
    about = "Optimal timing of a single market prediction: solve the threshold \
             policy, export its profiles, simulate it, and check it"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the backward recursion and write policy.json / policy.csv
    Solve(CommonArgs),
    /// Export threshold and value profiles (figure2.csv / figure3.csv)
    Profile(ProfileArgs),
    /// Monte Carlo the solved policy against baselines (simulate.csv)
    Simulate(CommonArgs),
    /// Tabulate the analytic growth envelopes (bounds.csv)
    Bounds(CommonArgs),
    /// Run the cross-module consistency suite (verify.csv); exit 4 on failure
    Verify(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Horizon: number of rounds before the outcome resolves
    #[arg(long = "T", default_value_t = 100)]
    horizon: usize,

    /// Total error budget; also sizes the integral truncation width
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,

    /// Grid step override; omit for the default desk-scale 0.01
    #[arg(long)]
    gamma: Option<f64>,

    /// Derive the certified grid from epsilon instead of using --gamma
    /// (impractically fine beyond small horizons)
    #[arg(long)]
    certified: bool,

    /// Expert quality: foreseen fraction of each round's variance
    #[arg(long, default_value_t = 0.5)]
    q: f64,

    /// Monte Carlo paths
    #[arg(long = "n", default_value_t = 100_000)]
    n_paths: u64,

    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Output directory for artifacts and manifest.json
    #[arg(long, default_value = ".")]
    out: PathBuf,

    /// Bisect thresholds inside their grid cell
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    refine_theta: bool,

    /// Keep every time slice in policy.json, not just the last
    #[arg(long = "store-grid")]
    store_full_grid: bool,

    /// Also write per-path outcomes to paths.csv (simulate only)
    #[arg(long = "dump-paths")]
    dump_paths: bool,
}

#[derive(Args)]
struct ProfileArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Time slice for the value profile; defaults to the horizon
    #[arg(long = "t")]
    profile_t: Option<usize>,
}

fn build_config(kind: CommandKind, common: CommonArgs, profile_t: Option<usize>) -> RunConfig {
    let mut cfg = RunConfig::new(kind, common.horizon);
    cfg.epsilon = common.epsilon;
    cfg.gamma = if common.certified {
        None
    } else {
        Some(common.gamma.unwrap_or(0.01))
    };
    cfg.q = common.q;
    cfg.n_paths = common.n_paths;
    cfg.seed = common.seed;
    cfg.out_dir = common.out;
    cfg.refine_theta = common.refine_theta;
    cfg.store_full_grid = common.store_full_grid;
    cfg.dump_paths = common.dump_paths;
    cfg.profile_t = profile_t;
    cfg
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match cli.command {
        Command::Solve(c) => build_config(CommandKind::Solve, c, None),
        Command::Profile(p) => build_config(CommandKind::Profile, p.common, p.profile_t),
        Command::Simulate(c) => build_config(CommandKind::Simulate, c, None),
        Command::Bounds(c) => build_config(CommandKind::Bounds, c, None),
        Command::Verify(c) => build_config(CommandKind::Verify, c, None),
    };
    match cfg.execute() {
        Ok(outcome) => {
            for note in &outcome.notes {
                println!("{note}");
            }
            for (name, hash) in &outcome.artifacts {
                println!("wrote {name} ({}...)", &hash[..12]);
            }
            if outcome.verify_failures > 0 {
                eprintln!("{} check(s) failed", outcome.verify_failures);
                ExitCode::from(4)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
