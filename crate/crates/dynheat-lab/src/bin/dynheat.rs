use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dynheat_lab::{report, run, Command, Options, RunConfig};

#[derive(Parser)]
#[command(name = "dynheat", version, about = "Heat equation with dynamic boundary conditions: checks and impulsive control")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Worker threads for ensembles (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `ensemble.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Propagate one initial state; write trajectory and energy CSVs.
    Simulate {
        #[command(flatten)]
        args: RunArgs,
        /// Also write the operator in coordinate format.
        #[arg(long)]
        dump_operator: bool,
    },
    /// Frequency traces, Step-4 and interpolation checks, fitted constants.
    Observe {
        #[command(flatten)]
        args: RunArgs,
    },
    /// Discrete against closed-form commutator form under refinement.
    CommutatorCheck {
        #[command(flatten)]
        args: RunArgs,
    },
    /// Synthesize and certify impulsive controls.
    Control {
        #[command(flatten)]
        args: RunArgs,
    },
    /// Control cost over a sweep of targets.
    CostStudy {
        #[command(flatten)]
        args: RunArgs,
    },
    /// Merge the artifacts of earlier runs into report.json.
    Report {
        /// Artifact directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let (cmd, args, dump) = match cli.cmd {
        Cmd::Report { out } => return Ok(report(&out)?.passed),
        Cmd::Simulate { args, dump_operator } => (Command::Simulate, args, dump_operator),
        Cmd::Observe { args } => (Command::Observe, args, false),
        Cmd::CommutatorCheck { args } => (Command::CommutatorCheck, args, false),
        Cmd::Control { args } => (Command::Control, args, false),
        Cmd::CostStudy { args } => (Command::CostStudy, args, false),
    };
    let cfg = RunConfig::load(&args.config)?;
    let out = args.out.unwrap_or_else(|| cfg.output.dir.clone());
    let opts = Options {
        seed: args.seed,
        dump_operator: dump,
    };
    let outcome = run(cmd, &cfg, &out, &opts)?;
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("certification failed; see the written artifacts");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
