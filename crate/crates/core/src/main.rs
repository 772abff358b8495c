use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lloyd_adversary::commands::{
    cmd_expand, cmd_generate, cmd_run, cmd_sweep, cmd_verify, ExpandArgs, GenerateArgs, RunArgs,
    SweepArgs, VerifyArgs, DEFAULT_SWEEP_GUARD,
};
use lloyd_adversary::construction::{REFERENCE_DELTA, REFERENCE_LAMBDA};
use lloyd_adversary::engine::{EmptyClusterPolicy, DEFAULT_MAX_ITERATIONS};
use lloyd_adversary::{Precision, Variant};

#[derive(Parser)]
#[command(
    name = "lloyd-adversary",
    version,
    about = "Exponential-iteration instances for Lloyd's k-means"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a gadget chain and write it as an instance file
    Generate {
        #[arg(long)]
        gadgets: usize,
        #[arg(long, default_value_t = 1.0)]
        r0: f64,
        /// morning-means or datapoints
        #[arg(long, default_value = "morning-means")]
        variant: Variant,
        #[arg(long, default_value_t = REFERENCE_DELTA)]
        delta: f64,
        #[arg(long, default_value_t = REFERENCE_LAMBDA)]
        lambda: f64,
        /// Override the default epsilon (half its upper bound)
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value = "double")]
        precision: Precision,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Run weighted Lloyd's on an instance file
    Run {
        instance: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
        max_iters: usize,
        /// Trace CSV path (default: <instance>.trace.csv)
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        no_trace: bool,
        #[arg(long, default_value = "double")]
        precision: Precision,
        #[arg(long, default_value_t = 0.0)]
        tie_tolerance: f64,
        /// fail or drop
        #[arg(long, default_value = "fail")]
        empty_policy: EmptyClusterPolicy,
    },
    /// Check a trace against the stage machine and a replay of the instance
    Verify {
        instance: PathBuf,
        trace: PathBuf,
        #[arg(long, default_value = "double")]
        precision: Precision,
        /// Also check sleeping centers against S* within 1e-6 r_i
        #[arg(long)]
        strict: bool,
    },
    /// Iteration counts for a range of chain lengths
    Sweep {
        #[arg(long, default_value_t = 2)]
        min_t: usize,
        #[arg(long)]
        max_t: usize,
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SWEEP_GUARD)]
        guard: usize,
        #[arg(long, default_value = "morning-means")]
        variant: Variant,
    },
    /// Replace weighted points by clouds of unit-weight points
    Expand {
        instance: PathBuf,
        /// Cloud radius (default 1e-12 r0)
        #[arg(long)]
        spacing: Option<f64>,
        #[arg(long, short)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let status = match cli.command {
        Command::Generate {
            gadgets,
            r0,
            variant,
            delta,
            lambda,
            epsilon,
            precision,
            out: path,
        } => cmd_generate(
            &GenerateArgs {
                gadgets,
                r0,
                variant,
                delta,
                lambda,
                epsilon,
                precision,
                out: path,
            },
            &mut out,
        )
        .map(|_| ()),
        Command::Run {
            instance,
            max_iters,
            trace,
            no_trace,
            precision,
            tie_tolerance,
            empty_policy,
        } => cmd_run(
            &RunArgs {
                instance,
                max_iters,
                trace,
                no_trace,
                precision,
                tie_tolerance,
                empty_policy,
            },
            &mut out,
        )
        .map(|_| ()),
        Command::Verify {
            instance,
            trace,
            precision,
            strict,
        } => cmd_verify(
            &VerifyArgs {
                instance,
                trace,
                precision,
                strict,
            },
            &mut out,
        )
        .map(|_| ()),
        Command::Sweep {
            min_t,
            max_t,
            out: path,
            guard,
            variant,
        } => cmd_sweep(
            &SweepArgs {
                min_t,
                max_t,
                out: path,
                guard,
                variant,
            },
            &mut out,
        )
        .map(|_| ()),
        Command::Expand {
            instance,
            spacing,
            out: path,
        } => cmd_expand(
            &ExpandArgs {
                instance,
                spacing,
                out: path,
            },
            &mut out,
        )
        .map(|_| ()),
    };
    let _ = out.flush();
    match status {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
