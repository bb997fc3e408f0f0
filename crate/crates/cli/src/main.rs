use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use gatesim::{
    cmd_compare, cmd_enroll, cmd_eval, cmd_gen_trace, cmd_run, load_config, CliError,
    ConfigOverrides,
};

#[derive(Parser)]
#[command(
    name = "gatesim",
    version,
    about = "Trace-driven simulator for adaptive gating of multi-stage perception pipelines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario trace file
    GenTrace(ConfigArgs),
    /// Build an owner enrollment database
    Enroll(EnrollArgs),
    /// Simulate one policy over a trace and write a report
    Run(ConfigArgs),
    /// Run baseline and adaptive over the same trace and write a comparison
    Compare(ConfigArgs),
    /// Print metrics from a report file
    Eval(EvalArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON config file
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed; overrides noise.seed and scenario.seed
    #[arg(long)]
    seed: Option<u64>,
    /// Policy mode: adaptive or baseline
    #[arg(long, value_name = "MODE")]
    policy: Option<String>,
    /// Fixed per-frame overhead charge in milliseconds
    #[arg(long, value_name = "MS")]
    overhead_ms: Option<f64>,
    /// Output file
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Override one config field, e.g. --set policy.face_period=3
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl From<ConfigArgs> for ConfigOverrides {
    fn from(args: ConfigArgs) -> Self {
        ConfigOverrides {
            config: args.config,
            seed: args.seed,
            policy: args.policy,
            overhead_ms: args.overhead_ms,
            out: args.out,
            set: args.set,
        }
    }
}

#[derive(Args)]
struct EnrollArgs {
    /// Identity tag to enroll
    #[arg(long, default_value = "owner")]
    identity: String,
    /// Number of synthetic enrollment embeddings
    #[arg(long, default_value_t = 100)]
    count: usize,
    /// Noise scale of the enrollment embeddings
    #[arg(long, default_value_t = 0.05)]
    sigma: f64,
    /// Seed for the synthetic embeddings
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output database file
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Report file produced by run or compare
    report: PathBuf,
    /// Sliding-window width for the accuracy-over-time summary
    #[arg(long, default_value_t = 100)]
    window: usize,
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenTrace(args) => cmd_gen_trace(&load_config(&args.into())?),
        Command::Enroll(args) => {
            cmd_enroll(&args.identity, args.count, args.sigma, args.seed, &args.out)
        }
        Command::Run(args) => cmd_run(&load_config(&args.into())?),
        Command::Compare(args) => cmd_compare(&load_config(&args.into())?),
        Command::Eval(args) => cmd_eval(&args.report, args.window),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(error) = dispatch(cli) {
        eprintln!("error: {error}");
        std::process::exit(error.exit_code());
    }
}
