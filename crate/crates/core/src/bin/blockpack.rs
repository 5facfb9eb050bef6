use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use blockpack::harness::{self, HarnessError, RunConfig, Settings};

/// Online block packing experiments.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write an instance file (or an adaptive-source descriptor).
    Generate(Flags),
    /// Run one algorithm against one source and write reports.
    Run(Flags),
    /// Run a grid of configurations; list-valued flags take `a,b,c`.
    Sweep(Flags),
    /// Offline optima of an instance.
    Bench(Flags),
}

/// Every flag mirrors a config-file key of the same name.
#[derive(Args)]
struct Flags {
    /// Flat `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// greedy | oracle-exact | oracle-det | oracle-rand | batch-<alg>
    #[arg(long)]
    alg: Option<String>,
    /// two-phase | staircase | random | file
    #[arg(long)]
    source: Option<String>,
    #[arg(long)]
    instance: Option<String>,
    /// Horizon.
    #[arg(long = "T")]
    horizon: Option<String>,
    /// Extension blocks after the horizon.
    #[arg(long)]
    gamma: Option<String>,
    /// Batch length for batch-* algorithms.
    #[arg(long = "L")]
    batch_len: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Number of consecutive seeds in a sweep.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    out_dir: Option<String>,
    /// Resources.
    #[arg(long)]
    m: Option<String>,
    /// Transactions in random instances.
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    /// Largest demand/capacity ratio in random instances.
    #[arg(long)]
    qmax: Option<String>,
    /// Batch length of the staircase adversary.
    #[arg(long)]
    phase_len: Option<String>,
}

impl Flags {
    fn settings(&self) -> Result<Settings, HarnessError> {
        let base = match &self.config {
            Some(p) => Settings::load(p)?,
            None => Settings::new(),
        };
        let mut flags = Settings::new();
        let pairs = [
            ("alg", &self.alg),
            ("source", &self.source),
            ("instance", &self.instance),
            ("t", &self.horizon),
            ("gamma", &self.gamma),
            ("l", &self.batch_len),
            ("delta", &self.delta),
            ("seed", &self.seed),
            ("seeds", &self.seeds),
            ("out-dir", &self.out_dir),
            ("m", &self.m),
            ("n", &self.n),
            ("eps", &self.eps),
            ("qmax", &self.qmax),
            ("phase-len", &self.phase_len),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                flags.set(k, v.clone());
            }
        }
        Ok(base.merged(&flags))
    }
}

fn dispatch(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Generate(f) => println!("{}", harness::cmd_generate(&f.settings()?)?),
        Command::Run(f) => {
            let result = harness::execute(&RunConfig::from_settings(&f.settings()?)?)?;
            println!("{}", serde_json::to_string_pretty(&result.summary)?);
        }
        Command::Sweep(f) => {
            let rows = harness::cmd_sweep(&f.settings()?)?;
            harness::write_sweep_csv(&rows, std::io::stdout())?;
        }
        Command::Bench(f) => {
            let summary = harness::cmd_bench(&f.settings()?)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
