use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use otfs_fss::cli::{cmd_exit_chart, cmd_simulate, cmd_verify, Overrides};
use otfs_fss::{Error, ExperimentConfig};

#[derive(Parser)]
#[command(version, about = "Fractionally spaced OTFS link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo BER sweep.
    Simulate(Common),
    /// EXIT transfer curves and a turbo trajectory.
    ExitChart(Common),
    /// Model and accounting self-checks.
    Verify(Common),
    /// Print the default configuration.
    Config {
        /// Full-size grid instead of the desk-scale one.
        #[arg(long)]
        full: bool,
    },
}

#[derive(Args)]
struct Common {
    /// TOML configuration; desk-scale defaults when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    frames: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated SNR grid in dB.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    snr: Option<Vec<f64>>,
    /// Comma-separated receivers (tmp, icmp, mp, sss-mp, s-tmp-R, s-icmp-R).
    #[arg(long, value_delimiter = ',')]
    receivers: Option<Vec<String>>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::desk(),
        };
        Overrides {
            frames: self.frames,
            seed: self.seed,
            snr_db: self.snr.clone(),
            receivers: self.receivers.clone(),
            epsilon: self.epsilon,
            output: self.output.clone(),
        }
        .apply(&mut cfg);
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = std::io::stdout();
    let result = match cli.command {
        Command::Simulate(c) => c.load().and_then(|cfg| cmd_simulate(&cfg, &mut out).map(|_| true)),
        Command::ExitChart(c) => c.load().and_then(|cfg| cmd_exit_chart(&cfg, &mut out).map(|_| true)),
        Command::Verify(c) => c
            .load()
            .and_then(|cfg| cmd_verify(&cfg, &mut out).map(|checks| checks.iter().all(|c| c.passed))),
        Command::Config { full } => {
            let cfg = if full { ExperimentConfig::full() } else { ExperimentConfig::desk() };
            cfg.to_toml_string().map(|t| {
                print!("{t}");
                true
            })
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
