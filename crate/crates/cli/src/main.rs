use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spectra_harness::commands;

#[derive(Parser)]
#[command(
    name = "spectra",
    version,
    about = "Spectral-descent optimizers: experiments and theory checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed (and grid variant) of a config; writes CSV traces and summary.json.
    Run { config: PathBuf },
    /// Compare the closed-form descent bounds with a brute-force oracle.
    VerifyLemma {
        #[arg(long, default_value_t = 4)]
        n_max: usize,
        #[arg(long, default_value_t = 50)]
        grid: usize,
    },
    /// Estimate the l1/l2 RIP constants of a sensing config at ranks r*, 3r*, 5r*.
    RipCheck { config: PathBuf },
    /// Fit rates and condition estimates to a trace CSV; prints JSON.
    Analyze {
        trace: PathBuf,
        #[arg(long)]
        fstar: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        floor: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = std::io::stdout().lock();
    let result = match cli.command {
        Command::Run { config } => commands::cmd_run(&config, &mut out),
        Command::VerifyLemma { n_max, grid } => commands::cmd_verify_lemma(n_max, grid, &mut out),
        Command::RipCheck { config } => commands::cmd_rip_check(&config, &mut out),
        Command::Analyze {
            trace,
            fstar,
            floor,
        } => commands::cmd_analyze(&trace, fstar, floor, &mut out),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
