use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use isogroup_cli::{commands, parse_config};

#[derive(Parser)]
#[command(
    name = "isogroup",
    version,
    about = "Isolated mass group runs, blow-up bounds and verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the configured data and write series, paths and snapshots.
    Run(Io),
    /// Evaluate the envelope crossing from the initial data.
    Predict(Io),
    /// Run the invariant suite on one simulation.
    Verify(Io),
    /// Manufactured-solution order and identity decay over `verify.levels`.
    MmsOrder(Io),
}

#[derive(Args)]
struct Io {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run(io) => {
            let out = commands::cmd_run(&parse_config(&io.config)?, &io.out)?;
            println!(
                "{} steps, {} samples -> {}",
                out.steps,
                out.series.len(),
                io.out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Predict(io) => {
            let r = commands::cmd_predict(&parse_config(&io.config)?, &io.out)?;
            println!("{} t_cross = {:.10e}", r.gamma_case.label(), r.t_cross);
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify(io) => report(commands::cmd_verify(&parse_config(&io.config)?, &io.out)?),
        Command::MmsOrder(io) => report(commands::cmd_mms_order(
            &parse_config(&io.config)?,
            &io.out,
        )?),
    }
}

fn report(r: isogroup_core::VerificationReport) -> Result<ExitCode> {
    print!("{}", r.to_text());
    Ok(if r.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
