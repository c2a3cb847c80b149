use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rcdnet_cli::commands::{cmd_compare, cmd_design, cmd_export_sdp, cmd_feasibility, cmd_solve, Context};
use rcdnet_cli::{CliError, Config};

#[derive(Parser)]
#[command(name = "rcdnet", version, about = "Randomized block coordinate descent over networks")]
struct Cli {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV and distribution files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Number of seeds (overrides the config).
    #[arg(long, global = true)]
    seeds: Option<usize>,
    /// Block size (overrides the config's tau list).
    #[arg(long, global = true)]
    tau: Option<usize>,
    /// Suppress the console report.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run RCD_tau for every configured tau and seed.
    Solve,
    /// Compare candidate and designed sampling distributions.
    Design,
    /// Projected gradient, center-free and RCD_2 on the same instance.
    Compare,
    /// Dual RCD for projecting onto an intersection of convex sets.
    Feasibility,
    /// Write the design SDP in SDPA sparse format.
    ExportSdp,
}

fn execute(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    }
    .with_overrides(cli.seeds, cli.tau)?;
    let ctx = Context {
        cfg,
        out_dir: cli.out_dir,
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Solve => cmd_solve(&ctx),
        Command::Design => cmd_design(&ctx),
        Command::Compare => cmd_compare(&ctx),
        Command::Feasibility => cmd_feasibility(&ctx),
        Command::ExportSdp => cmd_export_sdp(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet = cli.quiet;
    match execute(cli) {
        Ok(files) => {
            if !quiet {
                for f in files {
                    eprintln!("wrote {}", f.display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("rcdnet: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
