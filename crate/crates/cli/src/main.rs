use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use modemd_cli::commands::{cmd_bench, cmd_compare, cmd_evolve, cmd_minimize, cmd_modes};
use modemd_cli::config::RunConfig;

#[derive(Parser)]
#[command(name = "mdcli", version, about = "Mode-basis molecular dynamics for fullerenes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Replace a configuration value, e.g. `--override eps_tau=1e-8`
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Relax the molecule to its force-field equilibrium
    Minimize(Common),
    /// Mode frequencies (CSV) and the basis dump (JSON)
    Modes(Common),
    /// Integrate one scheme and write the diagnostics trajectory
    Evolve(Common),
    /// Run a reference and trial schemes and write error metrics per trial
    Compare(Common),
    /// Time the scheme x eps_tau x molecule matrix
    Bench(Common),
}

type Handler = fn(&RunConfig) -> modemd_cli::Result<Vec<PathBuf>>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (common, f): (&Common, Handler) = match &cli.command {
        Command::Minimize(c) => (c, cmd_minimize),
        Command::Modes(c) => (c, cmd_modes),
        Command::Evolve(c) => (c, cmd_evolve),
        Command::Compare(c) => (c, cmd_compare),
        Command::Bench(c) => (c, cmd_bench),
    };
    let result = RunConfig::load(&common.config, &common.overrides).and_then(|cfg| f(&cfg));
    match result {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("mdcli: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
