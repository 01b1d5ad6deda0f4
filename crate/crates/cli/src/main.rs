use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dfsblock::error::{CliError, EXIT_CONTRACT, EXIT_OK};
use dfsblock::{Config, Experiment, Overrides, Status};

#[derive(Debug, Parser)]
#[command(name = "dfsblock", version, about = "Verification experiments for concatenated DFS blocks with tunable XXZ couplings")]
struct Cli {
    #[command(subcommand)]
    experiment: Experiment,
    /// JSON config file; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for the JSON report and CSV table
    #[arg(long, global = true, default_value = "dfsblock-out")]
    out: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

fn execute(cli: &Cli) -> Result<u8, CliError> {
    let mut config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    config.apply(&cli.overrides);
    let limits = dfsblock::limits_from_env(std::env::var(dfsblock::MAX_QUBITS_ENV).ok().as_deref())?;
    let out = dfsblock::run(cli.experiment, config, limits, &cli.out)?;
    for w in &out.report.warnings {
        eprintln!("warning: {w}");
    }
    for m in out.report.metrics.iter().filter(|m| m.failed()) {
        eprintln!("contract violated: {} ({}) = {}", m.name, m.claim, m.value);
    }
    let status = if out.report.status == Status::Ok { "ok" } else { "contract-violation" };
    println!("{}: {status}; report {}, table {}", cli.experiment.name(), out.json.display(), out.csv.display());
    Ok(if out.report.status == Status::Ok { EXIT_OK } else { EXIT_CONTRACT })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("dfsblock: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
