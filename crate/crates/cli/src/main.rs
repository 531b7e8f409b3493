use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use posflow_cli::config::{self, Mode};
use posflow_cli::{run, CliError};

/// Positivity-preserving solvers for the Keener-Tyson BZ system.
#[derive(Parser)]
#[command(name = "posflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Semi-implicit Euler on the spatially uniform system.
    OdeDe(Common),
    /// Successive approximation on [0, T0].
    OdePicard(Common),
    /// Reaction / FTCS-diffusion splitting on a 1-D grid.
    PdeSplit(Common),
    /// Print ubar, T0 and the stability limit.
    Analyze(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config file, layered on top of the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset to start from (available: bz_paper).
    #[arg(long)]
    preset: Option<String>,
    /// Override a key, e.g. `--set grid.bc=periodic`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    sets: Vec<String>,
    /// Output CSV path (overrides run.output).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn load(mode: Mode, args: &Common) -> Result<config::RunConfig, CliError> {
    let mut doc = match &args.preset {
        Some(name) => config::parse_layer(config::preset(name)?)?,
        None => toml::Table::new(),
    };
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config::merge_layer(&mut doc, config::parse_layer(&text)?);
    }
    for s in &args.sets {
        config::apply_override(&mut doc, s)?;
    }
    let mut cfg = config::validate(doc, Some(mode))?;
    if let Some(out) = &args.output {
        cfg.output = Some(out.clone());
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match &cli.command {
        Command::OdeDe(a) => (Mode::OdeDe, a),
        Command::OdePicard(a) => (Mode::OdePicard, a),
        Command::PdeSplit(a) => (Mode::PdeSplit, a),
        Command::Analyze(a) => (Mode::Analyze, a),
    };
    match load(mode, args).and_then(|cfg| run(&cfg)) {
        Ok(report) => {
            println!("{}", report.summary());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("posflow: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
