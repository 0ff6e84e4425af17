use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ehdist_cli::{cmd_bounds, cmd_dp, cmd_simulate, cmd_sweep, cmd_verify, CliError, CliResult, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(name = "ehdist", version, about = "Fixed fraction power control for energy-harvesting sensors")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Key-value config file, applied on top of the preset.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Built-in recipe: fig1 (no sampling cost) or fig2 (sampling cost 1.5).
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,

    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Output file; stdout when absent.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Override a config key, e.g. `--set sampling_cost=1.5`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lower bounds, renewal value and gap constants per (B, epsilon).
    Bounds,
    /// Monte Carlo estimate for each selected policy.
    Simulate,
    /// Figure data against the battery size.
    Sweep,
    /// Solve the discretised average-cost MDP and print its policy table.
    Dp,
    /// Run every invariant suite; exit 1 on any failure.
    Verify,
    /// Print the effective configuration.
    Config,
}

fn load_config(cli: &Cli) -> CliResult<ExperimentConfig> {
    let mut cfg = match &cli.preset {
        Some(name) => ExperimentConfig::preset(name)?,
        None => ExperimentConfig::default(),
    };
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
    }
    cfg.apply_overrides(&cli.overrides)?;
    if let Some(seed) = cli.seed {
        cfg.sim.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    match cli.format {
        Format::Csv => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn open_output(cfg: &ExperimentConfig) -> CliResult<Box<dyn Write>> {
    Ok(match &cfg.out {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| CliError::Invalid(format!("invalid config field `out`: {}: {e}", path.display())))?;
            Box::new(BufWriter::new(file))
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: &Cli) -> CliResult<()> {
    let cfg = load_config(cli)?;
    let mut out = open_output(&cfg)?;
    match cli.command {
        Command::Bounds => cmd_bounds(&cfg, &mut out)?,
        Command::Simulate => cmd_simulate(&cfg, &mut out)?,
        Command::Sweep => cmd_sweep(&cfg, &mut out)?,
        Command::Dp => {
            let table = cmd_dp(&cfg, &mut out)?;
            let (lo, hi) = table.gain_bounds();
            eprintln!(
                "gain {:.9} (bounds [{lo:.9}, {hi:.9}]) after {} iterations",
                table.gain(),
                table.iterations()
            );
        }
        Command::Verify => {
            let result = cmd_verify(&cfg, &mut out);
            out.flush()?;
            result?;
        }
        Command::Config => write!(out, "{cfg}")?,
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
