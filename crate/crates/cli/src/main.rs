use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;
use willmore_lab::config::{load_config, parse_resolution_arg, Command as RunCommand, RunConfig};
use willmore_lab::{runner, CliError};

/// Willmore-energy experiments on tori and closed curves in product and
/// homogeneous Riemannian manifolds.
#[derive(Parser)]
#[command(name = "willmore-lab", version, disable_help_subcommand = true)]
struct Cli {
    /// One of: energy, scan, minimize, residual, verify.
    command: String,

    /// Run configuration file (optional for `verify`).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Grid resolution override, e.g. `64x64`.
    #[arg(long)]
    resolution: Option<String>,

    /// Comma-separated artifact formats: csv,json,svg.
    #[arg(long)]
    formats: Option<String>,
}

fn build_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let command = RunCommand::from_name(&cli.command)
        .ok_or_else(|| CliError::Validation(format!("unknown command: {}", cli.command)))?;
    let mut config = match &cli.config {
        Some(path) => {
            let config = load_config(path)?;
            if config.command != command {
                return Err(CliError::Validation(format!(
                    "command line says `{}` but the config says `{}`",
                    command.name(),
                    config.command.name()
                )));
            }
            config
        }
        None if command == RunCommand::Verify => RunConfig::verify_defaults(),
        None => {
            return Err(CliError::Validation(format!(
                "`{}` needs --config <path>",
                command.name()
            )))
        }
    };
    if let Some(out) = &cli.out {
        config.output = out.clone();
    }
    if let Some(res) = &cli.resolution {
        config.resolution = parse_resolution_arg(res)?;
    }
    if let Some(formats) = &cli.formats {
        config.formats = willmore_lab::config::parse_formats_arg(formats)?;
    }
    Ok(config)
}

fn main() -> ExitCode {
    // WILLMORE_LAB_THREADS caps worker parallelism; 0 or unset means auto.
    if let Ok(value) = std::env::var("WILLMORE_LAB_THREADS") {
        if let Ok(n) = value.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }

    let cli = Cli::parse();
    let outcome = build_config(&cli).and_then(|config| runner::run(&config));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("willmore-lab: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
