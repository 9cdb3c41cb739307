//! Command-line harness: runs experiments from a flat TOML config and writes
//! CSV results plus a `<command>.meta.toml` sidecar that re-parses as the
//! config of the run.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::Config;
use crate::error::CliError;
use crate::output::Meta;

#[derive(Parser, Debug)]
#[command(name = "bindsym", version, about = "Extended phase space symplectic integration experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat TOML file of run parameters; its keys override the preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (default: the config's `output` key, else ".").
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for scans and grids; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    /// Named parameter set, see `bindsym presets`.
    #[arg(long, global = true)]
    preset: Option<String>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Single trajectory: t, q, p, x, y, H, Hbar.
    Integrate,
    /// Error scans against the exact product-system solution.
    Table,
    /// Poincaré section of the extended product system.
    Poincare,
    /// NLS masses and their running averages.
    Nls,
    /// Proposed method against a baseline at matched steps.
    Compare,
    /// Acceptance checks; exits 4 if any fails.
    Check,
    /// Lists the preset names.
    Presets,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Integrate => "integrate",
            Command::Table => "table",
            Command::Poincare => "poincare",
            Command::Nls => "nls",
            Command::Compare => "compare",
            Command::Check => "check",
            Command::Presets => "presets",
        }
    }
}

fn resolve(cli: &Cli) -> Result<Config, CliError> {
    let base = match &cli.preset {
        Some(name) => config::preset(name)?,
        None => Config::default(),
    };
    let file = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let mut merged = file.over(&base);
    if let Some(out) = &cli.out {
        merged.output = Some(out.display().to_string());
    }
    merged.output.get_or_insert_with(|| ".".into());
    merged.resolve()
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if cli.command == Command::Presets {
        for name in config::PRESETS {
            println!("{name}");
        }
        return Ok(());
    }
    let cfg = resolve(cli)?;
    let out = output::out_dir(&PathBuf::from(cfg.output.as_deref().unwrap_or(".")))?;
    let command = cli.command;
    let result = bindsym::par::with_workers(cli.workers, || match command {
        Command::Integrate => commands::integrate(&cfg, &out),
        Command::Table => commands::table(&cfg, &out),
        Command::Poincare => commands::poincare(&cfg, &out),
        Command::Nls => commands::nls(&cfg, &out),
        Command::Compare => commands::compare(&cfg, &out),
        Command::Check => commands::check(&cfg, &out),
        Command::Presets => unreachable!(),
    });
    let (meta, err) = match result {
        Ok(r) => r,
        Err(e) => {
            let mut meta = Meta::new(command.name());
            meta.push("status", format!("aborted: {}", e.message));
            (meta, Some(e))
        }
    };
    if command != Command::Check {
        for line in meta.lines().iter().skip(2) {
            println!("{line}");
        }
    }
    meta.write(&out.join(format!("{}.meta.toml", command.name())), &cfg)?;
    err.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bindsym: {e}");
            ExitCode::from(e.code)
        }
    }
}
