//! Batch front end for the robustfolio library.

pub mod commands;
pub mod config;
pub mod figures;
pub mod table;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::{Format, Grid, RunConfig, Sweep};
use robustfolio::{Error, ErrorKind};
use table::{Provenance, ResultTable};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ASSUMPTION: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "robustfolio", version, about = "Expected-utility portfolios and prices under Wasserstein uncertainty")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true, allow_hyphen_values = true, conflicts_with = "delta_grid")]
    pub delta: Option<f64>,
    /// start:stop:step, inclusive.
    #[arg(long, global = true)]
    pub delta_grid: Option<String>,
    /// param=start:stop:step.
    #[arg(long, global = true)]
    pub sweep: Option<String>,
    /// Catalog fixture for oracle-check.
    #[arg(long, global = true)]
    pub fixture: Option<String>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Baseline optimizer, value and Davis price.
    Solve,
    /// First-order sensitivities at delta = 0.
    Sensitivity,
    /// Robust value, optimizer and adversary per delta.
    Robust,
    /// Baseline, robust and first-order Davis prices per delta.
    Davis,
    /// One row of sensitivities per grid point of a parameter.
    Sweep,
    /// Named figure presets.
    Figures { name: String },
    /// Closed forms against module output for a fixture.
    OracleCheck,
}

impl Command {
    fn name(&self) -> String {
        match self {
            Command::Solve => "solve".into(),
            Command::Sensitivity => "sensitivity".into(),
            Command::Robust => "robust".into(),
            Command::Davis => "davis".into(),
            Command::Sweep => "sweep".into(),
            Command::Figures { name } => format!("figures {name}"),
            Command::OracleCheck => "oracle-check".into(),
        }
    }

    fn needs_config(&self) -> bool {
        !matches!(self, Command::Figures { .. } | Command::OracleCheck)
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e.kind() {
        ErrorKind::Input => EXIT_CONFIG,
        ErrorKind::Assumption => EXIT_ASSUMPTION,
        ErrorKind::Numerical => EXIT_NUMERICAL,
    }
}

fn load(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", p.display())))?;
            RunConfig::from_json(&text)?
        }
        None if cli.command.needs_config() => return Err(Error::InvalidInput("--config is required".into())),
        None => RunConfig::default(),
    };
    if let Some(d) = cli.delta {
        cfg.delta = Some(d);
        cfg.delta_grid = None;
    }
    if let Some(g) = &cli.delta_grid {
        cfg.delta_grid = Some(Grid::Range(g.clone()));
    }
    if let Some(s) = &cli.sweep {
        let (param, grid) = s
            .split_once('=')
            .ok_or_else(|| Error::InvalidInput(format!("--sweep {s:?} is not param=start:stop:step")))?;
        cfg.sweep = Some(Sweep { param: param.trim().to_string(), grid: Grid::Range(grid.to_string()) });
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn execute(command: &Command, cfg: &RunConfig, fixture: Option<&str>) -> Result<ResultTable, Error> {
    match command {
        Command::Solve => commands::solve(cfg),
        Command::Sensitivity => commands::sensitivity(cfg),
        Command::Robust => commands::robust(cfg),
        Command::Davis => commands::davis(cfg),
        Command::Sweep => commands::sweep(cfg),
        Command::Figures { name } => figures::figure(name),
        Command::OracleCheck => commands::oracle_check_config(cfg, fixture),
    }
}

/// Parse, run and write; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let cfg = match load(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let mut table = match execute(&cli.command, &cfg, cli.fixture.as_deref()) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let effective = serde_json::to_string(&cfg).expect("config serializes");
    table.provenance = Some(Provenance::new(&format!("{}\n{effective}\n{:?}", cli.command.name(), cli.fixture)));
    let output = cfg.output.clone();
    let format = cli.format.or(output.as_ref().map(|o| o.format)).unwrap_or_default();
    let path = cli.out.clone().or(output.and_then(|o| o.path));
    match path {
        Some(p) => {
            if let Err(e) = table.emit(&p, format) {
                eprintln!("error: cannot write {}: {e}", p.display());
                return EXIT_NUMERICAL;
            }
        }
        None => print!("{}", table.render(format)),
    }
    EXIT_OK
}
