use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod manifest;

#[derive(Debug)]
pub enum CliError {
    /// Exit code 1.
    Config(String),
    /// Exit code 2.
    Runtime(String),
}

impl From<errnav::Error> for CliError {
    fn from(e: errnav::Error) -> Self {
        match e {
            errnav::Error::InvalidConfig { .. } => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "errnav", version, about = "Learned model-error navigation on simulated terrain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set nav.mppi.num_samples=64`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Master seed (for `mapgen`, the map seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory that receives every artifact and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Terrain map file; generated from the `map` section when absent.
    #[arg(long, global = true)]
    pub map: Option<PathBuf>,
    /// Regressor checkpoint (`.metn` with its `.json` sidecar).
    #[arg(long, global = true)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a procedural terrain map.
    Mapgen {
        #[arg(long)]
        width: Option<usize>,
        #[arg(long)]
        height: Option<usize>,
        #[arg(long)]
        resolution: Option<f64>,
        #[arg(long)]
        grass: Option<f64>,
        #[arg(long)]
        shrub: Option<f64>,
        #[arg(long)]
        tree: Option<f64>,
        #[arg(long)]
        slip: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the scripted bootstrap policy and label its logs.
    Collect {
        /// Simulated minutes to collect.
        #[arg(long)]
        minutes: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Train the regressor on a labeled dataset directory.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Bootstrap, then alternate on-policy collection and retraining.
    Campaign {
        /// Resume from this round of an existing campaign in `--out-dir` and
        /// run one more round.
        #[arg(long)]
        extend_from: Option<u32>,
        #[command(flatten)]
        common: Common,
    },
    /// Drive the configured waypoint course with a frozen checkpoint.
    Eval {
        /// Save controller diagnostics every N steps (0 disables).
        #[arg(long, default_value_t = 0)]
        diagnostics_every: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Render episode logs or controller diagnostics as SVG.
    Plot {
        /// Episode log JSON files, drawn as one path in the given order.
        #[arg(long = "log")]
        logs: Vec<PathBuf>,
        /// Diagnostics JSON files written by `eval --diagnostics-every`.
        #[arg(long = "diagnostics")]
        diagnostics: Vec<PathBuf>,
        /// SVG units per metre for overhead plots.
        #[arg(long, default_value_t = 10.0)]
        scale: f64,
        #[command(flatten)]
        common: Common,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Mapgen { width, height, resolution, grass, shrub, tree, slip, common } => {
            commands::mapgen(&common, commands::MapFlags { width, height, resolution, grass, shrub, tree, slip })
        }
        Command::Collect { minutes, common } => commands::collect(&common, minutes),
        Command::Train { dataset, common } => commands::train(&common, &dataset),
        Command::Campaign { extend_from, common } => commands::campaign(&common, extend_from),
        Command::Eval { diagnostics_every, common } => commands::eval(&common, diagnostics_every),
        Command::Plot { logs, diagnostics, scale, common } => commands::plot(&common, &logs, &diagnostics, scale),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
