mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::{Runtime, Suite};
use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Federated learning with private-shared models.
#[derive(Debug, Parser)]
#[command(name = "fedsplit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Output directory (overrides `out` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Experiment seed (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for client training.
    #[arg(long, global = true, env = "FEDSPLIT_THREADS")]
    threads: Option<usize>,
    /// Fill the elapsed_s column of metrics CSVs (makes output non-reproducible).
    #[arg(long, global = true)]
    wall_time: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train the configured way at every learning rate.
    Run(ConfigArgs),
    /// Train several ways and summarize their best scores.
    Compare {
        #[command(flatten)]
        args: ConfigArgs,
        /// Comma-separated ways (overrides `model.ways`).
        #[arg(long, value_delimiter = ',')]
        ways: Vec<String>,
    },
    /// Train "AaBb" and sweep feature/prediction interpolation.
    Interp(ConfigArgs),
    /// Run an invariant suite.
    Check {
        suite: SuiteArg,
        /// Random cases per check.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Build the scene and report its partition.
    Stats(ConfigArgs),
}

#[derive(Debug, Args)]
struct ConfigArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SuiteArg {
    Gradcheck,
    Bregman,
    Partition,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Gradcheck => Suite::Gradcheck,
            SuiteArg::Bregman => Suite::Bregman,
            SuiteArg::Partition => Suite::Partition,
        }
    }
}

fn runtime(common: &Common, out: PathBuf) -> Result<Runtime, CliError> {
    if common.threads == Some(0) {
        return Err(CliError::config("--threads", "must be positive"));
    }
    Ok(Runtime {
        out,
        threads: common.threads,
        wall_time: common.wall_time,
    })
}

/// Loads the config and applies command-line overrides.
fn load(args: &ConfigArgs) -> Result<(ExperimentConfig, Runtime), CliError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.common.seed {
        cfg.seed = seed;
    }
    cfg.out = commands::out_dir(args.common.out.as_deref(), Some(&cfg));
    let rt = runtime(&args.common, cfg.out.clone())?;
    Ok((cfg, rt))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let (cfg, rt) = load(&args)?;
            commands::run(&cfg, &rt)
        }
        Command::Compare { args, ways } => {
            let (mut cfg, rt) = load(&args)?;
            if !ways.is_empty() {
                cfg.model.ways = ways;
                cfg.validate()?;
            }
            commands::compare(&cfg, &rt)
        }
        Command::Interp(args) => {
            let (cfg, rt) = load(&args)?;
            commands::interp(&cfg, &rt)
        }
        Command::Stats(args) => {
            let (cfg, rt) = load(&args)?;
            commands::stats(&cfg, &rt)
        }
        Command::Check { suite, trials, common } => {
            if trials == 0 {
                return Err(CliError::config("--trials", "must be positive"));
            }
            let rt = runtime(&common, commands::out_dir(common.out.as_deref(), None))?;
            commands::check(suite.into(), trials, common.seed.unwrap_or(0), &rt)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;
    use std::path::Path;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn global_flags_parse_after_subcommand() {
        let cli = Cli::try_parse_from(["fedsplit", "run", "--config", "c.toml", "--seed", "3", "--out", "o"]).unwrap();
        match cli.command {
            Command::Run(a) => {
                assert_eq!(a.common.seed, Some(3));
                assert_eq!(a.common.out.as_deref(), Some(Path::new("o")));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
