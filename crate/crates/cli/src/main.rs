mod commands;
mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};

use revmine::schema::Role;

use crate::commands::Ctx;
use crate::config::Loaded;
use crate::run::{MissingStep, RunDir};

/// Mine component/aspect comments from product reviews.
#[derive(Debug, Parser)]
#[command(name = "revmine", version)]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true, default_value = "revmine.toml")]
    config: PathBuf,
    /// Overrides the configured global seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured run directory.
    #[arg(long, global = true)]
    run_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RoleArg {
    Component,
    Aspect,
    Both,
}

impl RoleArg {
    fn roles(self) -> Vec<Role> {
        match self {
            RoleArg::Component => vec![Role::Component],
            RoleArg::Aspect => vec![Role::Aspect],
            RoleArg::Both => vec![Role::Component, Role::Aspect],
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split and tokenize the review dump.
    Ingest,
    /// Pattern-match candidate component and aspect surfaces.
    Mine,
    /// Emit an editable curation file; applies `paths.curation` when set.
    CurateTemplate,
    /// Load labeled sentences and split them.
    BuildDataset,
    /// Balance the training split to a minimum pair size.
    Augment {
        #[arg(long)]
        mps: Option<usize>,
    },
    /// Train the component and aspect classifiers.
    Train {
        #[arg(long, value_enum, default_value = "both")]
        role: RoleArg,
    },
    /// Tune per-label thresholds on the validation split.
    Calibrate {
        #[arg(long, value_enum, default_value = "both")]
        role: RoleArg,
    },
    /// Score both classifiers on the evaluation split.
    Evaluate,
    /// Retrain and evaluate across minimum pair sizes.
    Sweep {
        /// Comma-separated, starting at 0 (e.g. 0,5,10,15,20).
        #[arg(long, value_delimiter = ',')]
        mps: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Print sentences about one component and aspect, one per line.
    Extract {
        #[arg(long)]
        component: String,
        #[arg(long)]
        aspect: String,
        /// Review dump to read instead of the ingested corpus.
        #[arg(long)]
        reviews: Option<PathBuf>,
    },
    /// Compare curated labels with external indicator lists.
    CompareIndicators,
}

fn run(cli: Cli) -> Result<()> {
    let loaded = Loaded::read(&cli.config)?.finish(cli.seed, cli.run_dir)?;
    let ctx = Ctx {
        run: RunDir::new(loaded.run_dir()),
        loaded,
    };
    match cli.command {
        Command::Ingest => ctx.ingest(),
        Command::Mine => ctx.mine(),
        Command::CurateTemplate => ctx.curate_template(),
        Command::BuildDataset => ctx.build_dataset(),
        Command::Augment { mps } => ctx.augment(mps),
        Command::Train { role } => ctx.train(&role.roles()),
        Command::Calibrate { role } => ctx.calibrate(&role.roles()),
        Command::Evaluate => ctx.evaluate(),
        Command::Sweep { mps, seeds } => ctx.sweep(mps, seeds),
        Command::Extract {
            component,
            aspect,
            reviews,
        } => ctx.extract(&component, &aspect, reviews.as_deref()),
        Command::CompareIndicators => ctx.compare_indicators(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<MissingStep>().is_some() {
                ExitCode::from(3)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
