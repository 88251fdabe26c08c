//! `scenesynth`: generate, preview, validate and score synthetic segmentation datasets.
//!
//! Exit status: 0 success, 1 usage error, 2 data or generation error.

mod commands;
mod config;
mod preview;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use scenesynth::metrics::PredMode;

use crate::commands::UsageError;
use crate::config::Overrides;

#[derive(Parser)]
#[command(name = "scenesynth", version, about = "Deterministic synthetic segmentation dataset engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset (images, masks, manifest.jsonl).
    Generate {
        /// Engine config file; the built-in procedural seed set is used when absent.
        #[arg(long, env = "SCENESYNTH_CONFIG")]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
        /// Output directory; an existing dataset there is replaced.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (0 = all CPUs).
        #[arg(long)]
        workers: Option<usize>,
        /// Copy the leading scenes of a compatible dataset instead of regenerating them.
        #[arg(long)]
        prefix_from: Option<PathBuf>,
    },
    /// Write a contact sheet of scenes and their mask overlays.
    Preview {
        #[arg(long, env = "SCENESYNTH_CONFIG")]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
        /// Number of scenes (rows).
        #[arg(long, default_value_t = 8)]
        n: usize,
        /// Output PNG path.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check every record of a dataset; exit 2 if any violation is found.
    Validate { dir: PathBuf },
    /// Class counts, scene kinds and mask occupancy of a valid dataset.
    Stats { dir: PathBuf },
    /// Dice similarity between prediction and ground-truth masks, paired by file name.
    Dsc {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Include every image's score in the report.
        #[arg(long)]
        per_image: bool,
        /// How predictions are binarized: auto, prob (>= 128) or label (> 0).
        #[arg(long, default_value = "auto")]
        pred_mode: PredMode,
    },
    /// Write the procedural seed set and a matching config file.
    DemoAssets {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        seeds_per_class: usize,
        /// Also write the two extra classes (ids 9 and 10).
        #[arg(long)]
        novel: bool,
    },
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Generate {
            config,
            overrides,
            out,
            workers,
            prefix_from,
        } => commands::generate(
            config.as_deref(),
            &overrides,
            out.as_deref(),
            workers,
            prefix_from.as_deref(),
        )
        .map(|_| true),
        Command::Preview {
            config,
            overrides,
            n,
            out,
            workers,
        } => commands::preview(config.as_deref(), &overrides, n, &out, workers).map(|_| true),
        Command::Validate { dir } => commands::validate(&dir),
        Command::Stats { dir } => commands::stats(&dir).map(|_| true),
        Command::Dsc {
            pred,
            gt,
            per_image,
            pred_mode,
        } => commands::dsc(&pred, &gt, per_image, pred_mode).map(|_| true),
        Command::DemoAssets {
            out,
            seeds_per_class,
            novel,
        } => commands::demo_assets(&out, seeds_per_class, novel).map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
