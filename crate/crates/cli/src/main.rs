//! `xtsc-bench`: generate the synthetic catalog, train classifiers, run
//! explainer evaluations and render reports.
//!
//! Exit codes: 0 success, 2 configuration error (including missing
//! capabilities), 3 empty selection, 4 io error, 5 internal error.

mod config;
mod commands;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ConfigOverrides;

#[derive(Parser)]
#[command(name = "xtsc-bench", version, about = "Benchmark feature-attribution explainers on synthetic time-series classification tasks", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone, Debug, Default)]
struct CommonArgs {
    /// JSON configuration file; flags override its fields.
    #[arg(long, value_name = "PATH", global = true)]
    config: Option<std::path::PathBuf>,
    /// Master seed driving every random stream.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Dataset filter terms (comma-separated, case-insensitive substrings).
    #[arg(long, value_name = "CSV", value_delimiter = ',')]
    types: Option<Vec<String>>,
    /// Classifier architectures (temporal_conv | gated_recurrent; aliases cnn, lstm).
    #[arg(long, value_name = "CSV", value_delimiter = ',')]
    models: Option<Vec<String>>,
    /// Explainers to run (saliency, smoothgrad, gradient_shap, occlusion,
    /// tsr_saliency, tsr_occlusion, lime, integrated_gradients, gradient_x_input).
    #[arg(long, value_name = "CSV", value_delimiter = ',')]
    explainers: Option<Vec<String>>,
    /// Metrics to score (sens_max, sens_mean, faithfulness, complexity,
    /// relevance_rank | racc, relevance_mass | macc).
    #[arg(long, value_name = "CSV", value_delimiter = ',')]
    metrics: Option<Vec<String>>,
    /// Worker threads (0 = available cores).
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<std::path::PathBuf>,
    /// Overwrite existing outputs.
    #[arg(long)]
    force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Build the synthetic dataset catalog on disk.
    Generate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Train classifiers for every (dataset, architecture) pair.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        /// Catalog directory (default: <data_root>/catalog).
        #[arg(long, value_name = "DIR")]
        data: Option<std::path::PathBuf>,
    },
    /// Score explainers and emit a report directory.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        /// Catalog directory (default: <data_root>/catalog).
        #[arg(long, value_name = "DIR")]
        data: Option<std::path::PathBuf>,
        /// Checkpoint directory (default: <data_root>/models).
        #[arg(long, value_name = "DIR")]
        checkpoints: Option<std::path::PathBuf>,
        /// Custom dataset directory (dataset on-disk format); switches to
        /// custom-data evaluation.
        #[arg(long, value_name = "DIR")]
        custom_data: Option<std::path::PathBuf>,
        /// Directory of external attribution files (*.attr.json, or CSV
        /// plus manifest) to score instead of internal explainers.
        #[arg(long, value_name = "DIR")]
        attributions: Option<std::path::PathBuf>,
        /// Checkpoint of the single model used for custom data.
        #[arg(long, value_name = "DIR")]
        model_checkpoint: Option<std::path::PathBuf>,
    },
    /// Re-render stats and boxplots from an existing records.csv.
    Report {
        #[command(flatten)]
        common: CommonArgs,
        /// Path to a records.csv produced by `evaluate`.
        #[arg(long, value_name = "PATH")]
        records: std::path::PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate { common } => {
            commands::generate(&ConfigOverrides::from_common(&common), common.force)
        }
        Command::Train { common, data } => {
            commands::train(&ConfigOverrides::from_common(&common), data)
        }
        Command::Evaluate { common, data, checkpoints, custom_data, attributions, model_checkpoint } => {
            commands::evaluate(
                &ConfigOverrides::from_common(&common),
                commands::EvaluateInputs {
                    data,
                    checkpoints,
                    custom_data,
                    attributions,
                    model_checkpoint,
                },
                common.force,
            )
        }
        Command::Report { common, records } => {
            commands::report(&ConfigOverrides::from_common(&common), &records, common.force)
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
