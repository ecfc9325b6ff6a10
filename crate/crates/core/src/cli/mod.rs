//! Command-line front end. The `ddibench` binary is a thin wrapper around
//! [`run`].

mod commands;
mod layout;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::baseline::BaselineError;
use crate::catalog::CatalogError;
use crate::config::ConfigError;
use crate::finetune::{ExportError, ExportStyle};
use crate::llm::LlmError;
use crate::metrics::{Layout, MetricsError};
use crate::pairs::PairError;

pub use commands::{collect_evaluations, evaluate_records, AlternateSummary, EvaluationFile, StabilitySummary};
pub use layout::OutLayout;

/// Balanced reference dataset built from the catalog's own interactions.
pub const REFERENCE: &str = "drugbank";
pub const LLM_TRAIN: &str = "llm_train";
pub const LLM_VALIDATION: &str = "llm_validation";
pub const BASELINE_TRAIN: &str = "baseline_train";
pub const BASELINE_HOLDOUT: &str = "baseline_holdout";
/// Model column used for the logistic-regression baseline in reports.
pub const BASELINE_MODEL: &str = "baseline";

/// Dataset names produced by `build-pairs` itself.
pub const RESERVED_DATASETS: [&str; 5] = [REFERENCE, LLM_TRAIN, LLM_VALIDATION, BASELINE_TRAIN, BASELINE_HOLDOUT];

#[derive(Debug, Parser)]
#[command(name = "ddibench", version, about = "Drug-drug interaction benchmark toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Run configuration (TOML).
    #[arg(long, global = true, default_value = "ddibench.toml")]
    pub config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and filter the drug catalog, build the gene index.
    Ingest,
    /// Import external datasets, sample negatives, build balanced datasets
    /// and splits.
    BuildPairs,
    /// Write fine-tuning conversations as JSONL.
    ExportFinetune {
        #[arg(long, default_value = LLM_TRAIN)]
        dataset: String,
        /// with_system or merged_system.
        #[arg(long, default_value = "with_system")]
        style: ExportStyle,
    },
    /// Classify a dataset with a configured model endpoint.
    EvalLlm {
        /// Endpoint name from the configuration.
        #[arg(long)]
        model: String,
        #[arg(long, default_value = LLM_VALIDATION)]
        dataset: String,
        #[arg(long)]
        repeats: Option<u32>,
        /// Answer from recorded fixtures instead of the network.
        #[arg(long)]
        replay: Option<PathBuf>,
        /// Save the answers of this run as replay fixtures.
        #[arg(long)]
        record_replay: Option<PathBuf>,
    },
    /// Cross-validate C and fit the logistic-regression baseline.
    TrainBaseline {
        #[arg(long)]
        dataset: Option<String>,
        /// Skip cross-validation and fit with this C.
        #[arg(long)]
        c: Option<f64>,
    },
    /// Score a dataset with the trained baseline.
    EvalBaseline {
        #[arg(long, default_value = LLM_VALIDATION)]
        dataset: String,
    },
    /// Render comparison tables from every stored evaluation.
    Report {
        /// per_metric_table or single_table.
        #[arg(long, default_value = "per_metric_table")]
        layout: Layout,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest => "ingest",
            Command::BuildPairs => "build-pairs",
            Command::ExportFinetune { .. } => "export-finetune",
            Command::EvalLlm { .. } => "eval-llm",
            Command::TrainBaseline { .. } => "train-baseline",
            Command::EvalBaseline { .. } => "eval-baseline",
            Command::Report { .. } => "report",
        }
    }
}

/// Failure classes, each with its own exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Other(_) => 1,
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Transport(_) => 4,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<CatalogError> for CliError {
    fn from(e: CatalogError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<PairError> for CliError {
    fn from(e: PairError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<BaselineError> for CliError {
    fn from(e: BaselineError) -> Self {
        match e {
            BaselineError::BadC(_) | BaselineError::BadPlan(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ExportError> for CliError {
    fn from(e: ExportError) -> Self {
        match e {
            ExportError::Io { .. } => CliError::Other(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<LlmError> for CliError {
    fn from(e: LlmError) -> Self {
        match e {
            LlmError::Config(_) => CliError::Config(e.to_string()),
            LlmError::Transport { .. } => CliError::Transport(e.to_string()),
            LlmError::Prompt(_) | LlmError::PromptTooLong { .. } => CliError::Data(e.to_string()),
            LlmError::Io { .. } => CliError::Other(e.to_string()),
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = Cli::try_parse_from(&args).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => CliError::Other(e.to_string()),
        _ => CliError::Config(e.to_string()),
    })?;
    let recorded: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    commands::execute(cli, recorded)
}

/// Entry point for the binary: runs and converts the outcome to an exit
/// status, printing help and version text as clap normally would.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    if let Err(e) = Cli::try_parse_from(&args) {
        if matches!(
            e.kind(),
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
        ) {
            let _ = e.print();
            return 0;
        }
    }
    match run(args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("ddibench: {e}");
            e.exit_code()
        }
    }
}
