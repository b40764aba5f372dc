//! `afnet` command dispatch. [`run`] parses the arguments, runs one subcommand and returns
//! the process exit status.

pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

pub use config::RunConfig;
pub use error::{CliError, CliResult, EXIT_DATA, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(
    name = "afnet",
    version,
    about = "New-onset AF prediction from ECG and tabular data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labelled synthetic ECG and tabular dataset
    Synth(SynthArgs),
    /// Split a manifest into augmented train, balanced and unbalanced test sets
    Prepare(PrepareArgs),
    /// Train EcgNet, TabNet or the fused model on prepared splits
    Train(TrainArgs),
    /// Score a trained model on the test splits
    Eval(EvalArgs),
    /// Train single-lead EcgNets, one per lead and seed
    AblateLeads(AblateArgs),
    /// Train 12-lead EcgNets on band-filtered inputs, one per band and seed
    AblateBands(AblateArgs),
    /// Band-pass filter every waveform of a manifest
    Filter(FilterArgs),
    /// Dump class activation maps of an EcgNet
    Cam(CamArgs),
    /// Tabulate evaluation results across runs
    Report(ReportArgs),
}

/// Flags shared by commands that read a run configuration.
#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// key=value run configuration; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Random seed (falls back to the config, then AFNET_SEED, then 0)
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Training protocol overrides.
#[derive(Debug, Args)]
pub struct TrainFlags {
    #[arg(long)]
    pub lr0: Option<f64>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub min_delta: Option<f64>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub val_fraction: Option<f64>,
    /// EcgNet convolution width
    #[arg(long)]
    pub filters: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub n_af0: usize,
    #[arg(long)]
    pub n_af1: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Generator parameters as written to synth_params.txt
    #[arg(long, conflicts_with = "scenario")]
    pub params: Option<PathBuf>,
    /// default, null, planted-lead:LEAD[:FACTOR], planted-oscillation:HZ[:AMP] or p-factor:F
    #[arg(long)]
    pub scenario: Option<String>,
    /// Record length in seconds
    #[arg(long)]
    pub duration: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub common: ConfigArgs,
    #[arg(long)]
    pub test_frac: Option<f64>,
    #[arg(long)]
    pub unbal_ratio: Option<usize>,
    /// Output directory; defaults to `splits` beside the manifest
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// ecg, tab or full
    #[arg(long)]
    pub model: Option<String>,
    /// Directory written by `prepare`
    #[arg(long)]
    pub splits: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: ConfigArgs,
    #[command(flatten)]
    pub train: TrainFlags,
    /// Comma-separated lead names
    #[arg(long)]
    pub leads: Option<String>,
    /// Pass band such as 5-20, or none
    #[arg(long)]
    pub band: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory written by `train`
    #[arg(long)]
    pub run: PathBuf,
    /// Splits directory; defaults to the one the run was trained on
    #[arg(long)]
    pub splits: Option<PathBuf>,
    /// balanced, unbalanced or both
    #[arg(long, default_value = "both")]
    pub split: String,
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: ConfigArgs,
    #[command(flatten)]
    pub train: TrainFlags,
    /// Comma-separated training seeds
    #[arg(long)]
    pub seeds: Option<String>,
    /// Conditions trained concurrently
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub test_frac: Option<f64>,
    #[arg(long)]
    pub unbal_ratio: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Pass band such as 5-20
    #[arg(long)]
    pub band: String,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CamArgs {
    /// Directory written by `train`; the model must be an EcgNet
    #[arg(long)]
    pub run: PathBuf,
    /// Records to map, e.g. a test split manifest
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub class: usize,
    /// Map at most this many records
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directories written by `eval`
    #[arg(long = "eval", required = true, num_args = 1..)]
    pub evals: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("afnet: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(command: Command) -> CliResult<()> {
    use commands::*;
    match command {
        Command::Synth(a) => synth::run(a),
        Command::Prepare(a) => prepare::run(a),
        Command::Train(a) => train::run(a),
        Command::Eval(a) => eval::run(a),
        Command::AblateLeads(a) => ablate::run(a, ablate::Kind::Leads),
        Command::AblateBands(a) => ablate::run(a, ablate::Kind::Bands),
        Command::Filter(a) => filter::run(a),
        Command::Cam(a) => cam::run(a),
        Command::Report(a) => report::run(a),
    }
}
