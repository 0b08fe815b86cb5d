use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

mod commands;

use commands::Failure;

/// Tweet sentiment pipeline for ranking primary-election candidates.
#[derive(Debug, Parser)]
#[command(name = "nominee", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Seed for every randomized step; required by `cv`, `synth` and `pipeline`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for outputs not given an explicit path.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Laplace smoothing pseudo-count.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub alpha: f64,
    /// Number of cross-validation folds.
    #[arg(long, global = true, default_value_t = 10)]
    pub k: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse JSON-lines tweets, report bad lines and per-period counts.
    Ingest {
        #[arg(long = "in", required = true)]
        inputs: Vec<PathBuf>,
        /// First day of period 0 (UTC), e.g. 2015-12-16.
        #[arg(long)]
        start: NaiveDate,
        #[arg(long, default_value_t = 7)]
        period_days: u32,
        /// Normalized tweets as JSON lines.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        skip_report: Option<PathBuf>,
        #[arg(long)]
        periods: Option<PathBuf>,
    },
    /// Strip links and keep tweets that mention a candidate.
    Preprocess {
        #[arg(long = "in", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        roster: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Aggregate annotations by majority rule.
    Label {
        #[arg(long)]
        clean: PathBuf,
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        roster: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        drops: Option<PathBuf>,
        #[arg(long)]
        distribution: Option<PathBuf>,
    },
    /// Train one candidate's model, or every candidate's with `all`.
    Train {
        #[arg(long)]
        labeled: PathBuf,
        #[arg(long, default_value = "all")]
        candidate: String,
        /// Model file, or a directory when training all candidates.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// k-fold cross-validation per candidate.
    Cv {
        #[arg(long)]
        labeled: PathBuf,
        #[arg(long, default_value = "all")]
        candidate: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Accuracy of models trained on the first n tweets over the next window.
    LearningCurve {
        #[arg(long)]
        labeled: PathBuf,
        /// `start:end:step`, inclusive.
        #[arg(long, default_value = "1000:33000:1000")]
        grid: String,
        #[arg(long, default_value_t = 4000)]
        horizon: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank candidates by positive predictions and score against polls.
    Predict {
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        window: PathBuf,
        #[arg(long)]
        polls: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every stage and write a report bundle with a manifest.
    Pipeline(PipelineArgs),
    /// Generate a seeded synthetic corpus with annotations.
    Synth {
        #[arg(long)]
        size: usize,
        /// Probability that a sentiment keyword follows the true label.
        #[arg(long)]
        separability: f64,
        #[arg(long)]
        roster: Option<PathBuf>,
        #[arg(long, default_value = "2015-12-16")]
        start: NaiveDate,
        #[arg(long, default_value_t = 56)]
        days: u32,
        /// Relative tweet volume, `Candidate=weight`; repeatable.
        #[arg(long = "weight")]
        weights: Vec<String>,
    },
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long = "tweets", required = true)]
    pub tweets: Vec<PathBuf>,
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long)]
    pub polls: PathBuf,
    #[arg(long)]
    pub roster: Option<PathBuf>,
    #[arg(long)]
    pub period_start: NaiveDate,
    #[arg(long, default_value_t = 7)]
    pub period_days: u32,
    /// First day of the prediction window; earlier labeled tweets train the models.
    #[arg(long)]
    pub window_start: NaiveDate,
    /// Last day (inclusive) of the prediction window.
    #[arg(long)]
    pub window_end: NaiveDate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.global;
    let result = match cli.command {
        Command::Ingest {
            inputs,
            start,
            period_days,
            out,
            skip_report,
            periods,
        } => commands::ingest(g, &inputs, start, period_days, out, skip_report, periods),
        Command::Preprocess {
            inputs,
            roster,
            out,
            report,
        } => commands::preprocess(g, &inputs, roster, out, report),
        Command::Label {
            clean,
            annotations,
            roster,
            out,
            drops,
            distribution,
        } => commands::label(g, &clean, &annotations, roster, out, drops, distribution),
        Command::Train {
            labeled,
            candidate,
            out,
        } => commands::train(g, &labeled, &candidate, out),
        Command::Cv {
            labeled,
            candidate,
            out,
        } => commands::cv(g, &labeled, &candidate, out),
        Command::LearningCurve {
            labeled,
            grid,
            horizon,
            out,
        } => commands::learning_curve(g, &labeled, &grid, horizon, out),
        Command::Predict {
            models,
            window,
            polls,
            out,
        } => commands::predict(g, &models, &window, &polls, out),
        Command::Pipeline(args) => commands::pipeline(g, &args),
        Command::Synth {
            size,
            separability,
            roster,
            start,
            days,
            weights,
        } => commands::synth(g, size, separability, roster, start, days, &weights),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Stage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
