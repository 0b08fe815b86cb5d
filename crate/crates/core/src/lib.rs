//! Predicting primary-election nominees from tweet sentiment.
//!
//! The crate covers the whole pipeline: JSON-lines tweet ingestion
//! ([`corpus`]), URL stripping and candidate filtering ([`preprocess`]),
//! majority-rule aggregation of crowd labels ([`labeling`]), per-candidate
//! Bernoulli Naive Bayes models ([`nbmodel`]), cross-validated evaluation
//! ([`evaluation`]), and ranking candidates by positive predictions against
//! poll ranks ([`prediction`]). [`pipeline`] chains the stages over files
//! and [`synth`] generates seeded stand-in corpora.

pub mod corpus;
pub mod evaluation;
pub mod labeling;
pub mod nbmodel;
pub mod pipeline;
pub mod prediction;
pub mod preprocess;
pub mod synth;

pub use corpus::{Tweet, PeriodScheme};
pub use evaluation::{ConfusionMatrix, CvResult, MetricReport};
pub use labeling::{Annotation, LabeledTweet, Sentiment, Verdict};
pub use nbmodel::{tokenize, SentimentModel, TokenSet};
pub use prediction::{PositiveCountTable, RankComparison};
pub use preprocess::{CandidateRoster, CleanTweet, Party};

/// Bundled reference inputs.
pub mod fixtures {
    /// Default roster, `canonical_name,party,alias`.
    pub const ROSTER_CSV: &str = include_str!("../fixtures/roster.csv");
    /// Poll ranks and remaining-candidate flags for the week of
    /// February 3-9, 2016.
    pub const POLLS_2016_CSV: &str = include_str!("../fixtures/polls_2016.csv");
    /// Three example tweets before cleaning, as JSON lines.
    pub const PREPROCESS_EXAMPLES_JSONL: &str = include_str!("../fixtures/table1.jsonl");
}

/// Formats a possibly-undefined metric for CSV reports.
pub fn fmt_metric(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.6}"),
        None => "undefined".to_string(),
    }
}
