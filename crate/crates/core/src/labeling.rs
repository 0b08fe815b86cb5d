//! Majority-rule aggregation of crowd annotations.
//!
//! Each annotator either gives up on a tweet (`NOT_CLEAR`) or assigns it to
//! one candidate with a positive or negative sentiment. A tweet is labeled
//! only when one exact verdict is given strictly more often than every
//! other verdict.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preprocess::{CandidateRoster, CleanTweet};

pub const NOT_CLEAR: &str = "NOT_CLEAR";

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("no annotations to aggregate")]
    NoAnnotations,
    #[error("annotator `{annotator}` labeled tweet `{tweet}` more than once")]
    DuplicateAnnotation { tweet: String, annotator: String },
    #[error("line {line}: {reason}")]
    BadRow { line: u64, reason: String },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sentiment {
    Positive,
    Negative,
}

impl Sentiment {
    pub fn opposite(self) -> Self {
        match self {
            Sentiment::Positive => Sentiment::Negative,
            Sentiment::Negative => Sentiment::Positive,
        }
    }
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sentiment::Positive => "positive",
            Sentiment::Negative => "negative",
        })
    }
}

impl FromStr for Sentiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "positive" | "pos" | "+" => Ok(Sentiment::Positive),
            "negative" | "neg" | "-" => Ok(Sentiment::Negative),
            other => Err(format!("unknown sentiment `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    NotClear,
    Assigned {
        candidate: String,
        sentiment: Sentiment,
    },
}

impl Verdict {
    pub fn assigned(candidate: impl Into<String>, sentiment: Sentiment) -> Self {
        Verdict::Assigned {
            candidate: candidate.into(),
            sentiment,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    pub tweet_id: String,
    pub annotator_id: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Labeled {
        candidate: String,
        sentiment: Sentiment,
    },
    DroppedNotClear,
    Unresolved,
}

/// Plurality vote over exact verdicts. Ties for the top count are
/// `Unresolved`.
pub fn aggregate_majority(annotations: &[Annotation]) -> Result<Outcome, LabelError> {
    if annotations.is_empty() {
        return Err(LabelError::NoAnnotations);
    }
    let mut counts: HashMap<&Verdict, usize> = HashMap::new();
    for a in annotations {
        *counts.entry(&a.verdict).or_default() += 1;
    }
    let top = counts.values().copied().max().unwrap_or(0);
    let mut leaders = counts.iter().filter(|(_, &c)| c == top).map(|(v, _)| *v);
    let winner = leaders.next().expect("non-empty counts");
    if leaders.next().is_some() {
        return Ok(Outcome::Unresolved);
    }
    Ok(match winner {
        Verdict::NotClear => Outcome::DroppedNotClear,
        Verdict::Assigned {
            candidate,
            sentiment,
        } => Outcome::Labeled {
            candidate: candidate.clone(),
            sentiment: *sentiment,
        },
    })
}

/// A tweet with its aggregated (candidate, sentiment) label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledTweet {
    #[serde(flatten)]
    pub tweet: CleanTweet,
    pub candidate: String,
    pub sentiment: Sentiment,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DropReport {
    pub not_clear: Vec<String>,
    pub unresolved: Vec<String>,
    pub unannotated: Vec<String>,
    /// Tweet ids referenced by annotations but absent from the corpus.
    pub orphans: Vec<String>,
}

impl DropReport {
    pub fn dropped(&self) -> usize {
        self.not_clear.len() + self.unresolved.len() + self.unannotated.len()
    }
}

pub fn build_labeled_corpus(
    clean: &[CleanTweet],
    annotations: &[Annotation],
) -> (Vec<LabeledTweet>, DropReport) {
    let known: HashSet<&str> = clean.iter().map(|t| t.id.as_str()).collect();
    let mut by_tweet: HashMap<&str, Vec<Annotation>> = HashMap::new();
    let mut orphans: Vec<String> = Vec::new();
    for a in annotations {
        if known.contains(a.tweet_id.as_str()) {
            by_tweet.entry(&a.tweet_id).or_default().push(a.clone());
        } else if !orphans.contains(&a.tweet_id) {
            orphans.push(a.tweet_id.clone());
        }
    }

    let mut labeled = Vec::new();
    let mut report = DropReport {
        orphans,
        ..DropReport::default()
    };
    for tweet in clean {
        let Some(panel) = by_tweet.get(tweet.id.as_str()) else {
            report.unannotated.push(tweet.id.clone());
            continue;
        };
        match aggregate_majority(panel).expect("panels are non-empty") {
            Outcome::Labeled {
                candidate,
                sentiment,
            } => labeled.push(LabeledTweet {
                tweet: tweet.clone(),
                candidate,
                sentiment,
            }),
            Outcome::DroppedNotClear => report.not_clear.push(tweet.id.clone()),
            Outcome::Unresolved => report.unresolved.push(tweet.id.clone()),
        }
    }
    (labeled, report)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelDistribution {
    counts: BTreeMap<String, (usize, usize)>,
}

impl LabelDistribution {
    /// `(positive, negative)`; zero for candidates never labeled.
    pub fn get(&self, candidate: &str) -> (usize, usize) {
        self.counts.get(candidate).copied().unwrap_or((0, 0))
    }

    pub fn total(&self) -> usize {
        self.counts.values().map(|(p, n)| p + n).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, (usize, usize))> {
        self.counts.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

pub fn label_distribution(labeled: &[LabeledTweet]) -> LabelDistribution {
    let mut counts: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for l in labeled {
        let entry = counts.entry(l.candidate.clone()).or_default();
        match l.sentiment {
            Sentiment::Positive => entry.0 += 1,
            Sentiment::Negative => entry.1 += 1,
        }
    }
    LabelDistribution { counts }
}

#[derive(Deserialize)]
struct AnnotationRow {
    tweet_id: String,
    annotator_id: String,
    candidate: String,
    #[serde(default)]
    sentiment: String,
}

/// Reads `tweet_id,annotator_id,candidate,sentiment` rows. The candidate
/// column holds a canonical name or `NOT_CLEAR` (sentiment left blank).
/// When a roster is given, candidate names are resolved through it.
pub fn read_annotations<R: Read>(
    reader: R,
    roster: Option<&CandidateRoster>,
) -> Result<Vec<Annotation>, LabelError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut seen: HashSet<(String, String)> = HashSet::new();
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let row: AnnotationRow = row?;
        let line = out.len() as u64 + 2;
        let verdict = if row.candidate.eq_ignore_ascii_case(NOT_CLEAR) {
            Verdict::NotClear
        } else {
            let candidate = match roster {
                Some(r) => r
                    .resolve(&row.candidate)
                    .ok_or_else(|| LabelError::BadRow {
                        line,
                        reason: format!("unknown candidate `{}`", row.candidate),
                    })?
                    .canonical_name
                    .clone(),
                None => row.candidate.clone(),
            };
            let sentiment = row
                .sentiment
                .parse()
                .map_err(|reason| LabelError::BadRow { line, reason })?;
            Verdict::Assigned {
                candidate,
                sentiment,
            }
        };
        if !seen.insert((row.tweet_id.clone(), row.annotator_id.clone())) {
            return Err(LabelError::DuplicateAnnotation {
                tweet: row.tweet_id,
                annotator: row.annotator_id,
            });
        }
        out.push(Annotation {
            tweet_id: row.tweet_id,
            annotator_id: row.annotator_id,
            verdict,
        });
    }
    Ok(out)
}

pub fn write_annotations<W: Write>(w: W, annotations: &[Annotation]) -> Result<(), csv::Error> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["tweet_id", "annotator_id", "candidate", "sentiment"])?;
    for a in annotations {
        let (candidate, sentiment) = match &a.verdict {
            Verdict::NotClear => (NOT_CLEAR.to_string(), String::new()),
            Verdict::Assigned {
                candidate,
                sentiment,
            } => (candidate.clone(), sentiment.to_string()),
        };
        csv.write_record([&a.tweet_id, &a.annotator_id, &candidate, &sentiment])?;
    }
    csv.flush()?;
    Ok(())
}

/// One `tweet_id,reason` row per dropped tweet or orphan annotation target.
pub fn write_drop_report<W: Write>(w: W, report: &DropReport) -> Result<(), csv::Error> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["tweet_id", "reason"])?;
    let groups = [
        ("not_clear", &report.not_clear),
        ("unresolved", &report.unresolved),
        ("unannotated", &report.unannotated),
        ("orphan", &report.orphans),
    ];
    for (reason, ids) in groups {
        for id in ids {
            csv.write_record([id.as_str(), reason])?;
        }
    }
    csv.flush()?;
    Ok(())
}

pub fn write_distribution<W: Write>(
    w: W,
    dist: &LabelDistribution,
    roster: &CandidateRoster,
) -> Result<(), csv::Error> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["candidate", "positive", "negative"])?;
    for name in roster.names() {
        let (p, n) = dist.get(name);
        csv.write_record([name.to_string(), p.to_string(), n.to_string()])?;
    }
    csv.flush()?;
    Ok(())
}
