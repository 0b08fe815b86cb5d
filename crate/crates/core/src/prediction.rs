//! Candidate ranking from positive-sentiment counts and comparison against
//! poll ranks.
//!
//! Per party: candidates are dense-ranked by the number of window tweets
//! their model classified Positive, predicted ranks are clamped to the
//! poll's deepest rank, and the error rate is the mean absolute rank
//! difference. The overall accuracy is one minus the mean over parties of
//! `error_rate / remaining_candidates`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nbmodel::{tokenize, SentimentModel};
use crate::preprocess::{CleanTweet, Party};
use crate::labeling::Sentiment;

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("no model for candidate `{0}`")]
    MissingModel(String),
    #[error("rank maps differ: only predicted {only_predicted:?}, only polled {only_polled:?}")]
    KeyMismatch {
        only_predicted: Vec<String>,
        only_polled: Vec<String>,
    },
    #[error("nothing to compare")]
    Empty,
    #[error("{0} party has no remaining candidates")]
    NoneRemaining(String),
    #[error("max poll rank must be at least 1")]
    InvalidMaxRank,
    #[error("poll fixture line {line}: {reason}")]
    BadPollRow { line: u64, reason: String },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type RankMap = BTreeMap<String, u32>;

/// Positive classifications per candidate over the prediction window.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PositiveCountTable(pub BTreeMap<String, u64>);

impl PositiveCountTable {
    pub fn get(&self, candidate: &str) -> u64 {
        self.0.get(candidate).copied().unwrap_or(0)
    }
}

/// Classifies every window tweet once per mentioned candidate, with that
/// candidate's model. Every model's candidate appears in the table.
pub fn count_positive(
    models: &BTreeMap<String, SentimentModel>,
    window: &[CleanTweet],
) -> Result<PositiveCountTable, PredictError> {
    let mut counts: BTreeMap<String, u64> = models.keys().map(|c| (c.clone(), 0)).collect();
    for tweet in window {
        let tokens = tokenize(&tweet.text);
        for candidate in &tweet.mentioned {
            let model = models
                .get(candidate)
                .ok_or_else(|| PredictError::MissingModel(candidate.clone()))?;
            if model.classify_tokens(&tokens) == Sentiment::Positive {
                *counts.get_mut(candidate).expect("seeded from models") += 1;
            }
        }
    }
    Ok(PositiveCountTable(counts))
}

/// Dense ranking by descending count. Candidates without positives share
/// the rank right after the last nonzero count.
pub fn rank_candidates<'a, I>(counts: &PositiveCountTable, candidates: I) -> RankMap
where
    I: IntoIterator<Item = &'a str>,
{
    let members: Vec<(&str, u64)> = candidates.into_iter().map(|c| (c, counts.get(c))).collect();
    let distinct: BTreeSet<u64> = members.iter().map(|&(_, n)| n).filter(|&n| n > 0).collect();
    let bottom = distinct.len() as u32 + 1;
    members
        .into_iter()
        .map(|(c, n)| {
            let rank = if n == 0 {
                bottom
            } else {
                distinct.range(n + 1..).count() as u32 + 1
            };
            (c.to_string(), rank)
        })
        .collect()
}

/// Clamps every rank to `max_poll_rank`.
pub fn adjust_ranks(predicted: &RankMap, max_poll_rank: u32) -> Result<RankMap, PredictError> {
    if max_poll_rank == 0 {
        return Err(PredictError::InvalidMaxRank);
    }
    Ok(predicted
        .iter()
        .map(|(c, &r)| (c.clone(), r.min(max_poll_rank)))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankErrors {
    /// `|poll - adjusted|` per candidate.
    pub per_candidate: BTreeMap<String, u32>,
    pub total: u32,
    /// Mean absolute rank difference over the compared candidates.
    pub error_rate: f64,
}

pub fn error_rate(adjusted: &RankMap, poll: &RankMap) -> Result<RankErrors, PredictError> {
    let only_predicted: Vec<String> = adjusted.keys().filter(|k| !poll.contains_key(*k)).cloned().collect();
    let only_polled: Vec<String> = poll.keys().filter(|k| !adjusted.contains_key(*k)).cloned().collect();
    if !only_predicted.is_empty() || !only_polled.is_empty() {
        return Err(PredictError::KeyMismatch {
            only_predicted,
            only_polled,
        });
    }
    if adjusted.is_empty() {
        return Err(PredictError::Empty);
    }
    let per_candidate: BTreeMap<String, u32> = adjusted
        .iter()
        .map(|(c, &a)| (c.clone(), poll[c].abs_diff(a)))
        .collect();
    let total: u32 = per_candidate.values().sum();
    Ok(RankErrors {
        error_rate: f64::from(total) / per_candidate.len() as f64,
        per_candidate,
        total,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankRow {
    pub candidate: String,
    pub positive_count: u64,
    pub predicted_rank: u32,
    pub adjusted_rank: u32,
    pub poll_rank: u32,
    pub error: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankComparison {
    pub party: Party,
    pub rows: Vec<RankRow>,
    /// Mean error over all compared candidates.
    pub error_rate: f64,
    /// Candidates compared in the error rate.
    pub compared: usize,
    /// Candidates still in the race; divisor of the overall accuracy.
    pub remaining: u32,
    pub winners: Vec<String>,
}

/// Ranks one party's candidates, adjusts to the poll range and scores the
/// result against the poll.
pub fn compare_party(
    party: Party,
    counts: &PositiveCountTable,
    poll: &PartyPoll,
) -> Result<RankComparison, PredictError> {
    let predicted = rank_candidates(counts, poll.ranks.keys().map(String::as_str));
    let max_poll = poll.ranks.values().copied().max().ok_or(PredictError::Empty)?;
    let adjusted = adjust_ranks(&predicted, max_poll)?;
    let errors = error_rate(&adjusted, &poll.ranks)?;
    let rows = predicted
        .iter()
        .map(|(c, &p)| RankRow {
            candidate: c.clone(),
            positive_count: counts.get(c),
            predicted_rank: p,
            adjusted_rank: adjusted[c],
            poll_rank: poll.ranks[c],
            error: errors.per_candidate[c],
        })
        .collect();
    Ok(RankComparison {
        party,
        rows,
        error_rate: errors.error_rate,
        compared: errors.per_candidate.len(),
        remaining: poll.remaining,
        winners: predicted
            .iter()
            .filter(|&(_, &r)| r == 1)
            .map(|(c, _)| c.clone())
            .collect(),
    })
}

/// `1 - mean(error_rate / remaining)` over `(error_rate, remaining)` pairs.
pub fn overall_accuracy<I>(parties: I) -> Result<f64, PredictError>
where
    I: IntoIterator<Item = (f64, u32)>,
{
    let mut sum = 0.0;
    let mut n = 0usize;
    for (e, remaining) in parties {
        if remaining == 0 {
            return Err(PredictError::NoneRemaining(format!("party #{n}")));
        }
        sum += e / f64::from(remaining);
        n += 1;
    }
    if n == 0 {
        return Err(PredictError::Empty);
    }
    Ok(1.0 - sum / n as f64)
}

pub fn overall_accuracy_of(comparisons: &[RankComparison]) -> Result<f64, PredictError> {
    if let Some(c) = comparisons.iter().find(|c| c.remaining == 0) {
        return Err(PredictError::NoneRemaining(c.party.to_string()));
    }
    overall_accuracy(comparisons.iter().map(|c| (c.error_rate, c.remaining)))
}

/// Poll ranks of one party plus the number of candidates still running.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PartyPoll {
    pub ranks: RankMap,
    pub remaining: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PollTable {
    pub parties: BTreeMap<Party, PartyPoll>,
}

#[derive(Deserialize)]
struct PollRow {
    party: String,
    candidate: String,
    poll_rank: u32,
    remaining_flag: String,
}

fn parse_flag(raw: &str) -> Option<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "y" => Some(true),
        "0" | "false" | "no" | "n" => Some(false),
        _ => None,
    }
}

/// Reads `party,candidate,poll_rank,remaining_flag` rows.
pub fn read_polls<R: Read>(reader: R) -> Result<PollTable, PredictError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut table = PollTable::default();
    for (i, row) in rdr.deserialize().enumerate() {
        let line = i as u64 + 2;
        let row: PollRow = row?;
        let party: Party = row.party.parse().map_err(|e| PredictError::BadPollRow {
            line,
            reason: format!("{e}"),
        })?;
        let remaining = parse_flag(&row.remaining_flag).ok_or_else(|| PredictError::BadPollRow {
            line,
            reason: format!("bad remaining_flag `{}`", row.remaining_flag),
        })?;
        if row.poll_rank == 0 {
            return Err(PredictError::BadPollRow {
                line,
                reason: "poll ranks start at 1".into(),
            });
        }
        let entry = table.parties.entry(party).or_default();
        if entry.ranks.insert(row.candidate.clone(), row.poll_rank).is_some() {
            return Err(PredictError::BadPollRow {
                line,
                reason: format!("duplicate candidate `{}`", row.candidate),
            });
        }
        entry.remaining += u32::from(remaining);
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionReport {
    pub counts: PositiveCountTable,
    pub parties: Vec<RankComparison>,
    pub overall_accuracy: f64,
}

pub fn predict(counts: PositiveCountTable, polls: &PollTable) -> Result<PredictionReport, PredictError> {
    let parties = polls
        .parties
        .iter()
        .map(|(party, poll)| compare_party(*party, &counts, poll))
        .collect::<Result<Vec<_>, _>>()?;
    let overall_accuracy = overall_accuracy_of(&parties)?;
    Ok(PredictionReport {
        counts,
        parties,
        overall_accuracy,
    })
}

pub fn write_report<W: Write>(mut w: W, report: &PredictionReport) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut w, report)?;
    w.write_all(b"\n")
}
