//! Raw tweet ingestion from JSON-lines archives and bucketing into
//! fixed-length collection periods.
//!
//! Only `id`, `created_at` and `text` are read from each record; every other
//! attribute of an archived tweet object is ignored. All period arithmetic is
//! done on UTC calendar dates.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use chrono::{DateTime, Duration, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

/// Twitter's classic `created_at` serialization, e.g. `Wed Dec 16 00:00:00 +0000 2015`.
const TWITTER_TIME_FORMAT: &str = "%a %b %d %H:%M:%S %z %Y";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("period length must be at least one day")]
    ZeroPeriodLength,
    #[error("no periods to summarize")]
    NoData,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to serialize tweet: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// One tweet: identity, UTC timestamp (second precision) and text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Tweet {
    pub id: String,
    #[serde(with = "timestamp")]
    pub created_at: DateTime<Utc>,
    pub text: String,
}

impl Tweet {
    pub fn date(&self) -> NaiveDate {
        self.created_at.date_naive()
    }
}

/// Parses either the classic Twitter timestamp or an RFC 3339 / ISO-8601
/// instant, truncated to whole seconds.
pub fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    let raw = raw.trim();
    let parsed = DateTime::parse_from_str(raw, TWITTER_TIME_FORMAT)
        .or_else(|_| DateTime::parse_from_rfc3339(raw))
        .ok()?;
    let utc = parsed.with_timezone(&Utc);
    DateTime::from_timestamp(utc.timestamp(), 0)
}

pub(crate) mod timestamp {
    use chrono::{DateTime, SecondsFormat, Utc};
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&t.to_rfc3339_opts(SecondsFormat::Secs, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let raw = String::deserialize(d)?;
        super::parse_timestamp(&raw)
            .ok_or_else(|| de::Error::custom(format!("unparseable timestamp `{raw}`")))
    }
}

/// A line that did not yield a tweet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkipRecord {
    pub line_number: usize,
    pub file: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedStream {
    pub tweets: Vec<Tweet>,
    pub skipped: Vec<SkipRecord>,
}

impl ParsedStream {
    pub fn extend(&mut self, other: ParsedStream) {
        self.tweets.extend(other.tweets);
        self.skipped.extend(other.skipped);
    }
}

fn parse_line(line: &str, line_number: usize, file: &str) -> Result<Tweet, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| format!("malformed json: {e}"))?;
    let obj = value
        .as_object()
        .ok_or_else(|| "record is not a json object".to_string())?;

    let text = match obj.get("text") {
        Some(Value::String(s)) if !s.trim().is_empty() => s.clone(),
        Some(Value::String(_)) => return Err("empty text".into()),
        Some(_) => return Err("text is not a string".into()),
        None => return Err("missing text".into()),
    };
    let created_at = match obj.get("created_at") {
        Some(Value::String(s)) => {
            parse_timestamp(s).ok_or_else(|| format!("unparseable created_at `{s}`"))?
        }
        Some(_) => return Err("created_at is not a string".into()),
        None => return Err("missing created_at".into()),
    };
    // Archives carry both `id` (number) and `id_str`; numeric ids above 2^53
    // lose precision in JSON consumers, so `id_str` wins when present.
    let id = match (obj.get("id_str"), obj.get("id")) {
        (Some(Value::String(s)), _) if !s.is_empty() => s.clone(),
        (_, Some(Value::String(s))) if !s.is_empty() => s.clone(),
        (_, Some(Value::Number(n))) => n.to_string(),
        _ => synthetic_id(file, line_number),
    };

    Ok(Tweet {
        id,
        created_at,
        text,
    })
}

/// Stable identity for a record lacking an `id`.
pub fn synthetic_id(file: &str, line_number: usize) -> String {
    format!("{file}:{line_number}")
}

/// Parses JSON-lines records. Bad lines are reported, never fatal; blank
/// lines are ignored. Line numbers are 1-based.
pub fn parse_tweet_stream<I, S>(lines: I, file: &str) -> ParsedStream
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut out = ParsedStream::default();
    for (idx, line) in lines.into_iter().enumerate() {
        let line = line.as_ref();
        if line.trim().is_empty() {
            continue;
        }
        let line_number = idx + 1;
        match parse_line(line, line_number, file) {
            Ok(tweet) => out.tweets.push(tweet),
            Err(reason) => out.skipped.push(SkipRecord {
                line_number,
                file: file.to_string(),
                reason,
            }),
        }
    }
    out
}

/// Reads a JSON-lines source. Lines that are not valid UTF-8 land in the
/// skip report like any other bad record.
pub fn read_tweet_stream<R: BufRead>(mut reader: R, file: &str) -> Result<ParsedStream, CorpusError> {
    let mut out = ParsedStream::default();
    let mut buf = Vec::new();
    let mut line_number = 0;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line_number += 1;
        match std::str::from_utf8(&buf) {
            Ok(line) => {
                let line = line.trim_end_matches(['\n', '\r']);
                if line.trim().is_empty() {
                    continue;
                }
                match parse_line(line, line_number, file) {
                    Ok(t) => out.tweets.push(t),
                    Err(reason) => out.skipped.push(SkipRecord {
                        line_number,
                        file: file.to_string(),
                        reason,
                    }),
                }
            }
            Err(_) => out.skipped.push(SkipRecord {
                line_number,
                file: file.to_string(),
                reason: "invalid utf-8".into(),
            }),
        }
    }
    Ok(out)
}

pub fn write_tweets<W: Write>(mut w: W, tweets: &[Tweet]) -> Result<(), CorpusError> {
    for t in tweets {
        serde_json::to_writer(&mut w, t)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_skip_report<W: Write>(w: W, skipped: &[SkipRecord]) -> Result<(), CorpusError> {
    let mut csv = csv::Writer::from_writer(w);
    for rec in skipped {
        csv.serialize(rec)?;
    }
    if skipped.is_empty() {
        csv.write_record(["line_number", "file", "reason"])?;
    }
    csv.flush()?;
    Ok(())
}

/// Fixed-length, UTC-date-aligned collection periods.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeriodScheme {
    pub start_date: NaiveDate,
    pub period_length: u32,
}

impl PeriodScheme {
    pub fn new(start_date: NaiveDate, period_length: u32) -> Result<Self, CorpusError> {
        if period_length == 0 {
            return Err(CorpusError::ZeroPeriodLength);
        }
        Ok(Self {
            start_date,
            period_length,
        })
    }

    pub fn weekly(start_date: NaiveDate) -> Self {
        Self {
            start_date,
            period_length: 7,
        }
    }

    /// `None` for dates before the window start.
    pub fn index_of(&self, date: NaiveDate) -> Option<u32> {
        let days = (date - self.start_date).num_days();
        if days < 0 {
            None
        } else {
            Some((days / i64::from(self.period_length)) as u32)
        }
    }

    pub fn period_start(&self, index: u32) -> NaiveDate {
        self.start_date + Duration::days(i64::from(index) * i64::from(self.period_length))
    }
}

/// Tweets split by period. Tweets dated before the window start are kept
/// aside in `pre_window`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Buckets {
    pub periods: BTreeMap<u32, Vec<Tweet>>,
    pub pre_window: Vec<Tweet>,
}

impl Buckets {
    pub fn len(&self) -> usize {
        self.pre_window.len() + self.periods.values().map(Vec::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn bucket_by_period(tweets: &[Tweet], scheme: &PeriodScheme) -> Buckets {
    let mut buckets = Buckets::default();
    for t in tweets {
        match scheme.index_of(t.date()) {
            Some(idx) => buckets.periods.entry(idx).or_default().push(t.clone()),
            None => buckets.pre_window.push(t.clone()),
        }
    }
    buckets
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodStats {
    /// Per-period counts from period 0 through the last non-empty period;
    /// periods with no tweets in between count as zero.
    pub counts: Vec<usize>,
    pub mean: f64,
    pub std_dev: f64,
}

/// Mean and population standard deviation of per-period counts.
pub fn period_stats(buckets: &Buckets) -> Result<PeriodStats, CorpusError> {
    let last = *buckets.periods.keys().next_back().ok_or(CorpusError::NoData)?;
    let counts: Vec<usize> = (0..=last)
        .map(|i| buckets.periods.get(&i).map_or(0, Vec::len))
        .collect();
    let (mean, std_dev) = mean_and_population_sd(&counts);
    Ok(PeriodStats {
        counts,
        mean,
        std_dev,
    })
}

pub(crate) fn mean_and_population_sd(counts: &[usize]) -> (f64, f64) {
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<usize>() as f64 / n;
    let var = counts
        .iter()
        .map(|&c| (c as f64 - mean).powi(2))
        .sum::<f64>()
        / n;
    (mean, var.sqrt())
}

#[derive(Serialize)]
struct PeriodRow {
    period_index: u32,
    start_date: NaiveDate,
    count: usize,
}

pub fn write_period_csv<W: Write>(
    w: W,
    stats: &PeriodStats,
    scheme: &PeriodScheme,
) -> Result<(), CorpusError> {
    let mut csv = csv::Writer::from_writer(w);
    for (i, &count) in stats.counts.iter().enumerate() {
        let period_index = i as u32;
        csv.serialize(PeriodRow {
            period_index,
            start_date: scheme.period_start(period_index),
            count,
        })?;
    }
    csv.flush()?;
    Ok(())
}
