//! Tweet cleaning and candidate filtering.
//!
//! Cleaning removes web links and embedded picture links and nothing else:
//! hashtags, mentions, `RT` markers and HTML entities such as `&amp;` pass
//! through untouched. A tweet is kept when its cleaned text mentions at
//! least one candidate of the roster.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::sync::OnceLock;

use chrono::{DateTime, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Tweet;

#[derive(Debug, Error)]
pub enum RosterError {
    #[error("roster is empty")]
    Empty,
    #[error("candidate `{0}` has no aliases")]
    NoAliases(String),
    #[error("alias `{alias}` is shared by `{first}` and `{second}`")]
    SharedAlias {
        alias: String,
        first: String,
        second: String,
    },
    #[error("candidate `{0}` listed under two parties")]
    PartyConflict(String),
    #[error("unknown party `{0}`")]
    UnknownParty(String),
    #[error("roster csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Democratic,
    Republican,
}

impl Party {
    pub const ALL: [Party; 2] = [Party::Democratic, Party::Republican];
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Party::Democratic => "democratic",
            Party::Republican => "republican",
        })
    }
}

impl FromStr for Party {
    type Err = RosterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "democratic" | "democrat" | "dem" | "d" => Ok(Party::Democratic),
            "republican" | "rep" | "gop" | "r" => Ok(Party::Republican),
            _ => Err(RosterError::UnknownParty(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub canonical_name: String,
    pub party: Party,
    /// Lowercase match strings.
    pub aliases: Vec<String>,
}

/// The set of candidates tweets are matched against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateRoster {
    entries: Vec<Candidate>,
}

const DEFAULT_ROSTER: &str = crate::fixtures::ROSTER_CSV;

#[derive(Deserialize)]
struct RosterRow {
    canonical_name: String,
    party: String,
    alias: String,
}

impl CandidateRoster {
    pub fn new(entries: Vec<Candidate>) -> Result<Self, RosterError> {
        if entries.is_empty() {
            return Err(RosterError::Empty);
        }
        let mut owner: HashMap<&str, &str> = HashMap::new();
        for c in &entries {
            if c.aliases.is_empty() {
                return Err(RosterError::NoAliases(c.canonical_name.clone()));
            }
            for a in &c.aliases {
                if let Some(prev) = owner.insert(a, &c.canonical_name) {
                    if prev != c.canonical_name {
                        return Err(RosterError::SharedAlias {
                            alias: a.clone(),
                            first: prev.to_string(),
                            second: c.canonical_name.clone(),
                        });
                    }
                }
            }
        }
        Ok(Self { entries })
    }

    /// The 15 Democratic and Republican primary candidates of the 2016 race.
    pub fn default_2016() -> Self {
        Self::from_csv(DEFAULT_ROSTER.as_bytes()).expect("bundled roster is valid")
    }

    /// Reads `canonical_name,party,alias` rows, one alias per row.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, RosterError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut entries: Vec<Candidate> = Vec::new();
        for row in rdr.deserialize() {
            let row: RosterRow = row?;
            let party: Party = row.party.parse()?;
            let alias = row.alias.to_lowercase();
            match entries.iter_mut().find(|c| c.canonical_name == row.canonical_name) {
                Some(c) => {
                    if c.party != party {
                        return Err(RosterError::PartyConflict(row.canonical_name));
                    }
                    if !alias.is_empty() && !c.aliases.contains(&alias) {
                        c.aliases.push(alias);
                    }
                }
                None => entries.push(Candidate {
                    canonical_name: row.canonical_name,
                    party,
                    aliases: if alias.is_empty() { vec![] } else { vec![alias] },
                }),
            }
        }
        Self::new(entries)
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|c| c.canonical_name.as_str())
    }

    pub fn party_members(&self, party: Party) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|c| c.party == party)
            .map(|c| c.canonical_name.as_str())
            .collect()
    }

    pub fn get(&self, name: &str) -> Option<&Candidate> {
        self.entries.iter().find(|c| c.canonical_name == name)
    }

    /// Case-insensitive lookup by canonical name or alias.
    pub fn resolve(&self, name: &str) -> Option<&Candidate> {
        let needle = name.trim().to_lowercase();
        self.entries
            .iter()
            .find(|c| c.canonical_name.to_lowercase() == needle)
            .or_else(|| self.entries.iter().find(|c| c.aliases.contains(&needle)))
    }
}

/// A tweet that survived preprocessing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanTweet {
    pub id: String,
    #[serde(with = "crate::corpus::timestamp")]
    pub created_at: DateTime<Utc>,
    pub text: String,
    pub mentioned: BTreeSet<String>,
}

fn url_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        // A run of links together with the whitespace around them, so that
        // removal leaves at most one separating space behind.
        Regex::new(r"(?i)(?:\s*(?:https?://|\bpic\.twitter\.com/|\bt\.co/)\S*)+\s*")
            .expect("valid url pattern")
    })
}

/// Removes `http(s)://…`, bare `t.co/…` and `pic.twitter.com/…` links.
pub fn strip_urls(text: &str) -> String {
    url_pattern().replace_all(text, " ").trim().to_string()
}

/// Canonical names of every candidate with an alias occurring
/// (case-insensitively, as a substring) in `text`.
pub fn detect_candidates(text: &str, roster: &CandidateRoster) -> BTreeSet<String> {
    let lowered = text.to_lowercase();
    roster
        .candidates()
        .iter()
        .filter(|c| c.aliases.iter().any(|a| lowered.contains(a.as_str())))
        .map(|c| c.canonical_name.clone())
        .collect()
}

pub fn clean_tweet(tweet: &Tweet, roster: &CandidateRoster) -> Option<CleanTweet> {
    let text = strip_urls(&tweet.text);
    let mentioned = detect_candidates(&text, roster);
    if mentioned.is_empty() {
        return None;
    }
    Some(CleanTweet {
        id: tweet.id.clone(),
        created_at: tweet.created_at,
        text,
        mentioned,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessed {
    pub kept: Vec<CleanTweet>,
    pub total: usize,
}

impl Preprocessed {
    pub fn removed(&self) -> usize {
        self.total - self.kept.len()
    }

    /// Fraction of input tweets dropped; `None` for an empty input.
    pub fn removal_rate(&self) -> Option<f64> {
        (self.total > 0).then(|| self.removed() as f64 / self.total as f64)
    }
}

pub fn preprocess_corpus(tweets: &[Tweet], roster: &CandidateRoster) -> Preprocessed {
    Preprocessed {
        kept: tweets.iter().filter_map(|t| clean_tweet(t, roster)).collect(),
        total: tweets.len(),
    }
}

/// Writes `total,kept,removed,removal_rate`; an undefined rate is written
/// as `undefined`.
pub fn write_removal_report<W: Write>(w: W, pre: &Preprocessed) -> Result<(), csv::Error> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["total", "kept", "removed", "removal_rate"])?;
    csv.write_record([
        pre.total.to_string(),
        pre.kept.len().to_string(),
        pre.removed().to_string(),
        crate::fmt_metric(pre.removal_rate()),
    ])?;
    csv.flush()?;
    Ok(())
}
