//! Per-candidate Bernoulli Naive Bayes sentiment models.
//!
//! Features are token presence/absence over the training vocabulary, with
//! add-alpha smoothing of the per-class presence probabilities:
//!
//! ```text
//! P(t present | c) = (docs_c(t) + alpha) / (n_c + 2 alpha)
//! score_c          = ln(n_c / N) + sum over vocab of ln P(t present or absent | c)
//! ```
//!
//! Tokens never seen in training are ignored. A document is Positive only if
//! its positive score is strictly greater; exact ties go to Negative.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labeling::{LabeledTweet, Sentiment};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Relative score gap under which the floating-point comparison is not
/// trusted and the decision is recomputed exactly.
const NEAR_TIE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("no training documents")]
    Empty,
    #[error("training set mixes candidates `{0}` and `{1}`")]
    MixedCandidates(String, String),
    #[error("smoothing alpha must be finite and positive, got {0}")]
    InvalidAlpha(f64),
    #[error("token `{token}` has counts ({pos}, {neg}) exceeding class sizes ({n_pos}, {n_neg})")]
    CountOutOfRange {
        token: String,
        pos: u32,
        neg: u32,
        n_pos: u32,
        n_neg: u32,
    },
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("model json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Distinct lowercase tokens of a text.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenSet(BTreeSet<String>);

impl TokenSet {
    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl<S: Into<String>> FromIterator<S> for TokenSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        TokenSet(iter.into_iter().map(Into::into).collect())
    }
}

fn is_token_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '#' | '@' | '\'')
}

/// Lowercases, splits on whitespace and trims non-token characters off
/// both ends of every piece.
pub fn tokenize(text: &str) -> TokenSet {
    text.to_lowercase()
        .split_whitespace()
        .map(|w| w.trim_matches(|c: char| !is_token_char(c)))
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Presence {
    pub pos: u32,
    pub neg: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentimentModel {
    candidate: String,
    alpha: f64,
    n_pos: u32,
    n_neg: u32,
    presence: BTreeMap<String, Presence>,
    // sum over the vocabulary of ln P(absent | class)
    absent_pos: f64,
    absent_neg: f64,
}

impl SentimentModel {
    /// Builds a model from raw counts. Tokens with zero count in both
    /// classes are not part of the vocabulary and are dropped.
    pub fn from_counts(
        candidate: impl Into<String>,
        alpha: f64,
        n_pos: u32,
        n_neg: u32,
        presence: BTreeMap<String, Presence>,
    ) -> Result<Self, ModelError> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(ModelError::InvalidAlpha(alpha));
        }
        if n_pos + n_neg == 0 {
            return Err(ModelError::Empty);
        }
        let mut presence = presence;
        presence.retain(|_, p| p.pos > 0 || p.neg > 0);
        if let Some((token, p)) = presence.iter().find(|(_, p)| p.pos > n_pos || p.neg > n_neg) {
            return Err(ModelError::CountOutOfRange {
                token: token.clone(),
                pos: p.pos,
                neg: p.neg,
                n_pos,
                n_neg,
            });
        }
        let mut model = SentimentModel {
            candidate: candidate.into(),
            alpha,
            n_pos,
            n_neg,
            presence,
            absent_pos: 0.0,
            absent_neg: 0.0,
        };
        model.absent_pos = model
            .presence
            .values()
            .map(|p| (1.0 - model.p_present(p.pos, n_pos)).ln())
            .sum();
        model.absent_neg = model
            .presence
            .values()
            .map(|p| (1.0 - model.p_present(p.neg, n_neg)).ln())
            .sum();
        Ok(model)
    }

    pub fn from_documents<I>(candidate: impl Into<String>, alpha: f64, docs: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = (TokenSet, Sentiment)>,
    {
        let (mut n_pos, mut n_neg) = (0u32, 0u32);
        let mut presence: BTreeMap<String, Presence> = BTreeMap::new();
        for (tokens, sentiment) in docs {
            match sentiment {
                Sentiment::Positive => n_pos += 1,
                Sentiment::Negative => n_neg += 1,
            }
            for t in tokens.0 {
                let entry = presence.entry(t).or_default();
                match sentiment {
                    Sentiment::Positive => entry.pos += 1,
                    Sentiment::Negative => entry.neg += 1,
                }
            }
        }
        Self::from_counts(candidate, alpha, n_pos, n_neg, presence)
    }

    pub fn candidate(&self) -> &str {
        &self.candidate
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n_pos(&self) -> u32 {
        self.n_pos
    }

    pub fn n_neg(&self) -> u32 {
        self.n_neg
    }

    pub fn presence(&self, token: &str) -> Presence {
        self.presence.get(token).copied().unwrap_or_default()
    }

    pub fn vocab(&self) -> impl Iterator<Item = &str> {
        self.presence.keys().map(String::as_str)
    }

    pub fn vocab_len(&self) -> usize {
        self.presence.len()
    }

    fn p_present(&self, count: u32, n_class: u32) -> f64 {
        (f64::from(count) + self.alpha) / (f64::from(n_class) + 2.0 * self.alpha)
    }

    /// Log joint scores `(positive, negative)`. A class with no training
    /// documents scores negative infinity.
    pub fn log_posterior(&self, tokens: &TokenSet) -> (f64, f64) {
        let total = f64::from(self.n_pos + self.n_neg);
        let mut pos = (f64::from(self.n_pos) / total).ln() + self.absent_pos;
        let mut neg = (f64::from(self.n_neg) / total).ln() + self.absent_neg;
        for token in tokens.iter() {
            if let Some(p) = self.presence.get(token) {
                let pp = self.p_present(p.pos, self.n_pos);
                let pn = self.p_present(p.neg, self.n_neg);
                pos += pp.ln() - (1.0 - pp).ln();
                neg += pn.ln() - (1.0 - pn).ln();
            }
        }
        (pos, neg)
    }

    pub fn classify_tokens(&self, tokens: &TokenSet) -> Sentiment {
        let (pos, neg) = self.log_posterior(tokens);
        let gap = pos - neg;
        let scale = pos.abs().max(neg.abs()).max(1.0);
        if gap.is_finite() && gap.abs() <= NEAR_TIE * scale {
            return self.classify_exact(tokens);
        }
        if gap > 0.0 {
            Sentiment::Positive
        } else {
            Sentiment::Negative
        }
    }

    pub fn classify(&self, text: &str) -> Sentiment {
        self.classify_tokens(&tokenize(text))
    }

    /// Integer-exact decision. With alpha = a/b every smoothed probability
    /// is (count*b + a) / (n_c*b + 2a); the shared total N cancels.
    fn classify_exact(&self, tokens: &TokenSet) -> Sentiment {
        let alpha = BigRational::from_float(self.alpha).expect("alpha is finite");
        let (a, b) = (alpha.numer().clone(), alpha.denom().clone());
        let smoothed = |count: u32| BigInt::from(count) * &b + &a;

        let mut num_pos = BigInt::from(self.n_pos);
        let mut num_neg = BigInt::from(self.n_neg);
        for (token, p) in &self.presence {
            if tokens.contains(token) {
                num_pos *= smoothed(p.pos);
                num_neg *= smoothed(p.neg);
            } else {
                num_pos *= smoothed(self.n_pos - p.pos);
                num_neg *= smoothed(self.n_neg - p.neg);
            }
        }
        let vocab = self.presence.len() as u32;
        let den_pos = (BigInt::from(self.n_pos) * &b + &a * 2u32).pow(vocab);
        let den_neg = (BigInt::from(self.n_neg) * &b + &a * 2u32).pow(vocab);
        if num_pos * den_neg > num_neg * den_pos {
            Sentiment::Positive
        } else {
            Sentiment::Negative
        }
    }

    pub fn to_document(&self) -> ModelDocument {
        ModelDocument {
            version: MODEL_FORMAT_VERSION,
            candidate: self.candidate.clone(),
            alpha: self.alpha,
            n_pos: self.n_pos,
            n_neg: self.n_neg,
            presence: self
                .presence
                .iter()
                .map(|(t, p)| (t.clone(), [p.pos, p.neg]))
                .collect(),
        }
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<(), ModelError> {
        serde_json::to_writer_pretty(&mut w, &self.to_document())?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self, ModelError> {
        let doc: ModelDocument = serde_json::from_reader(r)?;
        doc.into_model()
    }
}

/// On-disk model layout. `presence` maps token to `[positive_docs,
/// negative_docs]`, keys in lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub version: u32,
    pub candidate: String,
    pub alpha: f64,
    pub n_pos: u32,
    pub n_neg: u32,
    pub presence: BTreeMap<String, [u32; 2]>,
}

impl ModelDocument {
    pub fn into_model(self) -> Result<SentimentModel, ModelError> {
        if self.version != MODEL_FORMAT_VERSION {
            return Err(ModelError::UnsupportedVersion(self.version));
        }
        let presence = self
            .presence
            .into_iter()
            .map(|(t, [pos, neg])| (t, Presence { pos, neg }))
            .collect();
        SentimentModel::from_counts(self.candidate, self.alpha, self.n_pos, self.n_neg, presence)
    }
}

/// Trains one candidate's model from its labeled tweets.
pub fn train(labeled: &[LabeledTweet], alpha: f64) -> Result<SentimentModel, ModelError> {
    let first = labeled.first().ok_or(ModelError::Empty)?;
    if let Some(other) = labeled.iter().find(|l| l.candidate != first.candidate) {
        return Err(ModelError::MixedCandidates(
            first.candidate.clone(),
            other.candidate.clone(),
        ));
    }
    SentimentModel::from_documents(
        first.candidate.clone(),
        alpha,
        labeled.iter().map(|l| (tokenize(&l.tweet.text), l.sentiment)),
    )
}
