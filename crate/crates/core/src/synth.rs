//! Seeded synthetic tweet corpora with crowd annotations, standing in for
//! a private collection.
//!
//! Each candidate tweet embeds one alias of its candidate plus sentiment
//! keywords. With probability `separability` a keyword comes from the
//! lexicon of the tweet's true sentiment, otherwise from the union of both
//! lexicons, so at 1.0 the classes are keyword-exclusive and at 0.0 the
//! text carries no label information. Annotation panels are unanimous or
//! carry one dissenter, except for injected not-clear majorities and ties.

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, NaiveDate, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Tweet;
use crate::labeling::{Annotation, Sentiment, Verdict};
use crate::preprocess::CandidateRoster;

const POSITIVE_WORDS: &[&str] = &[
    "great", "love", "win", "support", "hope", "best", "amazing", "proud", "strong", "inspiring",
];
const NEGATIVE_WORDS: &[&str] = &[
    "awful", "hate", "lose", "liar", "fail", "worst", "corrupt", "weak", "disaster", "scary",
];
const FILLER_WORDS: &[&str] = &[
    "today", "debate", "vote", "news", "rally", "iowa", "primary", "tonight", "speech", "america",
    "caucus", "watch", "live", "poll", "#election2016", "#gop", "#demdebate", "people", "just", "now",
];
const ANNOTATOR_POOL: usize = 11;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    /// Number of tweets, candidate-free ones included.
    pub size: usize,
    pub separability: f64,
    pub start: NaiveDate,
    pub days: u32,
    pub panel_size: usize,
    pub positive_rate: f64,
    /// Share of tweets mentioning no candidate.
    pub off_topic_rate: f64,
    pub url_rate: f64,
    /// Share of candidate tweets also mentioning a second candidate.
    pub second_mention_rate: f64,
    pub not_clear_rate: f64,
    pub tie_rate: f64,
    pub dissent_rate: f64,
    pub unannotated_rate: f64,
    /// Relative tweet volume per candidate; unlisted candidates weigh 1.
    pub weights: BTreeMap<String, f64>,
}

impl SynthConfig {
    pub fn new(seed: u64, size: usize, separability: f64) -> Self {
        Self {
            seed,
            size,
            separability,
            start: NaiveDate::from_ymd_opt(2015, 12, 16).expect("valid date"),
            days: 56,
            panel_size: 3,
            positive_rate: 0.5,
            off_topic_rate: 0.1,
            url_rate: 0.3,
            second_mention_rate: 0.05,
            not_clear_rate: 0.05,
            tie_rate: 0.05,
            dissent_rate: 0.2,
            unannotated_rate: 0.02,
            weights: BTreeMap::new(),
        }
    }

    pub fn with_weight(mut self, candidate: &str, weight: f64) -> Self {
        self.weights.insert(candidate.to_string(), weight);
        self
    }

    /// Noise-free annotation: every candidate tweet gets a unanimous panel.
    pub fn clean_labels(mut self) -> Self {
        self.not_clear_rate = 0.0;
        self.tie_rate = 0.0;
        self.dissent_rate = 0.0;
        self.unannotated_rate = 0.0;
        self
    }
}

/// Generated truth for one candidate tweet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthLabel {
    pub tweet_id: String,
    pub candidate: String,
    pub sentiment: Sentiment,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynthCorpus {
    pub tweets: Vec<Tweet>,
    pub annotations: Vec<Annotation>,
    pub truth: Vec<TruthLabel>,
}

struct Draft {
    created_at: DateTime<Utc>,
    text: String,
    label: Option<(String, Sentiment)>,
}

fn pick<'a, R: Rng>(rng: &mut R, words: &[&'a str]) -> &'a str {
    words.choose(rng).expect("non-empty word list")
}

fn keyword<R: Rng>(rng: &mut R, sentiment: Sentiment, separability: f64) -> &'static str {
    if rng.gen::<f64>() < separability {
        match sentiment {
            Sentiment::Positive => pick(rng, POSITIVE_WORDS),
            Sentiment::Negative => pick(rng, NEGATIVE_WORDS),
        }
    } else {
        let i = rng.gen_range(0..POSITIVE_WORDS.len() + NEGATIVE_WORDS.len());
        POSITIVE_WORDS.get(i).copied().unwrap_or_else(|| NEGATIVE_WORDS[i - POSITIVE_WORDS.len()])
    }
}

fn link<R: Rng>(rng: &mut R) -> String {
    const CHARS: &[u8] = b"ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz0123456789";
    let code: String = (0..10)
        .map(|_| CHARS[rng.gen_range(0..CHARS.len())] as char)
        .collect();
    if rng.gen_bool(0.2) {
        format!("pic.twitter.com/{code}")
    } else {
        format!("https://t.co/{code}")
    }
}

pub fn generate_synthetic_corpus(config: &SynthConfig, roster: &CandidateRoster) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let separability = config.separability.clamp(0.0, 1.0);
    let candidates = roster.candidates();
    let weights: Vec<f64> = candidates
        .iter()
        .map(|c| config.weights.get(&c.canonical_name).copied().unwrap_or(1.0).max(0.0))
        .collect();
    let total_weight: f64 = weights.iter().sum();
    let start = config
        .start
        .and_hms_opt(0, 0, 0)
        .expect("midnight exists")
        .and_utc();
    let span_secs = i64::from(config.days.max(1)) * 86_400;

    let mut drafts = Vec::with_capacity(config.size);
    for _ in 0..config.size {
        let created_at = start + Duration::seconds(rng.gen_range(0..span_secs));
        let mut words: Vec<String> = Vec::new();
        let label = if rng.gen::<f64>() < config.off_topic_rate || total_weight <= 0.0 {
            None
        } else {
            let mut x = rng.gen::<f64>() * total_weight;
            let mut idx = weights.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                if x < *w {
                    idx = i;
                    break;
                }
                x -= w;
            }
            let cand = &candidates[idx];
            words.push(pick(&mut rng, &cand.aliases.iter().map(String::as_str).collect::<Vec<_>>()).to_string());
            if candidates.len() > 1 && rng.gen::<f64>() < config.second_mention_rate {
                let other = loop {
                    let j = rng.gen_range(0..candidates.len());
                    if j != idx {
                        break &candidates[j];
                    }
                };
                words.push(other.aliases[0].clone());
            }
            let sentiment = if rng.gen::<f64>() < config.positive_rate {
                Sentiment::Positive
            } else {
                Sentiment::Negative
            };
            Some((cand.canonical_name.clone(), sentiment))
        };
        let sentiment_for_words = label.as_ref().map_or_else(
            || if rng.gen_bool(0.5) { Sentiment::Positive } else { Sentiment::Negative },
            |(_, s)| *s,
        );
        for _ in 0..3 {
            words.push(keyword(&mut rng, sentiment_for_words, separability).to_string());
        }
        for _ in 0..rng.gen_range(2..=4) {
            words.push(pick(&mut rng, FILLER_WORDS).to_string());
        }
        words.shuffle(&mut rng);
        if rng.gen::<f64>() < config.url_rate {
            let at = rng.gen_range(0..=words.len());
            words.insert(at, link(&mut rng));
        }
        let mut text = words.join(" ");
        if rng.gen_bool(0.1) {
            text = format!("RT @user{}: {text}", rng.gen_range(1..1000));
        }
        drafts.push(Draft {
            created_at,
            text,
            label,
        });
    }
    drafts.sort_by_key(|d| d.created_at);

    let mut corpus = SynthCorpus::default();
    for (i, d) in drafts.into_iter().enumerate() {
        let id = format!("syn-{i:06}");
        if let Some((candidate, sentiment)) = d.label {
            if rng.gen::<f64>() >= config.unannotated_rate {
                let verdicts = panel(&mut rng, config, &candidate, sentiment);
                let mut annotators: Vec<usize> = (1..=ANNOTATOR_POOL).collect();
                annotators.shuffle(&mut rng);
                for (verdict, annotator) in verdicts.into_iter().zip(annotators) {
                    corpus.annotations.push(Annotation {
                        tweet_id: id.clone(),
                        annotator_id: format!("ann{annotator:02}"),
                        verdict,
                    });
                }
            }
            corpus.truth.push(TruthLabel {
                tweet_id: id.clone(),
                candidate,
                sentiment,
            });
        }
        corpus.tweets.push(Tweet {
            id,
            created_at: d.created_at,
            text: d.text,
        });
    }
    corpus
}

fn panel<R: Rng>(rng: &mut R, config: &SynthConfig, candidate: &str, sentiment: Sentiment) -> Vec<Verdict> {
    let size = config.panel_size.clamp(1, ANNOTATOR_POOL);
    let truth = Verdict::assigned(candidate, sentiment);
    let flipped = Verdict::assigned(candidate, sentiment.opposite());
    let roll = rng.gen::<f64>();
    let mut verdicts = if roll < config.not_clear_rate {
        let unclear = size / 2 + 1;
        let mut v = vec![Verdict::NotClear; unclear];
        v.extend(std::iter::repeat_n(truth, size - unclear));
        v
    } else if roll < config.not_clear_rate + config.tie_rate && size >= 2 {
        let half = size / 2;
        let mut v = vec![truth; half];
        v.extend(std::iter::repeat_n(flipped, half));
        v.extend(std::iter::repeat_n(Verdict::NotClear, size - 2 * half));
        v
    } else if size >= 3 && rng.gen::<f64>() < config.dissent_rate {
        let mut v = vec![truth; size - 1];
        v.push(if rng.gen_bool(0.5) { flipped } else { Verdict::NotClear });
        v
    } else {
        vec![truth; size]
    };
    verdicts.shuffle(rng);
    verdicts
}
