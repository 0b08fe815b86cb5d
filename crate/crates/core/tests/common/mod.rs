#![allow(dead_code)]

pub mod oracle;
pub mod published;

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, Utc};
use nominee::labeling::LabeledTweet;
use nominee::preprocess::{CandidateRoster, CleanTweet};
use nominee::synth::{generate_synthetic_corpus, SynthConfig};
use nominee::Sentiment;

pub fn epoch() -> DateTime<Utc> {
    DateTime::from_timestamp(1_450_224_000, 0).unwrap()
}

pub fn clean(id: &str, text: &str, candidate: &str, minutes: i64) -> CleanTweet {
    CleanTweet {
        id: id.to_string(),
        created_at: epoch() + Duration::minutes(minutes),
        text: text.to_string(),
        mentioned: [candidate.to_string()].into(),
    }
}

pub fn labeled(candidate: &str, text: &str, sentiment: Sentiment, i: usize) -> LabeledTweet {
    LabeledTweet {
        tweet: clean(&format!("t{i}"), text, candidate, i as i64),
        candidate: candidate.to_string(),
        sentiment,
    }
}

/// Labeled tweets of a synthetic corpus, taking generated truth as the
/// label and keeping only candidate tweets. Grouped by candidate.
pub fn synthetic_labeled(seed: u64, size: usize, separability: f64) -> BTreeMap<String, Vec<LabeledTweet>> {
    let roster = CandidateRoster::default_2016();
    let corpus = generate_synthetic_corpus(&SynthConfig::new(seed, size, separability).clean_labels(), &roster);
    let texts: BTreeMap<_, _> = corpus.tweets.iter().map(|t| (t.id.clone(), t.clone())).collect();
    let mut out: BTreeMap<String, Vec<LabeledTweet>> = BTreeMap::new();
    for t in corpus.truth {
        let tweet = &texts[&t.tweet_id];
        out.entry(t.candidate.clone()).or_default().push(LabeledTweet {
            tweet: CleanTweet {
                id: tweet.id.clone(),
                created_at: tweet.created_at,
                text: nominee::preprocess::strip_urls(&tweet.text),
                mentioned: [t.candidate.clone()].into(),
            },
            candidate: t.candidate,
            sentiment: t.sentiment,
        });
    }
    out
}

/// Clean tweets plus crowd annotations with not-clear majorities, ties,
/// dissent, unannotated tweets and a few wider panels.
pub fn annotation_fixture(seed: u64, size: usize) -> (Vec<CleanTweet>, Vec<nominee::Annotation>) {
    use nominee::{Annotation, Verdict};
    use rand::{Rng, SeedableRng};

    let roster = CandidateRoster::default_2016();
    let mut config = SynthConfig::new(seed, size, 0.8);
    config.off_topic_rate = 0.0;
    config.not_clear_rate = 0.1;
    config.tie_rate = 0.1;
    config.unannotated_rate = 0.03;
    let corpus = generate_synthetic_corpus(&config, &roster);
    let truth: BTreeMap<_, _> = corpus.truth.iter().map(|t| (t.tweet_id.as_str(), t)).collect();
    let clean: Vec<CleanTweet> = corpus
        .tweets
        .iter()
        .map(|t| CleanTweet {
            id: t.id.clone(),
            created_at: t.created_at,
            text: nominee::preprocess::strip_urls(&t.text),
            mentioned: [truth[t.id.as_str()].candidate.clone()].into(),
        })
        .collect();

    let mut annotations = corpus.annotations;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let annotated: Vec<String> = clean
        .iter()
        .filter(|t| annotations.iter().any(|a| a.tweet_id == t.id))
        .map(|t| t.id.clone())
        .collect();
    for id in annotated.iter().step_by(9) {
        let cand = &truth[id.as_str()].candidate;
        for extra in 0..rng.gen_range(1..=3) {
            let verdict = match rng.gen_range(0..3) {
                0 => Verdict::NotClear,
                1 => Verdict::assigned(cand.as_str(), Sentiment::Positive),
                _ => Verdict::assigned(cand.as_str(), Sentiment::Negative),
            };
            annotations.push(Annotation {
                tweet_id: id.clone(),
                annotator_id: format!("extra{extra}"),
                verdict,
            });
        }
    }
    (clean, annotations)
}

/// Unique-plurality verdict by linear recount; `None` on a tie.
pub fn plurality_recount<'a>(verdicts: &[&'a nominee::Verdict]) -> Option<&'a nominee::Verdict> {
    let mut tally: Vec<(&nominee::Verdict, usize)> = Vec::new();
    for v in verdicts {
        match tally.iter_mut().find(|(seen, _)| seen == v) {
            Some((_, n)) => *n += 1,
            None => tally.push((v, 1)),
        }
    }
    let top = tally.iter().map(|(_, n)| *n).max()?;
    let leaders: Vec<_> = tally.iter().filter(|(_, n)| *n == top).collect();
    (leaders.len() == 1).then(|| leaders[0].0)
}

/// Pipeline settings for the bundled synthetic fixture.
pub fn fixture_config(out_dir: &std::path::Path) -> nominee::pipeline::PipelineConfig {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let date = |s: &str| chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap();
    nominee::pipeline::PipelineConfig {
        roster: None,
        tweets: vec![root.join("pipeline/tweets.jsonl")],
        annotations: root.join("pipeline/annotations.csv"),
        polls: root.join("polls_2016.csv"),
        out_dir: out_dir.to_path_buf(),
        k: 10,
        seed: 42,
        alpha: 1.0,
        period_start: date("2015-12-16"),
        period_length: 7,
        window_start: date("2016-02-03"),
        window_end: date("2016-02-09"),
    }
}

/// Every regular file under `dir` with its contents, keyed by relative path.
pub fn read_tree(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &std::path::Path, dir: &std::path::Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}
