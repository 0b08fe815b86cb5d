use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use chrono::NaiveDate;
use nominee::corpus::{self, PeriodScheme};
use nominee::evaluation::{self, CvResult, EvalError};
use nominee::labeling::{self, LabeledTweet};
use nominee::nbmodel::{self, SentimentModel};
use nominee::pipeline::{self, model_slug, PipelineConfig};
use nominee::prediction;
use nominee::preprocess::{self, CandidateRoster, CleanTweet};
use nominee::synth::{self, SynthConfig};
use nominee::{fixtures, fmt_metric};
use serde::de::DeserializeOwned;

use crate::{GlobalOpts, PipelineArgs};

/// Exit code 2 for bad inputs or flags, 3 for a failing stage.
pub enum Failure {
    Input(anyhow::Error),
    Stage(anyhow::Error),
}

trait Classify<T> {
    fn input(self) -> Result<T, Failure>;
    fn stage(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn input(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Input(e.into()))
    }

    fn stage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Stage(e.into()))
    }
}

type CmdResult = Result<(), Failure>;

fn output_path(explicit: Option<PathBuf>, g: &GlobalOpts, default_name: &str) -> Result<PathBuf, Failure> {
    match (explicit, &g.out_dir) {
        (Some(p), _) => Ok(p),
        (None, Some(dir)) => {
            fs::create_dir_all(dir)
                .with_context(|| format!("creating {}", dir.display()))
                .stage()?;
            Ok(dir.join(default_name))
        }
        (None, None) => Err(Failure::Input(anyhow!(
            "no output path: pass an explicit path or --out-dir"
        ))),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))
            .stage()?;
    }
    File::create(path)
        .map(BufWriter::new)
        .with_context(|| format!("creating {}", path.display()))
        .stage()
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .with_context(|| format!("opening {}", path.display()))
        .input()
}

fn require_seed(g: &GlobalOpts) -> Result<u64, Failure> {
    g.seed
        .ok_or_else(|| Failure::Input(anyhow!("--seed is required for this command")))
}

fn load_roster(path: Option<&Path>) -> Result<CandidateRoster, Failure> {
    match path {
        Some(p) => CandidateRoster::from_csv(open(p)?)
            .with_context(|| format!("reading roster {}", p.display()))
            .input(),
        None => Ok(CandidateRoster::default_2016()),
    }
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, Failure> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.with_context(|| format!("reading {}", path.display())).input()?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line)
            .with_context(|| format!("{}:{}", path.display(), i + 1))
            .input()?;
        out.push(item);
    }
    Ok(out)
}

fn write_jsonl<T: serde::Serialize>(path: &Path, items: &[T]) -> CmdResult {
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, item).stage()?;
        w.write_all(b"\n").stage()?;
    }
    w.flush().stage()
}

fn read_tweets(inputs: &[PathBuf]) -> Result<corpus::ParsedStream, Failure> {
    let mut parsed = corpus::ParsedStream::default();
    for path in inputs {
        let stream = corpus::read_tweet_stream(open(path)?, &path.display().to_string())
            .with_context(|| format!("reading {}", path.display()))
            .input()?;
        parsed.extend(stream);
    }
    Ok(parsed)
}

pub fn ingest(
    g: &GlobalOpts,
    inputs: &[PathBuf],
    start: NaiveDate,
    period_days: u32,
    out: Option<PathBuf>,
    skip_report: Option<PathBuf>,
    periods: Option<PathBuf>,
) -> CmdResult {
    let scheme = PeriodScheme::new(start, period_days).input()?;
    let parsed = read_tweets(inputs)?;
    let buckets = corpus::bucket_by_period(&parsed.tweets, &scheme);

    let skip_path = output_path(skip_report, g, "skipped.csv")?;
    corpus::write_skip_report(create(&skip_path)?, &parsed.skipped).stage()?;
    let tweets_path = output_path(out, g, "tweets.jsonl")?;
    let mut w = create(&tweets_path)?;
    corpus::write_tweets(&mut w, &parsed.tweets).stage()?;
    w.flush().stage()?;

    println!(
        "parsed {} tweets, skipped {} lines, {} before {}",
        parsed.tweets.len(),
        parsed.skipped.len(),
        buckets.pre_window.len(),
        start
    );
    let periods_path = output_path(periods, g, "periods.csv")?;
    match corpus::period_stats(&buckets) {
        Ok(stats) => {
            corpus::write_period_csv(create(&periods_path)?, &stats, &scheme).stage()?;
            println!(
                "{} periods, mean {:.2} tweets, sd {:.2}",
                stats.counts.len(),
                stats.mean,
                stats.std_dev
            );
        }
        Err(e) => return Err(Failure::Stage(e.into())),
    }
    Ok(())
}

pub fn preprocess(
    g: &GlobalOpts,
    inputs: &[PathBuf],
    roster: Option<PathBuf>,
    out: Option<PathBuf>,
    report: Option<PathBuf>,
) -> CmdResult {
    let roster = load_roster(roster.as_deref())?;
    let parsed = read_tweets(inputs)?;
    let pre = preprocess::preprocess_corpus(&parsed.tweets, &roster);
    write_jsonl(&output_path(out, g, "clean.jsonl")?, &pre.kept)?;
    preprocess::write_removal_report(create(&output_path(report, g, "removal.csv")?)?, &pre).stage()?;
    println!(
        "kept {} of {} tweets, removal rate {}",
        pre.kept.len(),
        pre.total,
        fmt_metric(pre.removal_rate())
    );
    Ok(())
}

pub fn label(
    g: &GlobalOpts,
    clean: &Path,
    annotations: &Path,
    roster: Option<PathBuf>,
    out: Option<PathBuf>,
    drops: Option<PathBuf>,
    distribution: Option<PathBuf>,
) -> CmdResult {
    let roster = load_roster(roster.as_deref())?;
    let clean: Vec<CleanTweet> = read_jsonl(clean)?;
    let annotations = labeling::read_annotations(open(annotations)?, Some(&roster))
        .with_context(|| format!("reading {}", annotations.display()))
        .input()?;
    let (labeled, report) = labeling::build_labeled_corpus(&clean, &annotations);
    write_jsonl(&output_path(out, g, "labeled.jsonl")?, &labeled)?;
    labeling::write_drop_report(create(&output_path(drops, g, "drops.csv")?)?, &report).stage()?;
    let dist = labeling::label_distribution(&labeled);
    if distribution.is_some() || g.out_dir.is_some() {
        let path = output_path(distribution, g, "label_distribution.csv")?;
        labeling::write_distribution(create(&path)?, &dist, &roster).stage()?;
    }
    println!(
        "labeled {}, not clear {}, unresolved {}, unannotated {}, orphan annotations {}",
        labeled.len(),
        report.not_clear.len(),
        report.unresolved.len(),
        report.unannotated.len(),
        report.orphans.len()
    );
    Ok(())
}

fn select(
    labeled: &[LabeledTweet],
    candidate: &str,
) -> Result<BTreeMap<String, Vec<LabeledTweet>>, Failure> {
    let mut groups = evaluation::group_by_candidate(labeled);
    if candidate.eq_ignore_ascii_case("all") {
        return Ok(groups);
    }
    let key = groups
        .keys()
        .find(|k| k.eq_ignore_ascii_case(candidate) || model_slug(k) == model_slug(candidate))
        .cloned()
        .ok_or_else(|| Failure::Input(anyhow!("no labeled tweets for candidate `{candidate}`")))?;
    let docs = groups.remove(&key).expect("key exists");
    Ok(BTreeMap::from([(key, docs)]))
}

pub fn train(g: &GlobalOpts, labeled: &Path, candidate: &str, out: Option<PathBuf>) -> CmdResult {
    let labeled: Vec<LabeledTweet> = read_jsonl(labeled)?;
    let groups = select(&labeled, candidate)?;
    let all = candidate.eq_ignore_ascii_case("all");
    let dir = if all {
        Some(output_path(out.clone(), g, "models")?)
    } else {
        None
    };
    for (name, docs) in groups {
        let model = nbmodel::train(&docs, g.alpha).input()?;
        let file = format!("{}.model.json", model_slug(&name));
        let path = match &dir {
            Some(d) => d.join(&file),
            None => output_path(out.clone(), g, &file)?,
        };
        let mut w = create(&path)?;
        model.write_json(&mut w).stage()?;
        w.flush().stage()?;
        println!(
            "{name}: {} positive, {} negative, {} tokens -> {}",
            model.n_pos(),
            model.n_neg(),
            model.vocab_len(),
            path.display()
        );
    }
    Ok(())
}

pub fn cv(g: &GlobalOpts, labeled: &Path, candidate: &str, out: Option<PathBuf>) -> CmdResult {
    let seed = require_seed(g)?;
    let labeled: Vec<LabeledTweet> = read_jsonl(labeled)?;
    let groups = select(&labeled, candidate)?;
    let all = candidate.eq_ignore_ascii_case("all");
    let mut results: Vec<CvResult> = Vec::new();
    for docs in groups.values() {
        match evaluation::cross_validate(docs, g.k, seed, g.alpha) {
            Ok(r) => results.push(r),
            // with `all`, candidates too small to evaluate are skipped
            Err(e @ (EvalError::CandidateTooSmall { .. } | EvalError::SingleClass(_))) if all => {
                eprintln!("skipping: {e}");
            }
            Err(e) => return Err(e).stage(),
        }
    }
    evaluation::write_cv_report(create(&output_path(out, g, "cv_report.csv")?)?, &results).stage()?;
    for r in &results {
        println!(
            "{}: n={} accuracy {} f1 {} f1_neg {}",
            r.candidate,
            r.n_training,
            fmt_metric(Some(r.mean_accuracy)),
            fmt_metric(r.mean_f1),
            fmt_metric(r.mean_f1_neg)
        );
    }
    Ok(())
}

pub fn learning_curve(
    g: &GlobalOpts,
    labeled: &Path,
    grid: &str,
    horizon: usize,
    out: Option<PathBuf>,
) -> CmdResult {
    let n_values = evaluation::parse_grid(grid)
        .ok_or_else(|| Failure::Input(anyhow!("bad grid `{grid}`, expected start:end:step")))?;
    let mut stream: Vec<LabeledTweet> = read_jsonl(labeled)?;
    stream.sort_by_key(|l| l.tweet.created_at);
    let curve = evaluation::learning_curve(&stream, &n_values, horizon, g.alpha).stage()?;
    evaluation::write_curve_csv(create(&output_path(out, g, "curve.csv")?)?, &curve).stage()?;
    for w in &curve.warnings {
        eprintln!("warning: n={} skipped: {}", w.n, w.reason);
    }
    println!("{} points, {} skipped", curve.points.len(), curve.warnings.len());
    Ok(())
}

pub fn load_models(dir: &Path) -> Result<BTreeMap<String, SentimentModel>, Failure> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))
        .input()?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(".model.json"))
        .collect();
    paths.sort();
    let mut models = BTreeMap::new();
    for p in paths {
        let model = SentimentModel::read_json(open(&p)?)
            .with_context(|| format!("reading {}", p.display()))
            .input()?;
        models.insert(model.candidate().to_string(), model);
    }
    Ok(models)
}

pub fn predict(g: &GlobalOpts, models: &Path, window: &Path, polls: &Path, out: Option<PathBuf>) -> CmdResult {
    let models = load_models(models)?;
    let window: Vec<CleanTweet> = read_jsonl(window)?;
    let polls = prediction::read_polls(open(polls)?)
        .with_context(|| format!("reading {}", polls.display()))
        .input()?;
    let counts = prediction::count_positive(&models, &window).stage()?;
    let report = prediction::predict(counts, &polls).stage()?;
    prediction::write_report(create(&output_path(out, g, "prediction_report.json")?)?, &report).stage()?;
    for p in &report.parties {
        println!(
            "{}: winner {} error rate {:.4} over {} candidates, {} remaining",
            p.party,
            p.winners.join("/"),
            p.error_rate,
            p.compared,
            p.remaining
        );
    }
    println!("overall accuracy {:.4}", report.overall_accuracy);
    Ok(())
}

pub fn pipeline(g: &GlobalOpts, args: &PipelineArgs) -> CmdResult {
    let seed = require_seed(g)?;
    let out_dir = g
        .out_dir
        .clone()
        .ok_or_else(|| Failure::Input(anyhow!("--out-dir is required for pipeline")))?;
    let config = PipelineConfig {
        roster: args.roster.clone(),
        tweets: args.tweets.clone(),
        annotations: args.annotations.clone(),
        polls: args.polls.clone(),
        out_dir,
        k: g.k,
        seed,
        alpha: g.alpha,
        period_start: args.period_start,
        period_length: args.period_days,
        window_start: args.window_start,
        window_end: args.window_end,
    };
    let outcome = pipeline::run_pipeline(&config).context("writing pipeline outputs").stage()?;
    if let Some((stage, err)) = outcome.failure {
        let e = anyhow!("stage {} failed: {err}", stage.name());
        return Err(if err.is_input() {
            Failure::Input(e)
        } else {
            Failure::Stage(e)
        });
    }
    if let Some(report) = &outcome.prediction {
        for p in &report.parties {
            println!("{}: winner {}, error rate {:.4}", p.party, p.winners.join("/"), p.error_rate);
        }
        println!("overall accuracy {:.4}", report.overall_accuracy);
    }
    Ok(())
}

pub fn synth(
    g: &GlobalOpts,
    size: usize,
    separability: f64,
    roster: Option<PathBuf>,
    start: NaiveDate,
    days: u32,
    weights: &[String],
) -> CmdResult {
    let seed = require_seed(g)?;
    if size == 0 {
        return Err(Failure::Input(anyhow!("--size must be at least 1")));
    }
    if !(0.0..=1.0).contains(&separability) {
        return Err(Failure::Input(anyhow!("--separability must lie in [0, 1]")));
    }
    let roster = load_roster(roster.as_deref())?;
    let mut config = SynthConfig::new(seed, size, separability);
    config.start = start;
    config.days = days;
    for spec in weights {
        let (name, w) = spec
            .split_once('=')
            .and_then(|(n, w)| Some((n, w.parse::<f64>().ok()?)))
            .ok_or_else(|| Failure::Input(anyhow!("bad --weight `{spec}`, expected Name=weight")))?;
        let canonical = roster
            .resolve(name)
            .ok_or_else(|| Failure::Input(anyhow!("unknown candidate `{name}`")))?;
        config = config.with_weight(&canonical.canonical_name, w);
    }
    let corpus = synth::generate_synthetic_corpus(&config, &roster);

    let mut w = create(&output_path(None, g, "tweets.jsonl")?)?;
    corpus::write_tweets(&mut w, &corpus.tweets).stage()?;
    w.flush().stage()?;
    labeling::write_annotations(create(&output_path(None, g, "annotations.csv")?)?, &corpus.annotations)
        .stage()?;
    let mut w = create(&output_path(None, g, "polls.csv")?)?;
    w.write_all(fixtures::POLLS_2016_CSV.as_bytes()).stage()?;
    w.flush().stage()?;
    println!(
        "{} tweets ({} about candidates), {} annotations",
        corpus.tweets.len(),
        corpus.truth.len(),
        corpus.annotations.len()
    );
    Ok(())
}
