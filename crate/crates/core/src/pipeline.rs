//! End-to-end run: ingest, preprocess, label, train, cross-validate and
//! predict, writing every stage's report into one output directory.
//!
//! The run is a pure function of its input files and configuration. A
//! `manifest.json` records input and output SHA-256 digests, the settings
//! and the status of every stage; it carries no timestamps so identical
//! runs produce identical bundles.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{self, PeriodScheme, Tweet};
use crate::evaluation::{self, CvResult, EvalError};
use crate::labeling::{self, LabeledTweet};
use crate::nbmodel::{self, SentimentModel};
use crate::prediction;
use crate::preprocess::{self, CandidateRoster, CleanTweet};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Preprocess,
    Label,
    Train,
    Cv,
    Predict,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Ingest,
        Stage::Preprocess,
        Stage::Label,
        Stage::Train,
        Stage::Cv,
        Stage::Predict,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Preprocess => "preprocess",
            Stage::Label => "label",
            Stage::Train => "train",
            Stage::Cv => "cv",
            Stage::Predict => "predict",
        }
    }
}

/// Input problems (unreadable or malformed files) versus failures of a
/// stage's own computation or output.
#[derive(Debug, Error)]
pub enum StageError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Failed(String),
}

impl StageError {
    fn input(path: &Path, err: impl std::fmt::Display) -> Self {
        StageError::Input(format!("{}: {err}", path.display()))
    }

    fn failed(err: impl std::fmt::Display) -> Self {
        StageError::Failed(err.to_string())
    }

    pub fn is_input(&self) -> bool {
        matches!(self, StageError::Input(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub roster: Option<PathBuf>,
    pub tweets: Vec<PathBuf>,
    pub annotations: PathBuf,
    pub polls: PathBuf,
    pub out_dir: PathBuf,
    pub k: usize,
    pub seed: u64,
    pub alpha: f64,
    pub period_start: NaiveDate,
    pub period_length: u32,
    /// Inclusive UTC date range of the prediction window. Labeled tweets
    /// dated before `window_start` form the training set.
    pub window_start: NaiveDate,
    pub window_end: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageStatus {
    pub stage: Stage,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub k: usize,
    pub alpha: f64,
    pub period_start: NaiveDate,
    pub period_length: u32,
    pub window_start: NaiveDate,
    pub window_end: NaiveDate,
    pub inputs: Vec<FileDigest>,
    pub stages: Vec<StageStatus>,
    pub failed_stage: Option<Stage>,
    pub outputs: Vec<FileDigest>,
}

#[derive(Debug)]
pub struct PipelineOutcome {
    pub manifest: Manifest,
    pub failure: Option<(Stage, StageError)>,
    pub cv: Vec<CvResult>,
    pub prediction: Option<prediction::PredictionReport>,
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    let mut hasher = Sha256::new();
    std::io::copy(&mut BufReader::new(File::open(path)?), &mut hasher)?;
    Ok(hex::encode(hasher.finalize()))
}

/// File-name-safe form of a candidate name: lowercase ASCII alphanumerics.
pub fn model_slug(candidate: &str) -> String {
    candidate
        .chars()
        .filter(char::is_ascii_alphanumeric)
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>, StageError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| StageError::failed(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>, StageError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| StageError::input(path, e))
}

struct Run<'a> {
    config: &'a PipelineConfig,
    roster: CandidateRoster,
    tweets: Vec<Tweet>,
    clean: Vec<CleanTweet>,
    labeled: Vec<LabeledTweet>,
    models: BTreeMap<String, SentimentModel>,
    cv: Vec<CvResult>,
    prediction: Option<prediction::PredictionReport>,
}

impl Run<'_> {
    fn out(&self, name: &str) -> PathBuf {
        self.config.out_dir.join(name)
    }

    fn stage(&mut self, stage: Stage) -> Result<(), StageError> {
        match stage {
            Stage::Ingest => self.ingest(),
            Stage::Preprocess => self.preprocess(),
            Stage::Label => self.label(),
            Stage::Train => self.train(),
            Stage::Cv => self.cross_validate(),
            Stage::Predict => self.predict(),
        }
    }

    fn ingest(&mut self) -> Result<(), StageError> {
        let mut parsed = corpus::ParsedStream::default();
        for path in &self.config.tweets {
            let name = path.display().to_string();
            let stream = corpus::read_tweet_stream(open(path)?, &name)
                .map_err(|e| StageError::input(path, e))?;
            parsed.extend(stream);
        }
        corpus::write_skip_report(create(&self.out("skipped.csv"))?, &parsed.skipped)
            .map_err(StageError::failed)?;

        let scheme = PeriodScheme::new(self.config.period_start, self.config.period_length)
            .map_err(|e| StageError::Input(e.to_string()))?;
        let buckets = corpus::bucket_by_period(&parsed.tweets, &scheme);
        let mut w = create(&self.out("periods.csv"))?;
        match corpus::period_stats(&buckets) {
            Ok(stats) => corpus::write_period_csv(w, &stats, &scheme).map_err(StageError::failed)?,
            Err(_) => writeln!(w, "period_index,start_date,count").map_err(StageError::failed)?,
        }
        self.tweets = parsed.tweets;
        Ok(())
    }

    fn preprocess(&mut self) -> Result<(), StageError> {
        let pre = preprocess::preprocess_corpus(&self.tweets, &self.roster);
        preprocess::write_removal_report(create(&self.out("removal.csv"))?, &pre)
            .map_err(StageError::failed)?;
        write_jsonl(&self.out("clean.jsonl"), &pre.kept)?;
        self.clean = pre.kept;
        Ok(())
    }

    fn label(&mut self) -> Result<(), StageError> {
        let path = &self.config.annotations;
        let annotations = labeling::read_annotations(open(path)?, Some(&self.roster))
            .map_err(|e| StageError::input(path, e))?;
        let (labeled, drops) = labeling::build_labeled_corpus(&self.clean, &annotations);
        write_jsonl(&self.out("labeled.jsonl"), &labeled)?;
        labeling::write_drop_report(create(&self.out("drops.csv"))?, &drops)
            .map_err(StageError::failed)?;
        labeling::write_distribution(
            create(&self.out("label_distribution.csv"))?,
            &labeling::label_distribution(&labeled),
            &self.roster,
        )
        .map_err(StageError::failed)?;
        self.labeled = labeled;
        Ok(())
    }

    fn training_set(&self) -> Vec<LabeledTweet> {
        self.labeled
            .iter()
            .filter(|l| l.tweet.created_at.date_naive() < self.config.window_start)
            .cloned()
            .collect()
    }

    fn train(&mut self) -> Result<(), StageError> {
        let dir = self.out("models");
        fs::create_dir_all(&dir).map_err(StageError::failed)?;
        for (candidate, docs) in evaluation::group_by_candidate(&self.training_set()) {
            let model = nbmodel::train(&docs, self.config.alpha).map_err(StageError::failed)?;
            let path = dir.join(format!("{}.model.json", model_slug(&candidate)));
            let mut w = create(&path)?;
            model.write_json(&mut w).map_err(StageError::failed)?;
            w.flush().map_err(StageError::failed)?;
            self.models.insert(candidate, model);
        }
        Ok(())
    }

    fn cross_validate(&mut self) -> Result<(), StageError> {
        let mut skipped = csv::Writer::from_writer(create(&self.out("cv_skipped.csv"))?);
        skipped
            .write_record(["candidate", "reason"])
            .map_err(StageError::failed)?;
        for (candidate, docs) in evaluation::group_by_candidate(&self.training_set()) {
            match evaluation::cross_validate(&docs, self.config.k, self.config.seed, self.config.alpha) {
                Ok(r) => self.cv.push(r),
                Err(e @ (EvalError::CandidateTooSmall { .. } | EvalError::SingleClass(_))) => {
                    skipped
                        .write_record([candidate, e.to_string()])
                        .map_err(StageError::failed)?;
                }
                Err(e) => return Err(StageError::failed(e)),
            }
        }
        skipped.flush().map_err(StageError::failed)?;
        evaluation::write_cv_report(create(&self.out("cv_report.csv"))?, &self.cv)
            .map_err(StageError::failed)
    }

    fn predict(&mut self) -> Result<(), StageError> {
        let path = &self.config.polls;
        let polls = prediction::read_polls(open(path)?).map_err(|e| StageError::input(path, e))?;
        let (start, end) = (self.config.window_start, self.config.window_end);
        let window: Vec<CleanTweet> = self
            .clean
            .iter()
            .filter(|t| (start..=end).contains(&t.created_at.date_naive()))
            .cloned()
            .collect();
        let counts = prediction::count_positive(&self.models, &window).map_err(StageError::failed)?;
        let report = prediction::predict(counts, &polls).map_err(StageError::failed)?;
        prediction::write_report(create(&self.out("prediction_report.json"))?, &report)
            .map_err(StageError::failed)?;
        self.prediction = Some(report);
        Ok(())
    }
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), StageError> {
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(StageError::failed)?;
        w.write_all(b"\n").map_err(StageError::failed)?;
    }
    w.flush().map_err(StageError::failed)
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else if path.strip_prefix(root).ok() != Some(Path::new(MANIFEST_FILE)) {
            out.push(path);
        }
    }
    Ok(())
}

fn output_digests(out_dir: &Path) -> std::io::Result<Vec<FileDigest>> {
    let mut files = Vec::new();
    collect_files(out_dir, out_dir, &mut files)?;
    let mut digests = files
        .iter()
        .map(|p| {
            let rel = p.strip_prefix(out_dir).unwrap_or(p);
            let rel = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            sha256_file(p).map(|sha256| FileDigest { path: rel, sha256 })
        })
        .collect::<std::io::Result<Vec<_>>>()?;
    digests.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(digests)
}

/// Runs every stage in order, stopping at the first failure. Outputs of
/// completed stages stay on disk and the manifest is always written.
pub fn run_pipeline(config: &PipelineConfig) -> std::io::Result<PipelineOutcome> {
    fs::create_dir_all(&config.out_dir)?;

    let mut inputs: Vec<(String, &Path)> = Vec::new();
    if let Some(r) = &config.roster {
        inputs.push(("roster".into(), r));
    }
    for t in &config.tweets {
        inputs.push(("tweets".into(), t));
    }
    inputs.push(("annotations".into(), &config.annotations));
    inputs.push(("polls".into(), &config.polls));
    let input_digests: Vec<FileDigest> = inputs
        .iter()
        .map(|(role, p)| FileDigest {
            path: format!("{role}:{}", p.display()),
            sha256: sha256_file(p).unwrap_or_else(|_| "missing".into()),
        })
        .collect();

    let mut stages = Vec::new();
    let mut failure = None;

    let roster = match &config.roster {
        Some(path) => open(path).and_then(|r| {
            CandidateRoster::from_csv(r).map_err(|e| StageError::input(path, e))
        }),
        None => Ok(CandidateRoster::default_2016()),
    };
    let mut run = match roster {
        Ok(roster) => Some(Run {
            config,
            roster,
            tweets: Vec::new(),
            clean: Vec::new(),
            labeled: Vec::new(),
            models: BTreeMap::new(),
            cv: Vec::new(),
            prediction: None,
        }),
        Err(e) => {
            failure = Some((Stage::Ingest, e));
            None
        }
    };

    for stage in Stage::ALL {
        let result = match (&mut run, &failure) {
            (Some(run), None) => run.stage(stage),
            _ => {
                let is_failed = matches!(&failure, Some((s, _)) if *s == stage);
                stages.push(StageStatus {
                    stage,
                    status: if is_failed { "failed" } else { "skipped" },
                    error: failure
                        .as_ref()
                        .filter(|_| is_failed)
                        .map(|(_, e)| e.to_string()),
                });
                continue;
            }
        };
        match result {
            Ok(()) => stages.push(StageStatus {
                stage,
                status: "ok",
                error: None,
            }),
            Err(e) => {
                stages.push(StageStatus {
                    stage,
                    status: "failed",
                    error: Some(e.to_string()),
                });
                failure = Some((stage, e));
            }
        }
    }

    let manifest = Manifest {
        tool: "nominee",
        version: env!("CARGO_PKG_VERSION"),
        seed: config.seed,
        k: config.k,
        alpha: config.alpha,
        period_start: config.period_start,
        period_length: config.period_length,
        window_start: config.window_start,
        window_end: config.window_end,
        inputs: input_digests,
        stages,
        failed_stage: failure.as_ref().map(|(s, _)| *s),
        outputs: output_digests(&config.out_dir)?,
    };
    let mut w = BufWriter::new(File::create(config.out_dir.join(MANIFEST_FILE))?);
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    w.write_all(b"\n")?;
    w.flush()?;

    let (cv, prediction) = run.map(|r| (r.cv, r.prediction)).unwrap_or_default();
    Ok(PipelineOutcome {
        manifest,
        failure,
        cv,
        prediction,
    })
}
