//! Model evaluation: confusion-matrix metrics, seeded k-fold
//! cross-validation and the arrival-order learning curve.
//!
//! Besides the usual F1 (Positive as the class of interest) every report
//! carries the negative-class F1, the harmonic mean of TN/(TN+FN) and
//! TN/(TN+FP). A metric whose denominator vanishes is undefined (`None`)
//! rather than zero, and undefined values are left out of averages.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::fmt_metric;
use crate::labeling::{LabeledTweet, Sentiment};
use crate::nbmodel::{self, tokenize, ModelError, SentimentModel};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("need k >= 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("cannot split {n} instances into {k} folds")]
    TooFewInstances { n: usize, k: usize },
    #[error("candidate `{candidate}` has {n} labeled tweets, fewer than k = {k}")]
    CandidateTooSmall { candidate: String, n: usize, k: usize },
    #[error("candidate `{0}` has labels of only one sentiment")]
    SingleClass(String),
    #[error("no labeled tweets for candidate `{0}`")]
    NoData(String),
    #[error("test tweet labeled for `{found}` given to the `{expected}` model")]
    CandidateMismatch { expected: String, found: String },
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Counts with Positive as the class of interest.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn record(&mut self, actual: Sentiment, predicted: Sentiment) {
        use Sentiment::*;
        match (actual, predicted) {
            (Positive, Positive) => self.tp += 1,
            (Negative, Positive) => self.fp += 1,
            (Negative, Negative) => self.tn += 1,
            (Positive, Negative) => self.fn_ += 1,
        }
    }

    /// Swaps the roles of the two classes.
    pub fn mirror(&self) -> Self {
        Self {
            tp: self.tn,
            fp: self.fn_,
            tn: self.tp,
            fn_: self.fp,
        }
    }
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64, EvalError> {
    match cm.total() {
        0 => Err(EvalError::EmptyMatrix),
        total => Ok((cm.tp + cm.tn) as f64 / total as f64),
    }
}

fn harmonic_f1(hits: u64, precision_den: u64, recall_den: u64) -> Option<f64> {
    if precision_den == 0 || recall_den == 0 {
        return None;
    }
    if hits == 0 {
        return Some(0.0);
    }
    let precision = hits as f64 / precision_den as f64;
    let recall = hits as f64 / recall_den as f64;
    Some(2.0 * precision * recall / (precision + recall))
}

/// F1 of the Positive class; undefined when nothing was predicted
/// Positive or nothing is actually Positive.
pub fn f1(cm: &ConfusionMatrix) -> Result<Option<f64>, EvalError> {
    if cm.total() == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    Ok(harmonic_f1(cm.tp, cm.tp + cm.fp, cm.tp + cm.fn_))
}

/// F1 of the Negative class:
/// `2 * (TN/(TN+FN)) * (TN/(TN+FP)) / (TN/(TN+FN) + TN/(TN+FP))`.
pub fn f1_neg(cm: &ConfusionMatrix) -> Result<Option<f64>, EvalError> {
    if cm.total() == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    if cm.tn + cm.fn_ == 0 || cm.tn + cm.fp == 0 {
        return Ok(None);
    }
    if cm.tn == 0 {
        return Ok(Some(0.0));
    }
    let neg_precision = cm.tn as f64 / (cm.tn + cm.fn_) as f64;
    let neg_recall = cm.tn as f64 / (cm.tn + cm.fp) as f64;
    Ok(Some(
        2.0 * (neg_precision * neg_recall) / (neg_precision + neg_recall),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub accuracy: f64,
    pub f1: Option<f64>,
    pub f1_neg: Option<f64>,
}

impl MetricReport {
    pub fn from_confusion(cm: &ConfusionMatrix) -> Result<Self, EvalError> {
        Ok(Self {
            accuracy: accuracy(cm)?,
            f1: f1(cm)?,
            f1_neg: f1_neg(cm)?,
        })
    }
}

/// Seeded shuffle of `0..n` cut into `k` contiguous folds; the first
/// `n % k` folds hold one extra index.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, EvalError> {
    if k < 2 {
        return Err(EvalError::TooFewFolds(k));
    }
    if n < k {
        return Err(EvalError::TooFewInstances { n, k });
    }
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for fold in 0..k {
        let len = base + usize::from(fold < extra);
        folds.push(indices[start..start + len].to_vec());
        start += len;
    }
    Ok(folds)
}

pub fn confusion(model: &SentimentModel, test: &[LabeledTweet]) -> Result<ConfusionMatrix, EvalError> {
    let mut cm = ConfusionMatrix::default();
    for l in test {
        if l.candidate != model.candidate() {
            return Err(EvalError::CandidateMismatch {
                expected: model.candidate().to_string(),
                found: l.candidate.clone(),
            });
        }
        cm.record(l.sentiment, model.classify(&l.tweet.text));
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldReport {
    pub confusion: ConfusionMatrix,
    pub metrics: MetricReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub candidate: String,
    pub n_training: usize,
    pub per_fold: Vec<FoldReport>,
    pub mean_accuracy: f64,
    pub mean_f1: Option<f64>,
    pub mean_f1_neg: Option<f64>,
}

/// Mean of the defined values, `None` if there are none.
pub fn mean_defined<I: IntoIterator<Item = Option<f64>>>(values: I) -> Option<f64> {
    let (sum, n) = values
        .into_iter()
        .flatten()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// k-fold cross-validation of one candidate's model.
pub fn cross_validate(
    labeled: &[LabeledTweet],
    k: usize,
    seed: u64,
    alpha: f64,
) -> Result<CvResult, EvalError> {
    let candidate = labeled
        .first()
        .map(|l| l.candidate.clone())
        .ok_or_else(|| EvalError::NoData(String::new()))?;
    if let Some(other) = labeled.iter().find(|l| l.candidate != candidate) {
        return Err(ModelError::MixedCandidates(candidate, other.candidate.clone()).into());
    }
    if k < 2 {
        return Err(EvalError::TooFewFolds(k));
    }
    if labeled.len() < k {
        return Err(EvalError::CandidateTooSmall {
            candidate,
            n: labeled.len(),
            k,
        });
    }
    let first = labeled[0].sentiment;
    if labeled.iter().all(|l| l.sentiment == first) {
        return Err(EvalError::SingleClass(candidate));
    }

    let folds = kfold_split(labeled.len(), k, seed)?;
    let mut per_fold = Vec::with_capacity(k);
    for (i, test_idx) in folds.iter().enumerate() {
        let train_set: Vec<LabeledTweet> = folds
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .flat_map(|(_, f)| f.iter().map(|&idx| labeled[idx].clone()))
            .collect();
        let test_set: Vec<LabeledTweet> = test_idx.iter().map(|&idx| labeled[idx].clone()).collect();
        let model = nbmodel::train(&train_set, alpha)?;
        let cm = confusion(&model, &test_set)?;
        per_fold.push(FoldReport {
            confusion: cm,
            metrics: MetricReport::from_confusion(&cm)?,
        });
    }

    let mean_accuracy =
        per_fold.iter().map(|f| f.metrics.accuracy).sum::<f64>() / per_fold.len() as f64;
    Ok(CvResult {
        candidate,
        n_training: labeled.len(),
        mean_f1: mean_defined(per_fold.iter().map(|f| f.metrics.f1)),
        mean_f1_neg: mean_defined(per_fold.iter().map(|f| f.metrics.f1_neg)),
        per_fold,
        mean_accuracy,
    })
}

/// Splits labeled tweets by candidate, keeping arrival order within each.
pub fn group_by_candidate(labeled: &[LabeledTweet]) -> BTreeMap<String, Vec<LabeledTweet>> {
    let mut groups: BTreeMap<String, Vec<LabeledTweet>> = BTreeMap::new();
    for l in labeled {
        groups.entry(l.candidate.clone()).or_default().push(l.clone());
    }
    groups
}

/// Writes `candidate,n_training,fold,accuracy,f1,f1_neg`, one row per fold
/// plus a `mean` row per candidate. Undefined metrics are `undefined`.
pub fn write_cv_report<W: Write>(w: W, results: &[CvResult]) -> Result<(), EvalError> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["candidate", "n_training", "fold", "accuracy", "f1", "f1_neg"])?;
    for r in results {
        for (i, f) in r.per_fold.iter().enumerate() {
            csv.write_record([
                r.candidate.clone(),
                r.n_training.to_string(),
                i.to_string(),
                fmt_metric(Some(f.metrics.accuracy)),
                fmt_metric(f.metrics.f1),
                fmt_metric(f.metrics.f1_neg),
            ])?;
        }
        csv.write_record([
            r.candidate.clone(),
            r.n_training.to_string(),
            "mean".to_string(),
            fmt_metric(Some(r.mean_accuracy)),
            fmt_metric(r.mean_f1),
            fmt_metric(r.mean_f1_neg),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

/// One learning-curve point: models trained on the first `n` tweets of the
/// stream, scored on the following window.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub n: usize,
    pub test_start: usize,
    pub test_end: usize,
    /// The window was cut short by the end of the stream.
    pub truncated: bool,
    /// Accuracy per candidate that had both training tweets and test tweets.
    pub per_candidate: BTreeMap<String, f64>,
    pub mean_accuracy: Option<f64>,
    pub std_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurveWarning {
    pub n: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LearningCurve {
    pub points: Vec<CurvePoint>,
    pub warnings: Vec<CurveWarning>,
}

/// For each `n`, trains one model per candidate on `stream[..n]` and
/// measures each candidate's accuracy on its tweets in
/// `stream[n..n + horizon]`. The stream must be in arrival order.
pub fn learning_curve(
    stream: &[LabeledTweet],
    n_values: &[usize],
    horizon: usize,
    alpha: f64,
) -> Result<LearningCurve, EvalError> {
    let mut curve = LearningCurve::default();
    for &n in n_values {
        if n == 0 || n >= stream.len() {
            curve.warnings.push(CurveWarning {
                n,
                reason: format!("no test window: stream has {} tweets", stream.len()),
            });
            continue;
        }
        let test_end = (n + horizon).min(stream.len());
        let models: BTreeMap<String, SentimentModel> = group_by_candidate(&stream[..n])
            .into_iter()
            .map(|(c, docs)| nbmodel::train(&docs, alpha).map(|m| (c, m)))
            .collect::<Result<_, _>>()?;

        let mut hits: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
        for l in &stream[n..test_end] {
            if let Some(model) = models.get(&l.candidate) {
                let e = hits.entry(model.candidate()).or_default();
                e.1 += 1;
                if model.classify_tokens(&tokenize(&l.tweet.text)) == l.sentiment {
                    e.0 += 1;
                }
            }
        }
        let per_candidate: BTreeMap<String, f64> = hits
            .into_iter()
            .map(|(c, (ok, total))| (c.to_string(), ok as f64 / total as f64))
            .collect();
        let (mean_accuracy, std_accuracy) = if per_candidate.is_empty() {
            (None, None)
        } else {
            let values: Vec<f64> = per_candidate.values().copied().collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
            (Some(mean), Some(var.sqrt()))
        };
        curve.points.push(CurvePoint {
            n,
            test_start: n,
            test_end,
            truncated: test_end < n + horizon,
            per_candidate,
            mean_accuracy,
            std_accuracy,
        });
    }
    Ok(curve)
}

/// Parses `start:end:step` (inclusive end) into grid values.
pub fn parse_grid(spec: &str) -> Option<Vec<usize>> {
    let parts: Vec<usize> = spec
        .split(':')
        .map(|p| p.trim().parse().ok())
        .collect::<Option<_>>()?;
    match parts.as_slice() {
        [single] => Some(vec![*single]),
        [start, end, step] if *step > 0 && start <= end => {
            Some((*start..=*end).step_by(*step).collect())
        }
        _ => None,
    }
}

pub fn write_curve_csv<W: Write>(w: W, curve: &LearningCurve) -> Result<(), EvalError> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record([
        "n",
        "test_start",
        "test_end",
        "truncated",
        "candidates",
        "mean_accuracy",
        "std_accuracy",
        "note",
    ])?;
    for p in &curve.points {
        csv.write_record([
            p.n.to_string(),
            p.test_start.to_string(),
            p.test_end.to_string(),
            p.truncated.to_string(),
            p.per_candidate.len().to_string(),
            fmt_metric(p.mean_accuracy),
            fmt_metric(p.std_accuracy),
            String::new(),
        ])?;
    }
    for w in &curve.warnings {
        csv.write_record([
            w.n.to_string(),
            String::new(),
            String::new(),
            String::new(),
            "0".to_string(),
            fmt_metric(None),
            fmt_metric(None),
            format!("skipped: {}", w.reason),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::CleanTweet;
    use chrono::{DateTime, Duration};
    use Sentiment::{Negative as Neg, Positive as Pos};

    pub(crate) fn labeled(candidate: &str, text: &str, sentiment: Sentiment, i: usize) -> LabeledTweet {
        LabeledTweet {
            tweet: CleanTweet {
                id: i.to_string(),
                created_at: DateTime::from_timestamp(1_450_224_000, 0).unwrap()
                    + Duration::minutes(i as i64),
                text: text.to_string(),
                mentioned: [candidate.to_string()].into(),
            },
            candidate: candidate.to_string(),
            sentiment,
        }
    }

    fn close(a: Option<f64>, b: f64) -> bool {
        a.is_some_and(|a| (a - b).abs() < 1e-12)
    }

    #[test]
    fn metric_examples() {
        let perfect = ConfusionMatrix::new(5, 0, 5, 0);
        assert_eq!(accuracy(&perfect).unwrap(), 1.0);
        assert_eq!(f1(&perfect).unwrap(), Some(1.0));
        assert_eq!(f1_neg(&perfect).unwrap(), Some(1.0));

        let all_positive = ConfusionMatrix::new(3, 2, 0, 0);
        assert_eq!(f1_neg(&all_positive).unwrap(), None);
        assert!(f1(&all_positive).unwrap().is_some());

        let cm = ConfusionMatrix::new(8, 2, 6, 4);
        assert!((accuracy(&cm).unwrap() - 0.7).abs() < 1e-12);
        let (p, r) = (0.8, 8.0 / 12.0);
        assert!(close(f1(&cm).unwrap(), 2.0 * p * r / (p + r)));
        assert!(close(f1(&cm).unwrap(), 0.727_272_727_272_727_3));
        assert!(close(f1_neg(&cm).unwrap(), 2.0 * (0.6 * 0.75) / (0.6 + 0.75)));
        assert!(close(f1_neg(&cm).unwrap(), 2.0 / 3.0));
    }

    #[test]
    fn zero_hits_with_positive_denominators_score_zero() {
        let cm = ConfusionMatrix::new(0, 3, 0, 2);
        assert_eq!(f1(&cm).unwrap(), Some(0.0));
        assert_eq!(f1_neg(&cm).unwrap(), Some(0.0));
    }

    #[test]
    fn empty_matrix_errors() {
        let cm = ConfusionMatrix::default();
        assert!(matches!(accuracy(&cm), Err(EvalError::EmptyMatrix)));
        assert!(matches!(f1(&cm), Err(EvalError::EmptyMatrix)));
        assert!(matches!(f1_neg(&cm), Err(EvalError::EmptyMatrix)));
    }

    #[test]
    fn kfold_examples() {
        let folds = kfold_split(10, 10, 7).unwrap();
        assert!(folds.iter().all(|f| f.len() == 1));
        let sizes: Vec<usize> = kfold_split(10, 3, 7).unwrap().iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![4, 3, 3]);
        assert_eq!(kfold_split(57, 10, 42).unwrap(), kfold_split(57, 10, 42).unwrap());
        assert_ne!(kfold_split(57, 10, 42).unwrap(), kfold_split(57, 10, 43).unwrap());
        assert!(matches!(kfold_split(3, 5, 0), Err(EvalError::TooFewInstances { n: 3, k: 5 })));
        assert!(matches!(kfold_split(3, 1, 0), Err(EvalError::TooFewFolds(1))));
    }

    #[test]
    fn confusion_examples() {
        let mut data = Vec::new();
        for i in 0..5 {
            data.push(labeled("X", "great", Pos, i));
            data.push(labeled("X", "awful", Neg, 10 + i));
        }
        let model = nbmodel::train(&data, 1.0).unwrap();
        assert_eq!(confusion(&model, &data).unwrap(), ConfusionMatrix::new(5, 0, 5, 0));

        let all_pos = nbmodel::train(&[labeled("X", "a", Pos, 0)], 1.0).unwrap();
        let test = vec![
            labeled("X", "a", Pos, 0),
            labeled("X", "a", Pos, 1),
            labeled("X", "b", Pos, 2),
            labeled("X", "a", Neg, 3),
            labeled("X", "c", Neg, 4),
        ];
        assert_eq!(confusion(&all_pos, &test).unwrap(), ConfusionMatrix::new(3, 2, 0, 0));

        let other = vec![labeled("Y", "a", Pos, 0)];
        assert!(matches!(
            confusion(&all_pos, &other),
            Err(EvalError::CandidateMismatch { .. })
        ));
    }

    #[test]
    fn cross_validate_preconditions() {
        let few: Vec<_> = (0..5).map(|i| labeled("Gilmore", "a", Pos, i)).collect();
        match cross_validate(&few, 10, 1, 1.0) {
            Err(EvalError::CandidateTooSmall { candidate, n: 5, k: 10 }) => {
                assert_eq!(candidate, "Gilmore")
            }
            other => panic!("unexpected {other:?}"),
        }
        let one_class: Vec<_> = (0..20).map(|i| labeled("X", "a", Pos, i)).collect();
        assert!(matches!(
            cross_validate(&one_class, 10, 1, 1.0),
            Err(EvalError::SingleClass(_))
        ));
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("1000:3000:1000"), Some(vec![1000, 2000, 3000]));
        assert_eq!(parse_grid("5"), Some(vec![5]));
        assert_eq!(parse_grid("3:1:1"), None);
        assert_eq!(parse_grid("1:5:0"), None);
        assert_eq!(parse_grid("a:b"), None);
    }

    #[test]
    fn learning_curve_window_arithmetic() {
        let stream: Vec<_> = (0..5000)
            .map(|i| {
                let s = if i % 2 == 0 { Pos } else { Neg };
                let text = if s == Pos { "great" } else { "awful" };
                labeled("X", text, s, i)
            })
            .collect();
        let curve = learning_curve(&stream, &[1000, 4500, 5000], 4000, 1.0).unwrap();
        let p = &curve.points[0];
        assert_eq!((p.test_start, p.test_end, p.truncated), (1000, 5000, false));
        assert_eq!(p.mean_accuracy, Some(1.0));
        let p = &curve.points[1];
        assert_eq!((p.test_start, p.test_end, p.truncated), (4500, 5000, true));
        assert_eq!(curve.warnings.len(), 1);
        assert_eq!(curve.warnings[0].n, 5000);
    }

    #[test]
    fn mean_defined_skips_undefined() {
        assert_eq!(mean_defined([Some(1.0), None, Some(0.5)]), Some(0.75));
        assert_eq!(mean_defined([None, None]), None);
    }
}
