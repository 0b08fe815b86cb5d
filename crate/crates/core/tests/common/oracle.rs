//! Exact-rational Bernoulli Naive Bayes, computed straight from documents.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use nominee::Sentiment::{self, Negative as Neg, Positive as Pos};

pub type Doc = (BTreeSet<&'static str>, Sentiment);

/// Joint probabilities P(class, x) as exact rationals. Per-token presence
/// probabilities are tallied once; each query multiplies them out.
pub struct ExactBayes {
    classes: BTreeMap<Sentiment, ClassTerms>,
}

/// A class prior and each token's (present, absent) probability.
type ClassTerms = (BigRational, BTreeMap<&'static str, (BigRational, BigRational)>);

impl ExactBayes {
    pub fn new(docs: &[Doc], alpha: f64) -> Self {
        let alpha = BigRational::from_float(alpha).unwrap();
        let int = |n: usize| BigRational::from_integer(BigInt::from(n));
        let vocab: BTreeSet<&'static str> = docs.iter().flat_map(|(t, _)| t.iter().copied()).collect();
        let mut classes = BTreeMap::new();
        for class in [Pos, Neg] {
            let n_class = docs.iter().filter(|(_, s)| *s == class).count();
            let prior = int(n_class) / int(docs.len());
            let denom = int(n_class) + int(2) * &alpha;
            let tokens = vocab
                .iter()
                .map(|&token| {
                    let count = docs.iter().filter(|(t, s)| *s == class && t.contains(token)).count();
                    let present = (int(count) + &alpha) / &denom;
                    let absent = int(1) - &present;
                    (token, (present, absent))
                })
                .collect();
            classes.insert(class, (prior, tokens));
        }
        ExactBayes { classes }
    }

    pub fn joint(&self, input: &BTreeSet<&str>, class: Sentiment) -> BigRational {
        let (prior, tokens) = &self.classes[&class];
        let mut p = prior.clone();
        for (token, (present, absent)) in tokens {
            p *= if input.contains(token) { present } else { absent };
        }
        p
    }

    /// Positive only when strictly more probable.
    pub fn decide(&self, input: &BTreeSet<&str>) -> Sentiment {
        if self.joint(input, Pos) > self.joint(input, Neg) {
            Pos
        } else {
            Neg
        }
    }
}
