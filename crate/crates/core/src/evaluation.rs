//! Sign-threshold classification, accuracy, and the random baselines.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::dataset::LabeledEvent;
use crate::lexicon::{Polarity, SeedLexicon};
use crate::model::PolarityModel;
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("score {0} is not finite")]
    NonFiniteScore(f64),
    #[error("test set is empty")]
    EmptyTestSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    fn index(self) -> usize {
        match self {
            Sign::Positive => 0,
            Sign::Negative => 1,
        }
    }
}

impl From<Polarity> for Sign {
    fn from(p: Polarity) -> Sign {
        match p {
            Polarity::Positive => Sign::Positive,
            Polarity::Negative => Sign::Negative,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Positive => "positive",
            Sign::Negative => "negative",
        })
    }
}

/// Positive iff `score > 0`; zero is negative.
pub fn classify<T: Scalar>(score: T) -> Result<Sign, EvalError> {
    if !score.is_finite() {
        return Err(EvalError::NonFiniteScore(score.to_f64_exact()));
    }
    Ok(if score > T::zero() {
        Sign::Positive
    } else {
        Sign::Negative
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    pub accuracy: f64,
    pub n_total: usize,
    pub n_correct: usize,
    /// `confusion[predicted][reference]`, index 0 = positive, 1 = negative.
    pub confusion: [[usize; 2]; 2],
}

impl EvalResult {
    pub fn from_predictions(predicted: &[Sign], test: &[LabeledEvent]) -> Result<Self, EvalError> {
        if test.is_empty() {
            return Err(EvalError::EmptyTestSet);
        }
        assert_eq!(predicted.len(), test.len(), "one prediction per test event");
        let mut confusion = [[0usize; 2]; 2];
        for (p, t) in predicted.iter().zip(test) {
            confusion[p.index()][Sign::from(t.score).index()] += 1;
        }
        let n_correct = confusion[0][0] + confusion[1][1];
        Ok(EvalResult {
            accuracy: n_correct as f64 / test.len() as f64,
            n_total: test.len(),
            n_correct,
            confusion,
        })
    }
}

/// One line of the per-event score dump.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredEvent {
    pub tokens: Vec<String>,
    pub reference: Polarity,
    pub score: f64,
    pub predicted: Sign,
}

pub fn score_events<T: Scalar>(
    model: &PolarityModel<T>,
    test: &[LabeledEvent],
) -> Result<Vec<ScoredEvent>, EvalError> {
    test.iter()
        .map(|t| {
            let score = model.polarity(&t.event);
            Ok(ScoredEvent {
                tokens: t.event.tokens().to_vec(),
                reference: t.score,
                score: score.to_f64_exact(),
                predicted: classify(score)?,
            })
        })
        .collect()
}

pub fn evaluate<T: Scalar>(
    model: &PolarityModel<T>,
    test: &[LabeledEvent],
) -> Result<EvalResult, EvalError> {
    if test.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    let predicted = test
        .iter()
        .map(|t| classify(model.polarity(&t.event)))
        .collect::<Result<Vec<_>, _>>()?;
    EvalResult::from_predictions(&predicted, test)
}

fn coin(rng: &mut ChaCha8Rng) -> Sign {
    if rng.gen_bool(0.5) {
        Sign::Positive
    } else {
        Sign::Negative
    }
}

/// One seeded fair coin per event.
pub fn predict_random(test: &[LabeledEvent], seed: u64) -> Vec<Sign> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    test.iter().map(|_| coin(&mut rng)).collect()
}

/// Seed polarity of the predicate (reversed under negation), else a seeded coin.
///
/// Coins are drawn only for events without a lexicon predicate, so on a set
/// with no matches this reproduces [`predict_random`] exactly.
pub fn predict_random_seed(test: &[LabeledEvent], lexicon: &SeedLexicon, seed: u64) -> Vec<Sign> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    test.iter()
        .map(|t| match lexicon.lookup(t.event.predicate()) {
            Some(p) if lexicon.is_negated(&t.event) => Sign::from(p.flip()),
            Some(p) => Sign::from(p),
            None => coin(&mut rng),
        })
        .collect()
}

pub fn baseline_random(test: &[LabeledEvent], seed: u64) -> Result<EvalResult, EvalError> {
    EvalResult::from_predictions(&predict_random(test, seed), test)
}

pub fn baseline_random_seed(
    test: &[LabeledEvent],
    lexicon: &SeedLexicon,
    seed: u64,
) -> Result<EvalResult, EvalError> {
    EvalResult::from_predictions(&predict_random_seed(test, lexicon, seed), test)
}
