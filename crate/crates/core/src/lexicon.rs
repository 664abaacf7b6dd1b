//! Seed lexicon of emotion predicates and the negation-aware matching rule.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extraction::Event;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: predicate {predicate:?} listed with both polarities")]
    ConflictingEntry { line: usize, predicate: String },
    #[error("line {line}: malformed lexicon line: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A reference polarity: exactly +1 or -1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Polarity {
    Negative,
    Positive,
}

impl Polarity {
    pub fn value(self) -> i8 {
        match self {
            Polarity::Positive => 1,
            Polarity::Negative => -1,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.value())
    }

    pub fn flip(self) -> Polarity {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }

    pub fn from_f64(value: f64) -> Option<Polarity> {
        if value == 1.0 {
            Some(Polarity::Positive)
        } else if value == -1.0 {
            Some(Polarity::Negative)
        } else {
            None
        }
    }
}

impl From<Polarity> for i8 {
    fn from(p: Polarity) -> i8 {
        p.value()
    }
}

impl TryFrom<i8> for Polarity {
    type Error = String;

    fn try_from(v: i8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Polarity::Positive),
            -1 => Ok(Polarity::Negative),
            other => Err(format!("polarity must be +1 or -1, got {other}")),
        }
    }
}

impl std::ops::Neg for Polarity {
    type Output = Polarity;

    fn neg(self) -> Polarity {
        self.flip()
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::Positive => "+1",
            Polarity::Negative => "-1",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeedLexicon {
    entries: BTreeMap<String, Polarity>,
    negation_markers: BTreeSet<String>,
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

impl SeedLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an entry; re-adding with the same polarity is a no-op.
    pub fn insert(&mut self, predicate: &str, polarity: Polarity) -> Result<(), LexiconError> {
        match self.entries.get(predicate) {
            Some(&existing) if existing != polarity => Err(LexiconError::ConflictingEntry {
                line: 0,
                predicate: predicate.to_owned(),
            }),
            _ => {
                self.entries.insert(predicate.to_owned(), polarity);
                Ok(())
            }
        }
    }

    pub fn remove(&mut self, predicate: &str) -> Option<Polarity> {
        self.entries.remove(predicate)
    }

    pub fn add_negation_marker(&mut self, marker: &str) {
        self.negation_markers.insert(marker.to_owned());
    }

    pub fn with_negation_markers<I, S>(mut self, markers: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        for m in markers {
            self.add_negation_marker(m.as_ref());
        }
        self
    }

    /// Parses `predicate<TAB>(+1|-1)` lines.
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut lexicon = SeedLexicon::new();
        for (line, raw) in content_lines(text) {
            let (predicate, score) =
                raw.split_once('\t')
                    .ok_or_else(|| LexiconError::MalformedLine {
                        line,
                        reason: "expected predicate<TAB>score".into(),
                    })?;
            let predicate = predicate.trim();
            if predicate.is_empty() {
                return Err(LexiconError::MalformedLine {
                    line,
                    reason: "empty predicate".into(),
                });
            }
            let polarity = match score.trim() {
                "+1" | "1" => Polarity::Positive,
                "-1" => Polarity::Negative,
                other => {
                    return Err(LexiconError::MalformedLine {
                        line,
                        reason: format!("score must be +1 or -1, got {other:?}"),
                    })
                }
            };
            lexicon
                .insert(predicate, polarity)
                .map_err(|_| LexiconError::ConflictingEntry {
                    line,
                    predicate: predicate.to_owned(),
                })?;
        }
        Ok(lexicon)
    }

    /// Parses a one-marker-per-line negation file.
    pub fn parse_negation_markers(text: &str) -> Result<BTreeSet<String>, LexiconError> {
        let mut markers = BTreeSet::new();
        for (line, raw) in content_lines(text) {
            let marker = raw.trim();
            if marker.split_whitespace().count() != 1 {
                return Err(LexiconError::MalformedLine {
                    line,
                    reason: format!("negation marker must be a single token, got {marker:?}"),
                });
            }
            markers.insert(marker.to_owned());
        }
        Ok(markers)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, Polarity)> {
        self.entries.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn negation_markers(&self) -> impl Iterator<Item = &str> {
        self.negation_markers.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, predicate: &str) -> Option<Polarity> {
        self.entries.get(predicate).copied()
    }

    pub fn is_negated(&self, event: &Event) -> bool {
        event
            .tokens()
            .iter()
            .any(|t| self.negation_markers.contains(t))
    }

    /// Seed polarity of the event's predicate, or `None` when the predicate is
    /// unknown or any negation marker occurs in the event. Negated events are
    /// excluded, never flipped.
    pub fn match_seed(&self, event: &Event) -> Option<Polarity> {
        if self.is_negated(event) {
            return None;
        }
        self.lookup(event.predicate())
    }

    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k}\t{v}\n"))
            .collect()
    }
}

pub fn load_lexicon(path: &Path) -> Result<SeedLexicon, LexiconError> {
    SeedLexicon::parse(&std::fs::read_to_string(path)?)
}

/// Loads a lexicon and, optionally, its negation marker file.
pub fn load_lexicon_with_negation(
    path: &Path,
    negation: Option<&Path>,
) -> Result<SeedLexicon, LexiconError> {
    let lexicon = load_lexicon(path)?;
    Ok(match negation {
        Some(p) => {
            let markers = SeedLexicon::parse_negation_markers(&std::fs::read_to_string(p)?)?;
            lexicon.with_negation_markers(markers)
        }
        None => lexicon,
    })
}
