//! Discourse-connective based event pair extraction.
//!
//! A sentence is split at every occurrence of a connective pattern from a
//! [`ConnectiveTable`]. The maximal token spans on each side of the connective
//! become the two events; the rule's [`ConnectiveOrder`] says which side holds the
//! former event. When a connective opens the sentence (nothing to its left), the
//! text after it is split at the first clause boundary token instead, giving the
//! fronted `Because A , B` construction. Patterns match case-insensitively.

use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExtractionError {
    #[error("line {line}: malformed connective rule: {reason}")]
    MalformedRule { line: usize, reason: String },
    #[error("line {line}: duplicate connective pattern {pattern:?}")]
    DuplicatePattern { line: usize, pattern: String },
    #[error("invalid event: {0}")]
    InvalidEvent(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A clause whose polarity is scored: tokens plus the index of its main predicate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    tokens: Vec<String>,
    predicate_index: usize,
}

impl Event {
    pub fn new(tokens: Vec<String>, predicate_index: usize) -> Result<Self, ExtractionError> {
        if tokens.is_empty() {
            return Err(ExtractionError::InvalidEvent("event has no tokens".into()));
        }
        if predicate_index >= tokens.len() {
            return Err(ExtractionError::InvalidEvent(format!(
                "predicate index {} out of range for {} tokens",
                predicate_index,
                tokens.len()
            )));
        }
        Ok(Event {
            tokens,
            predicate_index,
        })
    }

    /// Builds an event from whitespace separated text with the predicate on the last token.
    pub fn from_text(text: &str) -> Result<Self, ExtractionError> {
        let tokens: Vec<String> = text.split_whitespace().map(str::to_owned).collect();
        let last = tokens.len().saturating_sub(1);
        Event::new(tokens, last)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn predicate_index(&self) -> usize {
        self.predicate_index
    }

    pub fn predicate(&self) -> &str {
        &self.tokens[self.predicate_index]
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tokens.join(" "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiscourseRelation {
    Cause,
    Concession,
}

impl FromStr for DiscourseRelation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cause" => Ok(DiscourseRelation::Cause),
            "concession" => Ok(DiscourseRelation::Concession),
            other => Err(format!(
                "unknown relation {other:?} (expected cause|concession)"
            )),
        }
    }
}

impl fmt::Display for DiscourseRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiscourseRelation::Cause => f.write_str("cause"),
            DiscourseRelation::Concession => f.write_str("concession"),
        }
    }
}

/// Two events linked by a discourse relation. Propagation flows latter → former.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EventPair {
    pub former: Event,
    pub latter: Event,
    pub relation: DiscourseRelation,
}

/// JSON Lines record for one extracted pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub former_tokens: Vec<String>,
    pub latter_tokens: Vec<String>,
    pub former_predicate: usize,
    pub latter_predicate: usize,
    pub relation: DiscourseRelation,
}

impl From<&EventPair> for PairRecord {
    fn from(pair: &EventPair) -> Self {
        PairRecord {
            former_tokens: pair.former.tokens.clone(),
            latter_tokens: pair.latter.tokens.clone(),
            former_predicate: pair.former.predicate_index,
            latter_predicate: pair.latter.predicate_index,
            relation: pair.relation,
        }
    }
}

impl TryFrom<PairRecord> for EventPair {
    type Error = ExtractionError;

    fn try_from(record: PairRecord) -> Result<Self, Self::Error> {
        Ok(EventPair {
            former: Event::new(record.former_tokens, record.former_predicate)?,
            latter: Event::new(record.latter_tokens, record.latter_predicate)?,
            relation: record.relation,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConnectiveOrder {
    /// The former event precedes the connective.
    FormerFirst,
    /// The latter event precedes the connective (`B because A`).
    LatterFirst,
}

impl FromStr for ConnectiveOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "former_first" => Ok(ConnectiveOrder::FormerFirst),
            "latter_first" => Ok(ConnectiveOrder::LatterFirst),
            other => Err(format!(
                "unknown order {other:?} (expected former_first|latter_first)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectiveRule {
    pub pattern: String,
    pub relation: DiscourseRelation,
    pub order: ConnectiveOrder,
}

impl ConnectiveRule {
    fn pattern_tokens(&self) -> Vec<&str> {
        self.pattern.split_whitespace().collect()
    }
}

/// Ordered set of connective rules with unique patterns.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConnectiveTable {
    rules: Vec<ConnectiveRule>,
}

impl ConnectiveTable {
    pub fn new(rules: Vec<ConnectiveRule>) -> Result<Self, ExtractionError> {
        let mut seen = HashSet::new();
        for (i, rule) in rules.iter().enumerate() {
            if rule.pattern.split_whitespace().next().is_none() {
                return Err(ExtractionError::MalformedRule {
                    line: i + 1,
                    reason: "empty pattern".into(),
                });
            }
            if !seen.insert(rule.pattern.to_lowercase()) {
                return Err(ExtractionError::DuplicatePattern {
                    line: i + 1,
                    pattern: rule.pattern.clone(),
                });
            }
        }
        Ok(ConnectiveTable { rules })
    }

    pub fn rules(&self) -> &[ConnectiveRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Parses the tab separated `pattern<TAB>relation<TAB>order` format.
    pub fn parse(text: &str) -> Result<Self, ExtractionError> {
        let mut rules = Vec::new();
        let mut seen = HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(ExtractionError::MalformedRule {
                    line: line_no,
                    reason: format!("expected 3 tab-separated fields, got {}", fields.len()),
                });
            }
            let pattern = fields[0].trim();
            if pattern.is_empty() {
                return Err(ExtractionError::MalformedRule {
                    line: line_no,
                    reason: "empty pattern".into(),
                });
            }
            let relation =
                fields[1]
                    .trim()
                    .parse()
                    .map_err(|reason| ExtractionError::MalformedRule {
                        line: line_no,
                        reason,
                    })?;
            let order =
                fields[2]
                    .trim()
                    .parse()
                    .map_err(|reason| ExtractionError::MalformedRule {
                        line: line_no,
                        reason,
                    })?;
            if !seen.insert(pattern.to_lowercase()) {
                return Err(ExtractionError::DuplicatePattern {
                    line: line_no,
                    pattern: pattern.to_owned(),
                });
            }
            rules.push(ConnectiveRule {
                pattern: pattern.to_owned(),
                relation,
                order,
            });
        }
        Ok(ConnectiveTable { rules })
    }
}

pub fn load_connective_table(path: &Path) -> Result<ConnectiveTable, ExtractionError> {
    let text = std::fs::read_to_string(path)?;
    ConnectiveTable::parse(&text)
}

/// Splits a raw line into tokens.
pub trait Tokenizer {
    fn tokenize(&self, line: &str) -> Vec<String>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn tokenize(&self, line: &str) -> Vec<String> {
        line.split_whitespace().map(str::to_owned).collect()
    }
}

/// Where the main predicate of an extracted clause sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PredicatePosition {
    /// Head-final languages (Japanese).
    #[default]
    Last,
    First,
}

#[derive(Debug, Clone)]
pub struct ExtractorConfig {
    pub predicate: PredicatePosition,
    /// Punctuation trimmed from clause edges; also the split point for fronted connectives.
    pub boundary_tokens: Vec<String>,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        ExtractorConfig {
            predicate: PredicatePosition::Last,
            boundary_tokens: [",", ";", ".", "!", "?", "、", "。"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

impl ExtractorConfig {
    fn is_boundary(&self, token: &str) -> bool {
        self.boundary_tokens.iter().any(|b| b == token)
    }

    fn trim(&self, tokens: &[String], span: Range<usize>) -> Range<usize> {
        let (mut start, mut end) = (span.start, span.end);
        while start < end && self.is_boundary(&tokens[start]) {
            start += 1;
        }
        while end > start && self.is_boundary(&tokens[end - 1]) {
            end -= 1;
        }
        start..end
    }

    fn event(&self, tokens: &[String], span: Range<usize>) -> Event {
        let words = tokens[span].to_vec();
        let predicate_index = match self.predicate {
            PredicatePosition::Last => words.len() - 1,
            PredicatePosition::First => 0,
        };
        Event {
            tokens: words,
            predicate_index,
        }
    }
}

/// Span-level extraction result, exposed for invariant checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSpans {
    pub former: Range<usize>,
    pub latter: Range<usize>,
    pub relation: DiscourseRelation,
    pub rule_index: usize,
    pub connective_at: usize,
}

fn occurrences(tokens: &[String], pattern: &[&str]) -> Vec<usize> {
    if pattern.is_empty() || pattern.len() > tokens.len() {
        return Vec::new();
    }
    (0..=tokens.len() - pattern.len())
        .filter(|&i| {
            pattern
                .iter()
                .zip(&tokens[i..])
                .all(|(p, t)| p.to_lowercase() == t.to_lowercase())
        })
        .collect()
}

/// Finds the clause spans for every connective occurrence, left to right.
pub fn extract_spans(
    tokens: &[String],
    table: &ConnectiveTable,
    config: &ExtractorConfig,
) -> Vec<PairSpans> {
    let mut found = Vec::new();
    for (rule_index, rule) in table.rules.iter().enumerate() {
        let pattern = rule.pattern_tokens();
        for at in occurrences(tokens, &pattern) {
            let after = at + pattern.len();
            let left = config.trim(tokens, 0..at);
            let (before_side, after_side) = if left.is_empty() {
                // Fronted connective: "because A , B".
                let rest = after..tokens.len();
                let Some(split) = (after..tokens.len()).find(|&i| config.is_boundary(&tokens[i]))
                else {
                    continue;
                };
                let sub = config.trim(tokens, rest.start..split);
                let main = config.trim(tokens, split + 1..rest.end);
                // The subordinate clause keeps the role it has in the unfronted
                // order, i.e. it plays the part of the side after the connective.
                (main, sub)
            } else {
                (left, config.trim(tokens, after..tokens.len()))
            };
            if before_side.is_empty() || after_side.is_empty() {
                continue;
            }
            let (former, latter) = match rule.order {
                ConnectiveOrder::FormerFirst => (before_side, after_side),
                ConnectiveOrder::LatterFirst => (after_side, before_side),
            };
            found.push(PairSpans {
                former,
                latter,
                relation: rule.relation,
                rule_index,
                connective_at: at,
            });
        }
    }
    found.sort_by_key(|s| (s.connective_at, s.rule_index));
    found
}

pub fn extract_pairs(tokens: &[String], table: &ConnectiveTable) -> Vec<EventPair> {
    extract_pairs_with(tokens, table, &ExtractorConfig::default())
}

pub fn extract_pairs_with(
    tokens: &[String],
    table: &ConnectiveTable,
    config: &ExtractorConfig,
) -> Vec<EventPair> {
    extract_spans(tokens, table, config)
        .into_iter()
        .map(|s| EventPair {
            former: config.event(tokens, s.former),
            latter: config.event(tokens, s.latter),
            relation: s.relation,
        })
        .collect()
}

/// The clause after the last connective occurrence or clause boundary, used to turn
/// a labeled sentence into a single event.
pub fn last_clause(
    tokens: &[String],
    table: &ConnectiveTable,
    config: &ExtractorConfig,
) -> Option<Event> {
    let mut start = 0;
    for rule in table.rules() {
        let pattern = rule.pattern_tokens();
        for at in occurrences(tokens, &pattern) {
            let end = at + pattern.len();
            if end < tokens.len() {
                start = start.max(end);
            }
        }
    }
    let span = config.trim(tokens, start..tokens.len());
    let mut clause_start = span.start;
    for i in span.clone() {
        if config.is_boundary(&tokens[i]) {
            clause_start = i + 1;
        }
    }
    let span = config.trim(tokens, clause_start..span.end);
    if span.is_empty() {
        None
    } else {
        Some(config.event(tokens, span))
    }
}

/// Streams event pairs out of a one-sentence-per-line corpus.
///
/// Lines that are not valid UTF-8 are skipped and counted in [`CorpusStream::skipped`].
pub struct CorpusStream<R, K = WhitespaceTokenizer> {
    reader: R,
    table: ConnectiveTable,
    config: ExtractorConfig,
    tokenizer: K,
    pending: VecDeque<EventPair>,
    buf: Vec<u8>,
    skipped: usize,
    lines: usize,
    done: bool,
}

impl<R: BufRead> CorpusStream<R, WhitespaceTokenizer> {
    pub fn new(reader: R, table: ConnectiveTable) -> Self {
        CorpusStream::with_tokenizer(
            reader,
            table,
            ExtractorConfig::default(),
            WhitespaceTokenizer,
        )
    }
}

impl<R: BufRead, K: Tokenizer> CorpusStream<R, K> {
    pub fn with_tokenizer(
        reader: R,
        table: ConnectiveTable,
        config: ExtractorConfig,
        tokenizer: K,
    ) -> Self {
        CorpusStream {
            reader,
            table,
            config,
            tokenizer,
            pending: VecDeque::new(),
            buf: Vec::new(),
            skipped: 0,
            lines: 0,
            done: false,
        }
    }

    /// Lines dropped because they failed UTF-8 decoding.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn lines_read(&self) -> usize {
        self.lines
    }
}

impl<R: BufRead, K: Tokenizer> Iterator for CorpusStream<R, K> {
    type Item = Result<EventPair, ExtractionError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(pair) = self.pending.pop_front() {
                return Some(Ok(pair));
            }
            if self.done {
                return None;
            }
            self.buf.clear();
            match self.reader.read_until(b'\n', &mut self.buf) {
                Ok(0) => {
                    self.done = true;
                    return None;
                }
                Ok(_) => {
                    self.lines += 1;
                    match std::str::from_utf8(&self.buf) {
                        Ok(line) => {
                            let tokens = self.tokenizer.tokenize(line);
                            self.pending.extend(extract_pairs_with(
                                &tokens,
                                &self.table,
                                &self.config,
                            ));
                        }
                        Err(_) => self.skipped += 1,
                    }
                }
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            }
        }
    }
}

pub fn stream_corpus(
    path: &Path,
    table: ConnectiveTable,
) -> Result<CorpusStream<BufReader<File>>, ExtractionError> {
    let file = File::open(path)?;
    Ok(CorpusStream::new(BufReader::new(file), table))
}
