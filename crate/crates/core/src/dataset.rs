//! AL / CA / CO classification of extracted pairs, balancing and sampling into a
//! training bundle, and labeled-event ingestion.

use std::io::{self, Write};
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::extraction::{DiscourseRelation, Event, EventPair, PairRecord};
use crate::io::{read_lines, write_json_line};
use crate::lexicon::{Polarity, SeedLexicon};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("no AL pairs found; the seed lexicon never matched a latter event")]
    EmptyAL,
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("line {line}: score must be +1 or -1, got {value}")]
    InvalidScore { line: usize, value: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairClass {
    /// Latter matched the seed lexicon; both sides carry reference scores.
    AL {
        r_former: Polarity,
        r_latter: Polarity,
    },
    CA,
    CO,
    Discarded,
}

/// Decides the pair type from the seed matches of both events.
pub fn classify_pair(pair: &EventPair, lexicon: &SeedLexicon) -> PairClass {
    classify_matches(
        lexicon.match_seed(&pair.former),
        lexicon.match_seed(&pair.latter),
        pair.relation,
    )
}

pub fn classify_matches(
    former: Option<Polarity>,
    latter: Option<Polarity>,
    relation: DiscourseRelation,
) -> PairClass {
    match (former, latter, relation) {
        (Some(_), _, _) => PairClass::Discarded,
        (None, Some(r_latter), DiscourseRelation::Cause) => PairClass::AL {
            r_former: r_latter,
            r_latter,
        },
        (None, Some(r_latter), DiscourseRelation::Concession) => PairClass::AL {
            r_former: -r_latter,
            r_latter,
        },
        (None, None, DiscourseRelation::Cause) => PairClass::CA,
        (None, None, DiscourseRelation::Concession) => PairClass::CO,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlPair {
    pub pair: EventPair,
    pub r_former: Polarity,
    pub r_latter: Polarity,
}

impl AlPair {
    /// Same sign for Cause, opposite for Concession.
    pub fn is_sign_consistent(&self) -> bool {
        match self.pair.relation {
            DiscourseRelation::Cause => self.r_former == self.r_latter,
            DiscourseRelation::Concession => self.r_former == -self.r_latter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledEvent {
    pub event: Event,
    pub score: Polarity,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetBundle {
    pub al: Vec<AlPair>,
    pub ca: Vec<EventPair>,
    pub co: Vec<EventPair>,
    pub supervised: Vec<LabeledEvent>,
}

impl DatasetBundle {
    /// Every event in the bundle, in storage order.
    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.al
            .iter()
            .flat_map(|a| [&a.pair.former, &a.pair.latter])
            .chain(self.ca.iter().flat_map(|p| [&p.former, &p.latter]))
            .chain(self.co.iter().flat_map(|p| [&p.former, &p.latter]))
            .chain(self.supervised.iter().map(|s| &s.event))
    }

    pub fn al_counts(&self) -> (usize, usize) {
        let pos = self
            .al
            .iter()
            .filter(|a| a.r_latter == Polarity::Positive)
            .count();
        (pos, self.al.len() - pos)
    }
}

#[derive(Debug, Clone)]
pub struct BalanceConfig {
    /// Upper bound on |AL| after balancing.
    pub max_al: Option<usize>,
    /// CA and CO are each sampled to `multiplier × |AL|`.
    pub multiplier: usize,
}

impl Default for BalanceConfig {
    fn default() -> Self {
        BalanceConfig {
            max_al: None,
            multiplier: 5,
        }
    }
}

/// Counts before and after balancing.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BuildStats {
    pub input_pairs: usize,
    pub discarded: usize,
    pub raw_al_positive: usize,
    pub raw_al_negative: usize,
    pub raw_ca: usize,
    pub raw_co: usize,
    pub al_positive: usize,
    pub al_negative: usize,
    pub ca: usize,
    pub co: usize,
    /// How many CA pairs short of `multiplier × |AL|` the corpus was.
    pub ca_shortfall: usize,
    pub co_shortfall: usize,
}

fn sample_in_order<T>(items: Vec<T>, k: usize, rng: &mut ChaCha8Rng) -> Vec<T> {
    if k >= items.len() {
        return items;
    }
    let mut keep = index::sample(rng, items.len(), k).into_vec();
    keep.sort_unstable();
    let mut keep = keep.into_iter().peekable();
    items
        .into_iter()
        .enumerate()
        .filter_map(|(i, item)| {
            if keep.peek() == Some(&i) {
                keep.next();
                Some(item)
            } else {
                None
            }
        })
        .collect()
}

/// Classifies the pairs and samples a balanced bundle.
///
/// AL is downsampled so positive and negative latter events are equally many;
/// CA and CO are then downsampled to `multiplier × |AL|` each, or kept whole
/// when the corpus has fewer (recorded as a shortfall). Sampling is uniform
/// without replacement and deterministic for a given `seed`; surviving pairs
/// keep their input order.
pub fn build_bundle<I>(
    pairs: I,
    lexicon: &SeedLexicon,
    balance: &BalanceConfig,
    seed: u64,
) -> Result<(DatasetBundle, BuildStats), DatasetError>
where
    I: IntoIterator<Item = EventPair>,
{
    let mut stats = BuildStats::default();
    let (mut al_pos, mut al_neg) = (Vec::new(), Vec::new());
    let (mut ca, mut co) = (Vec::new(), Vec::new());
    for (i, pair) in pairs.into_iter().enumerate() {
        stats.input_pairs += 1;
        match classify_pair(&pair, lexicon) {
            PairClass::AL { r_former, r_latter } => {
                let entry = (
                    i,
                    AlPair {
                        pair,
                        r_former,
                        r_latter,
                    },
                );
                match r_latter {
                    Polarity::Positive => al_pos.push(entry),
                    Polarity::Negative => al_neg.push(entry),
                }
            }
            PairClass::CA => ca.push(pair),
            PairClass::CO => co.push(pair),
            PairClass::Discarded => stats.discarded += 1,
        }
    }
    stats.raw_al_positive = al_pos.len();
    stats.raw_al_negative = al_neg.len();
    stats.raw_ca = ca.len();
    stats.raw_co = co.len();

    let mut per_side = al_pos.len().min(al_neg.len());
    if let Some(max) = balance.max_al {
        per_side = per_side.min(max / 2);
    }
    if per_side == 0 {
        return Err(DatasetError::EmptyAL);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut al = sample_in_order(al_pos, per_side, &mut rng);
    al.extend(sample_in_order(al_neg, per_side, &mut rng));
    al.sort_by_key(|(i, _)| *i);
    let al: Vec<AlPair> = al.into_iter().map(|(_, a)| a).collect();

    let target = balance.multiplier.saturating_mul(al.len());
    stats.ca_shortfall = target.saturating_sub(ca.len());
    stats.co_shortfall = target.saturating_sub(co.len());
    if stats.ca_shortfall > 0 || stats.co_shortfall > 0 {
        log::warn!(
            "CA/CO below {}x AL ({} wanted): CA short by {}, CO short by {}; keeping all",
            balance.multiplier,
            target,
            stats.ca_shortfall,
            stats.co_shortfall
        );
    }
    let ca = sample_in_order(ca, target, &mut rng);
    let co = sample_in_order(co, target, &mut rng);

    stats.al_positive = per_side;
    stats.al_negative = per_side;
    stats.ca = ca.len();
    stats.co = co.len();
    Ok((
        DatasetBundle {
            al,
            ca,
            co,
            supervised: Vec::new(),
        },
        stats,
    ))
}

/// JSON Lines record of a labeled event.
/// Draws `n` events, half from each class (the positive half gets the odd
/// one), uniformly without replacement; a class with too few events is kept
/// whole. Input order is preserved.
pub fn sample_per_class(events: Vec<LabeledEvent>, n: usize, seed: u64) -> Vec<LabeledEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (pos, neg): (Vec<_>, Vec<_>) = events
        .into_iter()
        .enumerate()
        .partition(|(_, e)| e.score == Polarity::Positive);
    let mut kept = sample_in_order(pos, n - n / 2, &mut rng);
    kept.extend(sample_in_order(neg, n / 2, &mut rng));
    kept.sort_by_key(|(i, _)| *i);
    kept.into_iter().map(|(_, e)| e).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRecord {
    pub tokens: Vec<String>,
    pub predicate_index: usize,
    pub score: Polarity,
}

impl From<&LabeledEvent> for LabeledRecord {
    fn from(l: &LabeledEvent) -> Self {
        LabeledRecord {
            tokens: l.event.tokens().to_vec(),
            predicate_index: l.event.predicate_index(),
            score: l.score,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum BundleRecord {
    Al {
        #[serde(flatten)]
        pair: PairRecord,
        r_former: Polarity,
        r_latter: Polarity,
    },
    Ca(PairRecord),
    Co(PairRecord),
    Sup(LabeledRecord),
}

fn parse_labeled(line: usize, value: &Value) -> Result<LabeledEvent, DatasetError> {
    let malformed = |reason: &str| DatasetError::MalformedRecord {
        line,
        reason: reason.to_owned(),
    };
    let obj = value
        .as_object()
        .ok_or_else(|| malformed("not a JSON object"))?;
    let tokens: Vec<String> = obj
        .get("tokens")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed("missing tokens array"))?
        .iter()
        .map(|t| t.as_str().map(str::to_owned))
        .collect::<Option<_>>()
        .ok_or_else(|| malformed("tokens must be strings"))?;
    let predicate_index = match obj.get("predicate_index") {
        None => tokens.len().saturating_sub(1),
        Some(v) => v
            .as_u64()
            .ok_or_else(|| malformed("predicate_index must be a non-negative integer"))?
            as usize,
    };
    let score_value = obj.get("score").ok_or_else(|| malformed("missing score"))?;
    let score = score_value
        .as_f64()
        .and_then(Polarity::from_f64)
        .ok_or_else(|| DatasetError::InvalidScore {
            line,
            value: score_value.to_string(),
        })?;
    let event = Event::new(tokens, predicate_index).map_err(|e| malformed(&e.to_string()))?;
    Ok(LabeledEvent { event, score })
}

/// Loads `{tokens, predicate_index, score}` records; `predicate_index` defaults to the last token.
pub fn load_labeled_events(path: &Path) -> Result<Vec<LabeledEvent>, DatasetError> {
    read_lines(path)?
        .into_iter()
        .map(|(line, text)| {
            let value: Value =
                serde_json::from_str(&text).map_err(|e| DatasetError::MalformedRecord {
                    line,
                    reason: e.to_string(),
                })?;
            parse_labeled(line, &value)
        })
        .collect()
}

pub fn write_labeled_events(w: &mut dyn Write, events: &[LabeledEvent]) -> io::Result<()> {
    for e in events {
        write_json_line(w, &LabeledRecord::from(e))?;
    }
    Ok(())
}

pub fn write_bundle(w: &mut dyn Write, bundle: &DatasetBundle) -> io::Result<()> {
    for a in &bundle.al {
        write_json_line(
            w,
            &BundleRecord::Al {
                pair: PairRecord::from(&a.pair),
                r_former: a.r_former,
                r_latter: a.r_latter,
            },
        )?;
    }
    for p in &bundle.ca {
        write_json_line(w, &BundleRecord::Ca(PairRecord::from(p)))?;
    }
    for p in &bundle.co {
        write_json_line(w, &BundleRecord::Co(PairRecord::from(p)))?;
    }
    for s in &bundle.supervised {
        write_json_line(w, &BundleRecord::Sup(LabeledRecord::from(s)))?;
    }
    Ok(())
}

pub fn read_bundle(path: &Path) -> Result<DatasetBundle, DatasetError> {
    let mut bundle = DatasetBundle::default();
    for (line, text) in read_lines(path)? {
        let malformed = |reason: String| DatasetError::MalformedRecord { line, reason };
        let value: Value = serde_json::from_str(&text).map_err(|e| malformed(e.to_string()))?;
        if value.get("type").and_then(Value::as_str) == Some("sup") {
            bundle.supervised.push(parse_labeled(line, &value)?);
            continue;
        }
        let record: BundleRecord =
            serde_json::from_value(value).map_err(|e| malformed(e.to_string()))?;
        let to_pair = |r: PairRecord| EventPair::try_from(r).map_err(|e| malformed(e.to_string()));
        match record {
            BundleRecord::Al {
                pair,
                r_former,
                r_latter,
            } => {
                let al = AlPair {
                    pair: to_pair(pair)?,
                    r_former,
                    r_latter,
                };
                if !al.is_sign_consistent() {
                    return Err(malformed(
                        "AL reference scores violate the relation's sign rule".into(),
                    ));
                }
                bundle.al.push(al);
            }
            BundleRecord::Ca(p) => {
                let pair = to_pair(p)?;
                if pair.relation != DiscourseRelation::Cause {
                    return Err(malformed("CA record must carry relation cause".into()));
                }
                bundle.ca.push(pair);
            }
            BundleRecord::Co(p) => {
                let pair = to_pair(p)?;
                if pair.relation != DiscourseRelation::Concession {
                    return Err(malformed("CO record must carry relation concession".into()));
                }
                bundle.co.push(pair);
            }
            BundleRecord::Sup(_) => unreachable!("handled above"),
        }
    }
    Ok(bundle)
}
