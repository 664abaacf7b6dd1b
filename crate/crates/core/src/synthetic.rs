//! Synthetic propagation corpus with known latent polarities.
//!
//! Every "event word" carries a hidden ±1 polarity. Cause pairs join events of
//! the same polarity, Concession pairs events of opposite polarity, and a
//! configurable fraction of edges is flipped as label noise. A handful of
//! words form the seed lexicon; a disjoint set of anchor words is the only
//! vocabulary allowed next to a seed in a pair, so the remaining held-out words
//! can be learned only through CA/CO pairs. An optional negation marker
//! reverses an event's polarity.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::LabeledEvent;
use crate::extraction::{DiscourseRelation, Event, EventPair};
use crate::lexicon::{Polarity, SeedLexicon};

pub const NEGATION_MARKER: &str = "not";
pub const CAUSE_CONNECTIVE: &str = "because";
pub const CONCESSION_CONNECTIVE: &str = "but";

/// Connective table matching [`SyntheticCorpus::sentences`].
pub const CONNECTIVE_TABLE: &str = "# synthetic corpus connectives\n\
because\tcause\tlatter_first\n\
but\tconcession\tformer_first\n";

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub n_words: usize,
    pub seeds_per_sign: usize,
    /// Non-seed words that may appear as the former event of a seed pair.
    pub n_anchor_words: usize,
    /// Neutral filler tokens prefixed to every event; 0 disables them.
    pub n_context: usize,
    pub n_cause: usize,
    pub n_concession: usize,
    /// Probability that an edge violates its relation's sign rule.
    pub noise: f64,
    /// Probability that a pair's latter event is a seed word.
    pub seed_latter_rate: f64,
    /// Probability that an event carries the negation marker.
    pub negation_rate: f64,
    pub n_dev: usize,
    pub n_test: usize,
    pub n_probes: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_words: 200,
            seeds_per_sign: 3,
            n_anchor_words: 64,
            n_context: 20,
            n_cause: 5000,
            n_concession: 5000,
            noise: 0.05,
            seed_latter_rate: 0.2,
            negation_rate: 0.0,
            n_dev: 200,
            n_test: 500,
            n_probes: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub pairs: Vec<EventPair>,
    pub lexicon: SeedLexicon,
    pub word_polarity: BTreeMap<String, Polarity>,
    pub seed_words: Vec<String>,
    pub anchor_words: Vec<String>,
    /// Words that never share a pair with a seed word.
    pub held_out_words: Vec<String>,
    pub dev: Vec<LabeledEvent>,
    /// Events built only from held-out words.
    pub test: Vec<LabeledEvent>,
    /// `(event, negated event)` probes over non-seed words.
    pub probes: Vec<(Event, Event)>,
    n_context: usize,
}

struct Pools {
    positive: Vec<String>,
    negative: Vec<String>,
}

impl Pools {
    fn of(words: &[String], polarity: &BTreeMap<String, Polarity>) -> Self {
        let (positive, negative) = words
            .iter()
            .cloned()
            .partition(|w| polarity[w] == Polarity::Positive);
        Pools { positive, negative }
    }

    fn merged(a: &Pools, b: &Pools) -> Pools {
        Pools {
            positive: a.positive.iter().chain(&b.positive).cloned().collect(),
            negative: a.negative.iter().chain(&b.negative).cloned().collect(),
        }
    }

    fn pick(&self, sign: Polarity, rng: &mut ChaCha8Rng) -> &str {
        let pool = match sign {
            Polarity::Positive => &self.positive,
            Polarity::Negative => &self.negative,
        };
        pool.choose(rng).expect("word pool is non-empty")
    }
}

struct Generator<'a> {
    config: &'a SyntheticConfig,
    rng: ChaCha8Rng,
}

impl Generator<'_> {
    fn sign(&mut self) -> Polarity {
        if self.rng.gen_bool(0.5) {
            Polarity::Positive
        } else {
            Polarity::Negative
        }
    }

    fn build(&mut self, word: &str, negated: bool) -> Event {
        let mut tokens = Vec::with_capacity(3);
        if self.config.n_context > 0 {
            let c = self.rng.gen_range(0..self.config.n_context);
            tokens.push(format!("c{c:02}"));
        }
        tokens.push(word.to_owned());
        let predicate = tokens.len() - 1;
        if negated {
            tokens.push(NEGATION_MARKER.to_owned());
        }
        Event::new(tokens, predicate).expect("synthetic events are valid")
    }

    /// An event whose hidden polarity is `sign`.
    fn event(&mut self, sign: Polarity, pools: &Pools, negation_rate: f64) -> Event {
        let negated = negation_rate > 0.0 && self.rng.gen_bool(negation_rate);
        let word_sign = if negated { -sign } else { sign };
        let word = pools.pick(word_sign, &mut self.rng).to_owned();
        self.build(&word, negated)
    }
}

impl SyntheticCorpus {
    pub fn generate(config: &SyntheticConfig) -> Self {
        assert!(
            config.n_words >= 2 * config.seeds_per_sign + config.n_anchor_words + 2,
            "not enough words for seeds, anchors and held-out words"
        );
        let mut gen = Generator {
            config,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
        };
        let mut words: Vec<String> = (0..config.n_words).map(|i| format!("w{i:03}")).collect();
        words.shuffle(&mut gen.rng);
        let word_polarity: BTreeMap<String, Polarity> = words
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let p = if i % 2 == 0 {
                    Polarity::Positive
                } else {
                    Polarity::Negative
                };
                (w.clone(), p)
            })
            .collect();

        let n_seed = 2 * config.seeds_per_sign;
        let seed_words = words[..n_seed].to_vec();
        let anchor_words = words[n_seed..n_seed + config.n_anchor_words].to_vec();
        let held_out_words = words[n_seed + config.n_anchor_words..].to_vec();

        let mut lexicon = SeedLexicon::new().with_negation_markers([NEGATION_MARKER]);
        for w in &seed_words {
            lexicon
                .insert(w, word_polarity[w])
                .expect("each seed word has one polarity");
        }

        let seeds = Pools::of(&seed_words, &word_polarity);
        let anchors = Pools::of(&anchor_words, &word_polarity);
        let held = Pools::of(&held_out_words, &word_polarity);
        let non_seed = Pools::merged(&anchors, &held);
        let neg = config.negation_rate;

        let mut relations: Vec<DiscourseRelation> =
            std::iter::repeat_n(DiscourseRelation::Cause, config.n_cause)
                .chain(std::iter::repeat_n(
                    DiscourseRelation::Concession,
                    config.n_concession,
                ))
                .collect();
        relations.shuffle(&mut gen.rng);

        let mut pairs = Vec::with_capacity(relations.len());
        for relation in relations {
            let consistent = !gen.rng.gen_bool(config.noise);
            let same_sign = (relation == DiscourseRelation::Cause) == consistent;
            let latter_sign = gen.sign();
            let former_sign = if same_sign { latter_sign } else { -latter_sign };
            let (latter, former) = if gen.rng.gen_bool(config.seed_latter_rate) {
                let latter = gen.event(latter_sign, &seeds, neg);
                (latter, gen.event(former_sign, &anchors, neg))
            } else {
                let latter = gen.event(latter_sign, &non_seed, neg);
                (latter, gen.event(former_sign, &non_seed, neg))
            };
            pairs.push(EventPair {
                former,
                latter,
                relation,
            });
        }

        let labeled = |n: usize, pools: &Pools, gen: &mut Generator| -> Vec<LabeledEvent> {
            (0..n)
                .map(|_| {
                    let score = gen.sign();
                    LabeledEvent {
                        event: gen.event(score, pools, neg),
                        score,
                    }
                })
                .collect()
        };
        let dev = labeled(config.n_dev, &non_seed, &mut gen);
        let test = labeled(config.n_test, &held, &mut gen);

        let non_seed_words: Vec<String> = anchor_words
            .iter()
            .chain(&held_out_words)
            .cloned()
            .collect();
        let probes = (0..config.n_probes)
            .map(|_| {
                let w = non_seed_words.choose(&mut gen.rng).unwrap().clone();
                let plain = gen.build(&w, false);
                let mut tokens = plain.tokens().to_vec();
                tokens.push(NEGATION_MARKER.to_owned());
                let negated = Event::new(tokens, plain.predicate_index()).unwrap();
                (plain, negated)
            })
            .collect();

        SyntheticCorpus {
            pairs,
            lexicon,
            word_polarity,
            seed_words,
            anchor_words,
            held_out_words,
            dev,
            test,
            probes,
            n_context: config.n_context,
        }
    }

    /// Hidden polarity of an event: its word's polarity, reversed when negated.
    pub fn hidden_polarity(&self, event: &Event) -> Option<Polarity> {
        let word = event
            .tokens()
            .iter()
            .find_map(|t| self.word_polarity.get(t))?;
        Some(if self.lexicon.is_negated(event) {
            -*word
        } else {
            *word
        })
    }

    /// One sentence per pair, rendered so that [`CONNECTIVE_TABLE`] extracts the pair back.
    pub fn sentences(&self) -> Vec<String> {
        self.pairs
            .iter()
            .map(|p| match p.relation {
                DiscourseRelation::Cause => format!("{} {CAUSE_CONNECTIVE} {}", p.latter, p.former),
                DiscourseRelation::Concession => {
                    format!("{} {CONCESSION_CONNECTIVE} {}", p.former, p.latter)
                }
            })
            .collect()
    }

    /// Labeled non-seed events for supervised training, drawn like the dev set.
    pub fn supervised_sample(&self, n: usize, seed: u64) -> Vec<LabeledEvent> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let words: Vec<&String> = self
            .anchor_words
            .iter()
            .chain(&self.held_out_words)
            .collect();
        (0..n)
            .map(|_| {
                let w = words.choose(&mut rng).unwrap();
                let mut tokens = Vec::new();
                if self.n_context > 0 {
                    tokens.push(format!("c{:02}", rng.gen_range(0..self.n_context)));
                }
                tokens.push((*w).clone());
                let predicate = tokens.len() - 1;
                LabeledEvent {
                    event: Event::new(tokens, predicate).unwrap(),
                    score: self.word_polarity[*w],
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{classify_pair, PairClass};
    use crate::extraction::{extract_pairs, ConnectiveTable};

    fn small() -> SyntheticConfig {
        SyntheticConfig {
            n_cause: 300,
            n_concession: 300,
            negation_rate: 0.2,
            ..Default::default()
        }
    }

    #[test]
    fn sentences_extract_back_to_pairs() {
        let corpus = SyntheticCorpus::generate(&small());
        let table = ConnectiveTable::parse(CONNECTIVE_TABLE).unwrap();
        for (sentence, pair) in corpus.sentences().iter().zip(&corpus.pairs) {
            let tokens: Vec<String> = sentence.split_whitespace().map(String::from).collect();
            let extracted = extract_pairs(&tokens, &table);
            assert_eq!(extracted.len(), 1, "{sentence}");
            assert_eq!(extracted[0].former.tokens(), pair.former.tokens());
            assert_eq!(extracted[0].latter.tokens(), pair.latter.tokens());
            assert_eq!(extracted[0].relation, pair.relation);
        }
    }

    #[test]
    fn held_out_words_never_in_al_pairs() {
        let corpus = SyntheticCorpus::generate(&small());
        for pair in &corpus.pairs {
            if let PairClass::AL { .. } = classify_pair(pair, &corpus.lexicon) {
                for e in [&pair.former, &pair.latter] {
                    assert!(!corpus.held_out_words.iter().any(|w| e.tokens().contains(w)));
                }
            }
        }
        for t in &corpus.test {
            assert!(corpus
                .held_out_words
                .iter()
                .any(|w| t.event.tokens().contains(w)));
        }
    }

    #[test]
    fn edges_mostly_follow_relation() {
        let corpus = SyntheticCorpus::generate(&SyntheticConfig {
            n_cause: 2000,
            n_concession: 2000,
            negation_rate: 0.3,
            ..Default::default()
        });
        let consistent = corpus
            .pairs
            .iter()
            .filter(|p| {
                let a = corpus.hidden_polarity(&p.former).unwrap();
                let b = corpus.hidden_polarity(&p.latter).unwrap();
                (a == b) == (p.relation == DiscourseRelation::Cause)
            })
            .count() as f64
            / corpus.pairs.len() as f64;
        assert!((0.93..0.97).contains(&consistent), "{consistent}");
    }

    #[test]
    fn labels_match_hidden_polarity() {
        let corpus = SyntheticCorpus::generate(&small());
        for l in corpus.dev.iter().chain(&corpus.test) {
            assert_eq!(corpus.hidden_polarity(&l.event), Some(l.score));
        }
        for (plain, negated) in &corpus.probes {
            assert_eq!(
                corpus.hidden_polarity(plain).map(|p| -p),
                corpus.hidden_polarity(negated)
            );
        }
    }

    #[test]
    fn deterministic() {
        let a = SyntheticCorpus::generate(&small());
        let b = SyntheticCorpus::generate(&small());
        assert_eq!(a.pairs, b.pairs);
        assert_eq!(a.test, b.test);
    }
}
