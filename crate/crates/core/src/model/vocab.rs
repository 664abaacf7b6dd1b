use std::collections::HashMap;

use crate::extraction::Event;

pub const UNK_ID: usize = 0;
pub const UNK_TOKEN: &str = "<unk>";

/// Dense token ids; id 0 is reserved for unknown tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary::from_tokens(Vec::<String>::new())
    }
}

impl Vocabulary {
    /// Builds a vocabulary from non-UNK tokens in id order (ids start at 1).
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut all = vec![UNK_TOKEN.to_owned()];
        let mut index = HashMap::new();
        index.insert(UNK_TOKEN.to_owned(), UNK_ID);
        for t in tokens {
            let t = t.into();
            if !index.contains_key(&t) {
                index.insert(t.clone(), all.len());
                all.push(t);
            }
        }
        Vocabulary { tokens: all, index }
    }

    /// Keeps tokens seen at least `min_frequency` times, most frequent first
    /// (ties broken lexicographically), at most `max_size` of them besides UNK.
    pub fn build<'a, I>(events: I, min_frequency: usize, max_size: usize) -> Self
    where
        I: IntoIterator<Item = &'a Event>,
    {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for event in events {
            for t in event.tokens() {
                if t != UNK_TOKEN {
                    *counts.entry(t.as_str()).or_default() += 1;
                }
            }
        }
        let mut ranked: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|&(_, c)| c >= min_frequency.max(1))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(max_size);
        Vocabulary::from_tokens(ranked.into_iter().map(|(t, _)| t))
    }

    /// Number of ids including UNK.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= 1
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    /// Token ids of a sequence; an empty sequence encodes as a lone UNK.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        if tokens.is_empty() {
            return vec![UNK_ID];
        }
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}
