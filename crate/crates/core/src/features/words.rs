//! Word-presence features: bag of words, most-frequent words per class, POS tags.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::StanceLabel;
use crate::resources::{PosSidecar, PosTag};

/// Unique training tokens in first-occurrence order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for Vocabulary {
    fn from(tokens: Vec<String>) -> Self {
        Vocabulary::build(std::iter::once(tokens.as_slice()))
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}

impl Vocabulary {
    pub fn build<'a, I, S>(docs: I) -> Self
    where
        I: IntoIterator<Item = &'a [S]>,
        S: AsRef<str> + 'a,
    {
        let mut v = Vocabulary::default();
        for doc in docs {
            for t in doc {
                let t = t.as_ref();
                if !v.index.contains_key(t) {
                    v.index.insert(t.to_string(), v.tokens.len());
                    v.tokens.push(t.to_string());
                }
            }
        }
        v
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Sorted indices of vocabulary words present in `tokens`.
    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        let set: BTreeSet<usize> = tokens.iter().filter_map(|t| self.index_of(t)).collect();
        set.into_iter().collect()
    }
}

/// Per-class most frequent words, after removing words shared by all four lists.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MfwLists {
    /// Indexed by stance code.
    pub lists: [Vec<String>; 4],
}

impl MfwLists {
    pub fn total(&self) -> usize {
        self.lists.iter().map(Vec::len).sum()
    }

    /// Feature names in encoding order (class lists concatenated in SDQC order).
    pub fn columns(&self) -> impl Iterator<Item = (StanceLabel, &str)> {
        StanceLabel::ALL
            .into_iter()
            .zip(&self.lists)
            .flat_map(|(l, words)| words.iter().map(move |w| (l, w.as_str())))
    }

    /// Positions of the concatenated list whose word occurs in `tokens`.
    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        let present: HashSet<&str> = tokens.iter().map(String::as_str).collect();
        self.columns()
            .enumerate()
            .filter(|(_, (_, w))| present.contains(w))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Top-`n` words per class by occurrence count (ties broken lexicographically), then every
/// word that is in all four lists is removed from each.
pub fn build_mfw<'a, I>(posts: I, n: usize) -> MfwLists
where
    I: IntoIterator<Item = (&'a [String], StanceLabel)>,
{
    let mut counts: [HashMap<&str, usize>; 4] = Default::default();
    for (tokens, label) in posts {
        for t in tokens {
            *counts[label.index()].entry(t.as_str()).or_default() += 1;
        }
    }
    let top: Vec<Vec<String>> = counts
        .iter()
        .map(|c| {
            let mut words: Vec<(&str, usize)> = c.iter().map(|(w, n)| (*w, *n)).collect();
            words.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
            words.into_iter().take(n).map(|(w, _)| w.to_string()).collect()
        })
        .collect();
    let shared: HashSet<&String> = top[0]
        .iter()
        .filter(|w| top[1..].iter().all(|l| l.contains(w)))
        .collect();
    let lists = std::array::from_fn(|i| {
        top[i].iter().filter(|w| !shared.contains(w)).cloned().collect()
    });
    MfwLists { lists }
}

/// Indices (into [`PosTag::ALL`]) of tags present for the post.
pub fn encode_pos(sidecar: Option<&PosSidecar>, comment_id: &str) -> Vec<usize> {
    sidecar
        .and_then(|s| s.tags(comment_id))
        .map(|tags| tags.iter().map(|t: &PosTag| t.index()).collect())
        .unwrap_or_default()
}
