//! Text, lexicon, sentiment and Reddit-specific features.
//!
//! Each extractor returns raw values; [`NormalizationStats`] min-max scales the
//! non-binary ones into [0, 1].

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::{is_quote_line, Post, URL_RE};
use crate::resources::{Resources, SentimentLexicon, WordListKind};

pub const TEXT_NAMES: [&str; 13] = [
    "has_period",
    "has_exclamation",
    "has_question_or_hv",
    "has_ellipsis",
    "raw_length",
    "url_count",
    "max_capital_run",
    "ellipsis_count",
    "question_count",
    "exclamation_count",
    "word_count",
    "capital_ratio",
    "avg_word_length",
];
/// Text features 4.. are discrete or continuous and get normalised.
pub const TEXT_BINARY: usize = 4;

pub const LEXICON_NAMES: [&str; 4] = ["negation", "swear", "positive_smiley", "negative_smiley"];

pub const REDDIT_NAMES: [&str; 10] = [
    "karma",
    "gold_status",
    "is_employee",
    "verified_email",
    "is_submitter",
    "sarcasm",
    "edited",
    "quote_count",
    "reply_count",
    "upvotes",
];
pub const REDDIT_NORMALISED: [usize; 4] = [0, 7, 8, 9];

static SARCASM_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?:^|\W)/s\b").unwrap());

fn without_urls(raw: &str) -> String {
    URL_RE.replace_all(raw, " ").into_owned()
}

/// Longest run of consecutive uppercase letters.
pub fn max_capital_run(raw: &str) -> usize {
    let mut best = 0;
    let mut run = 0;
    for c in raw.chars() {
        if c.is_uppercase() {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}

/// Uppercase letters divided by lowercase letters (denominator at least 1).
pub fn capital_ratio(raw: &str) -> f64 {
    let upper = raw.chars().filter(|c| c.is_uppercase()).count();
    let lower = raw.chars().filter(|c| c.is_lowercase()).count();
    upper as f64 / lower.max(1) as f64
}

pub fn extract_text(raw: &str, tokens: &[String]) -> [f64; 13] {
    let b = |x: bool| if x { 1.0 } else { 0.0 };
    let ellipses = raw.matches("...").count() + raw.matches('…').count();
    let questions = raw.matches('?').count();
    let exclamations = raw.matches('!').count();
    let hv_word = tokens.iter().any(|t| t.starts_with("hv"));
    let avg_len = if tokens.is_empty() {
        0.0
    } else {
        tokens.iter().map(|t| t.chars().count()).sum::<usize>() as f64 / tokens.len() as f64
    };
    [
        b(raw.contains('.')),
        b(exclamations > 0),
        b(questions > 0 || hv_word),
        b(ellipses > 0),
        raw.chars().count() as f64,
        URL_RE.find_iter(raw).count() as f64,
        max_capital_run(raw) as f64,
        ellipses as f64,
        questions as f64,
        exclamations as f64,
        tokens.len() as f64,
        capital_ratio(raw),
        avg_len,
    ]
}

/// Word lists are matched against tokens; smileys against whitespace-separated raw words
/// (tokenisation strips them).
pub fn extract_lexicon(raw: &str, tokens: &[String], resources: &Resources) -> [f64; 4] {
    let stripped = without_urls(raw);
    let raw_words: Vec<&str> = stripped.split_whitespace().collect();
    let mut out = [0.0; 4];
    for (slot, kind) in out.iter_mut().zip(WordListKind::ALL) {
        let list = resources.wordlist(kind);
        *slot = if kind.is_smiley() {
            raw_words.iter().filter(|w| list.contains(w)).count() as f64
        } else {
            tokens.iter().filter(|t| list.contains(t)).count() as f64
        };
    }
    out
}

pub fn extract_sentiment(tokens: &[String], lexicon: &SentimentLexicon) -> f64 {
    lexicon.score_tokens(tokens) as f64
}

pub fn extract_reddit(post: &Post) -> [f64; 10] {
    let b = |x: bool| if x { 1.0 } else { 0.0 };
    let stripped = without_urls(&post.raw_text);
    let quotes = post.raw_text.lines().filter(|l| is_quote_line(l)).count();
    [
        post.user.karma as f64,
        b(post.user.gold_status),
        b(post.user.is_employee),
        b(post.user.has_verified_email),
        b(post.is_submitter),
        b(SARCASM_RE.is_match(&stripped)),
        b(post.raw_text.to_lowercase().contains("edit:")),
        quotes as f64,
        post.replies as f64,
        post.upvotes as f64,
    ]
}

/// All non-binary hand-crafted values of one post, in normalisation-slot order:
/// text[4..13], lexicon[0..4], sentiment, reddit[karma, quotes, replies, upvotes].
pub const NORMALISED_SLOTS: usize = 9 + 4 + 1 + 4;

#[derive(Debug, Clone, PartialEq)]
pub struct RawHandcrafted {
    pub text: [f64; 13],
    pub lexicon: [f64; 4],
    pub sentiment: f64,
    pub reddit: [f64; 10],
}

impl RawHandcrafted {
    pub fn extract(post: &Post, resources: &Resources) -> Self {
        RawHandcrafted {
            text: extract_text(&post.raw_text, &post.tokens),
            lexicon: extract_lexicon(&post.raw_text, &post.tokens, resources),
            sentiment: extract_sentiment(&post.tokens, &resources.sentiment),
            reddit: extract_reddit(post),
        }
    }

    fn slots(&self) -> [f64; NORMALISED_SLOTS] {
        let mut out = [0.0; NORMALISED_SLOTS];
        out[..9].copy_from_slice(&self.text[TEXT_BINARY..]);
        out[9..13].copy_from_slice(&self.lexicon);
        out[13] = self.sentiment;
        for (k, &i) in REDDIT_NORMALISED.iter().enumerate() {
            out[14 + k] = self.reddit[i];
        }
        out
    }

    /// Apply min-max scaling in place.
    pub fn normalise(&mut self, stats: &NormalizationStats) {
        for i in TEXT_BINARY..13 {
            self.text[i] = stats.scale(i - TEXT_BINARY, self.text[i]);
        }
        for i in 0..4 {
            self.lexicon[i] = stats.scale(9 + i, self.lexicon[i]);
        }
        self.sentiment = stats.scale(13, self.sentiment);
        for (k, &i) in REDDIT_NORMALISED.iter().enumerate() {
            self.reddit[i] = stats.scale(14 + k, self.reddit[i]);
        }
    }
}

/// Per-slot (min, max) of the non-binary hand-crafted features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub ranges: Vec<(f64, f64)>,
}

impl Default for NormalizationStats {
    fn default() -> Self {
        NormalizationStats { ranges: vec![(0.0, 0.0); NORMALISED_SLOTS] }
    }
}

impl NormalizationStats {
    pub fn fit<'a, I: IntoIterator<Item = &'a RawHandcrafted>>(raws: I) -> Self {
        let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); NORMALISED_SLOTS];
        let mut any = false;
        for r in raws {
            any = true;
            for (range, v) in ranges.iter_mut().zip(r.slots()) {
                range.0 = range.0.min(v);
                range.1 = range.1.max(v);
            }
        }
        if !any {
            return Self::default();
        }
        NormalizationStats { ranges }
    }

    /// `(x - min) / (max - min)` clamped to [0, 1]; a degenerate range maps to 0.
    pub fn scale(&self, slot: usize, x: f64) -> f64 {
        let (lo, hi) = self.ranges[slot];
        if hi <= lo {
            return 0.0;
        }
        ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
    }
}
