//! External lexical resources consumed by feature extraction.
//!
//! Every loader is pure: the same bytes always produce the same structure.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn line_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Line {
        source_name: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// AFINN-style word scores. Lookups are case-insensitive.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SentimentLexicon {
    scores: HashMap<String, i32>,
}

impl SentimentLexicon {
    pub fn from_pairs<I: IntoIterator<Item = (String, i32)>>(pairs: I) -> Self {
        SentimentLexicon {
            scores: pairs.into_iter().map(|(w, s)| (w.to_lowercase(), s)).collect(),
        }
    }

    pub fn score(&self, word: &str) -> Option<i32> {
        self.scores
            .get(word)
            .or_else(|| self.scores.get(&word.to_lowercase()))
            .copied()
    }

    /// Sum of scores over `tokens`; unknown words contribute 0.
    pub fn score_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> i64 {
        tokens
            .iter()
            .filter_map(|t| self.score(t.as_ref()))
            .map(i64::from)
            .sum()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

pub fn parse_sentiment(text: &str, path: &Path) -> Result<SentimentLexicon> {
    let mut scores = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (word, score) = line
            .rsplit_once('\t')
            .ok_or_else(|| line_err(path, i + 1, "expected \"word<TAB>score\""))?;
        let score: i32 = score
            .trim()
            .parse()
            .map_err(|_| line_err(path, i + 1, format!("non-integer score {:?}", score.trim())))?;
        scores.insert(word.trim().to_lowercase(), score);
    }
    Ok(SentimentLexicon { scores })
}

pub fn load_sentiment(path: &Path) -> Result<SentimentLexicon> {
    parse_sentiment(&read(path)?, path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WordListKind {
    Negation,
    Swear,
    PositiveSmiley,
    NegativeSmiley,
}

impl WordListKind {
    pub const ALL: [WordListKind; 4] = [
        WordListKind::Negation,
        WordListKind::Swear,
        WordListKind::PositiveSmiley,
        WordListKind::NegativeSmiley,
    ];

    pub fn is_smiley(self) -> bool {
        matches!(self, WordListKind::PositiveSmiley | WordListKind::NegativeSmiley)
    }

    pub fn name(self) -> &'static str {
        match self {
            WordListKind::Negation => "negation",
            WordListKind::Swear => "swear",
            WordListKind::PositiveSmiley => "positive_smiley",
            WordListKind::NegativeSmiley => "negative_smiley",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordList {
    pub kind: WordListKind,
    pub entries: HashSet<String>,
}

impl WordList {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(kind: WordListKind, entries: I) -> Self {
        let entries = entries
            .into_iter()
            .map(|e| {
                let e: String = e.into();
                if kind.is_smiley() { e } else { e.to_lowercase() }
            })
            .collect();
        WordList { kind, entries }
    }

    pub fn empty(kind: WordListKind) -> Self {
        WordList { kind, entries: HashSet::new() }
    }

    pub fn contains(&self, s: &str) -> bool {
        self.entries.contains(s)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn parse_wordlist(text: &str, kind: WordListKind, path: &Path) -> Result<WordList> {
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let entry = line.trim();
        if entry.is_empty() {
            continue;
        }
        if entry.contains('\t') {
            return Err(line_err(path, i + 1, "word list entries may not contain tabs"));
        }
        entries.push(entry.to_string());
    }
    Ok(WordList::new(kind, entries))
}

pub fn load_wordlist(path: &Path, kind: WordListKind) -> Result<WordList> {
    parse_wordlist(&read(path)?, kind, path)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynonymDictionary {
    entries: HashMap<String, Vec<String>>,
}

impl SynonymDictionary {
    /// Builds a dictionary, dropping self-references and words left without synonyms.
    pub fn new<I: IntoIterator<Item = (String, Vec<String>)>>(entries: I) -> Self {
        let entries = entries
            .into_iter()
            .filter_map(|(w, syns)| {
                let w = w.to_lowercase();
                let syns: Vec<String> = syns
                    .into_iter()
                    .map(|s| s.trim().to_lowercase())
                    .filter(|s| !s.is_empty() && *s != w)
                    .collect();
                (!syns.is_empty()).then_some((w, syns))
            })
            .collect();
        SynonymDictionary { entries }
    }

    pub fn synonyms(&self, word: &str) -> Option<&[String]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn parse_synonyms(text: &str, path: &Path) -> Result<SynonymDictionary> {
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (word, syns) = line
            .split_once('\t')
            .ok_or_else(|| line_err(path, i + 1, "expected \"word<TAB>syn1,syn2,...\""))?;
        if word.trim().is_empty() || syns.trim().is_empty() {
            return Err(line_err(path, i + 1, "empty word or synonym list"));
        }
        entries.push((
            word.trim().to_string(),
            syns.split(',').map(str::to_string).collect(),
        ));
    }
    Ok(SynonymDictionary::new(entries))
}

pub fn load_synonyms(path: &Path) -> Result<SynonymDictionary> {
    parse_synonyms(&read(path)?, path)
}

/// Pretrained word vectors. Out-of-vocabulary lookups report absence.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVectorTable {
    dimension: usize,
    vectors: HashMap<String, Vec<f32>>,
}

impl WordVectorTable {
    pub fn new(dimension: usize) -> Self {
        WordVectorTable { dimension, vectors: HashMap::new() }
    }

    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f32>) -> Result<()> {
        let word = word.into();
        if vector.len() != self.dimension {
            return Err(Error::invalid(format!(
                "vector for {word:?} has {} values, expected {}",
                vector.len(),
                self.dimension
            )));
        }
        self.vectors.insert(word, vector);
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Parse the word2vec/fastText text format. When `keep` is given, only those words are stored
/// (rows are still validated).
pub fn parse_vectors(text: &str, path: &Path, keep: Option<&HashSet<String>>) -> Result<WordVectorTable> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).peekable();
    let mut dimension = None;
    if let Some((_, first)) = lines.peek() {
        let fields: Vec<&str> = first.split_whitespace().collect();
        if fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok()) {
            dimension = Some(fields[1].parse::<usize>().unwrap());
            lines.next();
        }
    }
    let mut table: Option<WordVectorTable> = dimension.map(WordVectorTable::new);
    for (i, line) in lines {
        let mut fields = line.split_whitespace();
        let word = fields.next().unwrap();
        let values: Vec<f32> = fields
            .map(|v| v.parse::<f32>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| line_err(path, i + 1, format!("non-numeric value in vector for {word:?}")))?;
        let t = table.get_or_insert_with(|| WordVectorTable::new(values.len()));
        if values.len() != t.dimension {
            return Err(line_err(
                path,
                i + 1,
                format!(
                    "dimension mismatch for word {word:?}: {} values, expected {}",
                    values.len(),
                    t.dimension
                ),
            ));
        }
        if keep.is_none_or(|k| k.contains(word)) {
            t.vectors.insert(word.to_string(), values);
        }
    }
    Ok(table.unwrap_or_else(|| WordVectorTable::new(dimension.unwrap_or(0))))
}

pub fn load_vectors(path: &Path) -> Result<WordVectorTable> {
    parse_vectors(&read(path)?, path, None)
}

pub fn load_vectors_filtered(path: &Path, keep: &HashSet<String>) -> Result<WordVectorTable> {
    parse_vectors(&read(path)?, path, Some(keep))
}

/// The 17-tag universal part-of-speech set, in feature order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PosTag {
    Adj,
    Adp,
    Adv,
    Aux,
    Conj,
    Det,
    Intj,
    Noun,
    Num,
    Part,
    Pron,
    Propn,
    Punct,
    Sconj,
    Sym,
    Verb,
    X,
}

impl PosTag {
    pub const ALL: [PosTag; 17] = [
        PosTag::Adj,
        PosTag::Adp,
        PosTag::Adv,
        PosTag::Aux,
        PosTag::Conj,
        PosTag::Det,
        PosTag::Intj,
        PosTag::Noun,
        PosTag::Num,
        PosTag::Part,
        PosTag::Pron,
        PosTag::Propn,
        PosTag::Punct,
        PosTag::Sconj,
        PosTag::Sym,
        PosTag::Verb,
        PosTag::X,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        const NAMES: [&str; 17] = [
            "ADJ", "ADP", "ADV", "AUX", "CONJ", "DET", "INTJ", "NOUN", "NUM", "PART", "PRON",
            "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
        ];
        NAMES[self.index()]
    }
}

impl FromStr for PosTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PosTag::ALL
            .iter()
            .copied()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown POS tag {s:?}")))
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-post POS tag sets, supplied by an external tagger.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PosSidecar {
    tags: HashMap<String, BTreeSet<PosTag>>,
}

impl PosSidecar {
    pub fn insert(&mut self, comment_id: impl Into<String>, tags: BTreeSet<PosTag>) {
        self.tags.insert(comment_id.into(), tags);
    }

    pub fn tags(&self, comment_id: &str) -> Option<&BTreeSet<PosTag>> {
        self.tags.get(comment_id)
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }
}

#[derive(Deserialize)]
struct RawPosLine {
    comment_id: String,
    tags: Vec<String>,
}

pub fn parse_pos_sidecar(text: &str, path: &Path) -> Result<PosSidecar> {
    let mut sidecar = PosSidecar::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawPosLine =
            serde_json::from_str(line).map_err(|e| line_err(path, i + 1, e.to_string()))?;
        let tags = raw
            .tags
            .iter()
            .map(|t| t.parse::<PosTag>())
            .collect::<Result<BTreeSet<_>>>()
            .map_err(|e| line_err(path, i + 1, e.to_string()))?;
        sidecar.insert(raw.comment_id, tags);
    }
    Ok(sidecar)
}

pub fn load_pos_sidecar(path: &Path) -> Result<PosSidecar> {
    parse_pos_sidecar(&read(path)?, path)
}

/// File locations for every resource. Missing optional entries disable the dependent features.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourcePaths {
    pub sentiment: Option<PathBuf>,
    pub negation: Option<PathBuf>,
    pub swear: Option<PathBuf>,
    pub positive_smileys: Option<PathBuf>,
    pub negative_smileys: Option<PathBuf>,
    pub synonyms: Option<PathBuf>,
    pub vectors: Option<PathBuf>,
    pub pos: Option<PathBuf>,
}

impl ResourcePaths {
    /// The conventional file names inside a resource directory (as shipped in `fixtures/`).
    pub fn in_dir(dir: &Path) -> Self {
        let opt = |name: &str| {
            let p = dir.join(name);
            p.exists().then_some(p)
        };
        ResourcePaths {
            sentiment: opt("afinn_da.tsv"),
            negation: opt("negation.txt"),
            swear: opt("swear.txt"),
            positive_smileys: opt("positive_smileys.txt"),
            negative_smileys: opt("negative_smileys.txt"),
            synonyms: opt("synonyms.tsv"),
            vectors: opt("vectors.vec"),
            pos: opt("pos.jsonl"),
        }
    }

    /// Resolve relative paths against `base`.
    pub fn resolved(&self, base: &Path) -> Self {
        let fix = |p: &Option<PathBuf>| p.as_ref().map(|p| if p.is_relative() { base.join(p) } else { p.clone() });
        ResourcePaths {
            sentiment: fix(&self.sentiment),
            negation: fix(&self.negation),
            swear: fix(&self.swear),
            positive_smileys: fix(&self.positive_smileys),
            negative_smileys: fix(&self.negative_smileys),
            synonyms: fix(&self.synonyms),
            vectors: fix(&self.vectors),
            pos: fix(&self.pos),
        }
    }
}

/// All loaded resources.
#[derive(Debug, Clone)]
pub struct Resources {
    pub sentiment: SentimentLexicon,
    pub negation: WordList,
    pub swear: WordList,
    pub positive_smileys: WordList,
    pub negative_smileys: WordList,
    pub synonyms: SynonymDictionary,
    pub vectors: Option<WordVectorTable>,
    pub pos: Option<PosSidecar>,
}

impl Default for Resources {
    fn default() -> Self {
        Resources {
            sentiment: SentimentLexicon::default(),
            negation: WordList::empty(WordListKind::Negation),
            swear: WordList::empty(WordListKind::Swear),
            positive_smileys: WordList::empty(WordListKind::PositiveSmiley),
            negative_smileys: WordList::empty(WordListKind::NegativeSmiley),
            synonyms: SynonymDictionary::default(),
            vectors: None,
            pos: None,
        }
    }
}

impl Resources {
    pub fn load(paths: &ResourcePaths) -> Result<Self> {
        Self::load_with_vocabulary(paths, None)
    }

    /// Like [`Resources::load`], but only keeps word vectors for words in `vocabulary`.
    pub fn load_with_vocabulary(paths: &ResourcePaths, vocabulary: Option<&HashSet<String>>) -> Result<Self> {
        let list = |p: &Option<PathBuf>, kind| match p {
            Some(p) => load_wordlist(p, kind),
            None => Ok(WordList::empty(kind)),
        };
        Ok(Resources {
            sentiment: paths.sentiment.as_deref().map(load_sentiment).transpose()?.unwrap_or_default(),
            negation: list(&paths.negation, WordListKind::Negation)?,
            swear: list(&paths.swear, WordListKind::Swear)?,
            positive_smileys: list(&paths.positive_smileys, WordListKind::PositiveSmiley)?,
            negative_smileys: list(&paths.negative_smileys, WordListKind::NegativeSmiley)?,
            synonyms: paths.synonyms.as_deref().map(load_synonyms).transpose()?.unwrap_or_default(),
            vectors: match (&paths.vectors, vocabulary) {
                (Some(p), Some(v)) => Some(load_vectors_filtered(p, v)?),
                (Some(p), None) => Some(load_vectors(p)?),
                (None, _) => None,
            },
            pos: paths.pos.as_deref().map(load_pos_sidecar).transpose()?,
        })
    }

    pub fn wordlist(&self, kind: WordListKind) -> &WordList {
        match kind {
            WordListKind::Negation => &self.negation,
            WordListKind::Swear => &self.swear,
            WordListKind::PositiveSmiley => &self.positive_smileys,
            WordListKind::NegativeSmiley => &self.negative_smileys,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("mem")
    }

    #[test]
    fn sentiment_lexicon() {
        let lex = parse_sentiment("god\t2\ndårlig\t-2\n", p()).unwrap();
        assert_eq!(lex.len(), 2);
        assert_eq!(lex.score("DÅRLIG"), Some(-2));
        assert!(parse_sentiment("", p()).unwrap().is_empty());
        let err = parse_sentiment("ok\tx", p()).unwrap_err().to_string();
        assert!(err.contains("line 1"), "{err}");
        let dup = parse_sentiment("a\t1\na\t3", p()).unwrap();
        assert_eq!(dup.score("a"), Some(3));
    }

    #[test]
    fn multiword_sentiment_entries() {
        let lex = parse_sentiment("ikke god\t-1\n", p()).unwrap();
        assert_eq!(lex.score("ikke god"), Some(-1));
    }

    #[test]
    fn vectors_with_and_without_header() {
        let t = parse_vectors("2 3\nen 1 2 3\nto 4 5 6\n", p(), None).unwrap();
        assert_eq!(t.dimension(), 3);
        assert_eq!(t.get("to"), Some(&[4.0f32, 5.0, 6.0][..]));
        assert_eq!(t.get("tre"), None);
        let t = parse_vectors("en 1 2\n", p(), None).unwrap();
        assert_eq!(t.dimension(), 2);
        let err = parse_vectors("2 3\nen 1 2 3\nto 4 5\n", p(), None).unwrap_err().to_string();
        assert!(err.contains("\"to\""), "{err}");
    }

    #[test]
    fn short_row_in_300_dim_file_is_rejected() {
        let good: Vec<String> = (0..300).map(|i| i.to_string()).collect();
        let bad: Vec<String> = (0..299).map(|i| i.to_string()).collect();
        let text = format!("a {}\nb {}\n", good.join(" "), bad.join(" "));
        assert!(parse_vectors(&text, p(), None).is_err());
    }

    #[test]
    fn wordlists_and_synonyms() {
        let text: String = (0..10).map(|i| format!("ord{i}\n")).collect();
        assert_eq!(parse_wordlist(&text, WordListKind::Negation, p()).unwrap().len(), 10);
        let smileys = parse_wordlist(":D\n:)\n", WordListKind::PositiveSmiley, p()).unwrap();
        assert!(smileys.contains(":D"));
        let syn = parse_synonyms("stor\tkæmpe,enorm,stor\n", p()).unwrap();
        assert_eq!(syn.synonyms("stor").unwrap(), ["kæmpe", "enorm"]);
        assert!(parse_synonyms("stor kæmpe\n", p()).is_err());
    }

    #[test]
    fn pos_sidecar_rejects_unknown_tags() {
        let ok = parse_pos_sidecar(r#"{"comment_id":"a","tags":["NOUN","VERB"]}"#, p()).unwrap();
        assert_eq!(ok.tags("a").unwrap().len(), 2);
        let err = parse_pos_sidecar(r#"{"comment_id":"a","tags":["XYZ"]}"#, p()).unwrap_err();
        assert!(err.to_string().contains("unknown POS tag"), "{err}");
    }
}
