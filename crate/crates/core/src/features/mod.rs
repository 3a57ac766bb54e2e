//! Post feature vectors: eight categories concatenated in a fixed order.

mod embed;
mod handcrafted;
mod matrix;
mod words;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{preprocess, Branch, Post, PostRef, Submission};
use crate::error::{Error, Result};
use crate::resources::{PosTag, Resources};

pub use embed::{cosine, embed, mean_vector, EmbeddingContext};
pub use handcrafted::{
    capital_ratio, extract_lexicon, extract_reddit, extract_sentiment, extract_text, max_capital_run,
    NormalizationStats, RawHandcrafted, LEXICON_NAMES, NORMALISED_SLOTS, REDDIT_NAMES, TEXT_BINARY,
    TEXT_NAMES,
};
pub use matrix::{fingerprint, variance_select, Column, FeatureMatrix, SparseRow};
pub use words::{build_mfw, encode_pos, MfwLists, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Text,
    Lexicon,
    Sentiment,
    Reddit,
    Mfw,
    Bow,
    Pos,
    Embeddings,
}

impl Category {
    pub const ALL: [Category; 8] = [
        Category::Text,
        Category::Lexicon,
        Category::Sentiment,
        Category::Reddit,
        Category::Mfw,
        Category::Bow,
        Category::Pos,
        Category::Embeddings,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Text => "text",
            Category::Lexicon => "lexicon",
            Category::Sentiment => "sentiment",
            Category::Reddit => "reddit",
            Category::Mfw => "mfw",
            Category::Bow => "bow",
            Category::Pos => "pos",
            Category::Embeddings => "embeddings",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::config(format!("unknown feature category {s:?}")))
    }
}

fn default_mfw_size() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// Enabled categories; order is irrelevant, output order is always [`Category::ALL`].
    pub enabled: Vec<Category>,
    /// Drop columns whose training variance is not above this value.
    #[serde(default)]
    pub variance_threshold: Option<f64>,
    /// Words per class considered before the cross-class filter.
    #[serde(default = "default_mfw_size")]
    pub mfw_size: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig::all()
    }
}

impl FeatureConfig {
    pub fn all() -> Self {
        FeatureConfig { enabled: Category::ALL.to_vec(), variance_threshold: None, mfw_size: 100 }
    }

    pub fn only(categories: &[Category]) -> Self {
        FeatureConfig { enabled: categories.to_vec(), ..FeatureConfig::all() }
    }

    pub fn without(&self, categories: &[Category]) -> Self {
        let mut c = self.clone();
        c.enabled.retain(|x| !categories.contains(x));
        c
    }

    pub fn is_enabled(&self, c: Category) -> bool {
        self.enabled.contains(&c)
    }

    /// Enabled categories in output order.
    pub fn categories(&self) -> Vec<Category> {
        Category::ALL.into_iter().filter(|c| self.is_enabled(*c)).collect()
    }
}

/// A post together with the conversation it is read in.
///
/// `post` may be a synthetic variant of the post at `branch[position]`; context
/// features are always computed against the original conversation.
#[derive(Debug, Clone, Copy)]
pub struct PostContext<'a> {
    pub post: &'a Post,
    pub parent: Option<&'a Post>,
    pub submission: &'a Submission,
    pub branch: &'a Branch,
}

impl<'a> From<PostRef<'a>> for PostContext<'a> {
    fn from(r: PostRef<'a>) -> Self {
        PostContext { post: r.post(), parent: r.parent(), submission: r.submission, branch: r.branch }
    }
}

impl<'a> PostContext<'a> {
    /// Same context, different text.
    pub fn with_post(self, post: &'a Post) -> Self {
        PostContext { post, ..self }
    }

    pub fn source_tokens(&self) -> Vec<String> {
        preprocess(&format!("{}\n{}", self.submission.title, self.submission.text))
    }

    pub fn branch_tokens(&self) -> Vec<String> {
        self.branch.posts.iter().flat_map(|p| p.tokens.iter().cloned()).collect()
    }
}

/// Fitted feature layout: vocabulary, MFW lists, normalisation ranges and
/// the optional variance selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureExtractor {
    pub config: FeatureConfig,
    pub stats: NormalizationStats,
    pub vocabulary: Vocabulary,
    pub mfw: MfwLists,
    pub embedding_dim: usize,
    /// Column indices kept by variance selection, if any.
    pub selected: Option<Vec<usize>>,
}

impl FeatureExtractor {
    /// Fit on `stats_posts` (normalisation ranges) and `train` (vocabulary, MFW, variance).
    pub fn fit(
        stats_posts: &[PostContext<'_>],
        train: &[PostContext<'_>],
        config: &FeatureConfig,
        resources: &Resources,
    ) -> Result<Self> {
        if let Some(t) = config.variance_threshold {
            if t.is_nan() || t < 0.0 {
                return Err(Error::config(format!("variance threshold must be >= 0, got {t}")));
            }
        }
        let embedding_dim = if config.is_enabled(Category::Embeddings) {
            resources
                .vectors
                .as_ref()
                .ok_or_else(|| Error::config("embeddings enabled but no word-vector table is loaded"))?
                .dimension()
        } else {
            0
        };
        if config.is_enabled(Category::Pos) && resources.pos.is_none() {
            log::warn!("no POS sidecar loaded; the 17 POS features will be zero");
        }
        let raws: Vec<RawHandcrafted> = stats_posts
            .par_iter()
            .map(|c| RawHandcrafted::extract(c.post, resources))
            .collect();
        let stats = NormalizationStats::fit(&raws);
        let vocabulary = if config.is_enabled(Category::Bow) {
            Vocabulary::build(train.iter().map(|c| c.post.tokens.as_slice()))
        } else {
            Vocabulary::default()
        };
        let mfw = if config.is_enabled(Category::Mfw) {
            build_mfw(
                train.iter().map(|c| (c.post.tokens.as_slice(), c.post.sdqc_submission)),
                config.mfw_size,
            )
        } else {
            MfwLists::default()
        };
        let mut fx = FeatureExtractor {
            config: config.clone(),
            stats,
            vocabulary,
            mfw,
            embedding_dim,
            selected: None,
        };
        if let Some(t) = config.variance_threshold {
            let m = fx.extract_all(train, resources)?;
            fx.selected = Some(variance_select(&m, t));
        }
        Ok(fx)
    }

    /// Full column layout before variance selection.
    pub fn all_columns(&self) -> Vec<Column> {
        let mut cols = Vec::new();
        for cat in self.config.categories() {
            let mut push = |name: String| cols.push(Column::new(cat, name));
            match cat {
                Category::Text => TEXT_NAMES.iter().for_each(|n| push(n.to_string())),
                Category::Lexicon => LEXICON_NAMES.iter().for_each(|n| push(n.to_string())),
                Category::Sentiment => push("score".into()),
                Category::Reddit => REDDIT_NAMES.iter().for_each(|n| push(n.to_string())),
                Category::Mfw => self.mfw.columns().for_each(|(l, w)| push(format!("{}:{w}", l.short()))),
                Category::Bow => self.vocabulary.tokens().iter().for_each(|w| push(w.clone())),
                Category::Pos => PosTag::ALL.iter().for_each(|t| push(t.name().to_string())),
                Category::Embeddings => {
                    (0..self.embedding_dim).for_each(|i| push(format!("d{i}")));
                    ["cos_parent", "cos_source", "cos_branch"].iter().for_each(|n| push(n.to_string()));
                }
            }
        }
        cols
    }

    /// Output columns (after variance selection).
    pub fn columns(&self) -> Vec<Column> {
        let all = self.all_columns();
        match &self.selected {
            Some(keep) => keep.iter().map(|&i| all[i].clone()).collect(),
            None => all,
        }
    }

    pub fn dimension(&self) -> usize {
        match &self.selected {
            Some(keep) => keep.len(),
            None => self.full_dimension(),
        }
    }

    fn full_dimension(&self) -> usize {
        self.config
            .categories()
            .into_iter()
            .map(|c| match c {
                Category::Text => 13,
                Category::Lexicon => 4,
                Category::Sentiment => 1,
                Category::Reddit => 10,
                Category::Mfw => self.mfw.total(),
                Category::Bow => self.vocabulary.len(),
                Category::Pos => PosTag::ALL.len(),
                Category::Embeddings => self.embedding_dim + 3,
            })
            .sum()
    }

    /// Sparse full-layout row (before variance selection).
    fn extract_full(&self, ctx: &PostContext<'_>, resources: &Resources) -> Result<Vec<(u32, f64)>> {
        let mut raw = RawHandcrafted::extract(ctx.post, resources);
        raw.normalise(&self.stats);
        let mut out: Vec<(u32, f64)> = Vec::new();
        let mut offset = 0usize;
        let dense = |vals: &[f64], offset: &mut usize, out: &mut Vec<(u32, f64)>| {
            for (i, &v) in vals.iter().enumerate() {
                if v != 0.0 {
                    out.push(((*offset + i) as u32, v));
                }
            }
            *offset += vals.len();
        };
        let ones = |idx: Vec<usize>, width: usize, offset: &mut usize, out: &mut Vec<(u32, f64)>| {
            out.extend(idx.into_iter().map(|i| ((*offset + i) as u32, 1.0)));
            *offset += width;
        };
        for cat in self.config.categories() {
            match cat {
                Category::Text => dense(&raw.text, &mut offset, &mut out),
                Category::Lexicon => dense(&raw.lexicon, &mut offset, &mut out),
                Category::Sentiment => dense(&[raw.sentiment], &mut offset, &mut out),
                Category::Reddit => dense(&raw.reddit, &mut offset, &mut out),
                Category::Mfw => ones(self.mfw.encode(&ctx.post.tokens), self.mfw.total(), &mut offset, &mut out),
                Category::Bow => {
                    ones(self.vocabulary.encode(&ctx.post.tokens), self.vocabulary.len(), &mut offset, &mut out)
                }
                Category::Pos => ones(
                    encode_pos(resources.pos.as_ref(), &ctx.post.comment_id),
                    PosTag::ALL.len(),
                    &mut offset,
                    &mut out,
                ),
                Category::Embeddings => {
                    let table = resources
                        .vectors
                        .as_ref()
                        .ok_or_else(|| Error::config("embeddings enabled but no word-vector table is loaded"))?;
                    if table.dimension() != self.embedding_dim {
                        return Err(Error::Dimension { expected: self.embedding_dim, actual: table.dimension() });
                    }
                    let source = ctx.source_tokens();
                    let branch = ctx.branch_tokens();
                    let parent = ctx.parent.map_or(source.as_slice(), |p| p.tokens.as_slice());
                    let e = embed(
                        &ctx.post.tokens,
                        table,
                        EmbeddingContext { parent, source: &source, branch: &branch },
                    );
                    dense(&e, &mut offset, &mut out);
                }
            }
        }
        Ok(out)
    }

    /// Sparse row in output layout, column indices ascending.
    pub fn extract(&self, ctx: &PostContext<'_>, resources: &Resources) -> Result<Vec<(u32, f64)>> {
        let full = self.extract_full(ctx, resources)?;
        Ok(match &self.selected {
            None => full,
            Some(keep) => {
                let mut pos = vec![u32::MAX; self.full_dimension()];
                for (new, &old) in keep.iter().enumerate() {
                    pos[old] = new as u32;
                }
                full.into_iter()
                    .filter(|&(i, _)| pos[i as usize] != u32::MAX)
                    .map(|(i, v)| (pos[i as usize], v))
                    .collect()
            }
        })
    }

    /// Extract many posts in parallel; row order follows `posts`.
    pub fn extract_all(&self, posts: &[PostContext<'_>], resources: &Resources) -> Result<FeatureMatrix> {
        let rows: Vec<Vec<(u32, f64)>> =
            posts.par_iter().map(|c| self.extract(c, resources)).collect::<Result<_>>()?;
        let mut m = FeatureMatrix::new(self.columns());
        for r in &rows {
            m.push_sparse(r)?;
        }
        Ok(m)
    }

    pub fn fingerprint(&self) -> String {
        fingerprint(&self.columns())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Dataset, StanceLabel, UserInfo};
    use crate::resources::WordVectorTable;

    fn user() -> UserInfo {
        UserInfo {
            id: "u".into(),
            karma: 10,
            created: None,
            gold_status: false,
            is_employee: false,
            has_verified_email: true,
        }
    }

    fn post(id: &str, parent: &str, text: &str, t: i64, stance: StanceLabel) -> Post {
        Post {
            comment_id: id.into(),
            raw_text: text.into(),
            tokens: preprocess(text),
            created: t,
            parent_id: parent.into(),
            submission_id: "s".into(),
            upvotes: t,
            replies: 0,
            is_submitter: false,
            is_deleted: false,
            user: user(),
            sdqc_submission: stance,
            sdqc_parent: None,
        }
    }

    fn dataset() -> Dataset {
        use StanceLabel::*;
        let a = post("a", "t3_s", "Det passer ikke!", 1, Denying);
        let b = post("b", "t1_a", "Hvorfor siger du det?", 2, Querying);
        let c = post("c", "t3_s", "Ja det er rigtigt", 3, Supporting);
        Dataset::new(vec![Submission {
            submission_id: "s".into(),
            event: "e".into(),
            title: "Ulv set i byen".into(),
            text: String::new(),
            created: 0,
            num_comments: 3,
            is_rumour: true,
            veracity: None,
            rumour_note: String::new(),
            user: user(),
            branches: vec![Branch { posts: vec![a, b] }, Branch { posts: vec![c] }],
        }])
    }

    fn resources() -> Resources {
        let mut r = Resources::default();
        let mut t = WordVectorTable::new(2);
        t.insert("det", vec![1.0, 0.0]).unwrap();
        t.insert("ja", vec![0.0, 1.0]).unwrap();
        r.vectors = Some(t);
        r
    }

    #[test]
    fn dimension_is_sum_of_segments() {
        let ds = dataset();
        let ctx: Vec<PostContext> = ds.posts().into_iter().map(Into::into).collect();
        let r = resources();
        let fx = FeatureExtractor::fit(&ctx, &ctx, &FeatureConfig::all(), &r).unwrap();
        let vocab = fx.vocabulary.len();
        assert_eq!(fx.dimension(), 13 + 4 + 1 + 10 + fx.mfw.total() + vocab + 17 + 5);
        let m = fx.extract_all(&ctx, &r).unwrap();
        assert_eq!(m.n_rows(), 3);
        assert_eq!(m.n_cols(), fx.dimension());
        assert!(m.all_finite());

        let only = FeatureExtractor::fit(&ctx, &ctx, &FeatureConfig::only(&[Category::Embeddings]), &r).unwrap();
        assert_eq!(only.dimension(), 5);
    }

    #[test]
    fn embeddings_without_vectors_is_config_error() {
        let ds = dataset();
        let ctx: Vec<PostContext> = ds.posts().into_iter().map(Into::into).collect();
        let err = FeatureExtractor::fit(&ctx, &ctx, &FeatureConfig::all(), &Resources::default()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn disabling_keeps_remaining_order() {
        let ds = dataset();
        let ctx: Vec<PostContext> = ds.posts().into_iter().map(Into::into).collect();
        let r = resources();
        let full = FeatureExtractor::fit(&ctx, &ctx, &FeatureConfig::all(), &r).unwrap();
        let part = FeatureExtractor::fit(
            &ctx,
            &ctx,
            &FeatureConfig::all().without(&[Category::Lexicon, Category::Mfw]),
            &r,
        )
        .unwrap();
        let expect: Vec<Column> = full
            .columns()
            .into_iter()
            .filter(|c| c.category != Category::Lexicon && c.category != Category::Mfw)
            .collect();
        assert_eq!(part.columns(), expect);
    }

    #[test]
    fn reply_uses_parent_top_level_uses_source() {
        let ds = dataset();
        let posts = ds.posts();
        let b: PostContext = posts[1].into();
        assert_eq!(b.parent.unwrap().comment_id, "a");
        let a: PostContext = posts[0].into();
        assert!(a.parent.is_none());
        assert_eq!(a.source_tokens(), ["ulv", "set", "i", "byen"]);
    }

    #[test]
    fn variance_selection_is_applied_consistently() {
        let ds = dataset();
        let ctx: Vec<PostContext> = ds.posts().into_iter().map(Into::into).collect();
        let r = resources();
        let cfg = FeatureConfig { variance_threshold: Some(0.0), ..FeatureConfig::all() };
        let fx = FeatureExtractor::fit(&ctx, &ctx, &cfg, &r).unwrap();
        let m = fx.extract_all(&ctx, &r).unwrap();
        assert_eq!(m.n_cols(), fx.dimension());
        assert!(fx.dimension() < fx.all_columns().len());
        assert!(m.columns().iter().any(|c| c.category == Category::Embeddings));
    }

    #[test]
    fn config_round_trips() {
        let cfg = FeatureConfig::all().without(&[Category::Bow]);
        let json = serde_json::to_string(&cfg).unwrap();
        assert!(json.contains("\"text\""));
        let back: FeatureConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
        assert_eq!("MFW".parse::<Category>().unwrap(), Category::Mfw);
    }
}
