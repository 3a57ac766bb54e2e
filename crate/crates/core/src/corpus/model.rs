//! Conversation-tree data model: submissions, branches and annotated posts.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seconds since the Unix epoch (UTC).
pub type Timestamp = i64;

const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

pub fn parse_timestamp(s: &str) -> Result<Timestamp> {
    NaiveDateTime::parse_from_str(s.trim(), TIMESTAMP_FORMAT)
        .map(|dt| dt.and_utc().timestamp())
        .map_err(|_| Error::Timestamp(s.to_string()))
}

pub fn format_timestamp(ts: Timestamp) -> String {
    chrono::DateTime::from_timestamp(ts, 0)
        .map(|dt| dt.naive_utc().format(TIMESTAMP_FORMAT).to_string())
        .unwrap_or_default()
}

/// SDQC stance. The integer codes are part of every file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum StanceLabel {
    Supporting = 0,
    Denying = 1,
    Querying = 2,
    Commenting = 3,
}

impl StanceLabel {
    pub const ALL: [StanceLabel; 4] = [
        StanceLabel::Supporting,
        StanceLabel::Denying,
        StanceLabel::Querying,
        StanceLabel::Commenting,
    ];
    pub const COUNT: usize = 4;

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn short(self) -> char {
        match self {
            StanceLabel::Supporting => 'S',
            StanceLabel::Denying => 'D',
            StanceLabel::Querying => 'Q',
            StanceLabel::Commenting => 'C',
        }
    }

    /// Accepts the annotation tool's names ("Supporting", ...), single letters, or codes.
    pub fn parse_annotation(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Ok(code) = s.parse::<u8>() {
            return Self::from_code(code);
        }
        match s.to_ascii_lowercase().as_str() {
            "supporting" | "support" | "s" => Some(StanceLabel::Supporting),
            "denying" | "deny" | "d" => Some(StanceLabel::Denying),
            "querying" | "query" | "q" => Some(StanceLabel::Querying),
            "commenting" | "comment" | "c" => Some(StanceLabel::Commenting),
            _ => None,
        }
    }
}

impl From<StanceLabel> for u8 {
    fn from(l: StanceLabel) -> u8 {
        l.code()
    }
}

impl TryFrom<u8> for StanceLabel {
    type Error = String;
    fn try_from(code: u8) -> Result<Self, String> {
        StanceLabel::from_code(code).ok_or_else(|| format!("unknown stance code {code}"))
    }
}

impl fmt::Display for StanceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            StanceLabel::Supporting => "supporting",
            StanceLabel::Denying => "denying",
            StanceLabel::Querying => "querying",
            StanceLabel::Commenting => "commenting",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VeracityLabel {
    True,
    False,
    Unverified,
}

impl VeracityLabel {
    pub const ALL: [VeracityLabel; 3] =
        [VeracityLabel::True, VeracityLabel::False, VeracityLabel::Unverified];

    /// Tie-break precedence used by every veracity predictor: false, then true, then unverified.
    pub fn precedence(self) -> u8 {
        match self {
            VeracityLabel::False => 0,
            VeracityLabel::True => 1,
            VeracityLabel::Unverified => 2,
        }
    }
}

impl FromStr for VeracityLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "true" => Ok(VeracityLabel::True),
            "false" => Ok(VeracityLabel::False),
            "unverified" => Ok(VeracityLabel::Unverified),
            other => Err(Error::invalid(format!("unknown veracity label {other:?}"))),
        }
    }
}

impl fmt::Display for VeracityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VeracityLabel::True => "true",
            VeracityLabel::False => "false",
            VeracityLabel::Unverified => "unverified",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserInfo {
    pub id: String,
    pub karma: i64,
    /// Account creation time; `None` for deleted or suspended accounts.
    pub created: Option<Timestamp>,
    pub gold_status: bool,
    pub is_employee: bool,
    pub has_verified_email: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Post {
    pub comment_id: String,
    pub raw_text: String,
    pub tokens: Vec<String>,
    pub created: Timestamp,
    pub parent_id: String,
    pub submission_id: String,
    pub upvotes: i64,
    pub replies: i64,
    pub is_submitter: bool,
    pub is_deleted: bool,
    pub user: UserInfo,
    pub sdqc_submission: StanceLabel,
    /// Stance towards the parent post. Loaded for completeness; experiments use `sdqc_submission`.
    pub sdqc_parent: Option<StanceLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub posts: Vec<Post>,
}

impl Branch {
    pub fn first(&self) -> &Post {
        &self.posts[0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub submission_id: String,
    /// Event (topic) grouping; the name of the directory the file was loaded from.
    pub event: String,
    pub title: String,
    pub text: String,
    pub created: Timestamp,
    pub num_comments: i64,
    pub is_rumour: bool,
    pub veracity: Option<VeracityLabel>,
    pub rumour_note: String,
    pub user: UserInfo,
    pub branches: Vec<Branch>,
}

impl Submission {
    /// Unique posts in first-seen order (branch order, then position in branch).
    pub fn unique_posts(&self) -> Vec<(usize, usize)> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (b, branch) in self.branches.iter().enumerate() {
            for (p, post) in branch.posts.iter().enumerate() {
                if seen.insert(post.comment_id.as_str()) {
                    out.push((b, p));
                }
            }
        }
        out
    }

    /// Distinct top-level comments, i.e. conversations, in first-seen order.
    pub fn conversation_roots(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.branches
            .iter()
            .map(|b| b.first().comment_id.as_str())
            .filter(|id| seen.insert(*id))
            .collect()
    }

    pub fn post_by_id(&self, id: &str) -> Option<&Post> {
        let id = strip_kind_prefix(id);
        self.branches
            .iter()
            .flat_map(|b| b.posts.iter())
            .find(|p| p.comment_id == id)
    }
}

/// Reddit "fullnames" carry a kind prefix (`t1_` comment, `t3_` link).
pub fn strip_kind_prefix(id: &str) -> &str {
    match id.get(..3) {
        Some("t1_") | Some("t3_") => &id[3..],
        _ => id,
    }
}

/// A post in its conversation context.
#[derive(Debug, Clone, Copy)]
pub struct PostRef<'a> {
    pub submission: &'a Submission,
    pub branch: &'a Branch,
    pub position: usize,
}

impl<'a> PostRef<'a> {
    pub fn post(&self) -> &'a Post {
        &self.branch.posts[self.position]
    }

    /// The post replied to, or `None` when the parent is the submission itself.
    pub fn parent(&self) -> Option<&'a Post> {
        let post = self.post();
        let parent_id = strip_kind_prefix(&post.parent_id);
        if parent_id == strip_kind_prefix(&self.submission.submission_id) {
            return None;
        }
        self.branch.posts[..self.position]
            .iter()
            .rev()
            .find(|p| p.comment_id == parent_id)
            .or_else(|| self.submission.post_by_id(parent_id))
    }

    pub fn key(&self) -> PostKey {
        PostKey {
            submission_id: self.submission.submission_id.clone(),
            comment_id: self.post().comment_id.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PostKey {
    pub submission_id: String,
    pub comment_id: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub submissions: Vec<Submission>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub submissions: usize,
    pub conversations: usize,
    pub branches: usize,
    pub posts: usize,
    /// Counts indexed by stance code.
    pub stance_counts: [usize; 4],
}

impl Dataset {
    pub fn new(submissions: Vec<Submission>) -> Self {
        Dataset { submissions }
    }

    /// Every unique post with its context, in deterministic corpus order.
    pub fn posts(&self) -> Vec<PostRef<'_>> {
        self.submissions
            .iter()
            .flat_map(|s| {
                s.unique_posts().into_iter().map(move |(b, p)| PostRef {
                    submission: s,
                    branch: &s.branches[b],
                    position: p,
                })
            })
            .collect()
    }

    pub fn post_count(&self) -> usize {
        self.submissions.iter().map(|s| s.unique_posts().len()).sum()
    }

    pub fn branch_count(&self) -> usize {
        self.submissions.iter().map(|s| s.branches.len()).sum()
    }

    pub fn stats(&self) -> CorpusStats {
        let mut stance_counts = [0usize; 4];
        for p in self.posts() {
            stance_counts[p.post().sdqc_submission.index()] += 1;
        }
        CorpusStats {
            submissions: self.submissions.len(),
            conversations: self
                .submissions
                .iter()
                .map(|s| s.conversation_roots().len())
                .sum(),
            branches: self.branch_count(),
            posts: self.post_count(),
            stance_counts,
        }
    }

    /// Per-event statistics, keyed by event name.
    pub fn event_stats(&self) -> BTreeMap<String, CorpusStats> {
        let mut by_event: BTreeMap<String, Vec<Submission>> = BTreeMap::new();
        for s in &self.submissions {
            by_event.entry(s.event.clone()).or_default().push(s.clone());
        }
        by_event
            .into_iter()
            .map(|(event, subs)| (event, Dataset::new(subs).stats()))
            .collect()
    }

    pub fn rumour_subset(&self) -> Dataset {
        Dataset::new(
            self.submissions
                .iter()
                .filter(|s| s.is_rumour)
                .cloned()
                .collect(),
        )
    }

    pub fn veracity_counts(&self) -> BTreeMap<VeracityLabel, usize> {
        let mut out = BTreeMap::new();
        for s in self.submissions.iter().filter(|s| s.is_rumour) {
            if let Some(v) = s.veracity {
                *out.entry(v).or_insert(0) += 1;
            }
        }
        out
    }

    /// Copy of the dataset with every listed post's submission-target stance replaced.
    /// Posts missing from `stances` keep their label.
    pub fn with_stances(&self, stances: &HashMap<PostKey, StanceLabel>) -> Dataset {
        let mut out = self.clone();
        for s in &mut out.submissions {
            for b in &mut s.branches {
                for p in &mut b.posts {
                    let key = PostKey {
                        submission_id: s.submission_id.clone(),
                        comment_id: p.comment_id.clone(),
                    };
                    if let Some(&label) = stances.get(&key) {
                        p.sdqc_submission = label;
                    }
                }
            }
        }
        out
    }
}
