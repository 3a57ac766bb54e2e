//! Loader for the annotated DAST JSON files.
//!
//! One file holds one submission:
//!
//! ```text
//! { "redditSubmission": { ..., "IsRumour": bool, "TruthStatus": "True"|"False"|"Unverified" },
//!   "branches": [ [ {"comment": {post}} | {post}, ... ], ... ] }
//! ```
//!
//! Deleted posts end their branch; posts without an `SDQC_Submission` annotation are dropped.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use super::model::*;
use super::preprocess::preprocess;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Keep posts lacking a stance annotation, labelled `Commenting` as a placeholder.
    /// Used when labels are going to be predicted anyway.
    pub keep_unannotated: bool,
}

#[derive(Deserialize)]
struct RawUser {
    #[serde(default)]
    id: Option<String>,
    #[serde(default)]
    karma: Option<i64>,
    #[serde(default)]
    created: Option<String>,
    #[serde(default)]
    gold_status: Option<bool>,
    #[serde(default)]
    is_employee: Option<bool>,
    #[serde(default)]
    has_verified_email: Option<bool>,
}

#[derive(Deserialize)]
struct RawSubmission {
    submission_id: String,
    title: String,
    #[serde(default)]
    text: Option<String>,
    created: String,
    #[serde(default)]
    num_comments: i64,
    user: RawUser,
    #[serde(rename = "IsRumour", alias = "is_rumour", default)]
    is_rumour: bool,
    #[serde(rename = "TruthStatus", alias = "truth_status", default)]
    truth_status: Option<String>,
    #[serde(rename = "RumourDescription", alias = "rumour_description", default)]
    rumour_description: Option<String>,
}

#[derive(Deserialize)]
struct RawPost {
    comment_id: String,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    parent_id: String,
    #[serde(default)]
    submission_id: Option<String>,
    created: String,
    #[serde(default)]
    upvotes: i64,
    #[serde(default)]
    replies: i64,
    #[serde(default)]
    is_submitter: bool,
    #[serde(default)]
    is_deleted: bool,
    user: RawUser,
    #[serde(rename = "SDQC_Submission", default)]
    sdqc_submission: Option<Value>,
    #[serde(rename = "SDQC_Parent", default)]
    sdqc_parent: Option<Value>,
}

fn parse_at<T: DeserializeOwned>(value: &Value, source: &str, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner == "." {
            prefix.to_string()
        } else {
            format!("{prefix}.{inner}")
        };
        Error::Schema {
            source_name: source.to_string(),
            path,
            message: e.into_inner().to_string(),
        }
    })
}

fn timestamp_at(s: &str, source: &str, path: &str) -> Result<Timestamp> {
    parse_timestamp(s).map_err(|e| Error::Schema {
        source_name: source.to_string(),
        path: path.to_string(),
        message: e.to_string(),
    })
}

fn user_from(raw: RawUser, source: &str, path: &str) -> Result<UserInfo> {
    let created = match raw.created.as_deref() {
        Some(s) if !s.trim().is_empty() => Some(timestamp_at(s, source, &format!("{path}.created"))?),
        _ => None,
    };
    Ok(UserInfo {
        id: raw.id.unwrap_or_default(),
        karma: raw.karma.unwrap_or(0),
        created,
        gold_status: raw.gold_status.unwrap_or(false),
        is_employee: raw.is_employee.unwrap_or(false),
        has_verified_email: raw.has_verified_email.unwrap_or(false),
    })
}

/// Reads a stance annotation. `Ok(None)` means "not annotated".
fn stance_at(value: Option<&Value>, source: &str, path: &str) -> Result<Option<StanceLabel>> {
    let text = match value {
        None | Some(Value::Null) => return Ok(None),
        Some(Value::String(s)) if s.trim().is_empty() => return Ok(None),
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        Some(other) => other.to_string(),
    };
    StanceLabel::parse_annotation(&text)
        .map(Some)
        .ok_or_else(|| Error::Schema {
            source_name: source.to_string(),
            path: path.to_string(),
            message: format!("unknown SDQC label {text:?}"),
        })
}

/// Parse one annotated submission document.
pub fn load_submission(json: &str, source: &str, event: &str) -> Result<Submission> {
    load_submission_with(json, source, event, LoadOptions::default())
}

pub fn load_submission_with(
    json: &str,
    source: &str,
    event: &str,
    opts: LoadOptions,
) -> Result<Submission> {
    let doc: Value = serde_json::from_str(json).map_err(|e| Error::Schema {
        source_name: source.to_string(),
        path: ".".into(),
        message: e.to_string(),
    })?;
    let missing = |field: &str| Error::Schema {
        source_name: source.to_string(),
        path: field.to_string(),
        message: format!("missing field `{field}`"),
    };
    let sub_value = doc.get("redditSubmission").ok_or_else(|| missing("redditSubmission"))?;
    let raw: RawSubmission = parse_at(sub_value, source, "redditSubmission")?;
    let created = timestamp_at(&raw.created, source, "redditSubmission.created")?;
    let veracity = if raw.is_rumour {
        let status = raw.truth_status.as_deref().unwrap_or("");
        Some(status.parse::<VeracityLabel>().map_err(|_| Error::Schema {
            source_name: source.to_string(),
            path: "redditSubmission.TruthStatus".into(),
            message: format!("rumour submission needs a truth status, got {status:?}"),
        })?)
    } else {
        None
    };
    let submission_id = strip_kind_prefix(&raw.submission_id).to_string();

    let raw_branches = doc
        .get("branches")
        .and_then(Value::as_array)
        .ok_or_else(|| missing("branches"))?;
    let mut branches = Vec::with_capacity(raw_branches.len());
    for (bi, raw_branch) in raw_branches.iter().enumerate() {
        let entries = raw_branch.as_array().ok_or_else(|| Error::Schema {
            source_name: source.to_string(),
            path: format!("branches[{bi}]"),
            message: "expected an array of posts".into(),
        })?;
        let mut posts: Vec<Post> = Vec::with_capacity(entries.len());
        let mut seen = HashSet::new();
        for (pi, entry) in entries.iter().enumerate() {
            let (value, path) = match entry.get("comment") {
                Some(inner) => (inner, format!("branches[{bi}][{pi}].comment")),
                None => (entry, format!("branches[{bi}][{pi}]")),
            };
            if value.get("is_deleted").and_then(Value::as_bool) == Some(true) {
                break;
            }
            let rp: RawPost = parse_at(value, source, &path)?;
            let stance = stance_at(rp.sdqc_submission.as_ref(), source, &format!("{path}.SDQC_Submission"))?;
            let sdqc_submission = match (stance, opts.keep_unannotated) {
                (Some(s), _) => s,
                (None, true) => StanceLabel::Commenting,
                (None, false) => continue,
            };
            let sdqc_parent = stance_at(rp.sdqc_parent.as_ref(), source, &format!("{path}.SDQC_Parent"))?;
            let comment_id = strip_kind_prefix(&rp.comment_id).to_string();
            if !seen.insert(comment_id.clone()) {
                log::warn!("{source}: duplicate comment {comment_id} in branch {bi}, skipped");
                continue;
            }
            let raw_text = rp.text.unwrap_or_default();
            posts.push(Post {
                tokens: preprocess(&raw_text),
                raw_text,
                created: timestamp_at(&rp.created, source, &format!("{path}.created"))?,
                parent_id: strip_kind_prefix(&rp.parent_id).to_string(),
                submission_id: rp
                    .submission_id
                    .map(|s| strip_kind_prefix(&s).to_string())
                    .unwrap_or_else(|| submission_id.clone()),
                upvotes: rp.upvotes,
                replies: rp.replies,
                is_submitter: rp.is_submitter,
                is_deleted: rp.is_deleted,
                user: user_from(rp.user, source, &format!("{path}.user"))?,
                sdqc_submission,
                sdqc_parent,
                comment_id,
            });
        }
        if !posts.is_empty() {
            posts.sort_by_key(|p| p.created);
            branches.push(Branch { posts });
        }
    }
    branches.sort_by_key(|b| b.first().created);

    Ok(Submission {
        submission_id,
        event: event.to_string(),
        title: raw.title,
        text: raw.text.unwrap_or_default(),
        created,
        num_comments: raw.num_comments,
        is_rumour: raw.is_rumour,
        veracity,
        rumour_note: raw.rumour_description.unwrap_or_default(),
        user: user_from(raw.user, source, "redditSubmission.user")?,
        branches,
    })
}

pub fn load_submission_file(path: &Path, event: &str, opts: LoadOptions) -> Result<Submission> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_submission_with(&text, &path.display().to_string(), event, opts)
}

/// All `*.json` files under `dir`, sorted by path.
fn json_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).map_err(|e| Error::io(&d, e))? {
            let path = entry.map_err(|e| Error::io(&d, e))?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "json") {
                out.push(path);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Load a corpus directory laid out as `<dir>/<event>/<submission>.json`.
/// Files directly under `dir` get their file stem as event name.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let files = json_files(dir)?;
    if files.is_empty() {
        return Err(Error::invalid(format!("no .json files under {}", dir.display())));
    }
    let mut submissions = Vec::with_capacity(files.len());
    for f in files {
        let parent = f.parent().unwrap_or(dir);
        let event = if parent == dir {
            f.file_stem().unwrap_or_default().to_string_lossy().into_owned()
        } else {
            parent.file_name().unwrap_or_default().to_string_lossy().into_owned()
        };
        submissions.push(load_submission_file(&f, &event, LoadOptions::default())?);
    }
    Ok(Dataset::new(submissions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn user() -> Value {
        json!({"id": "u1", "karma": 10, "created": "2015-01-01 00:00:00",
               "gold_status": false, "is_employee": false, "has_verified_email": true})
    }

    fn post(id: &str, created: &str, deleted: bool, sdqc: Option<&str>) -> Value {
        let mut p = json!({
            "comment_id": id, "text": format!("tekst {id}"), "parent_id": "t3_sub",
            "submission_id": "t3_sub", "created": created, "upvotes": 1, "replies": 0,
            "is_submitter": false, "is_deleted": deleted, "user": user(),
        });
        if let Some(s) = sdqc {
            p["SDQC_Submission"] = json!(s);
            p["SDQC_Parent"] = json!(s);
        }
        json!({ "comment": p })
    }

    fn doc(branches: Value) -> String {
        json!({
            "redditSubmission": {
                "submission_id": "sub", "title": "Titel", "text": "", "created": "2019-03-04 13:17:12",
                "num_comments": 3, "user": user(), "IsRumour": true, "TruthStatus": "Unverified",
            },
            "branches": branches,
        })
        .to_string()
    }

    #[test]
    fn deleted_post_truncates_branch() {
        let d = doc(json!([[
            post("a", "2019-03-04 14:00:00", false, Some("Supporting")),
            post("b", "2019-03-04 14:01:00", true, Some("Commenting")),
            post("c", "2019-03-04 14:02:00", false, Some("Denying")),
        ]]));
        let s = load_submission(&d, "t", "ev").unwrap();
        assert_eq!(s.branches.len(), 1);
        let ids: Vec<_> = s.branches[0].posts.iter().map(|p| p.comment_id.as_str()).collect();
        assert_eq!(ids, ["a"]);
        assert_eq!(s.veracity, Some(VeracityLabel::Unverified));
    }

    #[test]
    fn unannotated_posts_are_dropped_and_branches_sorted() {
        let d = doc(json!([[
            post("b", "2019-03-04 14:05:00", false, Some("Querying")),
            post("x", "2019-03-04 14:06:00", false, None),
            post("a", "2019-03-04 14:01:00", false, Some("Commenting")),
        ]]));
        let s = load_submission(&d, "t", "ev").unwrap();
        let ids: Vec<_> = s.branches[0].posts.iter().map(|p| p.comment_id.as_str()).collect();
        assert_eq!(ids, ["a", "b"]);

        let kept = load_submission_with(&d, "t", "ev", LoadOptions { keep_unannotated: true }).unwrap();
        assert_eq!(kept.branches[0].posts.len(), 3);
    }

    #[test]
    fn missing_comment_id_names_the_field() {
        let mut p = post("a", "2019-03-04 14:00:00", false, Some("Supporting"));
        p["comment"].as_object_mut().unwrap().remove("comment_id");
        let err = load_submission(&doc(json!([[p]])), "t", "ev").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("comment_id"), "{msg}");
        assert!(msg.contains("branches[0][0]"), "{msg}");
    }

    #[test]
    fn bad_timestamp_is_a_parse_error() {
        let p = post("a", "yesterday", false, Some("Supporting"));
        let err = load_submission(&doc(json!([[p]])), "t", "ev").unwrap_err();
        assert!(err.to_string().contains("branches[0][0].comment.created"), "{err}");
    }

    #[test]
    fn rumour_without_truth_status_is_rejected() {
        let mut v: Value = serde_json::from_str(&doc(json!([]))).unwrap();
        v["redditSubmission"].as_object_mut().unwrap().remove("TruthStatus");
        let err = load_submission(&v.to_string(), "t", "ev").unwrap_err();
        assert!(err.to_string().contains("TruthStatus"));
    }
}
