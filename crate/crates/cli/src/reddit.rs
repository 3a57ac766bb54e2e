//! Reddit API listings to the (unannotated) corpus submission format.

use rumour_core::corpus::format_timestamp;
use serde_json::{json, Value};

fn time(v: &Value) -> String {
    format_timestamp(v.as_f64().unwrap_or(0.0) as i64)
}

fn user(author: &Value) -> Value {
    json!({ "id": author.as_str().unwrap_or("[deleted]") })
}

fn post(d: &Value, submission_id: &str) -> Value {
    let body = d["body"].as_str().unwrap_or_default();
    let replies = d["replies"]["data"]["children"].as_array().map_or(0, Vec::len);
    json!({
        "comment_id": d["id"],
        "text": body,
        "parent_id": d["parent_id"],
        "submission_id": submission_id,
        "created": time(&d["created_utc"]),
        "upvotes": d["score"].as_i64().unwrap_or(0),
        "replies": replies,
        "is_submitter": d["is_submitter"].as_bool().unwrap_or(false),
        "is_deleted": body == "[deleted]" || body == "[removed]",
        "user": user(&d["author"]),
    })
}

/// Every root-to-leaf path of comments below `children`.
fn branches(children: &Value, prefix: &mut Vec<Value>, submission_id: &str, out: &mut Vec<Vec<Value>>) {
    let Some(list) = children.as_array() else { return };
    for c in list.iter().filter(|c| c["kind"] == "t1") {
        let d = &c["data"];
        prefix.push(json!({ "comment": post(d, submission_id) }));
        let before = out.len();
        branches(&d["replies"]["data"]["children"], prefix, submission_id, out);
        if out.len() == before {
            out.push(prefix.clone());
        }
        prefix.pop();
    }
}

/// Convert the two-listing response of `/comments/<id>.json`.
pub fn to_corpus(response: &Value) -> anyhow::Result<Value> {
    let sub = &response[0]["data"]["children"][0]["data"];
    let id = sub["id"].as_str().ok_or_else(|| anyhow::anyhow!("response has no submission"))?;
    let submission_id = format!("t3_{id}");
    let mut out = Vec::new();
    branches(&response[1]["data"]["children"], &mut Vec::new(), &submission_id, &mut out);
    Ok(json!({
        "redditSubmission": {
            "submission_id": submission_id,
            "title": sub["title"],
            "text": sub["selftext"].as_str().unwrap_or_default(),
            "created": time(&sub["created_utc"]),
            "num_comments": sub["num_comments"].as_i64().unwrap_or(0),
            "user": user(&sub["author"]),
            "IsRumour": false,
        },
        "branches": out,
    }))
}
