//! Downloads: one Reddit submission, and the lexical resource files.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Context;

use crate::config::RunConfig;
use crate::report::hash_line;
use crate::UsageError;

const USER_AGENT: &str = concat!("rumour-cli/", env!("CARGO_PKG_VERSION"));

/// Files with a stable public location. Everything else comes from `--manifest`.
const BUILT_IN: &[(&str, &str)] =
    &[("afinn_da.tsv", "https://raw.githubusercontent.com/fnielsen/afinn/master/afinn/data/AFINN-da-32.txt")];

fn client() -> anyhow::Result<reqwest::blocking::Client> {
    Ok(reqwest::blocking::Client::builder().user_agent(USER_AGENT).build()?)
}

pub fn fetch_reddit(id: &str, out: &Path, cfg: &RunConfig) -> anyhow::Result<()> {
    let id = rumour_core::corpus::strip_kind_prefix(id);
    let url = format!("https://www.reddit.com/comments/{id}.json?limit=500&raw_json=1");
    let response: serde_json::Value =
        client()?.get(&url).send()?.error_for_status()?.json().with_context(|| format!("decoding {url}"))?;
    let doc = crate::reddit::to_corpus(&response)?;
    let n = doc["branches"].as_array().map_or(0, Vec::len);
    std::fs::write(out, serde_json::to_string_pretty(&doc)?).with_context(|| format!("cannot write {}", out.display()))?;
    println!("{id}: {n} branches; saved {}", out.display());
    println!("{}", hash_line(cfg));
    Ok(())
}

pub fn fetch_resources(dest: &Path, manifest: Option<&Path>, cfg: &RunConfig) -> anyhow::Result<()> {
    let mut files: BTreeMap<String, String> =
        BUILT_IN.iter().map(|(f, u)| (f.to_string(), u.to_string())).collect();
    if let Some(m) = manifest {
        let text = std::fs::read_to_string(m).map_err(|e| UsageError(format!("cannot read {}: {e}", m.display())))?;
        let extra: BTreeMap<String, String> =
            toml::from_str(&text).map_err(|e| UsageError(format!("invalid manifest {}: {e}", m.display())))?;
        files.extend(extra);
    }
    std::fs::create_dir_all(dest).with_context(|| format!("cannot create {}", dest.display()))?;
    let client = client()?;
    for (name, url) in &files {
        let bytes = client.get(url).send()?.error_for_status()?.bytes()?;
        std::fs::write(dest.join(name), &bytes)?;
        println!("{name}: {} bytes from {url}", bytes.len());
    }
    println!("{}", hash_line(cfg));
    Ok(())
}
