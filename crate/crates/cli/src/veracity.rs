//! Sequence export, veracity training and evaluation, and single-submission resolution.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, ValueEnum};
use rumour_core::corpus::{
    filter_pheme, load_sequences, load_submission_file, strip_kind_prefix, write_sequences, Dataset, LoadOptions,
    PostKey, SequenceRecord, Submission, VeracityLabel,
};
use rumour_core::features::PostContext;
use rumour_core::veracity::{
    auto_label, encode, protocol_cv3, protocol_mix, protocol_transfer, stance_string, to_sequences, HmmClassifier,
    StructureMode, VbBaseline, VeracitySpec,
};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::report::{cv_text, hash_line, metrics_text, write_output};
use crate::stance::{load_corpus, StanceBundle};
use crate::{Protocol, Structure, Unverified, UsageError, VariantArg};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VeracityModel {
    Hmm,
    Vb,
}

#[derive(Args, Clone)]
pub struct VeracityArgs {
    /// Corpus sequences as JSON lines; built from --data when absent.
    #[arg(long)]
    sequences: Option<PathBuf>,
    /// PHEME sequences as JSON lines (see convert-pheme).
    #[arg(long)]
    pheme: Option<PathBuf>,
    #[arg(long, value_enum)]
    structure: Option<Structure>,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[arg(long, value_enum)]
    unverified: Option<Unverified>,
    #[arg(long, value_enum, default_value = "hmm")]
    model: VeracityModel,
    /// Fix the number of hidden states instead of searching for it.
    #[arg(long)]
    states: Option<usize>,
    /// Use every PHEME record, not only rumours and events with at least five items and rumours.
    #[arg(long)]
    no_filter: bool,
    /// Label corpus posts with leave-one-submission-out stance predictions.
    #[arg(long)]
    auto: bool,
}

impl VeracityArgs {
    pub fn apply(&self, cfg: &mut RunConfig) {
        let v = &mut cfg.veracity;
        if let Some(s) = self.structure {
            v.structure = s.into();
        }
        if let Some(x) = self.variant {
            v.hmm.variant = x.into();
        }
        if let Some(u) = self.unverified {
            v.hmm.unverified = u.into();
        }
        if let Some(n) = self.states {
            v.hmm.n_range = vec![n];
        }
        if self.no_filter {
            v.filter_pheme = false;
        }
    }

    fn spec(&self, cfg: &RunConfig) -> VeracitySpec {
        match self.model {
            VeracityModel::Hmm => VeracitySpec::Hmm(cfg.veracity.hmm.clone()),
            VeracityModel::Vb => VeracitySpec::Vb { unverified: cfg.veracity.hmm.unverified },
        }
    }

    fn has_corpus(&self, cfg: &RunConfig) -> bool {
        self.sequences.is_some() || cfg.data.is_some()
    }

    fn corpus_sequences(&self, cfg: &RunConfig) -> anyhow::Result<Vec<SequenceRecord>> {
        if let Some(p) = &self.sequences {
            return Ok(load_sequences(p)?);
        }
        corpus_sequences(cfg, self.auto, cfg.veracity.structure)
    }

    fn pheme_sequences(&self, cfg: &RunConfig) -> anyhow::Result<Option<Vec<SequenceRecord>>> {
        let Some(p) = &self.pheme else { return Ok(None) };
        let records = load_sequences(p)?;
        let kept = if cfg.veracity.filter_pheme { filter_pheme(&records) } else { records.clone() };
        log::info!("{}: {} of {} PHEME records kept", p.display(), kept.len(), records.len());
        if kept.is_empty() {
            anyhow::bail!("{}: no PHEME records left after filtering", p.display());
        }
        Ok(Some(kept))
    }
}

/// Rumour sequences of the configured corpus, optionally with predicted stances.
fn corpus_sequences(cfg: &RunConfig, auto: bool, structure: StructureMode) -> anyhow::Result<Vec<SequenceRecord>> {
    let ds = load_corpus(cfg)?;
    let ds = if auto {
        let res = cfg.load_resources()?;
        let out = auto_label(&ds, &cfg.features, &res, &cfg.model)?;
        log::info!("automatic stance labels: accuracy {:.4}, macro F1 {:.4}", out.report.accuracy, out.report.macro_f1);
        out.relabelled
    } else {
        ds
    };
    let seqs = to_sequences(&ds, structure);
    if seqs.is_empty() {
        anyhow::bail!("corpus has no rumour submissions with a truth status");
    }
    Ok(seqs)
}

pub fn sequences(cfg: &RunConfig, auto: bool, out: Option<&Path>) -> anyhow::Result<()> {
    let seqs = corpus_sequences(cfg, auto, cfg.veracity.structure)?;
    write_output(out, |w| Ok(write_sequences(&seqs, w)?))?;
    let items: usize = seqs.iter().map(|r| r.items.len()).sum();
    let summary = format!("{} sequences ({}), {} items", seqs.len(), cfg.veracity.structure, items);
    if out.is_some() {
        println!("{summary}\n{}", hash_line(cfg));
    } else {
        eprintln!("{summary}\n{}", hash_line(cfg));
    }
    Ok(())
}

/// A saved veracity model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VeracityFile {
    pub config_hash: String,
    pub model: VeracityPredictor,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum VeracityPredictor {
    Hmm(HmmClassifier),
    Vb(VbBaseline),
}

impl VeracityPredictor {
    fn fit(spec: &VeracitySpec, train: &[SequenceRecord]) -> anyhow::Result<Self> {
        Ok(match spec {
            VeracitySpec::Hmm(o) => VeracityPredictor::Hmm(HmmClassifier::fit(train, o)?),
            VeracitySpec::Vb { unverified } => VeracityPredictor::Vb(VbBaseline::fit(train, *unverified)?),
        })
    }

    /// Predicted label and, for HMMs, the per-label log-likelihoods.
    fn verdict(&self, record: &SequenceRecord) -> anyhow::Result<(VeracityLabel, Vec<(VeracityLabel, f64)>)> {
        Ok(match self {
            VeracityPredictor::Hmm(c) => {
                let scores = c.scores(&encode(record, c.variant, c.time_norm))?;
                (rumour_core::veracity::argmax_label(&scores), scores)
            }
            VeracityPredictor::Vb(v) => (v.predict(record), Vec::new()),
        })
    }
}

impl VeracityFile {
    fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let f: VeracityFile =
            serde_json::from_str(&text).with_context(|| format!("{} is not a veracity model", path.display()))?;
        if let VeracityPredictor::Hmm(c) = &f.model {
            HmmClassifier::from_json(&serde_json::to_string(c)?)?;
        }
        Ok(f)
    }
}

pub fn train_veracity(cfg: &RunConfig, args: &VeracityArgs, out: &Path) -> anyhow::Result<()> {
    let mut train = Vec::new();
    if args.has_corpus(cfg) {
        train.extend(args.corpus_sequences(cfg)?);
    }
    if let Some(p) = args.pheme_sequences(cfg)? {
        train.extend(p);
    }
    if train.is_empty() {
        return Err(UsageError("no training sequences; pass --data, --sequences or --pheme".into()).into());
    }
    let model = VeracityPredictor::fit(&args.spec(cfg), &train)?;
    let file = VeracityFile { config_hash: cfg.hash(), model };
    std::fs::write(out, serde_json::to_string(&file)?).with_context(|| format!("cannot write {}", out.display()))?;
    match &file.model {
        VeracityPredictor::Hmm(c) => println!(
            "trained {} HMMs with {} states on {} sequences; saved {}",
            c.models.len(),
            c.n_states,
            train.len(),
            out.display()
        ),
        VeracityPredictor::Vb(_) => println!("trained VB baseline on {} sequences; saved {}", train.len(), out.display()),
    }
    println!("{}", hash_line(cfg));
    Ok(())
}

pub fn eval_veracity(cfg: &RunConfig, args: &VeracityArgs, protocol: Protocol, json: bool) -> anyhow::Result<()> {
    let spec = args.spec(cfg);
    let names: Vec<String> = spec.unverified().labels().iter().map(|l| l.to_string()).collect();
    let pheme = args.pheme_sequences(cfg)?;
    if protocol != Protocol::Cv3 && pheme.is_none() {
        anyhow::bail!("missing training sequences: the {} protocol needs --pheme <file>", protocol_name(protocol));
    }
    let text = match protocol {
        Protocol::Cv3 => {
            let records = match (&pheme, args.has_corpus(cfg)) {
                (Some(p), false) => p.clone(),
                _ => args.corpus_sequences(cfg)?,
            };
            let cv = protocol_cv3(&records, &spec, cfg.seed)?;
            if json {
                serde_json::to_string_pretty(&cv)?
            } else {
                format!("cv3 over {} sequences\n{}", records.len(), cv_text(&cv, &names))
            }
        }
        Protocol::Transfer => {
            let train = pheme.unwrap_or_default();
            let test = args.corpus_sequences(cfg)?;
            let r = protocol_transfer(&train, &test, &spec)?;
            if json {
                serde_json::to_string_pretty(&r)?
            } else {
                format!("train {} PHEME sequences, test {} corpus sequences\n{}", train.len(), test.len(), metrics_text(&r, &names))
            }
        }
        Protocol::Mix => {
            let second = pheme.unwrap_or_default();
            let first = args.corpus_sequences(cfg)?;
            let cv = protocol_mix(&first, &second, &spec, cfg.seed)?;
            if json {
                serde_json::to_string_pretty(&cv)?
            } else {
                format!("cv3 over {} corpus + {} PHEME sequences\n{}", first.len(), second.len(), cv_text(&cv, &names))
            }
        }
    };
    if json {
        println!("{text}");
    } else {
        println!(
            "{} model={} variant={:?} unverified={:?} structure={}",
            protocol_name(protocol),
            if args.model == VeracityModel::Hmm { "hmm" } else { "vb" },
            cfg.veracity.hmm.variant,
            cfg.veracity.hmm.unverified,
            cfg.veracity.structure
        );
        print!("{text}");
        println!("{}", hash_line(cfg));
    }
    Ok(())
}

fn protocol_name(p: Protocol) -> &'static str {
    match p {
        Protocol::Cv3 => "cv3",
        Protocol::Transfer => "transfer",
        Protocol::Mix => "mix",
    }
}

/// The submission named by `arg`: a file path, or an id within the corpus.
fn target_submission(cfg: &RunConfig, arg: &str, corpus: Option<&Dataset>) -> anyhow::Result<Submission> {
    let path = Path::new(arg);
    if path.is_file() {
        return Ok(load_submission_file(path, "resolve", LoadOptions { keep_unannotated: true })?);
    }
    let ds = corpus.ok_or_else(|| UsageError(format!("{arg} is not a file and no corpus is configured")))?;
    let id = strip_kind_prefix(arg);
    ds.submissions
        .iter()
        .find(|s| s.submission_id == id)
        .cloned()
        .ok_or_else(|| anyhow::anyhow!("no submission {id} in {}", cfg.data_dir().map(|p| p.display().to_string()).unwrap_or_default()))
}

fn snippet(text: &str) -> String {
    let flat: String = text.split_whitespace().collect::<Vec<_>>().join(" ");
    if flat.chars().count() > 60 {
        format!("{}...", flat.chars().take(57).collect::<String>())
    } else {
        flat
    }
}

pub fn resolve(
    cfg: &RunConfig,
    arg: &str,
    stance_model: Option<&Path>,
    veracity_model: Option<&Path>,
) -> anyhow::Result<()> {
    let needs_corpus = stance_model.is_none() || veracity_model.is_none() || !Path::new(arg).is_file();
    let corpus = if needs_corpus { Some(load_corpus(cfg)?) } else { None };
    let target = target_submission(cfg, arg, corpus.as_ref())?;
    let others = corpus.as_ref().map(|ds| {
        Dataset::new(ds.submissions.iter().filter(|s| s.submission_id != target.submission_id).cloned().collect())
    });
    let res = cfg.load_resources()?;

    let bundle = match stance_model {
        Some(p) => StanceBundle::load(p)?,
        None => StanceBundle::fit(cfg, others.as_ref().expect("corpus loaded"), &cfg.features, &res)?,
    };
    let single = Dataset::new(vec![target.clone()]);
    let refs = single.posts();
    let ctx: Vec<PostContext> = refs.iter().map(|r| (*r).into()).collect();
    let predicted = bundle.predict(&ctx, &res)?;
    let stances: HashMap<PostKey, _> = refs.iter().map(|r| r.key()).zip(predicted.iter().copied()).collect();

    let mut relabelled = single.with_stances(&stances);
    let sub = &mut relabelled.submissions[0];
    sub.is_rumour = true;
    // Placeholder so a sequence can be built; the label itself is not used.
    sub.veracity.get_or_insert(VeracityLabel::Unverified);
    let record = to_sequences(&relabelled, StructureMode::Sas)
        .pop()
        .ok_or_else(|| anyhow::anyhow!("submission {} has no posts", target.submission_id))?;

    let predictor = match veracity_model {
        Some(p) => VeracityFile::load(p)?.model,
        None => {
            let train = to_sequences(others.as_ref().expect("corpus loaded"), cfg.veracity.structure);
            VeracityPredictor::fit(&VeracitySpec::Hmm(cfg.veracity.hmm.clone()), &train)?
        }
    };
    let (verdict, scores) = predictor.verdict(&record)?;

    println!("submission {}: {}", target.submission_id, snippet(&target.title));
    for (r, s) in refs.iter().zip(&predicted) {
        let p = r.post();
        println!(
            "  {:<12} {}  {:<10}  {}",
            p.comment_id,
            rumour_core::corpus::format_timestamp(p.created),
            s.to_string(),
            snippet(&p.raw_text)
        );
    }
    println!("stances: {}", stance_string(&record));
    if !scores.is_empty() {
        let parts: Vec<String> = scores.iter().map(|(l, s)| format!("{l} {s:.3}")).collect();
        println!("log-likelihoods: {}", parts.join(", "));
    }
    if let Some(gold) = target.veracity.filter(|_| target.is_rumour) {
        println!("verdict: {verdict} (annotated {gold})");
    } else {
        println!("verdict: {verdict}");
    }
    println!("{}", hash_line(cfg));
    Ok(())
}
