//! Corpus, feature and stance-classifier commands.

use std::collections::HashMap;
use std::path::Path;

use anyhow::Context;
use clap::{Args, ValueEnum};
use rumour_core::classifiers::{train, Classifier};
use rumour_core::corpus::{load_dataset, CorpusStats, Dataset, PostKey, StanceLabel, VeracityLabel};
use rumour_core::evaluation::{ablation, cross_validate, grid_search, learning_curve, random_search, ParamGrid};
use rumour_core::features::{Category, FeatureConfig, FeatureExtractor, FeatureMatrix, PostContext};
use rumour_core::resources::Resources;
use rumour_core::sampling::{sub_sample, super_sample, super_sampled_cv, write_augmented_jsonl, PairPlacement, SyntheticPost};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::report::{cv_text, hash_line, mean_std, metrics_text, write_output};
use crate::{ModelArgs, UsageError};

pub fn stance_names() -> Vec<String> {
    StanceLabel::ALL.iter().map(|s| s.to_string()).collect()
}

#[derive(Args, Clone, Default)]
pub struct SelectArgs {
    /// Comma-separated feature categories to use (default: all, or the config file's list).
    #[arg(long, value_delimiter = ',')]
    features: Option<Vec<String>>,
    /// Comma-separated categories to leave out.
    #[arg(long, value_delimiter = ',')]
    without: Vec<String>,
    #[arg(long)]
    variance_threshold: Option<f64>,
    /// Drop branches made only of commenting posts before anything else.
    #[arg(long)]
    sub_sample: bool,
}

impl SelectArgs {
    pub fn features(&self, cfg: &RunConfig) -> anyhow::Result<FeatureConfig> {
        let parse = |names: &[String]| -> anyhow::Result<Vec<Category>> {
            names.iter().map(|n| n.parse::<Category>().map_err(|e| UsageError(e.to_string()).into())).collect()
        };
        let mut fc = cfg.features.clone();
        if let Some(names) = &self.features {
            fc.enabled = parse(names)?;
        }
        fc = fc.without(&parse(&self.without)?);
        if self.variance_threshold.is_some() {
            fc.variance_threshold = self.variance_threshold;
        }
        if fc.enabled.is_empty() {
            return Err(UsageError("no feature categories selected".into()).into());
        }
        Ok(fc)
    }

    pub fn dataset(&self, cfg: &RunConfig) -> anyhow::Result<Dataset> {
        let ds = load_corpus(cfg)?;
        Ok(if self.sub_sample { sub_sample(&ds) } else { ds })
    }
}

pub fn load_corpus(cfg: &RunConfig) -> anyhow::Result<Dataset> {
    let dir = cfg.data_dir()?;
    load_dataset(dir).with_context(|| format!("loading corpus {}", dir.display()))
}

pub fn labels(ctx: &[PostContext<'_>]) -> Vec<usize> {
    ctx.iter().map(|c| c.post.sdqc_submission.index()).collect()
}

/// Fit the feature layout on every post of `ds` and extract the matrix.
pub fn fit_matrix(
    ds: &Dataset,
    features: &FeatureConfig,
    res: &Resources,
) -> anyhow::Result<(FeatureExtractor, FeatureMatrix, Vec<usize>)> {
    let ctx: Vec<PostContext> = ds.posts().into_iter().map(Into::into).collect();
    if ctx.is_empty() {
        anyhow::bail!("corpus has no annotated posts");
    }
    let fx = FeatureExtractor::fit(&ctx, &ctx, features, res)?;
    let x = fx.extract_all(&ctx, res)?;
    Ok((fx, x, labels(&ctx)))
}

fn stats_line(s: &CorpusStats) -> String {
    format!("{} submissions, {} branches, {} posts", s.submissions, s.branches, s.posts)
}

fn stance_counts(s: &CorpusStats) -> String {
    StanceLabel::ALL
        .iter()
        .map(|l| format!("{l} {}", s.stance_counts[l.index()]))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn ingest(cfg: &RunConfig, events: bool) -> anyhow::Result<()> {
    let ds = load_corpus(cfg)?;
    let s = ds.stats();
    println!("{}", stats_line(&s));
    println!("{} conversations", s.conversations);
    println!("stance: {}", stance_counts(&s));
    let rumours = ds.rumour_subset();
    let v = rumours.veracity_counts();
    let count = |l| v.get(&l).copied().unwrap_or(0);
    println!(
        "rumours: {} submissions ({} true, {} false, {} unverified), {} branches",
        rumours.submissions.len(),
        count(VeracityLabel::True),
        count(VeracityLabel::False),
        count(VeracityLabel::Unverified),
        rumours.branch_count()
    );
    if events {
        for (event, es) in ds.event_stats() {
            println!("  {event}: {}; {}", stats_line(&es), stance_counts(&es));
        }
    }
    println!("{}", hash_line(cfg));
    Ok(())
}

pub fn extract(cfg: &RunConfig, select: &SelectArgs, out: Option<&Path>) -> anyhow::Result<()> {
    let ds = select.dataset(cfg)?;
    let res = cfg.load_resources()?;
    let (fx, x, y) = fit_matrix(&ds, &select.features(cfg)?, &res)?;
    let codes: Vec<u8> = y.iter().map(|&i| StanceLabel::ALL[i].code()).collect();
    write_output(out, |w| Ok(x.write_csv(Some(&codes), w)?))?;
    let summary = format!("{} rows, {} columns, layout {}", x.n_rows(), x.n_cols(), fx.fingerprint());
    if out.is_some() {
        println!("{summary}");
        println!("{}", hash_line(cfg));
    } else {
        eprintln!("{summary}");
        eprintln!("{}", hash_line(cfg));
    }
    Ok(())
}

/// A stance model together with the feature layout it expects.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StanceBundle {
    pub config_hash: String,
    pub features: FeatureExtractor,
    pub classifier: Classifier,
}

impl StanceBundle {
    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        std::fs::write(path, serde_json::to_string(self)?).with_context(|| format!("cannot write {}", path.display()))
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let b: StanceBundle =
            serde_json::from_str(&text).with_context(|| format!("{} is not a stance model", path.display()))?;
        // Re-validate through the classifier's own loader (format version).
        Classifier::from_json(&serde_json::to_string(&b.classifier)?)?;
        Ok(b)
    }

    /// Fit features and classifier on every post of `ds`.
    pub fn fit(cfg: &RunConfig, ds: &Dataset, features: &FeatureConfig, res: &Resources) -> anyhow::Result<Self> {
        let (fx, x, y) = fit_matrix(ds, features, res)?;
        let classifier = train(&x, &y, &cfg.model)?;
        Ok(StanceBundle { config_hash: cfg.hash(), features: fx, classifier })
    }

    pub fn predict(&self, ctx: &[PostContext<'_>], res: &Resources) -> anyhow::Result<Vec<StanceLabel>> {
        let x = self.features.extract_all(ctx, res)?;
        Ok(self.classifier.predict_batch(&x)?.into_iter().map(|i| StanceLabel::ALL[i]).collect())
    }
}

pub fn train_stance(cfg: &RunConfig, select: &SelectArgs, out: &Path) -> anyhow::Result<()> {
    let ds = select.dataset(cfg)?;
    let res = cfg.load_resources()?;
    let bundle = StanceBundle::fit(cfg, &ds, &select.features(cfg)?, &res)?;
    bundle.save(out)?;
    println!(
        "trained {:?} on {} posts, {} features; saved {}",
        cfg.model.kind,
        ds.post_count(),
        bundle.classifier.n_features,
        out.display()
    );
    println!("{}", hash_line(cfg));
    Ok(())
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Search {
    Grid,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Placement {
    CoLocated,
    TrainOnly,
}

#[derive(Args, Clone)]
pub struct EvalArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub select: SelectArgs,
    /// Number of folds (default from config, 5).
    #[arg(long)]
    pub folds: Option<usize>,
    /// Also run once per left-out feature category.
    #[arg(long)]
    pub ablation: bool,
    /// Hyper-parameter search over C and class weights (holdout 0.2, inner k-fold).
    #[arg(long, value_enum)]
    pub search: Option<Search>,
    /// Comma-separated training fractions for a learning curve.
    #[arg(long, value_delimiter = ',')]
    pub learning_curve: Option<Vec<f64>>,
    /// Add synonym-substituted posts; the value says where they may appear.
    #[arg(long = "super", value_enum)]
    pub super_: Option<Placement>,
    /// Write the report as JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

fn print_or_json<T: Serialize>(json: bool, value: &T, text: impl FnOnce() -> String) -> anyhow::Result<()> {
    if json {
        println!("{}", serde_json::to_string_pretty(value)?);
    } else {
        print!("{}", text());
    }
    Ok(())
}

/// Synthetic rows for every post of `ds` that passes the substitution threshold.
pub fn synthetic_rows(
    cfg: &RunConfig,
    ds: &Dataset,
    fx: &FeatureExtractor,
    res: &Resources,
) -> anyhow::Result<(Vec<SyntheticPost>, FeatureMatrix, Vec<usize>)> {
    let refs = ds.posts();
    let ctx: Vec<PostContext> = refs.iter().map(|r| (*r).into()).collect();
    let keyed: Vec<(PostKey, _)> = refs.iter().map(|r| (r.key(), r.post())).collect();
    let syn = super_sample(&keyed, &res.synonyms, cfg.sampling.replace_fraction, cfg.seed);
    let index: HashMap<&PostKey, usize> = keyed.iter().enumerate().map(|(i, (k, _))| (k, i)).collect();
    let links: Vec<usize> = syn.iter().map(|s| index[&s.synthetic_of]).collect();
    let syn_ctx: Vec<PostContext> = syn.iter().zip(&links).map(|(s, &o)| ctx[o].with_post(&s.post)).collect();
    let x = fx.extract_all(&syn_ctx, res)?;
    Ok((syn, x, links))
}

pub fn eval_stance(cfg: &RunConfig, args: &EvalArgs) -> anyhow::Result<()> {
    let ds = args.select.dataset(cfg)?;
    let res = cfg.load_resources()?;
    let features = args.select.features(cfg)?;
    let (fx, x, y) = fit_matrix(&ds, &features, &res)?;
    let k = args.folds.unwrap_or(cfg.evaluation.folds);
    let names = stance_names();
    let model = &cfg.model;
    if !args.json {
        println!(
            "{:?} C={} class_weight={:?}; {} posts, {} features ({})",
            model.kind,
            model.c,
            model.class_weight,
            x.n_rows(),
            x.n_cols(),
            features.categories().iter().map(|c| c.name()).collect::<Vec<_>>().join(",")
        );
    }
    if let Some(search) = args.search {
        let grid = ParamGrid::linear_space_l2();
        let out = match search {
            Search::Grid => grid_search(&x, &y, 4, model, &grid, cfg.evaluation.inner_folds, cfg.seed)?,
            Search::Random => random_search(
                &x,
                &y,
                4,
                model,
                &grid,
                cfg.evaluation.random_samples,
                cfg.evaluation.inner_folds,
                cfg.seed,
            )?,
        };
        print_or_json(args.json, &out, || {
            let mut s = format!("{} configurations, {} fits\n", out.scores.len(), out.fits);
            for (c, m) in &out.scores {
                s += &format!("  C={:<6} class_weight={:<8?} inner macro F1 {}\n", c.c, c.class_weight, mean_std(m));
            }
            s += &format!("best: C={} class_weight={:?}\nholdout:\n", out.best.c, out.best.class_weight);
            s + &metrics_text(&out.holdout, &names)
        })?;
    } else if args.ablation {
        let rows = ablation(&x, &y, 4, model, k, cfg.seed)?;
        print_or_json(args.json, &rows, || {
            let mut s = String::from("held out     accuracy            macro F1\n");
            for r in &rows {
                let name = r.held_out.map_or("(none)", |c| c.name());
                s += &format!("{name:<12} {}  {}\n", mean_std(&r.report.accuracy), mean_std(&r.report.macro_f1));
            }
            s
        })?;
    } else if let Some(fractions) = &args.learning_curve {
        let points = learning_curve(&x, &y, 4, model, fractions, k, cfg.seed)?;
        print_or_json(args.json, &points, || {
            let mut s = String::from("fraction  samples  train macro F1      test macro F1\n");
            for p in &points {
                s += &format!(
                    "{:<8}  {:<7}  {}  {}\n",
                    p.fraction,
                    p.n_samples,
                    mean_std(&p.train_macro_f1),
                    mean_std(&p.cv.macro_f1)
                );
            }
            s
        })?;
    } else if let Some(placement) = args.super_ {
        let (syn, x_syn, links) = synthetic_rows(cfg, &ds, &fx, &res)?;
        if syn.is_empty() {
            anyhow::bail!("no post reached the synonym substitution threshold");
        }
        let y_syn: Vec<usize> = links.iter().map(|&o| y[o]).collect();
        let placement = match placement {
            Placement::CoLocated => PairPlacement::CoLocated,
            Placement::TrainOnly => PairPlacement::TrainOnly,
        };
        let cv = super_sampled_cv(&x, &y, &x_syn, &y_syn, &links, placement, 4, model, k, cfg.seed)?;
        print_or_json(args.json, &cv, || format!("{} synthetic posts ({placement:?})\n{}", syn.len(), cv_text(&cv, &names)))?;
    } else {
        let cv = cross_validate(&x, &y, 4, model, k, cfg.seed)?;
        print_or_json(args.json, &cv, || cv_text(&cv, &names))?;
    }
    if !args.json {
        println!("{}", hash_line(cfg));
    }
    Ok(())
}

pub fn sample(cfg: &RunConfig, sub: bool, super_: bool, out: Option<&Path>) -> anyhow::Result<()> {
    if !sub && !super_ {
        return Err(UsageError("nothing to do; pass --sub and/or --super".into()).into());
    }
    let full = load_corpus(cfg)?;
    let ds = if sub { sub_sample(&full) } else { full.clone() };
    let synthetic = if super_ {
        let res = cfg.load_resources()?;
        if res.synonyms.is_empty() {
            return Err(UsageError("super-sampling needs a synonym dictionary".into()).into());
        }
        let refs = ds.posts();
        let keyed: Vec<_> = refs.iter().map(|r| (r.key(), r.post())).collect();
        super_sample(&keyed, &res.synonyms, cfg.sampling.replace_fraction, cfg.seed)
    } else {
        Vec::new()
    };
    write_output(out, |w| Ok(write_augmented_jsonl(&ds, &synthetic, w)?))?;
    let summary = format!(
        "{} -> {} branches, {} -> {} posts; {} synthetic posts",
        full.branch_count(),
        ds.branch_count(),
        full.post_count(),
        ds.post_count(),
        synthetic.len()
    );
    let stats = ds.stats();
    let counts = format!("stance after sampling: {}", stance_counts(&stats));
    for line in [summary, counts, hash_line(cfg)] {
        if out.is_some() {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    }
    Ok(())
}
