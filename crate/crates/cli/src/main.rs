//! `rumour`: corpus statistics, feature extraction, stance and veracity experiments.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error.

mod config;
mod pheme;
#[cfg_attr(not(feature = "network"), allow(dead_code))]
mod reddit;
#[cfg(feature = "network")]
mod remote;
mod report;
mod stance;
mod veracity;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rumour_core::classifiers::{ClassWeight, ModelKind};
use rumour_core::veracity::{StructureMode, UnverifiedMode, Variant};

use crate::config::{Overrides, RunConfig, RESOURCES_ENV};

/// A problem with how the program was invoked rather than with the data.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "rumour", version, about = "Stance classification and rumour veracity prediction")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Annotated corpus directory (<dir>/<event>/<submission>.json).
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Resource directory; overrides the config file and the environment variable.
    #[arg(long, global = true)]
    resources: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Load a corpus and print its size.
    Ingest {
        dir: PathBuf,
        /// Also print one line per event.
        #[arg(long)]
        events: bool,
    },
    /// Print the effective configuration as TOML.
    Config,
    /// Fit the feature layout on the corpus and write the feature matrix as CSV.
    Extract {
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[command(flatten)]
        select: stance::SelectArgs,
    },
    /// Train a stance classifier on the whole corpus and save it.
    TrainStance {
        #[arg(long, short)]
        out: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        select: stance::SelectArgs,
    },
    /// Cross-validate stance classifiers.
    EvalStance(stance::EvalArgs),
    /// Drop commenting-only branches and/or add synonym-substituted posts.
    Sample {
        #[arg(long)]
        sub: bool,
        #[arg(long = "super")]
        super_: bool,
        /// Augmented corpus as JSON lines; defaults to stdout.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Write the stance sequences of the rumour submissions as JSON lines.
    Sequences {
        #[arg(long, value_enum)]
        structure: Option<Structure>,
        /// Use leave-one-submission-out predicted stances instead of the annotations.
        #[arg(long)]
        auto: bool,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Train a veracity model and save it.
    TrainVeracity {
        #[command(flatten)]
        args: veracity::VeracityArgs,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Evaluate veracity prediction under one of the protocols.
    EvalVeracity {
        #[command(flatten)]
        args: veracity::VeracityArgs,
        #[arg(long, value_enum, default_value = "cv3")]
        protocol: Protocol,
        /// Write the report as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Predict post stances and a verdict for one submission.
    Resolve {
        /// Path to a submission JSON file, or the id of a submission in the corpus.
        #[arg(long)]
        submission: String,
        /// Stance model saved by train-stance; trained on the corpus when absent.
        #[arg(long)]
        stance_model: Option<PathBuf>,
        /// Veracity model saved by train-veracity; trained on the corpus when absent.
        #[arg(long)]
        veracity_model: Option<PathBuf>,
    },
    /// Convert a PHEME rumour-scheme directory into sequence JSON lines.
    ConvertPheme {
        dir: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Language subdirectory to read when present.
        #[arg(long, default_value = "en")]
        lang: String,
    },
    /// Download one Reddit submission as an unannotated corpus file.
    #[cfg(feature = "network")]
    FetchReddit {
        id: String,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Download the lexical resources into a directory.
    #[cfg(feature = "network")]
    FetchResources {
        dest: PathBuf,
        /// TOML table of `file_name = "url"` entries added to the built-in list.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
}

#[derive(Args, Clone, Default)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    model: Option<Model>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long, value_enum)]
    class_weight: Option<Weight>,
}

impl ModelArgs {
    fn apply(&self, cfg: &mut RunConfig) -> anyhow::Result<()> {
        if let Some(m) = self.model {
            cfg.model.kind = m.into();
        }
        if let Some(c) = self.c {
            cfg.model.c = c;
        }
        if let Some(w) = self.class_weight {
            cfg.model.class_weight = match w {
                Weight::Balanced => ClassWeight::Balanced,
                Weight::Uniform => ClassWeight::Uniform,
            };
        }
        cfg.model.validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(())
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Logistic,
    Svm,
    Tree,
    Forest,
    Majority,
    Stratified,
}

impl From<Model> for ModelKind {
    fn from(m: Model) -> Self {
        match m {
            Model::Logistic => ModelKind::Logistic,
            Model::Svm => ModelKind::Svm,
            Model::Tree => ModelKind::Tree,
            Model::Forest => ModelKind::Forest,
            Model::Majority => ModelKind::Majority,
            Model::Stratified => ModelKind::Stratified,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Weight {
    Balanced,
    Uniform,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Structure {
    Sas,
    Tcas,
    Bas,
}

impl From<Structure> for StructureMode {
    fn from(s: Structure) -> Self {
        match s {
            Structure::Sas => StructureMode::Sas,
            Structure::Tcas => StructureMode::Tcas,
            Structure::Bas => StructureMode::Bas,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Unverified {
    False,
    True,
    #[value(name = "3way")]
    ThreeWay,
}

impl From<Unverified> for UnverifiedMode {
    fn from(u: Unverified) -> Self {
        match u {
            Unverified::False => UnverifiedMode::AsFalse,
            Unverified::True => UnverifiedMode::AsTrue,
            Unverified::ThreeWay => UnverifiedMode::ThreeWay,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum VariantArg {
    Lambda,
    Omega,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Lambda => Variant::Lambda,
            VariantArg::Omega => Variant::Omega,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Protocol {
    Cv3,
    Transfer,
    Mix,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let env_resources = std::env::var_os(RESOURCES_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    let flags = Overrides { data: cli.global.data, resources: cli.global.resources, seed: cli.global.seed };
    let mut cfg = config::effective(cli.global.config.as_deref(), env_resources, flags)?;
    match cli.command {
        Command::Ingest { dir, events } => {
            cfg.data = Some(dir);
            stance::ingest(&cfg, events)
        }
        Command::Config => {
            print!("{}", cfg.to_toml()?);
            println!("# config-hash: {}", cfg.hash());
            Ok(())
        }
        Command::Extract { out, select } => stance::extract(&cfg, &select, out.as_deref()),
        Command::TrainStance { out, model, select } => {
            model.apply(&mut cfg)?;
            stance::train_stance(&cfg, &select, &out)
        }
        Command::EvalStance(args) => {
            args.model.apply(&mut cfg)?;
            stance::eval_stance(&cfg, &args)
        }
        Command::Sample { sub, super_, out } => stance::sample(&cfg, sub, super_, out.as_deref()),
        Command::Sequences { structure, auto, out } => {
            if let Some(s) = structure {
                cfg.veracity.structure = s.into();
            }
            veracity::sequences(&cfg, auto, out.as_deref())
        }
        Command::TrainVeracity { args, out } => {
            args.apply(&mut cfg);
            veracity::train_veracity(&cfg, &args, &out)
        }
        Command::EvalVeracity { args, protocol, json } => {
            args.apply(&mut cfg);
            veracity::eval_veracity(&cfg, &args, protocol, json)
        }
        Command::Resolve { submission, stance_model, veracity_model } => {
            veracity::resolve(&cfg, &submission, stance_model.as_deref(), veracity_model.as_deref())
        }
        Command::ConvertPheme { dir, out, lang } => pheme::convert(&dir, &lang, out.as_deref(), &cfg),
        #[cfg(feature = "network")]
        Command::FetchReddit { id, out } => remote::fetch_reddit(&id, &out, &cfg),
        #[cfg(feature = "network")]
        Command::FetchResources { dest, manifest } => remote::fetch_resources(&dest, manifest.as_deref(), &cfg),
    }
}

/// 1 for usage and configuration problems, 2 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 1;
        }
        if let Some(rumour_core::Error::Config(_)) = cause.downcast_ref::<rumour_core::Error>() {
            return 1;
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
