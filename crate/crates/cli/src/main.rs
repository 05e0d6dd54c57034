//! `postpop`: synthesize or ingest a corpus, build features, fit topics, train
//! models, run the cross-validated sweep, explain tree ensembles and emit
//! report tables. Every command appends to `<out>/manifest.json`.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::RunConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "postpop",
    version,
    about = "Post-popularity prediction pipeline"
)]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config file).
    #[arg(long, global = true, env = "POSTPOP_OUT")]
    out: Option<PathBuf>,
    /// Global random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic corpus with planted effects.
    Synth(SynthArgs),
    /// Validate a corpus directory and copy it into the workspace.
    Ingest(IngestArgs),
    /// Build design matrices.
    Features {
        #[command(subcommand)]
        action: FeaturesCmd,
    },
    /// Fit, evaluate and derive seeds for topic models.
    Topics {
        #[command(subcommand)]
        action: TopicsCmd,
    },
    /// Fit one model on the full feature matrix.
    Train(TrainArgs),
    /// Hierarchical cross-validation over settings and methods.
    Cv {
        #[command(subcommand)]
        action: CvCmd,
    },
    /// TreeSHAP attributions for a saved tree ensemble.
    Explain(ExplainArgs),
    /// Error tables and nested regressions.
    Report,
    /// Color classification utilities.
    Color {
        #[command(subcommand)]
        action: ColorCmd,
    },
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub n_users: Option<usize>,
    #[arg(long)]
    pub posts_per_user: Option<usize>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Directory holding posts.jsonl, users.json and holidays.json.
    pub source: PathBuf,
}

#[derive(Debug, Subcommand)]
enum FeaturesCmd {
    Build(FeaturesArgs),
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    /// Settings to export (repeatable; default: the configured settings).
    #[arg(long = "setting")]
    pub settings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DocKind {
    Captions,
    Labels,
}

impl DocKind {
    pub fn name(self) -> &'static str {
        match self {
            DocKind::Captions => "captions",
            DocKind::Labels => "labels",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TopicMetric {
    Npmi,
    Diversity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SeedMethod {
    /// Highest information gain per topic.
    Ig,
}

#[derive(Debug, Subcommand)]
enum TopicsCmd {
    /// Fit a seeded topic model on every post.
    Fit {
        #[arg(long, value_enum, default_value = "labels")]
        kind: DocKind,
        /// Pick (alpha, beta) from the default grid by NPMI.
        #[arg(long)]
        select: bool,
    },
    /// Coherence or diversity of a fitted model.
    Eval {
        #[arg(long, value_enum, default_value = "labels")]
        kind: DocKind,
        #[arg(long, value_enum)]
        metric: TopicMetric,
        #[arg(long, default_value_t = 10)]
        n_top: usize,
    },
    /// Derive new seed words from a fitted model.
    Seeds {
        #[arg(long, value_enum, default_value = "labels")]
        kind: DocKind,
        #[arg(long, value_enum, default_value = "ig")]
        method: SeedMethod,
        #[arg(long, default_value_t = 5)]
        n: usize,
    },
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub method: String,
    #[arg(long, default_value = "all")]
    pub setting: String,
    /// Model parameters as JSON (method-tagged); tuned values when unset.
    #[arg(long)]
    pub params: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum CvCmd {
    Run(CvArgs),
}

#[derive(Debug, Args)]
pub struct CvArgs {
    /// Comma-separated settings.
    #[arg(long, alias = "setting", value_delimiter = ',')]
    pub settings: Vec<String>,
    /// Comma-separated methods.
    #[arg(long, alias = "method", value_delimiter = ',')]
    pub methods: Vec<String>,
    #[arg(long)]
    pub k_outer: Option<usize>,
    #[arg(long)]
    pub k_inner: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 16)]
    pub top: usize,
    #[arg(long)]
    pub exclude_user_dummies: bool,
}

#[derive(Debug, Subcommand)]
enum ColorCmd {
    /// Print the Munsell hue and HSV class of an RGB triple.
    Classify {
        #[arg(long)]
        rgb: String,
    },
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(o) = &cli.out {
        cfg.paths.out = Some(o.clone());
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::Invalid("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(CliError::runtime)?;
    }
    let mut cfg = resolve_config(&cli)?;
    match cli.command {
        Command::Color {
            action: ColorCmd::Classify { rgb },
        } => commands::color_classify(&rgb),
        Command::Synth(a) => {
            if let Some(n) = a.n_users {
                cfg.synth.n_users = n;
            }
            if let Some(n) = a.posts_per_user {
                cfg.synth.posts_per_user = n;
            }
            cfg.validate()?;
            commands::synth(&cfg)
        }
        Command::Ingest(a) => {
            cfg.validate()?;
            commands::ingest(&cfg, &a.source)
        }
        Command::Features {
            action: FeaturesCmd::Build(a),
        } => {
            if !a.settings.is_empty() {
                cfg.pipeline.settings = commands::parse_settings(&a.settings)?;
            }
            cfg.validate()?;
            commands::features_build(&cfg)
        }
        Command::Topics { action } => {
            cfg.validate()?;
            match action {
                TopicsCmd::Fit { kind, select } => commands::topics_fit(&cfg, kind, select),
                TopicsCmd::Eval {
                    kind,
                    metric,
                    n_top,
                } => commands::topics_eval(&cfg, kind, metric, n_top),
                TopicsCmd::Seeds { kind, method, n } => {
                    commands::topics_seeds(&cfg, kind, method, n)
                }
            }
        }
        Command::Train(a) => {
            cfg.validate()?;
            commands::train(&cfg, &a)
        }
        Command::Cv {
            action: CvCmd::Run(a),
        } => {
            if !a.settings.is_empty() {
                cfg.pipeline.settings = commands::parse_settings(&a.settings)?;
            }
            if !a.methods.is_empty() {
                cfg.pipeline.methods = commands::parse_methods(&a.methods)?;
            }
            if let Some(k) = a.k_outer {
                cfg.pipeline.k_outer = k;
            }
            if let Some(k) = a.k_inner {
                cfg.pipeline.k_inner = k;
            }
            cfg.validate()?;
            commands::cv_run(&cfg)
        }
        Command::Explain(a) => {
            cfg.validate()?;
            commands::explain(&cfg, &a)
        }
        Command::Report => {
            cfg.validate()?;
            commands::report(&cfg)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
