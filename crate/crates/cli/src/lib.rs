//! The `birnn` command-line pipeline. Every flag is folded into the same
//! key/value store as the `--config` file, so a run can be described
//! entirely by a config file and reproduced from it.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;

use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] birnn_sentiment::Error),
}

impl CliError {
    /// 1 for usage errors, 3 for numeric failures, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_numeric() => 3,
            CliError::Core(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "birnn", version, about = "Hashtag-seeded sentiment lexicons and a bidirectional RNN classifier")]
pub struct Cli {
    /// Seed for every random choice in the run.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// `key = value` file; flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Sets any config key, e.g. `--set learning_rate=0.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true, value_parser = parse_key_value)]
    pub set: Vec<(String, String)>,
    #[command(subcommand)]
    pub command: Command,
}

fn parse_key_value(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected KEY=VALUE, got {s:?}"))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(format!("empty key in {s:?}"));
    }
    Ok((k.to_string(), v.trim().to_string()))
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic labelled corpus.
    Synth(SynthArgs),
    /// Score words from hashtag-seeded posts.
    BuildLexicon(LexiconArgs),
    /// Train the classifier.
    Train(TrainArgs),
    /// Write a polarity and class for every post.
    Classify(ClassifyArgs),
    /// Degree of impact and rate per topic.
    Rate(RateArgs),
    /// Compare predictions with gold classes.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub posts: Option<usize>,
    #[arg(long)]
    pub topic: Option<String>,
}

#[derive(Debug, Args)]
pub struct SeedArgs {
    /// Positive seed hashtags, comma separated.
    #[arg(long)]
    pub positive: Option<String>,
    #[arg(long)]
    pub negative: Option<String>,
}

#[derive(Debug, Args)]
pub struct LexiconArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Labelled posts used to pick theta.
    #[arg(long)]
    pub holdout: Option<PathBuf>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub stoplist: Option<PathBuf>,
    #[command(flatten)]
    pub seeds: SeedArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub holdout: Option<PathBuf>,
    /// Labels posts without a gold class.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub stoplist: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long)]
    pub stoplist: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    /// One per topic, paired in order with `--scored`.
    #[arg(long)]
    pub corpus: Vec<PathBuf>,
    #[arg(long)]
    pub scored: Vec<PathBuf>,
    /// `positive` or `all`.
    #[arg(long)]
    pub denominator: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long)]
    pub stoplist: Option<PathBuf>,
}

#[derive(Default)]
struct Overrides(Vec<(String, String)>);

impl Overrides {
    fn opt<T: ToString>(&mut self, key: &str, v: &Option<T>) {
        if let Some(v) = v {
            self.0.push((key.into(), v.to_string()));
        }
    }

    fn path(&mut self, key: &str, v: &Option<PathBuf>) {
        self.opt(key, &v.as_ref().map(|p| p.display()));
    }

    fn paths(&mut self, key: &str, v: &[PathBuf]) {
        if !v.is_empty() {
            let joined: Vec<String> = v.iter().map(|p| p.display().to_string()).collect();
            self.0.push((key.into(), joined.join(",")));
        }
    }
}

impl Cli {
    /// Flag values as config keys, in the order they are applied.
    pub fn overrides(&self) -> Vec<(String, String)> {
        let mut o = Overrides::default();
        match &self.command {
            Command::Synth(a) => {
                o.opt("posts", &a.posts);
                o.opt("topic", &a.topic);
            }
            Command::BuildLexicon(a) => {
                o.path("corpus", &a.corpus);
                o.path("holdout", &a.holdout);
                o.opt("theta", &a.theta);
                o.path("stoplist", &a.stoplist);
                o.opt("positive_hashtags", &a.seeds.positive);
                o.opt("negative_hashtags", &a.seeds.negative);
            }
            Command::Train(a) => {
                o.path("corpus", &a.corpus);
                o.path("holdout", &a.holdout);
                o.path("lexicon", &a.lexicon);
                o.path("vocab", &a.vocab);
                o.path("trace", &a.trace);
                o.path("stoplist", &a.stoplist);
            }
            Command::Classify(a) => {
                o.path("corpus", &a.corpus);
                o.path("lexicon", &a.lexicon);
                o.path("model", &a.model);
                o.path("vocab", &a.vocab);
                o.path("stoplist", &a.stoplist);
            }
            Command::Rate(a) => {
                o.paths("corpus", &a.corpus);
                o.paths("scored", &a.scored);
                o.opt("rate_denominator", &a.denominator);
            }
            Command::Evaluate(a) => {
                o.path("corpus", &a.corpus);
                o.path("lexicon", &a.lexicon);
                o.path("model", &a.model);
                o.path("vocab", &a.vocab);
                o.path("stoplist", &a.stoplist);
            }
        }
        o.opt("seed", &self.seed);
        o.path("out", &self.out);
        o.0.extend(self.set.iter().cloned());
        o.0
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let rc = RunConfig::load(cli.config.as_deref(), &cli.overrides())?;
    match cli.command {
        Command::Synth(_) => commands::cmd_synth(&rc).map(drop),
        Command::BuildLexicon(_) => commands::cmd_build_lexicon(&rc).map(drop),
        Command::Train(_) => commands::cmd_train(&rc).map(drop),
        Command::Classify(_) => commands::cmd_classify(&rc).map(drop),
        Command::Rate(_) => commands::cmd_rate(&rc).map(drop),
        Command::Evaluate(_) => commands::cmd_evaluate(&rc).map(drop),
    }
}
