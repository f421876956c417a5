use std::path::{Path, PathBuf};

use birnn_sentiment::bdrnn::Hyperparams;
use birnn_sentiment::config::KeyValues;
use birnn_sentiment::impact::RateDenominator;
use birnn_sentiment::lexicon::{SeedSpec, DEFAULT_MIN_COUNT};
use birnn_sentiment::preprocess::{ExpansionMap, Preprocessor, StopList};

use crate::CliError;

/// Largest vocabulary built by `train`, reserved ids included.
pub const DEFAULT_MAX_VOCAB: usize = 20_000;

/// Everything a command needs, resolved from the config file and flags.
/// Flags are folded into the same key/value store first, so the two
/// sources use the same key names and flags win.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub kv: KeyValues,
    pub seed: u64,
    pub corpus: Vec<PathBuf>,
    pub holdout: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub stoplist: Option<PathBuf>,
    pub expansions: Option<PathBuf>,
    pub scored: Vec<PathBuf>,
    pub trace: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub hp: Hyperparams,
    pub theta: Option<f64>,
    pub min_count: u64,
    pub max_vocab: usize,
    pub rate_denominator: RateDenominator,
}

fn path(kv: &KeyValues, key: &str) -> Option<PathBuf> {
    kv.get(key).filter(|v| !v.is_empty()).map(PathBuf::from)
}

fn paths(kv: &KeyValues, key: &str) -> Vec<PathBuf> {
    kv.get_list(key).unwrap_or_default().into_iter().map(PathBuf::from).collect()
}

impl RunConfig {
    /// Malformed values are usage errors.
    pub fn from_key_values(kv: KeyValues) -> Result<Self, CliError> {
        Self::resolve(kv).map_err(|e| CliError::Usage(e.to_string()))
    }

    fn resolve(kv: KeyValues) -> birnn_sentiment::Result<Self> {
        let mut hp = Hyperparams::default();
        hp.apply(&kv)?;
        Ok(Self {
            seed: kv.get_or("seed", 0u64)?,
            corpus: paths(&kv, "corpus"),
            holdout: path(&kv, "holdout"),
            lexicon: path(&kv, "lexicon"),
            model: path(&kv, "model"),
            vocab: path(&kv, "vocab"),
            stoplist: path(&kv, "stoplist"),
            expansions: path(&kv, "expansions"),
            scored: paths(&kv, "scored"),
            trace: path(&kv, "trace"),
            out: path(&kv, "out"),
            hp,
            theta: kv.get_parsed("theta")?,
            min_count: kv.get_or("min_count", DEFAULT_MIN_COUNT)?,
            max_vocab: kv.get_or("max_vocab", DEFAULT_MAX_VOCAB)?,
            rate_denominator: kv.get_or("rate_denominator", RateDenominator::Positive)?,
            kv,
        })
    }

    /// Reads `config` (if any), then applies `overrides` in order.
    pub fn load(config: Option<&Path>, overrides: &[(String, String)]) -> Result<Self, CliError> {
        let mut kv = match config {
            Some(p) => KeyValues::load(p).map_err(|e| CliError::Usage(e.to_string()))?,
            None => KeyValues::default(),
        };
        for (k, v) in overrides {
            kv.set(k, v.clone());
        }
        Self::from_key_values(kv)
    }

    pub fn out(&self) -> Result<&Path, CliError> {
        self.out
            .as_deref()
            .ok_or_else(|| CliError::Usage("no output path (--out)".into()))
    }

    pub fn single_corpus(&self) -> Result<&Path, CliError> {
        match self.corpus.as_slice() {
            [one] => Ok(one),
            [] => Err(CliError::Usage("no corpus given (--corpus)".into())),
            _ => Err(CliError::Usage("this command takes exactly one corpus".into())),
        }
    }

    pub fn seeds(&self) -> Result<SeedSpec, CliError> {
        let pos = self.kv.get_list("positive_hashtags").unwrap_or_default();
        let neg = self.kv.get_list("negative_hashtags").unwrap_or_default();
        if pos.is_empty() || neg.is_empty() {
            return Err(CliError::Usage(
                "seed hashtags missing (positive_hashtags and negative_hashtags)".into(),
            ));
        }
        let usage = |e: birnn_sentiment::Error| CliError::Usage(e.to_string());
        let spec = SeedSpec::new(pos, neg).map_err(usage)?;
        match self.kv.get_parsed::<f64>("upper_polarity_threshold").map_err(usage)? {
            Some(t) => spec.with_threshold(t).map_err(usage),
            None => Ok(spec),
        }
    }

    pub fn preprocessor(&self) -> Result<Preprocessor, CliError> {
        let stops = match &self.stoplist {
            Some(p) => StopList::load(p)?,
            None => StopList::english(),
        };
        let expansions = match &self.expansions {
            Some(p) => ExpansionMap::load(p)?,
            None => ExpansionMap::default(),
        };
        Ok(Preprocessor::new(stops, expansions))
    }

    /// Vocabulary file next to `model` unless set explicitly.
    pub fn vocab_path(&self, model: &Path) -> PathBuf {
        self.vocab.clone().unwrap_or_else(|| sibling(model, "vocab"))
    }
}

/// `path` with `.ext` appended to its file name.
pub fn sibling(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}
