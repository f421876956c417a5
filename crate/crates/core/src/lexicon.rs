//! Word repository built from hashtag-seeded posts.
//!
//! Posts carrying only positive seed hashtags form the positive side, posts
//! carrying only negative ones the negative side. A word seen `n` times with
//! `pos` of them on the positive side gets `+1` when `pos / n >= theta`,
//! `-1` when `neg / n >= theta`, and `0` otherwise. The majority side must
//! also win strictly, which keeps scores antisymmetric and monotone in theta
//! even below 0.5.
//!
//! File format (`save`/`load`, bit-exact round trip):
//!
//! ```text
//! #lexicon<TAB>theta=0.7<TAB>min_count=3
//! word<TAB>score<TAB>pos_count<TAB>neg_count
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::{Corpus, RawPost};
use crate::polarity::message_polarity;
use crate::preprocess::{Document, Preprocessor, TokenKind};
use crate::{Error, Result};

pub const THETA_MIN: f64 = 0.4;
pub const THETA_MAX: f64 = 0.8;
pub const DEFAULT_THETA: f64 = 0.7;
pub const DEFAULT_MIN_COUNT: u64 = 3;

/// The calibration grid 0.40, 0.45, ..., 0.80.
pub fn theta_grid() -> Vec<f64> {
    (0..=8).map(|i| (40 + 5 * i) as f64 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedSpec {
    pub positive_hashtags: BTreeSet<String>,
    pub negative_hashtags: BTreeSet<String>,
    /// Minimum share of a post's seed hashtags that must come from one side
    /// for the post to join it. 1.0 admits single-sided posts only.
    pub upper_polarity_threshold: f64,
}

impl SeedSpec {
    pub fn new<I, S>(positive: I, negative: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let norm = |it: I| -> BTreeSet<String> {
            it.into_iter()
                .map(|s| s.as_ref().trim_start_matches('#').to_lowercase())
                .collect()
        };
        let spec = Self {
            positive_hashtags: norm(positive),
            negative_hashtags: norm(negative),
            upper_polarity_threshold: 1.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_threshold(mut self, t: f64) -> Result<Self> {
        self.upper_polarity_threshold = t;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, set) in [("positive", &self.positive_hashtags), ("negative", &self.negative_hashtags)] {
            if !(2..=8).contains(&set.len()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} seed hashtags: need 2 to 8, got {}",
                    set.len()
                )));
            }
        }
        if let Some(h) = self.positive_hashtags.intersection(&self.negative_hashtags).next() {
            return Err(Error::InvalidArgument(format!("hashtag {h:?} seeds both sides")));
        }
        let t = self.upper_polarity_threshold;
        if !(t > 0.5 && t <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "upper polarity threshold {t} not in (0.5, 1]"
            )));
        }
        Ok(())
    }

    fn side(&self, post: &RawPost) -> Option<bool> {
        let pos = post.hashtags.iter().filter(|h| self.positive_hashtags.contains(*h)).count();
        let neg = post.hashtags.iter().filter(|h| self.negative_hashtags.contains(*h)).count();
        let total = (pos + neg) as f64;
        if total == 0.0 {
            None
        } else if pos as f64 / total >= self.upper_polarity_threshold {
            Some(true)
        } else if neg as f64 / total >= self.upper_polarity_threshold {
            Some(false)
        } else {
            None
        }
    }

    pub fn all_hashtags(&self) -> BTreeSet<String> {
        self.positive_hashtags
            .union(&self.negative_hashtags)
            .cloned()
            .collect()
    }
}

/// Splits `corpus` into (positive-seeded, negative-seeded) sub-corpora.
pub fn collect_seed_posts(corpus: &Corpus, seeds: &SeedSpec) -> Result<(Corpus, Corpus)> {
    let mut pos = Corpus::new(corpus.topic.clone(), Vec::new());
    let mut neg = Corpus::new(corpus.topic.clone(), Vec::new());
    for p in &corpus.posts {
        match seeds.side(p) {
            Some(true) => pos.posts.push(p.clone()),
            Some(false) => neg.posts.push(p.clone()),
            None => {}
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::InsufficientSeedCoverage {
            positive: pos.len(),
            negative: neg.len(),
        });
    }
    Ok((pos, neg))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WordStats {
    pub pos: u64,
    pub neg: u64,
}

impl WordStats {
    pub fn total(&self) -> u64 {
        self.pos + self.neg
    }

    fn score(&self, theta: f64) -> i64 {
        let n = self.total() as f64;
        if self.pos > self.neg && self.pos as f64 / n >= theta {
            1
        } else if self.neg > self.pos && self.neg as f64 / n >= theta {
            -1
        } else {
            0
        }
    }
}

/// Per-word occurrence counts on each side.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordCounts(pub BTreeMap<String, WordStats>);

impl WordCounts {
    fn count_side(docs: &[Document], exclude: &BTreeSet<String>) -> BTreeMap<String, u64> {
        docs.par_iter()
            .fold(BTreeMap::new, |mut acc: BTreeMap<String, u64>, doc| {
                for t in &doc.tokens {
                    if matches!(t.kind, TokenKind::Word | TokenKind::Hashtag)
                        && !exclude.contains(&t.norm)
                    {
                        *acc.entry(t.norm.clone()).or_default() += 1;
                    }
                }
                acc
            })
            .reduce(BTreeMap::new, |mut a, b| {
                for (k, v) in b {
                    *a.entry(k).or_default() += v;
                }
                a
            })
    }

    pub fn from_documents(pos: &[Document], neg: &[Document], exclude: &BTreeSet<String>) -> Self {
        let mut out: BTreeMap<String, WordStats> = BTreeMap::new();
        for (w, c) in Self::count_side(pos, exclude) {
            out.entry(w).or_default().pos += c;
        }
        for (w, c) in Self::count_side(neg, exclude) {
            out.entry(w).or_default().neg += c;
        }
        Self(out)
    }

    pub fn lexicon(&self, theta: f64, min_count: u64) -> Result<Lexicon> {
        check_theta(theta)?;
        let mut scores = BTreeMap::new();
        let mut stats = BTreeMap::new();
        for (w, s) in &self.0 {
            if s.total() >= min_count.max(1) {
                scores.insert(w.clone(), s.score(theta));
                stats.insert(w.clone(), *s);
            }
        }
        Ok(Lexicon {
            scores,
            theta,
            min_count,
            stats,
        })
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if (THETA_MIN..=THETA_MAX).contains(&theta) {
        Ok(())
    } else {
        Err(Error::InvalidTheta(theta))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    scores: BTreeMap<String, i64>,
    theta: f64,
    min_count: u64,
    stats: BTreeMap<String, WordStats>,
}

impl Lexicon {
    /// A lexicon from explicit scores, with empty occurrence stats.
    pub fn from_scores(scores: BTreeMap<String, i64>, theta: f64, min_count: u64) -> Result<Self> {
        check_theta(theta)?;
        if let Some((w, s)) = scores.iter().find(|(_, s)| !(-1..=1).contains(*s)) {
            return Err(Error::InvalidArgument(format!("score {s} for {w:?} not in -1..=1")));
        }
        let stats = scores.keys().map(|w| (w.clone(), WordStats::default())).collect();
        Ok(Self {
            scores,
            theta,
            min_count,
            stats,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn lookup(&self, word: &str) -> i64 {
        self.scores.get(word).copied().unwrap_or(0)
    }

    pub fn stats(&self, word: &str) -> Option<WordStats> {
        self.stats.get(word).copied()
    }

    pub fn scores(&self) -> impl Iterator<Item = (&str, i64)> {
        self.scores.iter().map(|(w, s)| (w.as_str(), *s))
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Number of words scored (-1, 0, +1).
    pub fn sign_counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for s in self.scores.values() {
            c[(*s + 1) as usize] += 1;
        }
        c
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("#lexicon\ttheta={}\tmin_count={}\n", self.theta, self.min_count);
        for (w, s) in &self.scores {
            let st = self.stats.get(w).copied().unwrap_or_default();
            writeln!(out, "{w}\t{s}\t{}\t{}", st.pos, st.neg).expect("string write");
        }
        out
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let perr = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| perr(1, "empty lexicon file".into()))?;
        let mut fields = header.split('\t');
        if fields.next() != Some("#lexicon") {
            return Err(perr(1, "missing #lexicon header".into()));
        }
        let mut theta = None;
        let mut min_count = None;
        for f in fields {
            match f.split_once('=') {
                Some(("theta", v)) => theta = v.parse::<f64>().ok(),
                Some(("min_count", v)) => min_count = v.parse::<u64>().ok(),
                _ => return Err(perr(1, format!("unknown header field {f:?}"))),
            }
        }
        let theta = theta.ok_or_else(|| perr(1, "header lacks theta".into()))?;
        let min_count = min_count.ok_or_else(|| perr(1, "header lacks min_count".into()))?;
        check_theta(theta)?;

        let mut scores = BTreeMap::new();
        let mut stats = BTreeMap::new();
        for (i, line) in lines.enumerate() {
            let cols: Vec<&str> = line.split('\t').collect();
            let bad = || perr(i + 2, format!("bad lexicon line {line:?}"));
            let (w, s) = match cols.as_slice() {
                [w, s] | [w, s, _, _] => (*w, s.parse::<i64>().map_err(|_| bad())?),
                _ => return Err(bad()),
            };
            if !(-1..=1).contains(&s) {
                return Err(bad());
            }
            let st = if cols.len() == 4 {
                WordStats {
                    pos: cols[2].parse().map_err(|_| bad())?,
                    neg: cols[3].parse().map_err(|_| bad())?,
                }
            } else {
                WordStats::default()
            };
            scores.insert(w.to_string(), s);
            stats.insert(w.to_string(), st);
        }
        Ok(Self {
            scores,
            theta,
            min_count,
            stats,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, path)
    }
}

/// Score of `word` in `lex`; 0 when unknown.
pub fn lookup(lex: &Lexicon, word: &str) -> i64 {
    lex.lookup(word)
}

/// Outcome of the theta grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub theta: f64,
    /// (theta, holdout sign error rate) for every grid point.
    pub grid: Vec<(f64, f64)>,
}

/// Builds lexicons over preprocessed text.
#[derive(Debug, Clone)]
pub struct LexiconBuilder {
    pub preprocessor: Preprocessor,
    pub min_count: u64,
    /// Norms never scored (the seed hashtags, which are the supervision signal).
    pub exclude: BTreeSet<String>,
}

impl Default for LexiconBuilder {
    fn default() -> Self {
        Self {
            preprocessor: Preprocessor::default(),
            min_count: DEFAULT_MIN_COUNT,
            exclude: BTreeSet::new(),
        }
    }
}

impl LexiconBuilder {
    pub fn new(preprocessor: Preprocessor, seeds: &SeedSpec) -> Self {
        Self {
            preprocessor,
            exclude: seeds.all_hashtags(),
            ..Default::default()
        }
    }

    pub fn count(&self, pos: &Corpus, neg: &Corpus) -> Result<WordCounts> {
        if pos.is_empty() || neg.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let pd = self.preprocessor.process_all(&pos.posts);
        let nd = self.preprocessor.process_all(&neg.posts);
        Ok(WordCounts::from_documents(&pd, &nd, &self.exclude))
    }

    pub fn score_words(&self, pos: &Corpus, neg: &Corpus, theta: f64) -> Result<Lexicon> {
        check_theta(theta)?;
        self.count(pos, neg)?.lexicon(theta, self.min_count)
    }

    /// Grid search for the theta minimizing the holdout sign error. Ties go
    /// to the grid point closest to 0.70, then to the lower one.
    pub fn calibrate(&self, pos: &Corpus, neg: &Corpus, holdout: &Corpus) -> Result<Calibration> {
        if holdout.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let unlabeled = holdout.posts.iter().filter(|p| p.gold_class.is_none()).count();
        if unlabeled > 0 {
            return Err(Error::UnlabeledHoldout(unlabeled));
        }
        let counts = self.count(pos, neg)?;
        let docs = self.preprocessor.process_all(&holdout.posts);
        let golds: Vec<i64> = holdout
            .posts
            .iter()
            .map(|p| p.gold_class.expect("checked").weight().signum())
            .collect();

        let mut grid = Vec::new();
        for theta in theta_grid() {
            let lex = counts.lexicon(theta, self.min_count)?;
            let wrong = docs
                .iter()
                .zip(&golds)
                .filter(|(d, g)| message_polarity(d, &lex).p.signum() != **g)
                .count();
            grid.push((theta, wrong as f64 / docs.len() as f64));
        }
        let best = grid.iter().map(|g| g.1).fold(f64::INFINITY, f64::min);
        let theta = grid
            .iter()
            .filter(|g| g.1 == best)
            .map(|g| g.0)
            .min_by(|a, b| {
                let da = (a - DEFAULT_THETA).abs();
                let db = (b - DEFAULT_THETA).abs();
                da.total_cmp(&db).then(a.total_cmp(b))
            })
            .expect("grid is non-empty");
        Ok(Calibration { theta, grid })
    }
}

/// [`LexiconBuilder::score_words`] with default settings.
pub fn score_words(pos: &Corpus, neg: &Corpus, theta: f64) -> Result<Lexicon> {
    LexiconBuilder::default().score_words(pos, neg, theta)
}

/// [`LexiconBuilder::calibrate`] with default settings.
pub fn calibrate_theta(pos: &Corpus, neg: &Corpus, holdout: &Corpus) -> Result<f64> {
    Ok(LexiconBuilder::default().calibrate(pos, neg, holdout)?.theta)
}
