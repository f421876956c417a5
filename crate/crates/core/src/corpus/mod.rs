//! Post ingestion, deduplication, splitting and synthetic corpora.
//!
//! Corpus files hold one JSON object per line:
//!
//! ```text
//! {"id":"t1","text":"#tamizhansuper proud day","hashtags":["tamizhansuper"],"likes":3,"retweets":1,"gold_class":"weak_pos"}
//! ```
//!
//! `id` and `text` are required. `hashtags` defaults to the hashtags found in
//! the text, `likes` and `retweets` to 0, `gold_class` to none. Unknown
//! fields are ignored.

mod synth;

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::polarity::SentimentClass;
use crate::preprocess::{tokenize, TokenKind};
use crate::{Error, Result};

pub use synth::{
    synth_corpus, SynthConfig, DEFAULT_FILLER_WORDS, DEFAULT_NEGATIVE_HASHTAGS, DEFAULT_NEGATIVE_WORDS,
    DEFAULT_NEUTRAL_HASHTAGS, DEFAULT_POSITIVE_HASHTAGS, DEFAULT_POSITIVE_WORDS,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPost {
    pub id: String,
    pub text: String,
    pub hashtags: Vec<String>,
    pub likes: u64,
    pub retweets: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gold_class: Option<SentimentClass>,
}

impl RawPost {
    /// A post with hashtags taken from `text` and zero engagement.
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        let hashtags = extract_hashtags(&text);
        Self {
            id: id.into(),
            text,
            hashtags,
            likes: 0,
            retweets: 0,
            gold_class: None,
        }
    }
}

fn extract_hashtags(text: &str) -> Vec<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| t.kind == TokenKind::Hashtag)
        .map(|t| t.surface.trim_start_matches('#').to_lowercase())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    /// The item of interest the posts talk about.
    pub topic: String,
    pub posts: Vec<RawPost>,
}

impl Corpus {
    pub fn new(topic: impl Into<String>, posts: Vec<RawPost>) -> Self {
        Self {
            topic: topic.into(),
            posts,
        }
    }

    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }

    /// Serializes to the line-delimited record format.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for p in &self.posts {
            out.push_str(&serde_json::to_string(p).expect("posts serialize"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_jsonl().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

/// A line that could not be ingested.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reject {
    /// 1-based line number.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadedCorpus {
    pub corpus: Corpus,
    pub rejects: Vec<Reject>,
}

impl LoadedCorpus {
    /// Fails on the first rejected line instead of reporting it.
    pub fn strict(self, path: impl AsRef<Path>) -> Result<Corpus> {
        match self.rejects.into_iter().next() {
            None => Ok(self.corpus),
            Some(r) => Err(Error::Parse {
                path: path.as_ref().to_path_buf(),
                line: r.line,
                msg: r.reason,
            }),
        }
    }
}

#[derive(Deserialize)]
struct RecordIn {
    id: Option<String>,
    text: Option<String>,
    hashtags: Option<Vec<String>>,
    likes: Option<i64>,
    retweets: Option<i64>,
    gold_class: Option<String>,
}

fn parse_record(line: &str) -> std::result::Result<RawPost, String> {
    let rec: RecordIn = serde_json::from_str(line).map_err(|e| format!("malformed record: {e}"))?;
    let id = rec.id.ok_or("missing required field id")?;
    let text = rec.text.ok_or("missing required field text")?;
    let count = |v: Option<i64>, name: &str| match v {
        Some(n) if n < 0 => Err(format!("negative {name}: {n}")),
        Some(n) => Ok(n as u64),
        None => Ok(0),
    };
    let likes = count(rec.likes, "likes")?;
    let retweets = count(rec.retweets, "retweets")?;
    let gold_class = rec
        .gold_class
        .map(|g| g.parse::<SentimentClass>().map_err(|e| e.to_string()))
        .transpose()?;
    let hashtags = match rec.hashtags {
        Some(h) => h
            .into_iter()
            .map(|t| t.trim_start_matches('#').to_lowercase())
            .collect(),
        None => extract_hashtags(&text),
    };
    Ok(RawPost {
        id,
        text,
        hashtags,
        likes,
        retweets,
        gold_class,
    })
}

/// Parses corpus records from a string. Blank lines are skipped; bad lines
/// and repeated ids are reported as rejects.
pub fn parse_corpus(topic: &str, text: &str) -> LoadedCorpus {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    // Parsed in parallel, merged in file order.
    let parsed: Vec<_> = lines
        .par_iter()
        .map(|&(i, l)| (i + 1, parse_record(l)))
        .collect();

    let mut seen = HashSet::new();
    let mut posts = Vec::with_capacity(parsed.len());
    let mut rejects = Vec::new();
    for (line, res) in parsed {
        match res {
            Ok(p) if !seen.insert(p.id.clone()) => rejects.push(Reject {
                line,
                reason: format!("duplicate id {:?}", p.id),
            }),
            Ok(p) => posts.push(p),
            Err(reason) => rejects.push(Reject { line, reason }),
        }
    }
    LoadedCorpus {
        corpus: Corpus::new(topic, posts),
        rejects,
    }
}

/// Loads a corpus file; the topic is the file stem.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<LoadedCorpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let topic = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(parse_corpus(&topic, &text))
}

/// Case-folded, whitespace-collapsed text.
pub fn dedupe_key(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Keeps the first post for each [`dedupe_key`], preserving order.
pub fn dedupe(corpus: Corpus) -> Corpus {
    let mut seen = HashSet::new();
    let posts = corpus
        .posts
        .into_iter()
        .filter(|p| seen.insert(dedupe_key(&p.text)))
        .collect();
    Corpus {
        topic: corpus.topic,
        posts,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

/// Seeded shuffle, then cut at `round(train_fraction * N)`. Each side keeps
/// the original relative order of its posts.
pub fn split(corpus: &Corpus, spec: SplitSpec) -> Result<(Corpus, Corpus)> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train_fraction {} not in (0, 1)",
            spec.train_fraction
        )));
    }
    let n = corpus.len();
    let n_train = (spec.train_fraction * n as f64).round() as usize;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let (train_idx, test_idx) = idx.split_at(n_train);
    let pick = |ids: &[usize]| {
        let mut ids = ids.to_vec();
        ids.sort_unstable();
        Corpus::new(
            corpus.topic.clone(),
            ids.into_iter().map(|i| corpus.posts[i].clone()).collect(),
        )
    };
    Ok((pick(train_idx), pick(test_idx)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post(id: &str, text: &str) -> RawPost {
        RawPost::new(id, text)
    }

    #[test]
    fn loads_valid_lines_in_order() {
        let text = r##"{"id":"a","text":"one"}
{"id":"b","text":"two #Tag","likes":2}
{"id":"c","text":"three","hashtags":["#X"],"gold_class":"mod_pos"}
"##;
        let loaded = parse_corpus("t", text);
        assert!(loaded.rejects.is_empty());
        let ids: Vec<&str> = loaded.corpus.posts.iter().map(|p| p.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert_eq!(loaded.corpus.posts[1].hashtags, ["tag"]);
        assert_eq!(loaded.corpus.posts[1].likes, 2);
        assert_eq!(loaded.corpus.posts[2].hashtags, ["x"]);
        assert_eq!(loaded.corpus.posts[2].gold_class, Some(SentimentClass::ModPos));
    }

    #[test]
    fn malformed_lines_are_reported() {
        let text = "{\"id\":\"a\",\"text\":\"ok\"}\nnot json\n{\"text\":\"no id\"}\n{\"id\":\"b\",\"text\":\"x\",\"likes\":-1}\n{\"id\":\"a\",\"text\":\"dup\"}\n{\"id\":\"c\",\"text\":\"x\",\"gold_class\":\"meh\"}\n";
        let loaded = parse_corpus("t", text);
        assert_eq!(loaded.corpus.len(), 1);
        let lines: Vec<usize> = loaded.rejects.iter().map(|r| r.line).collect();
        assert_eq!(lines, [2, 3, 4, 5, 6]);
        assert!(loaded.rejects[1].reason.contains("id"));
        assert!(loaded.rejects[2].reason.contains("negative likes"));
        assert!(loaded.clone().strict("f").is_err());
    }

    #[test]
    fn missing_file_is_an_error() {
        assert!(matches!(load_corpus("/nonexistent/x.jsonl"), Err(Error::Io { .. })));
    }

    #[test]
    fn file_roundtrip_is_a_fixed_point() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("topic.jsonl");
        let mut c = Corpus::new("topic", vec![post("1", "héllo \"world\" #Pride"), post("2", "x")]);
        c.posts[1].gold_class = Some(SentimentClass::StrongNeg);
        c.posts[1].retweets = 9;
        c.save(&path).unwrap();
        let bytes = fs::read(&path).unwrap();
        let back = load_corpus(&path).unwrap().strict(&path).unwrap();
        assert_eq!(back, c);
        back.save(&path).unwrap();
        assert_eq!(fs::read(&path).unwrap(), bytes);
    }

    #[test]
    fn dedupe_examples() {
        let c = Corpus::new("t", vec![post("1", "A"), post("2", "A"), post("3", "B")]);
        let ids: Vec<String> = dedupe(c).posts.into_iter().map(|p| p.id).collect();
        assert_eq!(ids, ["1", "3"]);
        let c = Corpus::new("t", vec![post("1", "x"), post("2", "y")]);
        assert_eq!(dedupe(c.clone()), c);
        let c = Corpus::new("t", vec![post("1", "Good  Day"), post("2", "good day ")]);
        assert_eq!(dedupe(c).len(), 1);
    }

    #[test]
    fn split_examples() {
        let c = Corpus::new("t", (0..10).map(|i| post(&i.to_string(), "x")).collect());
        let spec = SplitSpec {
            train_fraction: 0.8,
            seed: 7,
        };
        let (a, b) = split(&c, spec).unwrap();
        assert_eq!((a.len(), b.len()), (8, 2));
        assert_eq!(split(&c, spec).unwrap(), (a, b));
        assert!(matches!(split(&Corpus::default(), spec), Err(Error::EmptyCorpus)));
        let bad = SplitSpec {
            train_fraction: 1.0,
            seed: 7,
        };
        assert!(split(&c, bad).is_err());
    }
}
