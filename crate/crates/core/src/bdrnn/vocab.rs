use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::EncodedSequence;
use crate::preprocess::Document;
use crate::{Error, Result};

pub const PAD: usize = 0;
pub const OOV: usize = 1;

/// Token norm to id. Ids 0 and 1 are reserved for padding and unknown words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn from_words(words: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i + 2).is_some() {
                return Err(Error::InvalidArgument(format!("word {w:?} repeated in vocabulary")));
            }
        }
        Ok(Self { words, index })
    }

    /// Size including the two reserved ids.
    pub fn len(&self) -> usize {
        self.words.len() + 2
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> usize {
        self.index.get(word).copied().unwrap_or(OOV)
    }

    pub fn word(&self, id: usize) -> Option<&str> {
        id.checked_sub(2).and_then(|i| self.words.get(i)).map(String::as_str)
    }

    /// Maps a document to ids, keeping at most `max_len` leading tokens.
    /// An empty document becomes a single OOV token.
    pub fn encode(&self, doc: &Document, max_len: usize) -> EncodedSequence {
        let mut ids: Vec<usize> = doc.norms().take(max_len).map(|w| self.id(w)).collect();
        if ids.is_empty() {
            ids.push(OOV);
        }
        EncodedSequence::new(ids)
    }

    /// First 8 bytes (little endian) of SHA-256 over the vocabulary file.
    pub fn hash(&self) -> u64 {
        let digest = Sha256::digest(self.to_text().as_bytes());
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }

    /// `word<TAB>id` per line, ids ascending from 2.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, w) in self.words.iter().enumerate() {
            writeln!(out, "{w}\t{}", i + 2).expect("string write");
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut words = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let parsed = line
                .rsplit_once('\t')
                .and_then(|(w, id)| id.parse::<usize>().ok().map(|id| (w, id)));
            match parsed {
                Some((w, id)) if id == i + 2 => words.push(w.to_string()),
                _ => {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line: i + 1,
                        msg: format!("expected word<TAB>{}", i + 2),
                    })
                }
            }
        }
        Self::from_words(words)
    }
}

/// Most frequent norms first, ties in lexicographic order, capped so the
/// total size including PAD and OOV is at most `max_size`.
pub fn build_vocab(docs: &[Document], max_size: usize) -> Result<Vocab> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if max_size < 2 {
        return Err(Error::InvalidArgument("vocabulary size must be >= 2".into()));
    }
    let mut freq: BTreeMap<&str, u64> = BTreeMap::new();
    for d in docs {
        for w in d.norms() {
            *freq.entry(w).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, u64)> = freq.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    ranked.truncate(max_size - 2);
    Vocab::from_words(ranked.into_iter().map(|(w, _)| w.to_string()).collect())
}
