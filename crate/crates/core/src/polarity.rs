//! Message polarity, seven-way bucketing and class weights.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::lexicon::Lexicon;
use crate::preprocess::{Document, TokenKind};
use crate::{Error, Result};

/// Seven-way sentiment class, ordered from most negative to most positive.
///
/// The discriminant is the class index used by the classifier and the
/// confusion matrix; [`SentimentClass::weight`] is the signed weight in
/// `-3..=3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SentimentClass {
    StrongNeg = 0,
    ModNeg = 1,
    WeakNeg = 2,
    Neutral = 3,
    WeakPos = 4,
    ModPos = 5,
    StrongPos = 6,
}

impl SentimentClass {
    pub const COUNT: usize = 7;

    pub const ALL: [SentimentClass; 7] = [
        SentimentClass::StrongNeg,
        SentimentClass::ModNeg,
        SentimentClass::WeakNeg,
        SentimentClass::Neutral,
        SentimentClass::WeakPos,
        SentimentClass::ModPos,
        SentimentClass::StrongPos,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn weight(self) -> i64 {
        self as i64 - 3
    }

    /// Inverse of [`weight`](Self::weight); `None` outside `-3..=3`.
    pub fn from_weight(weight: i64) -> Option<Self> {
        if (-3..=3).contains(&weight) {
            Self::from_index((weight + 3) as usize)
        } else {
            None
        }
    }

    pub fn is_positive(self) -> bool {
        self.weight() > 0
    }

    /// The class with the opposite weight.
    pub fn mirror(self) -> Self {
        Self::from_weight(-self.weight()).expect("weights are symmetric")
    }

    pub fn name(self) -> &'static str {
        match self {
            SentimentClass::StrongNeg => "strong_neg",
            SentimentClass::ModNeg => "mod_neg",
            SentimentClass::WeakNeg => "weak_neg",
            SentimentClass::Neutral => "neutral",
            SentimentClass::WeakPos => "weak_pos",
            SentimentClass::ModPos => "mod_pos",
            SentimentClass::StrongPos => "strong_pos",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SentimentClass::StrongNeg => "Strongly negative",
            SentimentClass::ModNeg => "Moderately negative",
            SentimentClass::WeakNeg => "Weakly negative",
            SentimentClass::Neutral => "Neutral",
            SentimentClass::WeakPos => "Weakly positive",
            SentimentClass::ModPos => "Moderately positive",
            SentimentClass::StrongPos => "Strongly positive",
        }
    }
}

impl fmt::Display for SentimentClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SentimentClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown sentiment class {s:?}")))
    }
}

/// Integer weight of a class.
pub fn class_weight(class: SentimentClass) -> i64 {
    class.weight()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolarityScore {
    pub post_id: String,
    /// Sum of word scores.
    pub p: i64,
    /// Number of tokens with a nonzero score.
    pub n_scored: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolarityOptions {
    /// Factor applied to the score of emphasized (all-caps or elongated)
    /// tokens. 1 disables emphasis.
    pub emphasis_multiplier: i64,
}

impl Default for PolarityOptions {
    fn default() -> Self {
        Self {
            emphasis_multiplier: 1,
        }
    }
}

/// Sums lexicon scores over the word and hashtag tokens of `doc`.
pub fn message_polarity(doc: &Document, lex: &Lexicon) -> PolarityScore {
    message_polarity_with(doc, lex, PolarityOptions::default())
}

pub fn message_polarity_with(doc: &Document, lex: &Lexicon, opts: PolarityOptions) -> PolarityScore {
    let mut p = 0i64;
    let mut n_scored = 0usize;
    for tok in &doc.tokens {
        if !matches!(tok.kind, TokenKind::Word | TokenKind::Hashtag) {
            continue;
        }
        let s = lex.lookup(&tok.norm);
        if s != 0 {
            n_scored += 1;
            p += if tok.emphasis {
                s * opts.emphasis_multiplier
            } else {
                s
            };
        }
    }
    PolarityScore {
        post_id: doc.post_id.clone(),
        p,
        n_scored,
    }
}

/// Magnitude cut points for weak, moderate and strong classes.
///
/// The default `(1, 2, 3)` maps a score to `sign(p) * min(|p|, 3)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BucketThresholds {
    pub weak: i64,
    pub moderate: i64,
    pub strong: i64,
}

impl Default for BucketThresholds {
    fn default() -> Self {
        Self {
            weak: 1,
            moderate: 2,
            strong: 3,
        }
    }
}

impl BucketThresholds {
    pub fn new(weak: i64, moderate: i64, strong: i64) -> Result<Self> {
        if !(1 <= weak && weak <= moderate && moderate <= strong) {
            return Err(Error::InvalidArgument(format!(
                "bucket thresholds must satisfy 1 <= weak <= moderate <= strong, got ({weak}, {moderate}, {strong})"
            )));
        }
        Ok(Self {
            weak,
            moderate,
            strong,
        })
    }

    pub fn classify(&self, p: i64) -> SentimentClass {
        let m = p.unsigned_abs();
        let level = if m >= self.strong as u64 {
            3
        } else if m >= self.moderate as u64 {
            2
        } else if m >= self.weak as u64 {
            1
        } else {
            0
        };
        SentimentClass::from_weight(p.signum() * level).expect("level within 0..=3")
    }
}

pub fn bucket(score: &PolarityScore) -> SentimentClass {
    bucket_value(score.p)
}

pub fn bucket_value(p: i64) -> SentimentClass {
    BucketThresholds::default().classify(p)
}
