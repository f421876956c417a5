//! Seeded synthetic corpora with known ground truth.
//!
//! Each polar post draws `k` distinct words from exactly one polarity pool
//! and a handful of filler words; its gold class has weight
//! `sign * min(k, 3)`. Neutral posts use filler words only.

use rand::seq::{index, IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::{Corpus, RawPost};
use crate::config::KeyValues;
use crate::polarity::SentimentClass;
use crate::{Error, Result};

pub const DEFAULT_POSITIVE_WORDS: &[&str] = &[
    "good", "great", "happy", "proud", "brave", "super", "love", "glory", "heritage", "culture",
    "tradition", "pride", "strong", "joy", "brilliant", "awesome", "wonderful", "beautiful",
    "honor", "valor", "courage", "respect", "support", "victory", "celebrate", "festival", "unity",
    "legacy", "noble", "fantastic", "excellent", "superb", "bliss", "cheer", "hero", "champion",
    "heart", "admire", "grateful", "vibrant", "delight", "inspire", "triumph", "thrill", "hope",
    "kind", "fair", "bold", "epic", "splendid",
];

pub const DEFAULT_NEGATIVE_WORDS: &[&str] = &[
    "bad", "cruel", "danger", "risky", "unsafe", "harm", "injury", "death", "brutal", "pain",
    "abuse", "torture", "violent", "savage", "shame", "wrong", "illegal", "fear", "terrible",
    "awful", "horrible", "disaster", "tragic", "deadly", "panic", "grief", "threat", "victim",
    "suffer", "misery", "ban", "wound", "gore", "fatal", "reckless", "evil", "toxic", "hurt",
    "cruelty", "stupid", "ugly", "grim", "sad", "angry", "outrage", "protest", "nasty", "hazard",
    "peril", "bleak",
];

pub const DEFAULT_FILLER_WORDS: &[&str] = &[
    "today", "people", "village", "bull", "match", "watch", "crowd", "arena", "event", "year",
    "city", "day", "report", "morning", "evening", "team", "game", "ground", "local", "time",
    "week", "field", "street", "road", "family", "friend", "photo", "video", "live", "update",
    "madurai", "chennai", "pongal", "january", "night", "talk", "story", "place", "sport",
    "market", "the", "is", "at", "this",
];

pub const DEFAULT_POSITIVE_HASHTAGS: &[&str] =
    &["tamizhanhistory", "tamizhanidentity", "tamizhansuper", "tamizhangethu"];
pub const DEFAULT_NEGATIVE_HASHTAGS: &[&str] = &[
    "jallikatunotsafe",
    "lifesuckingjallikatu",
    "riskyjallikatu",
    "dangerousjallikatu",
];
pub const DEFAULT_NEUTRAL_HASHTAGS: &[&str] = &["jallikattu", "pongal2017", "tamilnadu"];

fn owned(words: &[&str]) -> Vec<String> {
    words.iter().map(|w| w.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub topic: String,
    pub posts: usize,
    /// Share of non-neutral posts that are positive.
    pub positive_fraction: f64,
    pub neutral_fraction: f64,
    /// Polar posts carry a seed hashtag of their own side with this probability.
    pub hashtag_rate: f64,
    /// Any post carries a neutral hashtag with this probability.
    pub neutral_hashtag_rate: f64,
    /// Polar posts get one extra word from the opposite pool with this
    /// probability. Their gold class keeps the intended strength.
    pub ambiguity_rate: f64,
    pub caps_rate: f64,
    /// Stretches an existing double letter (`good` → `goooood`).
    pub elongation_rate: f64,
    pub max_strength: usize,
    pub min_filler: usize,
    pub max_filler: usize,
    pub likes_mean: f64,
    pub retweets_mean: f64,
    pub positive_words: Vec<String>,
    pub negative_words: Vec<String>,
    pub filler_words: Vec<String>,
    pub positive_hashtags: Vec<String>,
    pub negative_hashtags: Vec<String>,
    pub neutral_hashtags: Vec<String>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            topic: "jallikattu".into(),
            posts: 1000,
            positive_fraction: 0.5,
            neutral_fraction: 0.0,
            hashtag_rate: 0.9,
            neutral_hashtag_rate: 0.3,
            ambiguity_rate: 0.0,
            caps_rate: 0.0,
            elongation_rate: 0.0,
            max_strength: 3,
            min_filler: 3,
            max_filler: 8,
            likes_mean: 5.0,
            retweets_mean: 2.0,
            positive_words: owned(DEFAULT_POSITIVE_WORDS),
            negative_words: owned(DEFAULT_NEGATIVE_WORDS),
            filler_words: owned(DEFAULT_FILLER_WORDS),
            positive_hashtags: owned(DEFAULT_POSITIVE_HASHTAGS),
            negative_hashtags: owned(DEFAULT_NEGATIVE_HASHTAGS),
            neutral_hashtags: owned(DEFAULT_NEUTRAL_HASHTAGS),
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// Reads generator settings; absent keys keep their defaults.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let d = Self::default();
        Ok(Self {
            topic: kv.get("topic").map_or(d.topic, String::from),
            posts: kv.get_or("posts", d.posts)?,
            positive_fraction: kv.get_or("positive_fraction", d.positive_fraction)?,
            neutral_fraction: kv.get_or("neutral_fraction", d.neutral_fraction)?,
            hashtag_rate: kv.get_or("hashtag_rate", d.hashtag_rate)?,
            neutral_hashtag_rate: kv.get_or("neutral_hashtag_rate", d.neutral_hashtag_rate)?,
            ambiguity_rate: kv.get_or("ambiguity_rate", d.ambiguity_rate)?,
            caps_rate: kv.get_or("caps_rate", d.caps_rate)?,
            elongation_rate: kv.get_or("elongation_rate", d.elongation_rate)?,
            max_strength: kv.get_or("max_strength", d.max_strength)?,
            min_filler: kv.get_or("min_filler", d.min_filler)?,
            max_filler: kv.get_or("max_filler", d.max_filler)?,
            likes_mean: kv.get_or("likes_mean", d.likes_mean)?,
            retweets_mean: kv.get_or("retweets_mean", d.retweets_mean)?,
            positive_words: kv.get_list("positive_words").unwrap_or(d.positive_words),
            negative_words: kv.get_list("negative_words").unwrap_or(d.negative_words),
            filler_words: kv.get_list("filler_words").unwrap_or(d.filler_words),
            positive_hashtags: kv.get_list("positive_hashtags").unwrap_or(d.positive_hashtags),
            negative_hashtags: kv.get_list("negative_hashtags").unwrap_or(d.negative_hashtags),
            neutral_hashtags: kv.get_list("neutral_hashtags").unwrap_or(d.neutral_hashtags),
            seed: kv.get_or("seed", d.seed)?,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.positive_words.is_empty() {
            return Err(Error::EmptyPool("positive_words"));
        }
        if self.negative_words.is_empty() {
            return Err(Error::EmptyPool("negative_words"));
        }
        if self.filler_words.is_empty() {
            return Err(Error::EmptyPool("filler_words"));
        }
        let rates = [
            ("positive_fraction", self.positive_fraction),
            ("neutral_fraction", self.neutral_fraction),
            ("hashtag_rate", self.hashtag_rate),
            ("neutral_hashtag_rate", self.neutral_hashtag_rate),
            ("ambiguity_rate", self.ambiguity_rate),
            ("caps_rate", self.caps_rate),
            ("elongation_rate", self.elongation_rate),
        ];
        for (name, v) in rates {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("{name} = {v} not in [0, 1]")));
            }
        }
        if self.max_strength == 0 || self.min_filler > self.max_filler {
            return Err(Error::InvalidArgument(
                "need max_strength >= 1 and min_filler <= max_filler".into(),
            ));
        }
        if self.likes_mean < 0.0 || self.retweets_mean < 0.0 {
            return Err(Error::InvalidArgument("negative engagement mean".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Pos,
    Neg,
    Neutral,
}

fn count(mean: f64, rng: &mut ChaCha8Rng) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let d: Poisson<f64> = Poisson::new(mean).expect("positive mean");
    d.sample(rng) as u64
}

fn elongate(word: &str, rng: &mut ChaCha8Rng) -> String {
    let chars: Vec<char> = word.chars().collect();
    let Some(i) = (1..chars.len()).find(|&i| chars[i] == chars[i - 1] && chars[i].is_alphabetic())
    else {
        return word.to_string();
    };
    let extra = rng.random_range(1..=3);
    let mut out: String = chars[..i].iter().collect();
    out.extend(std::iter::repeat_n(chars[i], extra));
    out.extend(&chars[i..]);
    out
}

/// Generates `config.posts` posts. Identical `(config, seed)` give identical
/// corpora.
pub fn synth_corpus(config: &SynthConfig, seed: u64) -> Result<Corpus> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let n = config.posts;
    let n_neutral = (n as f64 * config.neutral_fraction).round() as usize;
    let n_pos = ((n - n_neutral) as f64 * config.positive_fraction).round() as usize;
    let mut sides: Vec<Side> = std::iter::repeat_n(Side::Pos, n_pos)
        .chain(std::iter::repeat_n(Side::Neg, n - n_neutral - n_pos))
        .chain(std::iter::repeat_n(Side::Neutral, n_neutral))
        .collect();
    sides.shuffle(&mut rng);

    let width = n.max(1).to_string().len();
    let mut posts = Vec::with_capacity(n);
    for (i, side) in sides.into_iter().enumerate() {
        let (pool, other, seeds) = match side {
            Side::Pos => (&config.positive_words, &config.negative_words, &config.positive_hashtags),
            Side::Neg => (&config.negative_words, &config.positive_words, &config.negative_hashtags),
            Side::Neutral => (&config.positive_words, &config.negative_words, &config.neutral_hashtags),
        };

        let n_filler = rng.random_range(config.min_filler..=config.max_filler);
        let mut words: Vec<&str> = (0..n_filler)
            .map(|_| config.filler_words.choose(&mut rng).expect("non-empty").as_str())
            .collect();
        let gold = match side {
            Side::Neutral => SentimentClass::Neutral,
            _ => {
                let k = rng.random_range(1..=config.max_strength).min(pool.len());
                words.extend(index::sample(&mut rng, pool.len(), k).iter().map(|j| pool[j].as_str()));
                if rng.random_bool(config.ambiguity_rate) {
                    words.push(other.choose(&mut rng).expect("non-empty"));
                }
                let sign = if side == Side::Pos { 1 } else { -1 };
                SentimentClass::from_weight(sign * k.min(3) as i64).expect("weight in range")
            }
        };
        words.shuffle(&mut rng);

        let mut parts: Vec<String> = words
            .into_iter()
            .map(|w| {
                let w = if rng.random_bool(config.elongation_rate) {
                    elongate(w, &mut rng)
                } else {
                    w.to_string()
                };
                if rng.random_bool(config.caps_rate) {
                    w.to_uppercase()
                } else {
                    w
                }
            })
            .collect();

        let mut hashtags = Vec::new();
        if side != Side::Neutral && !seeds.is_empty() && rng.random_bool(config.hashtag_rate) {
            hashtags.push(seeds.choose(&mut rng).expect("non-empty").clone());
        }
        if !config.neutral_hashtags.is_empty() && rng.random_bool(config.neutral_hashtag_rate) {
            hashtags.push(config.neutral_hashtags.choose(&mut rng).expect("non-empty").clone());
        }
        parts.extend(hashtags.iter().map(|h| format!("#{h}")));

        posts.push(RawPost {
            id: format!("s{i:0width$}"),
            text: parts.join(" "),
            hashtags,
            likes: count(config.likes_mean, &mut rng),
            retweets: count(config.retweets_mean, &mut rng),
            gold_class: Some(gold),
        });
    }
    Ok(Corpus::new(config.topic.clone(), posts))
}
