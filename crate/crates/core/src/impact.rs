//! Degree of impact per post and rate per item of interest.
//!
//! `doi = w + likes + retweets` and `rate = Σ doi / N_PL`, where `N_PL` counts
//! the records with a positive class weight (or all records, see
//! [`RateDenominator`]). All sums are integral; only the final division is
//! real-valued.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use num_rational::Ratio;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DoIRecord {
    pub post_id: String,
    /// Class weight in -3..=3.
    pub w: i64,
    pub likes: i64,
    pub retweets: i64,
    pub doi: i64,
}

impl DoIRecord {
    pub fn new(post_id: impl Into<String>, w: i64, likes: i64, retweets: i64) -> Result<Self> {
        Ok(Self {
            post_id: post_id.into(),
            w,
            likes,
            retweets,
            doi: degree_of_impact(w, likes, retweets)?,
        })
    }
}

pub fn degree_of_impact(w: i64, likes: i64, retweets: i64) -> Result<i64> {
    if likes < 0 || retweets < 0 {
        return Err(Error::NegativeCount(format!(
            "likes = {likes}, retweets = {retweets}"
        )));
    }
    w.checked_add(likes)
        .and_then(|s| s.checked_add(retweets))
        .ok_or_else(|| Error::InvalidArgument("degree of impact overflows i64".into()))
}

/// Which records count towards the rate denominator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum RateDenominator {
    /// Records with class weight > 0.
    #[default]
    Positive,
    All,
}

impl FromStr for RateDenominator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" => Ok(Self::Positive),
            "all" => Ok(Self::All),
            _ => Err(Error::InvalidArgument(format!(
                "rate_denominator must be positive or all, got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub topic: String,
    pub total_doi: i64,
    pub n_pl: u64,
    pub rate: f64,
    pub records: Vec<DoIRecord>,
}

impl RateReport {
    /// The rate as an exact fraction.
    pub fn exact_rate(&self) -> Ratio<i64> {
        Ratio::new(self.total_doi, self.n_pl as i64)
    }

    /// Header lines, then `post_id<TAB>w<TAB>likes<TAB>retweets<TAB>doi` per
    /// record.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "topic\t{}", self.topic).unwrap();
        writeln!(out, "n_pl\t{}", self.n_pl).unwrap();
        writeln!(out, "total_doi\t{}", self.total_doi).unwrap();
        writeln!(out, "rate\t{}", self.rate).unwrap();
        writeln!(out, "#post_id\tw\tlikes\tretweets\tdoi").unwrap();
        for r in &self.records {
            writeln!(out, "{}\t{}\t{}\t{}\t{}", r.post_id, r.w, r.likes, r.retweets, r.doi).unwrap();
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// Aggregates records with the default (positive-weight) denominator.
pub fn rate(topic: &str, records: Vec<DoIRecord>) -> Result<RateReport> {
    rate_with(topic, records, RateDenominator::Positive)
}

pub fn rate_with(topic: &str, records: Vec<DoIRecord>, denominator: RateDenominator) -> Result<RateReport> {
    let total_doi: i64 = records.iter().map(|r| r.doi).sum();
    let n_pl = match denominator {
        RateDenominator::Positive => records.iter().filter(|r| r.w > 0).count(),
        RateDenominator::All => records.len(),
    } as u64;
    if n_pl == 0 {
        return Err(Error::NoPositiveSupport(topic.to_string()));
    }
    Ok(RateReport {
        topic: topic.to_string(),
        total_doi,
        n_pl,
        rate: total_doi as f64 / n_pl as f64,
        records,
    })
}

/// Highest rate first; ties by total impact, then topic name.
pub fn compare_topics(reports: &[RateReport]) -> Vec<&RateReport> {
    let mut out: Vec<&RateReport> = reports.iter().collect();
    // Exact fractions, so equal rates tie regardless of float rounding.
    out.sort_by(|a, b| {
        b.exact_rate()
            .cmp(&a.exact_rate())
            .then(b.total_doi.cmp(&a.total_doi))
            .then_with(|| a.topic.cmp(&b.topic))
    });
    out
}

/// Ranked comparison as text: `rank<TAB>topic<TAB>rate<TAB>total_doi<TAB>n_pl`.
pub fn ranking_text(ranked: &[&RateReport]) -> String {
    let mut out = String::from("#rank\ttopic\trate\ttotal_doi\tn_pl\n");
    for (i, r) in ranked.iter().enumerate() {
        writeln!(out, "{}\t{}\t{}\t{}\t{}", i + 1, r.topic, r.rate, r.total_doi, r.n_pl).unwrap();
    }
    out
}
