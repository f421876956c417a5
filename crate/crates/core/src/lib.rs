//! Sentiment analysis over short social-media posts.
//!
//! The pipeline has four stages, each with its own module:
//!
//! 1. [`lexicon`]: a word repository built from hashtag-seeded posts, with a
//!    calibrated neutral band.
//! 2. [`bdrnn`]: a stacked bidirectional recurrent classifier trained by
//!    backpropagation through time.
//! 3. [`polarity`]: per-message polarity as a sum of word scores, bucketed into
//!    seven weighted classes.
//! 4. [`impact`]: per-post degree of impact and per-topic rate.
//!
//! [`corpus`] and [`preprocess`] handle ingestion and text normalization,
//! [`metrics`] provides the evaluation suite.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! pin the 64-bit instantiations used by the command-line tools.

pub mod bdrnn;
pub mod config;
pub mod corpus;
mod error;
pub mod impact;
pub mod lexicon;
pub mod metrics;
pub mod polarity;
pub mod preprocess;
mod scalar;

pub use error::{Error, Result};
pub use polarity::SentimentClass;
pub use scalar::Scalar;

/// 64-bit classifier, the default everywhere.
pub type Model = bdrnn::BdrnnModel<f64>;
/// Single-precision classifier.
pub type Model32 = bdrnn::BdrnnModel<f32>;
pub type Gradients = bdrnn::Gradients<f64>;
pub type EvalReport = metrics::EvalReport<f64>;
pub type EvalReport32 = metrics::EvalReport<f32>;
