//! Stacked bidirectional recurrent classifier.
//!
//! Tokens are embedded, then run through `num_recurrent_layers` layers, each
//! holding a time-forward and a time-backward tanh recurrence:
//!
//! ```text
//! F[n][t] = tanh(W_in[n,fwd] · x[n][t] + W_rec[n,fwd] · F[n][t-1] + b[n,fwd])
//! B[n][t] = tanh(W_in[n,bwd] · x[n][t] + W_rec[n,bwd] · B[n][t+1] + b[n,bwd])
//! ```
//!
//! with zero states outside the sequence. Layer `n + 1` consumes
//! `x[n+1][t] = F[n][t] ‖ B[n][t]`. The class distribution combines the top
//! layer's last forward state and first backward state:
//!
//! ```text
//! y = softmax(W_out_fwd · F[top][T-1] + W_out_bwd · B[top][0] + b_out)
//! ```

mod grad;
mod io;
mod model;
mod train;
mod vocab;

pub use grad::{backward, Gradients};
pub use io::{
    decode_model, encode_model, load_model, model_file_size, save_model, HEADER_BYTES, MODEL_FORMAT_VERSION,
};
pub use model::{
    backward_step, forward_step, loss, softmax, BdrnnModel, DirectionParams, ForwardCache,
    LayerParams,
};
pub use train::{clip_gradients, train, train_with, EpochStats, LabeledSequence};
pub use vocab::{build_vocab, Vocab, OOV, PAD};

use crate::config::KeyValues;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub num_recurrent_layers: usize,
    pub vocab_size: usize,
    pub num_classes: usize,
    /// Probability of keeping an activation under dropout.
    pub dropout_keep: f64,
    pub l2_coeff: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Global gradient-norm ceiling.
    pub grad_clip: f64,
    pub seed: u64,
    pub max_seq_len: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            embed_dim: 100,
            hidden_dim: 128,
            num_recurrent_layers: 3,
            vocab_size: 2,
            num_classes: 7,
            dropout_keep: 0.6,
            l2_coeff: 1.3e-3,
            learning_rate: 0.05,
            batch_size: 64,
            epochs: 5,
            grad_clip: 5.0,
            seed: 0,
            max_seq_len: 64,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("embed_dim", self.embed_dim),
            ("hidden_dim", self.hidden_dim),
            ("num_recurrent_layers", self.num_recurrent_layers),
            ("vocab_size", self.vocab_size),
            ("num_classes", self.num_classes),
            ("batch_size", self.batch_size),
            ("max_seq_len", self.max_seq_len),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be >= 1")));
            }
        }
        if !(self.dropout_keep > 0.0 && self.dropout_keep <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "dropout_keep {} not in (0, 1]",
                self.dropout_keep
            )));
        }
        if !(self.l2_coeff >= 0.0 && self.l2_coeff.is_finite()) {
            return Err(Error::InvalidArgument("l2_coeff must be finite and >= 0".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning_rate must be > 0".into()));
        }
        if self.grad_clip.is_nan() || self.grad_clip <= 0.0 {
            return Err(Error::InvalidArgument("grad_clip must be > 0".into()));
        }
        Ok(())
    }

    /// Overrides fields present in `kv`. `dropout` (the drop probability) is
    /// accepted as an alternative to `dropout_keep`.
    pub fn apply(&mut self, kv: &KeyValues) -> Result<()> {
        self.embed_dim = kv.get_or("embed_dim", self.embed_dim)?;
        self.hidden_dim = kv.get_or("hidden_dim", self.hidden_dim)?;
        self.num_recurrent_layers = kv.get_or("num_recurrent_layers", self.num_recurrent_layers)?;
        self.num_classes = kv.get_or("num_classes", self.num_classes)?;
        if let Some(drop) = kv.get_parsed::<f64>("dropout")? {
            self.dropout_keep = 1.0 - drop;
        }
        self.dropout_keep = kv.get_or("dropout_keep", self.dropout_keep)?;
        self.l2_coeff = kv.get_or("l2_coeff", self.l2_coeff)?;
        self.learning_rate = kv.get_or("learning_rate", self.learning_rate)?;
        self.batch_size = kv.get_or("batch_size", self.batch_size)?;
        self.epochs = kv.get_or("epochs", self.epochs)?;
        self.grad_clip = kv.get_or("grad_clip", self.grad_clip)?;
        self.seed = kv.get_or("seed", self.seed)?;
        self.max_seq_len = kv.get_or("max_seq_len", self.max_seq_len)?;
        Ok(())
    }

    /// Input width of recurrent layer `n`.
    pub fn layer_input_dim(&self, n: usize) -> usize {
        if n == 0 {
            self.embed_dim
        } else {
            2 * self.hidden_dim
        }
    }

    /// Total number of trainable scalars.
    pub fn num_params(&self) -> usize {
        let h = self.hidden_dim;
        let recurrent: usize = (0..self.num_recurrent_layers)
            .map(|n| 2 * (h * self.layer_input_dim(n) + h * h + h))
            .sum();
        self.vocab_size * self.embed_dim + recurrent + 2 * self.num_classes * h + self.num_classes
    }
}

/// Token ids of one post. Ids past `length` are padding and never read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedSequence {
    pub token_ids: Vec<usize>,
    pub length: usize,
}

impl EncodedSequence {
    pub fn new(token_ids: Vec<usize>) -> Self {
        let length = token_ids.len();
        Self { token_ids, length }
    }

    pub fn ids(&self) -> &[usize] {
        &self.token_ids[..self.length]
    }

    /// Appends `n` PAD ids without changing the length.
    pub fn padded(mut self, n: usize) -> Self {
        self.token_ids.extend(std::iter::repeat_n(PAD, n));
        self
    }

    pub fn reversed(&self) -> Self {
        Self::new(self.ids().iter().rev().copied().collect())
    }

    pub fn validate(&self, hp: &Hyperparams) -> Result<()> {
        if self.length == 0 || self.length > self.token_ids.len() || self.length > hp.max_seq_len {
            return Err(Error::InvalidArgument(format!(
                "sequence length {} not in 1..={}",
                self.length,
                hp.max_seq_len.min(self.token_ids.len())
            )));
        }
        if let Some(&id) = self.ids().iter().find(|&&id| id >= hp.vocab_size) {
            return Err(Error::TokenOutOfRange {
                id,
                vocab_size: hp.vocab_size,
            });
        }
        Ok(())
    }
}
