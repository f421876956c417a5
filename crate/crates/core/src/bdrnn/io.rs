//! Binary model container, all fields little endian:
//!
//! ```text
//! offset  size  field
//!      0     4  magic "BDRN"
//!      4     4  format version (u32)
//!      8     4  scalar width in bytes (u32)
//!     12    64  embed_dim, hidden_dim, num_recurrent_layers, vocab_size,
//!               num_classes, batch_size, epochs, max_seq_len (u64 each)
//!     76    32  dropout_keep, l2_coeff, learning_rate, grad_clip (f64 each)
//!    108     8  seed (u64)
//!    116     8  vocabulary hash (u64)
//!    124     8  parameter count (u64)
//!    132        parameters, in BdrnnModel::tensors order
//! ```

use std::path::Path;

use super::model::BdrnnModel;
use super::{Hyperparams, Vocab};
use crate::{Error, Result, Scalar};

pub const MODEL_FORMAT_VERSION: u32 = 1;
pub const HEADER_BYTES: usize = 132;
const MAGIC: &[u8; 4] = b"BDRN";

/// Size in bytes of a saved model.
pub fn model_file_size<F: Scalar>(hp: &Hyperparams) -> usize {
    HEADER_BYTES + hp.num_params() * F::WIDTH
}

pub fn encode_model<F: Scalar>(model: &BdrnnModel<F>, vocab_hash: u64) -> Vec<u8> {
    let hp = &model.hp;
    let mut out = Vec::with_capacity(model_file_size::<F>(hp));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&MODEL_FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(F::WIDTH as u32).to_le_bytes());
    for v in [
        hp.embed_dim,
        hp.hidden_dim,
        hp.num_recurrent_layers,
        hp.vocab_size,
        hp.num_classes,
        hp.batch_size,
        hp.epochs,
        hp.max_seq_len,
    ] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    for v in [hp.dropout_keep, hp.l2_coeff, hp.learning_rate, hp.grad_clip] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&hp.seed.to_le_bytes());
    out.extend_from_slice(&vocab_hash.to_le_bytes());
    out.extend_from_slice(&(model.num_params() as u64).to_le_bytes());
    for t in model.tensors() {
        for &v in t {
            v.write_le(&mut out);
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::ModelFormat(format!("truncated at byte {}", self.bytes.len())))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| Error::ModelFormat(format!("dimension {v} too large")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
}

/// Parses a model container. `expected_vocab_hash`, when given, must match
/// the stored hash.
pub fn decode_model<F: Scalar>(bytes: &[u8], expected_vocab_hash: Option<u64>) -> Result<(BdrnnModel<F>, u64)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::ModelFormat("bad magic".into()));
    }
    let version = r.u32()?;
    if version != MODEL_FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: MODEL_FORMAT_VERSION,
        });
    }
    let width = r.u32()? as usize;
    if width != F::WIDTH {
        return Err(Error::ModelFormat(format!(
            "stored scalars are {width} bytes, reading as {}",
            F::WIDTH
        )));
    }
    let hp = Hyperparams {
        embed_dim: r.usize()?,
        hidden_dim: r.usize()?,
        num_recurrent_layers: r.usize()?,
        vocab_size: r.usize()?,
        num_classes: r.usize()?,
        batch_size: r.usize()?,
        epochs: r.usize()?,
        max_seq_len: r.usize()?,
        dropout_keep: r.f64()?,
        l2_coeff: r.f64()?,
        learning_rate: r.f64()?,
        grad_clip: r.f64()?,
        seed: r.u64()?,
    };
    let vocab_hash = r.u64()?;
    let count = r.u64()?;
    hp.validate().map_err(|e| Error::ModelFormat(format!("header: {e}")))?;
    if let Some(expected) = expected_vocab_hash {
        if vocab_hash != expected {
            return Err(Error::VocabMismatch {
                found: expected,
                expected: vocab_hash,
            });
        }
    }
    if count != hp.num_params() as u64 {
        return Err(Error::ModelFormat(format!(
            "header declares {count} parameters, dimensions imply {}",
            hp.num_params()
        )));
    }
    let expected_len = model_file_size::<F>(&hp);
    if bytes.len() != expected_len {
        return Err(Error::ModelFormat(format!(
            "file is {} bytes, expected {expected_len}",
            bytes.len()
        )));
    }
    let mut model = BdrnnModel::zeros(hp)?;
    for t in model.tensors_mut() {
        for v in t.iter_mut() {
            *v = F::read_le(r.take(F::WIDTH)?);
        }
    }
    if !model.is_finite() {
        return Err(Error::ModelFormat("non-finite parameter".into()));
    }
    Ok((model, vocab_hash))
}

pub fn save_model<F: Scalar>(model: &BdrnnModel<F>, vocab: &Vocab, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if vocab.len() != model.hp.vocab_size {
        return Err(Error::DimensionMismatch {
            expected: model.hp.vocab_size,
            got: vocab.len(),
        });
    }
    std::fs::write(path, encode_model(model, vocab.hash())).map_err(|e| Error::io(path, e))
}

/// Loads a model saved alongside `vocab`; fails if the file was written
/// with a different vocabulary.
pub fn load_model<F: Scalar>(path: impl AsRef<Path>, vocab: &Vocab) -> Result<BdrnnModel<F>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(decode_model(&bytes, Some(vocab.hash()))?.0)
}
