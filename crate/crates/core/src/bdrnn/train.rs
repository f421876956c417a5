use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::grad::{backward, Gradients};
use super::model::BdrnnModel;
use super::EncodedSequence;
use crate::{Error, Result, Scalar};

/// Examples summed per parallel work item. Fixed, so the reduction order
/// does not depend on the thread count.
const REDUCE_CHUNK: usize = 8;

/// Stream reserved for the epoch shuffles; dropout streams are
/// `epoch << 32 | example index`.
const SHUFFLE_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSequence {
    pub seq: EncodedSequence,
    pub label: usize,
}

/// Mean training loss (cross-entropy plus penalty, averaged over batches)
/// and training accuracy under dropout for one epoch. Epochs count from 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub accuracy: f64,
}

/// Rescales `grads` so its global norm is at most `max_norm`; returns the
/// norm before clipping.
pub fn clip_gradients<F: Scalar>(grads: &mut Gradients<F>, max_norm: F) -> F {
    let norm = grads.norm();
    if norm > max_norm {
        grads.scale(max_norm / norm);
    }
    norm
}

pub fn train<F: Scalar>(model: &mut BdrnnModel<F>, data: &[LabeledSequence]) -> Result<Vec<EpochStats>> {
    train_with(model, data, |_, _| Ok(()))
}

/// Mini-batch SGD for `hp.epochs` epochs. `on_epoch` runs after each epoch
/// with that epoch's statistics and the current model.
pub fn train_with<F, C>(model: &mut BdrnnModel<F>, data: &[LabeledSequence], mut on_epoch: C) -> Result<Vec<EpochStats>>
where
    F: Scalar,
    C: FnMut(&EpochStats, &BdrnnModel<F>) -> Result<()>,
{
    let hp = model.hp.clone();
    hp.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    for ex in data {
        ex.seq.validate(&hp)?;
        if ex.label >= hp.num_classes {
            return Err(Error::ClassOutOfRange {
                index: ex.label,
                num_classes: hp.num_classes,
            });
        }
    }

    let lr = F::from_real(hp.learning_rate);
    let l2 = F::from_real(hp.l2_coeff);
    let clip = F::from_real(hp.grad_clip);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut shuffler = ChaCha8Rng::seed_from_u64(hp.seed);
    shuffler.set_stream(SHUFFLE_STREAM);
    let mut trace = Vec::with_capacity(hp.epochs);

    for epoch in 1..=hp.epochs {
        order.shuffle(&mut shuffler);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        let mut batches = 0usize;
        for (b, batch) in order.chunks(hp.batch_size).enumerate() {
            let model_ref = &*model;
            let partial: Vec<Result<(Gradients<F>, F, usize)>> = batch
                .par_chunks(REDUCE_CHUNK)
                .map(|chunk| {
                    let mut acc: Option<(Gradients<F>, F, usize)> = None;
                    for &i in chunk {
                        let (g, ce, hit) = example_step(model_ref, &data[i], epoch, i)?;
                        match &mut acc {
                            Some((ga, la, ca)) => {
                                ga.add(&g);
                                *la += ce;
                                *ca += hit as usize;
                            }
                            None => acc = Some((g, ce, hit as usize)),
                        }
                    }
                    Ok(acc.expect("chunks are non-empty"))
                })
                .collect();

            let mut total: Option<(Gradients<F>, F, usize)> = None;
            for p in partial {
                let (g, ce, hits) = p?;
                match &mut total {
                    Some((ga, la, ca)) => {
                        ga.add(&g);
                        *la += ce;
                        *ca += hits;
                    }
                    None => total = Some((g, ce, hits)),
                }
            }
            let (mut grads, ce_sum, hits) = total.expect("batches are non-empty");
            let n = F::from_count(batch.len());
            let batch_loss = ce_sum / n + l2 * model.l2_norm_sq_half();
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            grads.scale(F::one() / n);
            grads.add_l2(model, l2);
            clip_gradients(&mut grads, clip);
            grads.apply(model, lr);

            loss_sum += batch_loss.to_real();
            correct += hits;
            batches += 1;
        }
        let stats = EpochStats {
            epoch,
            mean_loss: loss_sum / batches as f64,
            accuracy: correct as f64 / data.len() as f64,
        };
        on_epoch(&stats, model)?;
        trace.push(stats);
    }
    Ok(trace)
}

/// Cross-entropy gradient, loss and hit for one example under dropout.
fn example_step<F: Scalar>(
    model: &BdrnnModel<F>,
    ex: &LabeledSequence,
    epoch: usize,
    index: usize,
) -> Result<(Gradients<F>, F, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(model.hp.seed);
    rng.set_stream(((epoch as u64) << 32) | index as u64);
    let (probs, cache) = model.forward(&ex.seq, true, &mut rng)?;
    let ce = -probs[ex.label].ln();
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    let g = backward(model, &ex.seq, ex.label, &cache, F::zero())?;
    Ok((g, ce, best == ex.label))
}
