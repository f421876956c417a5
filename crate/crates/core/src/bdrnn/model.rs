use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EncodedSequence, Hyperparams};
use crate::polarity::SentimentClass;
use crate::{Error, Result, Scalar};

const INIT_RANGE: f64 = 0.1;

/// Weights of one direction of one recurrent layer.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionParams<F> {
    /// hidden × input
    pub w_in: Array2<F>,
    /// hidden × hidden
    pub w_rec: Array2<F>,
    pub bias: Array1<F>,
}

impl<F: Scalar> DirectionParams<F> {
    pub(crate) fn zeros(hidden: usize, input: usize) -> Self {
        Self {
            w_in: Array2::zeros((hidden, input)),
            w_rec: Array2::zeros((hidden, hidden)),
            bias: Array1::zeros(hidden),
        }
    }

    /// Runs the recurrence over the rows of `x`, time-forward or
    /// time-backward, from a zero boundary state. Returns T × hidden.
    pub(crate) fn run(&self, x: ArrayView2<F>, reverse: bool) -> Array2<F> {
        let (t_len, hidden) = (x.nrows(), self.bias.len());
        let proj = x.dot(&self.w_in.t()) + &self.bias;
        let mut states = Array2::zeros((t_len, hidden));
        let mut prev = Array1::<F>::zeros(hidden);
        for k in 0..t_len {
            let t = if reverse { t_len - 1 - k } else { k };
            let h = (&proj.row(t) + &self.w_rec.dot(&prev)).mapv(F::tanh);
            states.row_mut(t).assign(&h);
            prev = h;
        }
        states
    }

    fn step(&self, x: ArrayView1<F>, h: ArrayView1<F>) -> Result<Array1<F>> {
        if x.len() != self.w_in.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.w_in.ncols(),
                got: x.len(),
            });
        }
        if h.len() != self.w_rec.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.w_rec.ncols(),
                got: h.len(),
            });
        }
        Ok((self.w_in.dot(&x) + self.w_rec.dot(&h) + &self.bias).mapv(F::tanh))
    }
}

/// One time-forward step: `tanh(W_in · h_prev_layer + W_rec · h_prev_time + b)`.
pub fn forward_step<F: Scalar>(
    params: &DirectionParams<F>,
    h_prev_layer: ArrayView1<F>,
    h_prev_time: ArrayView1<F>,
) -> Result<Array1<F>> {
    params.step(h_prev_layer, h_prev_time)
}

/// One time-backward step; the recurrent input is the state at `t + 1`.
pub fn backward_step<F: Scalar>(
    params: &DirectionParams<F>,
    h_prev_layer: ArrayView1<F>,
    h_next_time: ArrayView1<F>,
) -> Result<Array1<F>> {
    params.step(h_prev_layer, h_next_time)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<F> {
    pub fwd: DirectionParams<F>,
    pub bwd: DirectionParams<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BdrnnModel<F> {
    pub hp: Hyperparams,
    /// vocab × embed
    pub embedding: Array2<F>,
    pub layers: Vec<LayerParams<F>>,
    /// classes × hidden, applied to the last forward state.
    pub out_fwd: Array2<F>,
    /// classes × hidden, applied to the first backward state.
    pub out_bwd: Array2<F>,
    pub out_bias: Array1<F>,
}

/// Activations kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache<F> {
    pub(crate) ids: Vec<usize>,
    pub(crate) layers: Vec<LayerCache<F>>,
    pub(crate) probs: Array1<F>,
}

#[derive(Debug, Clone)]
pub(crate) struct LayerCache<F> {
    /// T × input, after the previous layer's dropout.
    pub(crate) input: Array2<F>,
    pub(crate) fwd: Array2<F>,
    pub(crate) bwd: Array2<F>,
    /// T × 2·hidden inverted-dropout multipliers on this layer's output.
    pub(crate) mask: Option<Array2<F>>,
}

impl<F: Scalar> ForwardCache<F> {
    /// Top layer forward state at the last time step.
    pub fn final_forward(&self) -> Array1<F> {
        let top = self.layers.last().expect("at least one layer");
        top.fwd.row(top.fwd.nrows() - 1).to_owned()
    }

    /// Top layer backward state at the first time step.
    pub fn first_backward(&self) -> Array1<F> {
        self.layers.last().expect("at least one layer").bwd.row(0).to_owned()
    }

    pub fn probs(&self) -> &Array1<F> {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Forward and backward states of every layer, bottom first.
    pub fn layer_states(&self) -> impl Iterator<Item = (&Array2<F>, &Array2<F>)> {
        self.layers.iter().map(|l| (&l.fwd, &l.bwd))
    }

    pub(crate) fn layer_output(layer: &LayerCache<F>) -> Array2<F> {
        let mut out = ndarray::concatenate(Axis(1), &[layer.fwd.view(), layer.bwd.view()])
            .expect("equal row counts");
        if let Some(m) = &layer.mask {
            out *= m;
        }
        out
    }
}

/// Numerically stable softmax.
pub fn softmax<F: Scalar>(logits: &Array1<F>) -> Array1<F> {
    let max = logits.iter().copied().fold(F::neg_infinity(), F::max);
    let exp = logits.mapv(|z| (z - max).exp());
    let sum = exp.sum();
    exp / sum
}

fn dropout_mask<F: Scalar, R: Rng + ?Sized>(shape: (usize, usize), keep: f64, rng: &mut R) -> Array2<F> {
    let scale = F::from_real(1.0 / keep);
    Array2::from_shape_simple_fn(shape, || {
        if rng.random::<f64>() < keep {
            scale
        } else {
            F::zero()
        }
    })
}

impl<F: Scalar> BdrnnModel<F> {
    pub fn zeros(hp: Hyperparams) -> Result<Self> {
        hp.validate()?;
        let h = hp.hidden_dim;
        let layers = (0..hp.num_recurrent_layers)
            .map(|n| LayerParams {
                fwd: DirectionParams::zeros(h, hp.layer_input_dim(n)),
                bwd: DirectionParams::zeros(h, hp.layer_input_dim(n)),
            })
            .collect();
        Ok(Self {
            embedding: Array2::zeros((hp.vocab_size, hp.embed_dim)),
            layers,
            out_fwd: Array2::zeros((hp.num_classes, h)),
            out_bwd: Array2::zeros((hp.num_classes, h)),
            out_bias: Array1::zeros(hp.num_classes),
            hp,
        })
    }

    /// Every entry uniform in (-0.1, 0.1), drawn from a ChaCha8 stream seeded
    /// with `hp.seed`, in [`tensors`](Self::tensors) order.
    pub fn init(hp: Hyperparams) -> Result<Self> {
        let mut m = Self::zeros(hp)?;
        let mut rng = ChaCha8Rng::seed_from_u64(m.hp.seed);
        for t in m.tensors_mut() {
            for v in t.iter_mut() {
                *v = F::from_real(rng.random_range(-INIT_RANGE..INIT_RANGE));
            }
        }
        Ok(m)
    }

    /// All parameter tensors as flat slices, in storage order: embedding;
    /// per layer (bottom first) forward `w_in`, `w_rec`, `bias`, then
    /// backward `w_in`, `w_rec`, `bias`; `out_fwd`; `out_bwd`; `out_bias`.
    pub fn tensors(&self) -> Vec<&[F]> {
        let mut v: Vec<&[F]> = vec![self.embedding.as_slice().expect("standard layout")];
        for l in &self.layers {
            for d in [&l.fwd, &l.bwd] {
                v.push(d.w_in.as_slice().expect("standard layout"));
                v.push(d.w_rec.as_slice().expect("standard layout"));
                v.push(d.bias.as_slice().expect("standard layout"));
            }
        }
        v.push(self.out_fwd.as_slice().expect("standard layout"));
        v.push(self.out_bwd.as_slice().expect("standard layout"));
        v.push(self.out_bias.as_slice().expect("standard layout"));
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [F]> {
        let mut v: Vec<&mut [F]> = vec![self.embedding.as_slice_mut().expect("standard layout")];
        for l in &mut self.layers {
            for d in [&mut l.fwd, &mut l.bwd] {
                v.push(d.w_in.as_slice_mut().expect("standard layout"));
                v.push(d.w_rec.as_slice_mut().expect("standard layout"));
                v.push(d.bias.as_slice_mut().expect("standard layout"));
            }
        }
        v.push(self.out_fwd.as_slice_mut().expect("standard layout"));
        v.push(self.out_bwd.as_slice_mut().expect("standard layout"));
        v.push(self.out_bias.as_slice_mut().expect("standard layout"));
        v
    }

    /// Matrices under the L2 penalty: recurrent `w_in`/`w_rec` and the two
    /// output matrices. Biases and the embedding are not penalized.
    pub(crate) fn penalized(&self) -> Vec<&Array2<F>> {
        let mut v = Vec::new();
        for l in &self.layers {
            for d in [&l.fwd, &l.bwd] {
                v.push(&d.w_in);
                v.push(&d.w_rec);
            }
        }
        v.push(&self.out_fwd);
        v.push(&self.out_bwd);
        v
    }

    /// `½ Σ w²` over the penalized matrices.
    pub fn l2_norm_sq_half(&self) -> F {
        let half = F::from_real(0.5);
        self.penalized()
            .into_iter()
            .map(|w| w.iter().map(|&x| x * x).sum::<F>())
            .sum::<F>()
            * half
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Runs the network. With `train_mode`, inverted dropout (keep
    /// probability `dropout_keep`) is applied to every recurrent layer's
    /// output, masks drawn from `rng`; otherwise `rng` is untouched.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        seq: &EncodedSequence,
        train_mode: bool,
        rng: &mut R,
    ) -> Result<(Array1<F>, ForwardCache<F>)> {
        seq.validate(&self.hp)?;
        let ids = seq.ids().to_vec();
        let t_len = ids.len();
        let h = self.hp.hidden_dim;
        let keep = self.hp.dropout_keep;

        let mut input = Array2::zeros((t_len, self.hp.embed_dim));
        for (t, &id) in ids.iter().enumerate() {
            input.row_mut(t).assign(&self.embedding.row(id));
        }

        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let fwd = layer.fwd.run(input.view(), false);
            let bwd = layer.bwd.run(input.view(), true);
            let mask = (train_mode && keep < 1.0).then(|| dropout_mask((t_len, 2 * h), keep, rng));
            let cache = LayerCache {
                input,
                fwd,
                bwd,
                mask,
            };
            input = ForwardCache::layer_output(&cache);
            caches.push(cache);
        }

        let top = &input;
        let f_last = top.slice(s![t_len - 1, ..h]);
        let b_first = top.slice(s![0, h..]);
        let logits = self.out_fwd.dot(&f_last) + self.out_bwd.dot(&b_first) + &self.out_bias;
        let probs = softmax(&logits);
        let cache = ForwardCache {
            ids,
            layers: caches,
            probs: probs.clone(),
        };
        Ok((probs, cache))
    }

    /// Class distribution without dropout.
    pub fn infer(&self, seq: &EncodedSequence) -> Result<Array1<F>> {
        let mut unused = ChaCha8Rng::seed_from_u64(0);
        Ok(self.forward(seq, false, &mut unused)?.0)
    }

    /// Arg-max class index; ties go to the lower index.
    pub fn predict_index(&self, seq: &EncodedSequence) -> Result<usize> {
        let probs = self.infer(seq)?;
        let mut best = 0;
        for (i, &p) in probs.iter().enumerate() {
            if p > probs[best] {
                best = i;
            }
        }
        Ok(best)
    }

    /// Predicted sentiment class; the model must have seven outputs.
    pub fn predict(&self, seq: &EncodedSequence) -> Result<SentimentClass> {
        if self.hp.num_classes != SentimentClass::COUNT {
            return Err(Error::DimensionMismatch {
                expected: SentimentClass::COUNT,
                got: self.hp.num_classes,
            });
        }
        let i = self.predict_index(seq)?;
        Ok(SentimentClass::from_index(i).expect("index < 7"))
    }

    /// The same network with time directions exchanged: forward and backward
    /// weights swap in every layer, upper layers swap the two halves of their
    /// input columns to match, and the output matrices swap. Running it on a
    /// reversed sequence yields the original states reversed in time.
    pub fn mirrored(&self) -> Self {
        let h = self.hp.hidden_dim;
        let swap_halves = |w: &Array2<F>| {
            let mut out = w.clone();
            out.slice_mut(s![.., ..h]).assign(&w.slice(s![.., h..]));
            out.slice_mut(s![.., h..]).assign(&w.slice(s![.., ..h]));
            out
        };
        let layers = self
            .layers
            .iter()
            .enumerate()
            .map(|(n, l)| {
                let fix = |d: &DirectionParams<F>| DirectionParams {
                    w_in: if n == 0 { d.w_in.clone() } else { swap_halves(&d.w_in) },
                    w_rec: d.w_rec.clone(),
                    bias: d.bias.clone(),
                };
                LayerParams {
                    fwd: fix(&l.bwd),
                    bwd: fix(&l.fwd),
                }
            })
            .collect();
        Self {
            hp: self.hp.clone(),
            embedding: self.embedding.clone(),
            layers,
            out_fwd: self.out_bwd.clone(),
            out_bwd: self.out_fwd.clone(),
            out_bias: self.out_bias.clone(),
        }
    }
}

/// Cross-entropy of `dist` at `gold` plus `l2_coeff · ½‖W‖²`.
pub fn loss<F: Scalar>(dist: &Array1<F>, gold: usize, model: &BdrnnModel<F>, l2_coeff: F) -> Result<F> {
    if gold >= dist.len() {
        return Err(Error::ClassOutOfRange {
            index: gold,
            num_classes: dist.len(),
        });
    }
    Ok(-dist[gold].ln() + l2_coeff * model.l2_norm_sq_half())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn tiny(layers: usize, seed: u64) -> BdrnnModel<f64> {
        BdrnnModel::init(Hyperparams {
            vocab_size: 12,
            embed_dim: 3,
            hidden_dim: 4,
            num_recurrent_layers: layers,
            num_classes: 7,
            seed,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn step_examples() {
        let p = DirectionParams::<f64> {
            w_in: array![[1.0]],
            w_rec: array![[0.0]],
            bias: array![0.0],
        };
        let out = forward_step(&p, array![0.5].view(), array![0.0].view()).unwrap();
        assert!((out[0] - 0.5f64.tanh()).abs() < 1e-15);
        assert!((out[0] - 0.4621).abs() < 1e-4);
        let out = backward_step(&p, array![0.5].view(), array![0.0].view()).unwrap();
        assert!((out[0] - 0.5f64.tanh()).abs() < 1e-15);

        let z = DirectionParams::<f64>::zeros(3, 2);
        let out = forward_step(&z, array![0.0, 0.0].view(), array![0.0, 0.0, 0.0].view()).unwrap();
        assert_eq!(out, array![0.0, 0.0, 0.0]);
        assert!(forward_step(&z, array![0.0].view(), array![0.0, 0.0, 0.0].view()).is_err());
        assert!(forward_step(&z, array![0.0, 0.0].view(), array![0.0].view()).is_err());
    }

    #[test]
    fn step_range_is_open_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = DirectionParams::<f64> {
            w_in: Array2::from_shape_simple_fn((5, 4), || rng.random_range(-3.0..3.0)),
            w_rec: Array2::from_shape_simple_fn((5, 5), || rng.random_range(-3.0..3.0)),
            bias: Array1::from_shape_simple_fn(5, || rng.random_range(-1.0..1.0)),
        };
        let x = Array1::from_shape_simple_fn(4, || rng.random_range(-5.0..5.0));
        let hh = Array1::from_shape_simple_fn(5, || rng.random_range(-1.0..1.0));
        let out = forward_step(&p, x.view(), hh.view()).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1.0));
    }

    #[test]
    fn fused_recurrence_matches_steps() {
        let m = tiny(1, 5);
        let seq = EncodedSequence::new(vec![2, 7, 3, 11]);
        let (_, cache) = m.forward(&seq, false, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let x: Vec<Array1<f64>> = seq.ids().iter().map(|&i| m.embedding.row(i).to_owned()).collect();
        let d = &m.layers[0];
        let mut hf = Array1::zeros(4);
        for (t, xt) in x.iter().enumerate() {
            hf = forward_step(&d.fwd, xt.view(), hf.view()).unwrap();
            for (a, b) in hf.iter().zip(cache.layers[0].fwd.row(t)) {
                assert!((a - b).abs() < 1e-14);
            }
        }
        let mut hb = Array1::zeros(4);
        for t in (0..x.len()).rev() {
            hb = backward_step(&d.bwd, x[t].view(), hb.view()).unwrap();
            for (a, b) in hb.iter().zip(cache.layers[0].bwd.row(t)) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = BdrnnModel::<f64>::zeros(Hyperparams {
            vocab_size: 5,
            embed_dim: 2,
            hidden_dim: 2,
            ..Default::default()
        })
        .unwrap();
        let seq = EncodedSequence::new(vec![2, 3]);
        let p = m.infer(&seq).unwrap();
        assert!(p.iter().all(|&v| (v - 1.0 / 7.0).abs() < 1e-15));
        assert_eq!(m.predict(&seq).unwrap(), SentimentClass::StrongNeg);
    }

    #[test]
    fn distribution_sums_to_one() {
        for seed in 0..100 {
            let m = tiny(2, seed);
            let seq = EncodedSequence::new(vec![(seed as usize % 10) + 2, 1, 4]);
            let p = m.infer(&seq).unwrap();
            assert!((p.sum() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn padding_is_ignored() {
        let m = tiny(2, 1);
        let seq = EncodedSequence::new(vec![3, 4, 5]);
        let a = m.infer(&seq).unwrap();
        let b = m.infer(&seq.clone().padded(6)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn inference_ignores_dropout_rng() {
        let m = tiny(3, 2);
        let seq = EncodedSequence::new(vec![3, 4, 5]);
        let a = m.forward(&seq, false, &mut ChaCha8Rng::seed_from_u64(1)).unwrap().0;
        let b = m.forward(&seq, false, &mut ChaCha8Rng::seed_from_u64(2)).unwrap().0;
        assert_eq!(a, b);
        let c = m.forward(&seq, true, &mut ChaCha8Rng::seed_from_u64(1)).unwrap().0;
        assert_ne!(a, c);
    }

    #[test]
    fn out_of_range_token() {
        let m = tiny(1, 0);
        assert!(matches!(
            m.infer(&EncodedSequence::new(vec![12])),
            Err(Error::TokenOutOfRange { id: 12, .. })
        ));
    }

    #[test]
    fn loss_examples() {
        let m = tiny(1, 0);
        let onehot = array![0.0, 1.0, 0.0];
        assert_eq!(loss(&onehot, 1, &m, 0.0).unwrap(), 0.0);
        let uniform = Array1::from_elem(7, 1.0 / 7.0);
        assert!((loss(&uniform, 0, &m, 0.0).unwrap() - 7f64.ln()).abs() < 1e-12);
        assert!((7f64.ln() - 1.9459).abs() < 1e-4);
        assert!(loss(&uniform, 7, &m, 0.0).is_err());
    }

    #[test]
    fn l2_term_on_three_weights() {
        let mut m = BdrnnModel::<f64>::zeros(Hyperparams {
            vocab_size: 3,
            embed_dim: 1,
            hidden_dim: 1,
            num_recurrent_layers: 1,
            num_classes: 2,
            ..Default::default()
        })
        .unwrap();
        m.layers[0].fwd.w_in[[0, 0]] = 0.5;
        m.layers[0].bwd.w_rec[[0, 0]] = -2.0;
        m.out_fwd[[1, 0]] = 3.0;
        // Not penalized:
        m.embedding[[2, 0]] = 100.0;
        m.out_bias[0] = 100.0;
        let lambda = 0.1;
        let expected = 0.5 * lambda * (0.25 + 4.0 + 9.0);
        let l = loss(&array![0.5, 0.5], 0, &m, lambda).unwrap();
        assert!((l - 2f64.ln() - expected).abs() < 1e-15);
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = tiny(2, 9);
        assert_eq!(a, tiny(2, 9));
        assert_ne!(a, tiny(2, 10));
        assert!(a.tensors().iter().all(|t| t.iter().all(|v| v.abs() < 0.1)));
        assert_eq!(a.num_params(), a.hp.num_params());
    }

    #[test]
    fn single_precision_model_runs() {
        let m = BdrnnModel::<f32>::init(Hyperparams {
            vocab_size: 6,
            embed_dim: 3,
            hidden_dim: 3,
            num_recurrent_layers: 2,
            ..Default::default()
        })
        .unwrap();
        let p = m.infer(&EncodedSequence::new(vec![2, 5])).unwrap();
        assert!((p.sum() - 1.0).abs() < 1e-5);
    }
}
