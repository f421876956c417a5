use std::collections::BTreeMap;

use ndarray::{s, Array1, Array2, ArrayView2, Axis};

use super::model::{BdrnnModel, DirectionParams, ForwardCache, LayerParams};
use super::EncodedSequence;
use crate::{Error, Result, Scalar};

/// Loss gradient for every parameter of a [`BdrnnModel`]. Embedding rows
/// are stored sparsely; rows absent from the map have zero gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<F> {
    pub embedding: BTreeMap<usize, Array1<F>>,
    pub layers: Vec<LayerParams<F>>,
    pub out_fwd: Array2<F>,
    pub out_bwd: Array2<F>,
    pub out_bias: Array1<F>,
}

impl<F: Scalar> Gradients<F> {
    pub fn zeros_like(model: &BdrnnModel<F>) -> Self {
        let hp = &model.hp;
        Self {
            embedding: BTreeMap::new(),
            layers: (0..hp.num_recurrent_layers)
                .map(|n| LayerParams {
                    fwd: DirectionParams::zeros(hp.hidden_dim, hp.layer_input_dim(n)),
                    bwd: DirectionParams::zeros(hp.hidden_dim, hp.layer_input_dim(n)),
                })
                .collect(),
            out_fwd: Array2::zeros(model.out_fwd.raw_dim()),
            out_bwd: Array2::zeros(model.out_bwd.raw_dim()),
            out_bias: Array1::zeros(model.out_bias.len()),
        }
    }

    /// Dense tensors in the model's storage order, embedding excluded.
    fn dense(&self) -> Vec<&[F]> {
        let mut v = Vec::new();
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

    fn dense_mut(&mut self) -> Vec<&mut [F]> {
        let mut v = Vec::new();
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

    /// Global L2 norm over all parameters.
    pub fn norm(&self) -> F {
        let sq = |xs: &[F]| xs.iter().map(|&x| x * x).sum::<F>();
        let emb: F = self.embedding.values().map(|r| sq(r.as_slice().expect("contiguous"))).sum();
        let dense: F = self.dense().into_iter().map(sq).sum();
        (emb + dense).sqrt()
    }

    pub fn scale(&mut self, k: F) {
        for r in self.embedding.values_mut() {
            *r *= k;
        }
        for t in self.dense_mut() {
            t.iter_mut().for_each(|x| *x *= k);
        }
    }

    pub fn add(&mut self, other: &Self) {
        for (&id, row) in &other.embedding {
            match self.embedding.get_mut(&id) {
                Some(r) => *r += row,
                None => {
                    self.embedding.insert(id, row.clone());
                }
            }
        }
        for (a, b) in self.dense_mut().into_iter().zip(other.dense()) {
            a.iter_mut().zip(b).for_each(|(x, &y)| *x += y);
        }
    }

    /// Adds the gradient of `l2_coeff · ½‖W‖²`, i.e. `l2_coeff · W` on the
    /// penalized matrices.
    pub fn add_l2(&mut self, model: &BdrnnModel<F>, l2_coeff: F) {
        if l2_coeff == F::zero() {
            return;
        }
        for (g, m) in self.layers.iter_mut().zip(&model.layers) {
            for (gd, md) in [(&mut g.fwd, &m.fwd), (&mut g.bwd, &m.bwd)] {
                gd.w_in.scaled_add(l2_coeff, &md.w_in);
                gd.w_rec.scaled_add(l2_coeff, &md.w_rec);
            }
        }
        self.out_fwd.scaled_add(l2_coeff, &model.out_fwd);
        self.out_bwd.scaled_add(l2_coeff, &model.out_bwd);
    }

    /// Plain SGD update `θ ← θ − lr · g`.
    pub fn apply(&self, model: &mut BdrnnModel<F>, lr: F) {
        for (&id, row) in &self.embedding {
            model.embedding.row_mut(id).scaled_add(-lr, row);
        }
        let mut params = model.tensors_mut();
        // Skip the embedding, which leads the model's tensor list.
        for (p, g) in params.drain(1..).zip(self.dense()) {
            p.iter_mut().zip(g).for_each(|(x, &d)| *x -= lr * d);
        }
    }
}

/// Accumulates one direction's BPTT. `d_states` is the gradient arriving at
/// each state from above; returns the gradient with respect to `input`.
fn direction_backward<F: Scalar>(
    params: &DirectionParams<F>,
    grad: &mut DirectionParams<F>,
    input: ArrayView2<F>,
    states: &Array2<F>,
    d_states: ArrayView2<F>,
    reverse: bool,
) -> Array2<F> {
    let (t_len, hidden) = states.dim();
    let mut da = Array2::<F>::zeros((t_len, hidden));
    // Row t holds the recurrent input that produced state t.
    let mut prev_states = Array2::<F>::zeros((t_len, hidden));
    let mut carry = Array1::<F>::zeros(hidden);
    for k in 0..t_len {
        // Visit time steps in the opposite order of the recurrence.
        let t = if reverse { k } else { t_len - 1 - k };
        let h = states.row(t);
        let dh = &d_states.row(t) + &carry;
        let a = ndarray::Zip::from(&dh).and(&h).map_collect(|&g, &y| g * (F::one() - y * y));
        carry = params.w_rec.t().dot(&a);
        da.row_mut(t).assign(&a);
        let src = if reverse { t + 1 } else { t.wrapping_sub(1) };
        if src < t_len {
            prev_states.row_mut(t).assign(&states.row(src));
        }
    }
    grad.w_in += &da.t().dot(&input);
    grad.w_rec += &da.t().dot(&prev_states);
    grad.bias += &da.sum_axis(Axis(0));
    da.dot(&params.w_in)
}

/// Exact gradient of `loss(forward(seq), gold, model, l2_coeff)` by
/// backpropagation through time. `cache` must come from `model.forward` on
/// `seq`; the dropout masks it recorded are reused.
pub fn backward<F: Scalar>(
    model: &BdrnnModel<F>,
    seq: &EncodedSequence,
    gold: usize,
    cache: &ForwardCache<F>,
    l2_coeff: F,
) -> Result<Gradients<F>> {
    let hp = &model.hp;
    if gold >= hp.num_classes {
        return Err(Error::ClassOutOfRange {
            index: gold,
            num_classes: hp.num_classes,
        });
    }
    check_cache(model, seq, cache)?;
    let h = hp.hidden_dim;
    let t_len = cache.ids.len();
    let mut g = Gradients::zeros_like(model);

    let top = ForwardCache::layer_output(cache.layers.last().expect("layers >= 1"));
    let f_last = top.slice(s![t_len - 1, ..h]);
    let b_first = top.slice(s![0, h..]);
    let mut dz = cache.probs.clone();
    dz[gold] -= F::one();
    g.out_fwd = outer(&dz, f_last);
    g.out_bwd = outer(&dz, b_first);
    g.out_bias = dz.clone();

    let mut d_out = Array2::<F>::zeros((t_len, 2 * h));
    d_out.slice_mut(s![t_len - 1, ..h]).assign(&model.out_fwd.t().dot(&dz));
    d_out.slice_mut(s![0, h..]).assign(&model.out_bwd.t().dot(&dz));

    for n in (0..model.layers.len()).rev() {
        let lc = &cache.layers[n];
        if let Some(m) = &lc.mask {
            d_out *= m;
        }
        let params = &model.layers[n];
        let grads = &mut g.layers[n];
        let dx_f = direction_backward(
            &params.fwd,
            &mut grads.fwd,
            lc.input.view(),
            &lc.fwd,
            d_out.slice(s![.., ..h]),
            false,
        );
        let dx_b = direction_backward(
            &params.bwd,
            &mut grads.bwd,
            lc.input.view(),
            &lc.bwd,
            d_out.slice(s![.., h..]),
            true,
        );
        d_out = dx_f + dx_b;
    }

    for (t, &id) in cache.ids.iter().enumerate() {
        let row = d_out.row(t);
        match g.embedding.get_mut(&id) {
            Some(r) => *r += &row,
            None => {
                g.embedding.insert(id, row.to_owned());
            }
        }
    }
    g.add_l2(model, l2_coeff);
    Ok(g)
}

fn outer<F: Scalar>(a: &Array1<F>, b: ndarray::ArrayView1<F>) -> Array2<F> {
    Array2::from_shape_fn((a.len(), b.len()), |(i, j)| a[i] * b[j])
}

fn check_cache<F: Scalar>(model: &BdrnnModel<F>, seq: &EncodedSequence, cache: &ForwardCache<F>) -> Result<()> {
    let hp = &model.hp;
    if cache.ids != seq.ids() {
        return Err(Error::StaleCache("cache was built from a different sequence".into()));
    }
    if cache.layers.len() != model.layers.len() || cache.probs.len() != hp.num_classes {
        return Err(Error::StaleCache("layer or class count differs from model".into()));
    }
    let t_len = cache.ids.len();
    for (n, lc) in cache.layers.iter().enumerate() {
        let want_in = (t_len, hp.layer_input_dim(n));
        let want_h = (t_len, hp.hidden_dim);
        let mask_ok = lc.mask.as_ref().is_none_or(|m| m.dim() == (t_len, 2 * hp.hidden_dim));
        if lc.input.dim() != want_in || lc.fwd.dim() != want_h || lc.bwd.dim() != want_h || !mask_ok {
            return Err(Error::StaleCache(format!("layer {n} activations have the wrong shape")));
        }
    }
    Ok(())
}
