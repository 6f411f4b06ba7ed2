//! Decoder-only transformer forward/backward.
//!
//! Input embedding at position i is token embedding + learned position
//! embedding, plus a projection of the (quantized) edge endpoint when token
//! i is an edge token, or of the 7-channel placement when it is `<R>`.
//! Hidden states pass through pre-norm blocks (causal attention + GELU
//! MLP), a final norm, and three read-outs: logits, the 8-channel edge head,
//! and the 7-channel transform head. Head outputs at position i-1 are the
//! predictions for a payload token appearing at position i.
//!
//! Every row is produced by the shared kernels in [`crate::mat`] and the
//! row helpers here, so KV-cached incremental evaluation (sampling) is
//! bitwise identical to the batched pass.

use crate::batch::{PeInput, SeqExample};
use crate::mat::{axpy, dot, linear_bwd, linear_row, Elem, Mat};
use crate::state::{
    Linear, ModelParams, ModelState, NormParams, TwoLayer, EDGE_CHANNELS, TRANSFORM_CHANNELS,
};
use rayon::prelude::*;
use std::fmt;

const LN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    SequenceTooLong { len: usize, context: usize },
    TokenOutOfRange { token: u32, vocab: usize },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SequenceTooLong { len, context } => {
                write!(f, "sequence length {len} exceeds context {context}")
            }
            Self::TokenOutOfRange { token, vocab } => {
                write!(f, "token id {token} outside vocabulary of {vocab}")
            }
        }
    }
}

impl std::error::Error for ModelError {}

#[derive(Debug, Clone, Copy)]
pub struct ForwardOptions {
    /// Disable to verify that payload injection is a no-op at init.
    pub inject_pe: bool,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        Self { inject_pe: true }
    }
}

/// Per-position read-outs for one sequence.
#[derive(Debug, Clone)]
pub struct SeqOutputs<F> {
    pub logits: Mat<F>,
    pub edge_preds: Mat<F>,
    pub transform_preds: Mat<F>,
}

pub struct NormCache<F> {
    xhat: Mat<F>,
    inv_std: Vec<F>,
    /// Normalized-and-affine output (input to the next linear).
    pub out: Mat<F>,
}

pub struct BlockCache<F> {
    ln1: NormCache<F>,
    q: Mat<F>,
    k: Mat<F>,
    v: Mat<F>,
    /// Softmaxed attention weights per head, row i over keys 0..=i.
    attw: Vec<Mat<F>>,
    att_concat: Mat<F>,
    ln2: NormCache<F>,
    h_pre: Mat<F>,
    h_act: Mat<F>,
}

pub struct PeCache<F> {
    pos: usize,
    is_edge: bool,
    input: Vec<F>,
    h_pre: Vec<F>,
    h_act: Vec<F>,
}

pub struct HeadCache<F> {
    h_pre: Mat<F>,
    h_act: Mat<F>,
}

pub struct SeqCache<F> {
    blocks: Vec<BlockCache<F>>,
    pub ln_f: NormCache<F>,
    pe: Vec<PeCache<F>>,
    edge_head: HeadCache<F>,
    transform_head: HeadCache<F>,
}

/// y = gain .* (x - mean) / sqrt(var + eps) + bias; returns inv_std.
pub fn layer_norm_row<F: Elem>(
    x: &[F],
    gain: &[F],
    bias: &[F],
    xhat: &mut [F],
    y: &mut [F],
) -> F {
    let n = F::from_f64(x.len() as f64);
    let mut mean = F::ZERO;
    for &v in x {
        mean += v;
    }
    mean = mean / n;
    let mut var = F::ZERO;
    for &v in x {
        var += (v - mean) * (v - mean);
    }
    var = var / n;
    let inv_std = F::ONE / (var + F::from_f64(LN_EPS)).sqrt();
    for i in 0..x.len() {
        xhat[i] = (x[i] - mean) * inv_std;
        y[i] = gain[i] * xhat[i] + bias[i];
    }
    inv_std
}

/// tanh-approximated GELU.
pub fn gelu<F: Elem>(x: F) -> F {
    let k = F::from_f64(0.7978845608028654); // sqrt(2/pi)
    let a = F::from_f64(0.044715);
    let u = k * (x + a * x * x * x);
    F::from_f64(0.5) * x * (F::ONE + u.tanh())
}

fn gelu_grad<F: Elem>(x: F) -> F {
    let k = F::from_f64(0.7978845608028654);
    let a = F::from_f64(0.044715);
    let u = k * (x + a * x * x * x);
    let t = u.tanh();
    let du = k * (F::ONE + F::from_f64(3.0) * a * x * x);
    F::from_f64(0.5) * (F::ONE + t) + F::from_f64(0.5) * x * (F::ONE - t * t) * du
}

fn relu<F: Elem>(x: F) -> F {
    x.max_val(F::ZERO)
}

/// Causal attention for one query row over `t` cached key/value rows.
/// `save_weights(head, weights)` receives the softmaxed row when caching.
pub fn attend_row<F: Elem>(
    q: &[F],
    keys: &[F],
    values: &[F],
    heads: usize,
    out: &mut [F],
    mut save_weights: impl FnMut(usize, &[F]),
) {
    let d = q.len();
    let hd = d / heads;
    let t = keys.len() / d;
    let scale = F::ONE / F::from_f64(hd as f64).sqrt();
    let mut w = vec![F::ZERO; t];
    for h in 0..heads {
        let qh = &q[h * hd..(h + 1) * hd];
        let mut mx = F::from_f64(f64::NEG_INFINITY);
        for (j, slot) in w.iter_mut().enumerate() {
            *slot = dot(qh, &keys[j * d + h * hd..j * d + (h + 1) * hd]) * scale;
            mx = mx.max_val(*slot);
        }
        let mut sum = F::ZERO;
        for slot in w.iter_mut() {
            *slot = (*slot - mx).exp();
            sum += *slot;
        }
        for slot in w.iter_mut() {
            *slot = *slot / sum;
        }
        let oh = &mut out[h * hd..(h + 1) * hd];
        oh.fill(F::ZERO);
        for (j, &weight) in w.iter().enumerate() {
            axpy(weight, &values[j * d + h * hd..j * d + (h + 1) * hd], oh);
        }
        save_weights(h, &w);
    }
}

/// Two-layer perceptron row with a ReLU between the layers.
pub fn two_layer_row<F: Elem>(
    t: &TwoLayer<F>,
    x: &[F],
    h_pre: &mut [F],
    h_act: &mut [F],
    out: &mut [F],
) {
    linear_row(x, &t.fc1.w, t.fc1.bias(), h_pre);
    for (a, p) in h_act.iter_mut().zip(h_pre.iter()) {
        *a = relu(*p);
    }
    linear_row(h_act, &t.fc2.w, t.fc2.bias(), out);
}

/// Token + position embedding with optional payload injection.
pub fn embed_row<F: Elem>(
    params: &ModelParams<F>,
    token: u32,
    pos: usize,
    injection: Option<&[F]>,
    out: &mut [F],
) {
    let te = params.token_embed.row(token as usize);
    let pe = params.pos_embed.row(pos);
    for i in 0..out.len() {
        out[i] = te[i] + pe[i];
    }
    if let Some(inj) = injection {
        for i in 0..out.len() {
            out[i] += inj[i];
        }
    }
}

/// PE projection of a payload input; returns the projection and its cache.
pub fn project_pe<F: Elem>(
    params: &ModelParams<F>,
    pe_input: &PeInput,
    pos: usize,
    d: usize,
) -> (Vec<F>, PeCache<F>) {
    let (proj, input, is_edge): (&TwoLayer<F>, Vec<F>, bool) = match pe_input {
        PeInput::Edge(v) => (
            &params.pe_edge,
            v.iter().map(|&x| F::from_f64(x)).collect(),
            true,
        ),
        PeInput::Transform(v) => (
            &params.pe_transform,
            v.iter().map(|&x| F::from_f64(x)).collect(),
            false,
        ),
    };
    let mut h_pre = vec![F::ZERO; d];
    let mut h_act = vec![F::ZERO; d];
    let mut out = vec![F::ZERO; d];
    two_layer_row(proj, &input, &mut h_pre, &mut h_act, &mut out);
    (
        out,
        PeCache {
            pos,
            is_edge,
            input,
            h_pre,
            h_act,
        },
    )
}

fn norm_forward<F: Elem>(x: &Mat<F>, p: &NormParams<F>) -> NormCache<F> {
    let mut xhat = Mat::zeros(x.rows, x.cols);
    let mut out = Mat::zeros(x.rows, x.cols);
    let mut inv_std = vec![F::ZERO; x.rows];
    let cols = x.cols;
    xhat.data
        .par_chunks_mut(cols)
        .zip(out.data.par_chunks_mut(cols))
        .zip(inv_std.par_iter_mut())
        .zip(x.data.par_chunks(cols))
        .for_each(|(((xh, y), inv), xrow)| {
            *inv = layer_norm_row(xrow, &p.gain.data, &p.bias.data, xh, y);
        });
    NormCache { xhat, inv_std, out }
}

fn linear_forward<F: Elem>(x: &Mat<F>, l: &Linear<F>) -> Mat<F> {
    crate::mat::linear_fwd(x, &l.w, l.bias())
}

/// Full forward pass over one sequence; returns per-position outputs and
/// the activation cache for backward.
pub fn forward<F: Elem>(
    state: &ModelState<F>,
    seq: &SeqExample,
    opts: ForwardOptions,
) -> Result<(SeqOutputs<F>, SeqCache<F>), ModelError> {
    let cfg = &state.config;
    let p = &state.params;
    let t_len = seq.tokens.len();
    let d = cfg.embed_dim;
    if t_len > cfg.context_len {
        return Err(ModelError::SequenceTooLong {
            len: t_len,
            context: cfg.context_len,
        });
    }
    for &tok in &seq.tokens {
        if tok as usize >= cfg.vocab_size {
            return Err(ModelError::TokenOutOfRange {
                token: tok,
                vocab: cfg.vocab_size,
            });
        }
    }

    // embeddings with payload injection
    let mut x = Mat::zeros(t_len, d);
    let mut pe_caches = Vec::new();
    for i in 0..t_len {
        let injection = match (&seq.pe_inputs[i], opts.inject_pe) {
            (Some(pe), true) => {
                let (out, cache) = project_pe(p, pe, i, d);
                pe_caches.push(cache);
                Some(out)
            }
            _ => None,
        };
        embed_row(p, seq.tokens[i], i, injection.as_deref(), x.row_mut(i));
    }

    let mut blocks = Vec::with_capacity(cfg.layers);
    for block in &p.blocks {
        let ln1 = norm_forward(&x, &block.ln1);
        let q = linear_forward(&ln1.out, &block.attn.wq);
        let k = linear_forward(&ln1.out, &block.attn.wk);
        let v = linear_forward(&ln1.out, &block.attn.wv);

        let mut attw: Vec<Mat<F>> = (0..cfg.heads).map(|_| Mat::zeros(t_len, t_len)).collect();
        let mut att_concat = Mat::zeros(t_len, d);
        let weight_rows: Vec<Vec<Vec<F>>> = att_concat
            .data
            .par_chunks_mut(d)
            .enumerate()
            .map(|(i, out_row)| {
                let mut per_head: Vec<Vec<F>> = Vec::with_capacity(cfg.heads);
                attend_row(
                    q.row(i),
                    &k.data[..(i + 1) * d],
                    &v.data[..(i + 1) * d],
                    cfg.heads,
                    out_row,
                    |_h, w| per_head.push(w.to_vec()),
                );
                per_head
            })
            .collect();
        for (i, per_head) in weight_rows.into_iter().enumerate() {
            for (h, w) in per_head.into_iter().enumerate() {
                attw[h].row_mut(i)[..w.len()].copy_from_slice(&w);
            }
        }

        let att_out = linear_forward(&att_concat, &block.attn.wo);
        let mut x_mid = x;
        for (xm, ao) in x_mid.data.iter_mut().zip(&att_out.data) {
            *xm += *ao;
        }

        let ln2 = norm_forward(&x_mid, &block.ln2);
        let h_pre = linear_forward(&ln2.out, &block.fc1);
        let mut h_act = Mat::zeros(h_pre.rows, h_pre.cols);
        h_act
            .data
            .par_iter_mut()
            .zip(h_pre.data.par_iter())
            .for_each(|(a, &v)| *a = gelu(v));
        let mlp_out = linear_forward(&h_act, &block.fc2);
        let mut x_next = x_mid;
        for (xn, mo) in x_next.data.iter_mut().zip(&mlp_out.data) {
            *xn += *mo;
        }

        blocks.push(BlockCache {
            ln1,
            q,
            k,
            v,
            attw,
            att_concat,
            ln2,
            h_pre,
            h_act,
        });
        x = x_next;
    }

    let ln_f = norm_forward(&x, &p.ln_f);
    let logits = linear_forward(&ln_f.out, &p.lm_head);

    let run_head = |head: &TwoLayer<F>, ch: usize| -> (Mat<F>, HeadCache<F>) {
        let mut h_pre = Mat::zeros(t_len, d);
        let mut h_act = Mat::zeros(t_len, d);
        let mut out = Mat::zeros(t_len, ch);
        out.data
            .par_chunks_mut(ch)
            .zip(h_pre.data.par_chunks_mut(d))
            .zip(h_act.data.par_chunks_mut(d))
            .zip(ln_f.out.data.par_chunks(d))
            .for_each(|(((o, hp), ha), xr)| two_layer_row(head, xr, hp, ha, o));
        (out, HeadCache { h_pre, h_act })
    };
    let (edge_preds, edge_head) = run_head(&p.edge_head, EDGE_CHANNELS);
    let (transform_preds, transform_head) = run_head(&p.transform_head, TRANSFORM_CHANNELS);

    let cache = SeqCache {
        blocks,
        ln_f,
        pe: pe_caches,
        edge_head,
        transform_head,
    };
    Ok((
        SeqOutputs {
            logits,
            edge_preds,
            transform_preds,
        },
        cache,
    ))
}

/// dx for a layer norm, accumulating gain/bias gradients.
fn norm_backward<F: Elem>(
    dy: &Mat<F>,
    cache: &NormCache<F>,
    p: &NormParams<F>,
    dgain: &mut Mat<F>,
    dbias: &mut Mat<F>,
) -> Mat<F> {
    let rows = dy.rows;
    let cols = dy.cols;
    let mut dx = Mat::zeros(rows, cols);
    let n = F::from_f64(cols as f64);
    for i in 0..rows {
        let dyr = dy.row(i);
        let xhat = cache.xhat.row(i);
        let inv = cache.inv_std[i];
        let dg = dgain.row_mut(0);
        let db = dbias.row_mut(0);
        let mut mean_dxhat = F::ZERO;
        let mut mean_dxhat_xhat = F::ZERO;
        for c in 0..cols {
            dg[c] += dyr[c] * xhat[c];
            db[c] += dyr[c];
            let dxhat = dyr[c] * p.gain.data[c];
            mean_dxhat += dxhat;
            mean_dxhat_xhat += dxhat * xhat[c];
        }
        mean_dxhat = mean_dxhat / n;
        mean_dxhat_xhat = mean_dxhat_xhat / n;
        let dxr = dx.row_mut(i);
        for c in 0..cols {
            let dxhat = dyr[c] * p.gain.data[c];
            dxr[c] = (dxhat - mean_dxhat - xhat[c] * mean_dxhat_xhat) * inv;
        }
    }
    dx
}

/// Gradients of the three read-out matrices for one sequence.
pub struct OutputGrads<F> {
    pub d_logits: Mat<F>,
    pub d_edge: Mat<F>,
    pub d_transform: Mat<F>,
}

/// Backward pass; accumulates parameter gradients into `grads`.
pub fn backward<F: Elem>(
    state: &ModelState<F>,
    seq: &SeqExample,
    cache: &SeqCache<F>,
    outs: &OutputGrads<F>,
    grads: &mut ModelParams<F>,
) {
    let cfg = &state.config;
    let p = &state.params;
    let d = cfg.embed_dim;
    let t_len = seq.tokens.len();
    let heads = cfg.heads;
    let hd = cfg.head_dim();
    let scale = F::ONE / F::from_f64(hd as f64).sqrt();

    // read-outs share the final-norm output
    let mut d_lnf_out = linear_bwd(
        &cache.ln_f.out,
        &p.lm_head.w,
        &outs.d_logits,
        &mut grads.lm_head.w,
        &mut grads.lm_head.b.data,
    );
    for (head, hcache, dy, g) in [
        (
            &p.edge_head,
            &cache.edge_head,
            &outs.d_edge,
            &mut grads.edge_head,
        ),
        (
            &p.transform_head,
            &cache.transform_head,
            &outs.d_transform,
            &mut grads.transform_head,
        ),
    ] {
        let mut d_act = linear_bwd(&hcache.h_act, &head.fc2.w, dy, &mut g.fc2.w, &mut g.fc2.b.data);
        for (da, &hp) in d_act.data.iter_mut().zip(&hcache.h_pre.data) {
            if hp <= F::ZERO {
                *da = F::ZERO;
            }
        }
        let d_head_in = linear_bwd(
            &cache.ln_f.out,
            &head.fc1.w,
            &d_act,
            &mut g.fc1.w,
            &mut g.fc1.b.data,
        );
        for (acc, v) in d_lnf_out.data.iter_mut().zip(&d_head_in.data) {
            *acc += *v;
        }
    }

    let mut dx = norm_backward(
        &d_lnf_out,
        &cache.ln_f,
        &p.ln_f,
        &mut grads.ln_f.gain,
        &mut grads.ln_f.bias,
    );

    for (bi, block) in p.blocks.iter().enumerate().rev() {
        let bc = &cache.blocks[bi];
        let g = &mut grads.blocks[bi];

        // MLP branch: x_next = x_mid + fc2(gelu(fc1(ln2(x_mid))))
        let mut d_act = linear_bwd(&bc.h_act, &block.fc2.w, &dx, &mut g.fc2.w, &mut g.fc2.b.data);
        d_act
            .data
            .par_iter_mut()
            .zip(bc.h_pre.data.par_iter())
            .for_each(|(da, &hp)| *da *= gelu_grad(hp));
        let d_ln2_out = linear_bwd(
            &bc.ln2.out,
            &block.fc1.w,
            &d_act,
            &mut g.fc1.w,
            &mut g.fc1.b.data,
        );
        let d_mid_norm =
            norm_backward(&d_ln2_out, &bc.ln2, &block.ln2, &mut g.ln2.gain, &mut g.ln2.bias);
        let mut d_x_mid = dx;
        for (a, b) in d_x_mid.data.iter_mut().zip(&d_mid_norm.data) {
            *a += *b;
        }

        // attention branch: x_mid = x_in + wo(attend(q, k, v))
        let d_concat = linear_bwd(
            &bc.att_concat,
            &block.attn.wo.w,
            &d_x_mid,
            &mut g.attn.wo.w,
            &mut g.attn.wo.b.data,
        );
        let mut dq = Mat::zeros(t_len, d);
        let mut dk = Mat::zeros(t_len, d);
        let mut dv = Mat::zeros(t_len, d);
        for h in 0..heads {
            let attw = &bc.attw[h];
            for i in 0..t_len {
                let a_row = &attw.row(i)[..=i];
                let d_out_h = &d_concat.row(i)[h * hd..(h + 1) * hd];
                let mut d_a: Vec<F> = (0..=i)
                    .map(|j| dot(d_out_h, &bc.v.row(j)[h * hd..(h + 1) * hd]))
                    .collect();
                let mut dot_wa = F::ZERO;
                for j in 0..=i {
                    axpy(a_row[j], d_out_h, &mut dv.row_mut(j)[h * hd..(h + 1) * hd]);
                    dot_wa += a_row[j] * d_a[j];
                }
                for j in 0..=i {
                    d_a[j] = a_row[j] * (d_a[j] - dot_wa);
                }
                for j in 0..=i {
                    let ds = d_a[j] * scale;
                    axpy(
                        ds,
                        &bc.k.row(j)[h * hd..(h + 1) * hd],
                        &mut dq.row_mut(i)[h * hd..(h + 1) * hd],
                    );
                    axpy(
                        ds,
                        &bc.q.row(i)[h * hd..(h + 1) * hd],
                        &mut dk.row_mut(j)[h * hd..(h + 1) * hd],
                    );
                }
            }
        }

        let mut d_ln1_out = linear_bwd(
            &bc.ln1.out,
            &block.attn.wq.w,
            &dq,
            &mut g.attn.wq.w,
            &mut g.attn.wq.b.data,
        );
        let dk_x = linear_bwd(
            &bc.ln1.out,
            &block.attn.wk.w,
            &dk,
            &mut g.attn.wk.w,
            &mut g.attn.wk.b.data,
        );
        let dv_x = linear_bwd(
            &bc.ln1.out,
            &block.attn.wv.w,
            &dv,
            &mut g.attn.wv.w,
            &mut g.attn.wv.b.data,
        );
        for (a, (b, c)) in d_ln1_out
            .data
            .iter_mut()
            .zip(dk_x.data.iter().zip(&dv_x.data))
        {
            *a += *b + *c;
        }
        let d_in_norm =
            norm_backward(&d_ln1_out, &bc.ln1, &block.ln1, &mut g.ln1.gain, &mut g.ln1.bias);
        let mut d_x_in = d_x_mid;
        for (a, b) in d_x_in.data.iter_mut().zip(&d_in_norm.data) {
            *a += *b;
        }
        dx = d_x_in;
    }

    // embeddings and PE projections
    for i in 0..t_len {
        let dr = dx.row(i);
        axpy(F::ONE, dr, grads.token_embed.row_mut(seq.tokens[i] as usize));
        axpy(F::ONE, dr, grads.pos_embed.row_mut(i));
    }
    for pe in &cache.pe {
        let dr = dx.row(pe.pos);
        let (proj, g) = if pe.is_edge {
            (&p.pe_edge, &mut grads.pe_edge)
        } else {
            (&p.pe_transform, &mut grads.pe_transform)
        };
        // fc2 backward: dw2[o] += dr[o] * h_act, d_act = sum_o dr[o] * w2[o]
        let mut d_act = vec![F::ZERO; pe.h_act.len()];
        for (o, &gout) in dr.iter().enumerate() {
            axpy(gout, &pe.h_act, g.fc2.w.row_mut(o));
            g.fc2.b.data[o] += gout;
            axpy(gout, proj.fc2.w.row(o), &mut d_act);
        }
        for (da, &hp) in d_act.iter_mut().zip(&pe.h_pre) {
            if hp <= F::ZERO {
                *da = F::ZERO;
            }
        }
        // fc1 backward; the gradient into the payload input is discarded
        for (hidx, &gh) in d_act.iter().enumerate() {
            axpy(gh, &pe.input, g.fc1.w.row_mut(hidx));
            g.fc1.b.data[hidx] += gh;
        }
    }
}
