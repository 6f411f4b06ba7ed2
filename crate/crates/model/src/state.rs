//! Model parameters: embeddings, pre-norm transformer blocks, output norm
//! and logit projection, the two regression heads, and the two
//! positional-embedding projections.
//!
//! The final layers of both heads and both PE projections start at exactly
//! zero, so an untrained model regresses the (normalized) channel means and
//! PE injection is a no-op.

use crate::config::ModelConfig;
use crate::mat::{Elem, Mat};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const EDGE_CHANNELS: usize = 8;
pub const TRANSFORM_CHANNELS: usize = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct Linear<F> {
    pub w: Mat<F>,
    /// Stored as a 1-row matrix so all parameters share one tensor type.
    pub b: Mat<F>,
}

impl<F: Elem> Linear<F> {
    fn randn(out_dim: usize, in_dim: usize, std: f64, rng: &mut ChaCha8Rng) -> Self {
        Self {
            w: Mat::randn(out_dim, in_dim, std, rng),
            b: Mat::zeros(1, out_dim),
        }
    }

    fn zeros(out_dim: usize, in_dim: usize) -> Self {
        Self {
            w: Mat::zeros(out_dim, in_dim),
            b: Mat::zeros(1, out_dim),
        }
    }

    pub fn bias(&self) -> &[F] {
        &self.b.data
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormParams<F> {
    pub gain: Mat<F>,
    pub bias: Mat<F>,
}

impl<F: Elem> NormParams<F> {
    fn identity(dim: usize) -> Self {
        let mut gain = Mat::zeros(1, dim);
        gain.data.fill(F::ONE);
        Self {
            gain,
            bias: Mat::zeros(1, dim),
        }
    }
}

/// Two-layer perceptron with a rectifier between the layers; the final
/// layer is zero-initialized.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLayer<F> {
    pub fc1: Linear<F>,
    pub fc2: Linear<F>,
}

impl<F: Elem> TwoLayer<F> {
    fn zero_headed(out_dim: usize, hidden: usize, in_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        // Xavier-ish first layer; exact-zero final layer
        let std = (2.0 / (in_dim + hidden) as f64).sqrt();
        Self {
            fc1: Linear::randn(hidden, in_dim, std, rng),
            fc2: Linear::zeros(out_dim, hidden),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttnParams<F> {
    pub wq: Linear<F>,
    pub wk: Linear<F>,
    pub wv: Linear<F>,
    pub wo: Linear<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockParams<F> {
    pub ln1: NormParams<F>,
    pub attn: AttnParams<F>,
    pub ln2: NormParams<F>,
    pub fc1: Linear<F>,
    pub fc2: Linear<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<F> {
    pub token_embed: Mat<F>,
    pub pos_embed: Mat<F>,
    pub blocks: Vec<BlockParams<F>>,
    pub ln_f: NormParams<F>,
    pub lm_head: Linear<F>,
    pub edge_head: TwoLayer<F>,
    pub transform_head: TwoLayer<F>,
    pub pe_edge: TwoLayer<F>,
    pub pe_transform: TwoLayer<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelState<F> {
    pub config: ModelConfig,
    pub params: ModelParams<F>,
}

impl<F: Elem> ModelState<F> {
    pub fn new(config: ModelConfig, seed: u64) -> Self {
        config.validate().expect("valid model config");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = config.embed_dim;
        let hidden = d * config.mlp_ratio;
        let std = 0.02;

        let blocks = (0..config.layers)
            .map(|_| BlockParams {
                ln1: NormParams::identity(d),
                attn: AttnParams {
                    wq: Linear::randn(d, d, std, &mut rng),
                    wk: Linear::randn(d, d, std, &mut rng),
                    wv: Linear::randn(d, d, std, &mut rng),
                    wo: Linear::randn(d, d, std, &mut rng),
                },
                ln2: NormParams::identity(d),
                fc1: Linear::randn(hidden, d, std, &mut rng),
                fc2: Linear::randn(d, hidden, std, &mut rng),
            })
            .collect();

        let params = ModelParams {
            token_embed: Mat::randn(config.vocab_size, d, std, &mut rng),
            pos_embed: Mat::randn(config.context_len, d, std, &mut rng),
            blocks,
            ln_f: NormParams::identity(d),
            lm_head: Linear::randn(config.vocab_size, d, std, &mut rng),
            edge_head: TwoLayer::zero_headed(EDGE_CHANNELS, d, d, &mut rng),
            transform_head: TwoLayer::zero_headed(TRANSFORM_CHANNELS, d, d, &mut rng),
            pe_edge: TwoLayer::zero_headed(d, d, 2, &mut rng),
            pe_transform: TwoLayer::zero_headed(d, d, TRANSFORM_CHANNELS, &mut rng),
        };
        Self { config, params }
    }

    /// Zero-filled parameter set with the same shapes (gradients, moments).
    pub fn zeros_like(&self) -> ModelParams<F> {
        map_params(&self.params, |m| Mat::zeros(m.rows, m.cols))
    }

    pub fn param_count(&self) -> usize {
        self.params.tensors().iter().map(|m| m.len()).sum()
    }

    /// Converts the parameter dtype (used for f64 gradient checking).
    pub fn cast<G: Elem>(&self) -> ModelState<G> {
        ModelState {
            config: self.config.clone(),
            params: map_params(&self.params, |m| Mat {
                rows: m.rows,
                cols: m.cols,
                data: m.data.iter().map(|v| G::from_f64(v.to_f64())).collect(),
            }),
        }
    }
}

fn map_params<F: Elem, G: Elem>(
    p: &ModelParams<F>,
    mut f: impl FnMut(&Mat<F>) -> Mat<G>,
) -> ModelParams<G> {
    let lin = |l: &Linear<F>, f: &mut dyn FnMut(&Mat<F>) -> Mat<G>| Linear {
        w: f(&l.w),
        b: f(&l.b),
    };
    let norm = |n: &NormParams<F>, f: &mut dyn FnMut(&Mat<F>) -> Mat<G>| NormParams {
        gain: f(&n.gain),
        bias: f(&n.bias),
    };
    let two = |t: &TwoLayer<F>, f: &mut dyn FnMut(&Mat<F>) -> Mat<G>| TwoLayer {
        fc1: lin(&t.fc1, f),
        fc2: lin(&t.fc2, f),
    };
    ModelParams {
        token_embed: f(&p.token_embed),
        pos_embed: f(&p.pos_embed),
        blocks: p
            .blocks
            .iter()
            .map(|b| BlockParams {
                ln1: norm(&b.ln1, &mut f),
                attn: AttnParams {
                    wq: lin(&b.attn.wq, &mut f),
                    wk: lin(&b.attn.wk, &mut f),
                    wv: lin(&b.attn.wv, &mut f),
                    wo: lin(&b.attn.wo, &mut f),
                },
                ln2: norm(&b.ln2, &mut f),
                fc1: lin(&b.fc1, &mut f),
                fc2: lin(&b.fc2, &mut f),
            })
            .collect(),
        ln_f: norm(&p.ln_f, &mut f),
        lm_head: lin(&p.lm_head, &mut f),
        edge_head: two(&p.edge_head, &mut f),
        transform_head: two(&p.transform_head, &mut f),
        pe_edge: two(&p.pe_edge, &mut f),
        pe_transform: two(&p.pe_transform, &mut f),
    }
}

impl<F: Elem> ModelParams<F> {
    /// Canonical tensor names, in the fixed order shared by [`Self::tensors`]
    /// and [`Self::tensors_mut`]. The optimizer, checkpoint format, and
    /// gradient checker all rely on this order.
    pub fn tensor_names(&self) -> Vec<String> {
        let mut names: Vec<String> = vec!["token_embed".into(), "pos_embed".into()];
        for i in 0..self.blocks.len() {
            let base = format!("block{i}");
            names.push(format!("{base}.ln1.gain"));
            names.push(format!("{base}.ln1.bias"));
            for attn in ["wq", "wk", "wv", "wo"] {
                names.push(format!("{base}.attn.{attn}.w"));
                names.push(format!("{base}.attn.{attn}.b"));
            }
            names.push(format!("{base}.ln2.gain"));
            names.push(format!("{base}.ln2.bias"));
            names.push(format!("{base}.mlp.fc1.w"));
            names.push(format!("{base}.mlp.fc1.b"));
            names.push(format!("{base}.mlp.fc2.w"));
            names.push(format!("{base}.mlp.fc2.b"));
        }
        names.push("ln_f.gain".into());
        names.push("ln_f.bias".into());
        names.push("lm_head.w".into());
        names.push("lm_head.b".into());
        for head in ["edge_head", "transform_head", "pe_edge", "pe_transform"] {
            names.push(format!("{head}.fc1.w"));
            names.push(format!("{head}.fc1.b"));
            names.push(format!("{head}.fc2.w"));
            names.push(format!("{head}.fc2.b"));
        }
        names
    }

    pub fn tensors(&self) -> Vec<&Mat<F>> {
        let mut out: Vec<&Mat<F>> = vec![&self.token_embed, &self.pos_embed];
        for b in &self.blocks {
            out.push(&b.ln1.gain);
            out.push(&b.ln1.bias);
            for l in [&b.attn.wq, &b.attn.wk, &b.attn.wv, &b.attn.wo] {
                out.push(&l.w);
                out.push(&l.b);
            }
            out.push(&b.ln2.gain);
            out.push(&b.ln2.bias);
            out.push(&b.fc1.w);
            out.push(&b.fc1.b);
            out.push(&b.fc2.w);
            out.push(&b.fc2.b);
        }
        out.push(&self.ln_f.gain);
        out.push(&self.ln_f.bias);
        out.push(&self.lm_head.w);
        out.push(&self.lm_head.b);
        for t in [
            &self.edge_head,
            &self.transform_head,
            &self.pe_edge,
            &self.pe_transform,
        ] {
            out.push(&t.fc1.w);
            out.push(&t.fc1.b);
            out.push(&t.fc2.w);
            out.push(&t.fc2.b);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Mat<F>> {
        let mut out: Vec<&mut Mat<F>> = vec![&mut self.token_embed, &mut self.pos_embed];
        for b in &mut self.blocks {
            out.push(&mut b.ln1.gain);
            out.push(&mut b.ln1.bias);
            for l in [&mut b.attn.wq, &mut b.attn.wk, &mut b.attn.wv, &mut b.attn.wo] {
                out.push(&mut l.w);
                out.push(&mut l.b);
            }
            out.push(&mut b.ln2.gain);
            out.push(&mut b.ln2.bias);
            out.push(&mut b.fc1.w);
            out.push(&mut b.fc1.b);
            out.push(&mut b.fc2.w);
            out.push(&mut b.fc2.b);
        }
        out.push(&mut self.ln_f.gain);
        out.push(&mut self.ln_f.bias);
        out.push(&mut self.lm_head.w);
        out.push(&mut self.lm_head.b);
        for t in [
            &mut self.edge_head,
            &mut self.transform_head,
            &mut self.pe_edge,
            &mut self.pe_transform,
        ] {
            out.push(&mut t.fc1.w);
            out.push(&mut t.fc1.b);
            out.push(&mut t.fc2.w);
            out.push(&mut t.fc2.b);
        }
        out
    }
}
