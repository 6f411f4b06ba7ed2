//! Autoregressive sampling with per-step KV caching, regression-head
//! payload feedback, and grammar-constrained decoding.
//!
//! After sampling token t_i, if it is an edge token the 8-channel
//! prediction read from the previous position's hidden state becomes its
//! payload, and the projection of its quantized endpoint is added to t_i's
//! input embedding before the next step; the `<R>` token works the same
//! way through the 7-channel head. Constrained decoding (default on) masks
//! logits to grammar-legal tokens each step.

use crate::batch::{PeInput, SeqExample};
use crate::mat::Elem;
use crate::state::{ModelState, EDGE_CHANNELS, TRANSFORM_CHANNELS};
use crate::transformer::{attend_row, embed_row, layer_norm_row, two_layer_row, ModelError};
use patternlm_core::codec::{
    channel_mask, quantize_pe_input, Grammar, GrammarConfig, Payload, TokenizedGarment, Vocabulary,
};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingMode {
    Greedy,
    Temperature(f64),
}

#[derive(Debug, Clone)]
pub struct SampleOptions {
    pub mode: SamplingMode,
    pub max_len: usize,
    /// Mask logits to grammar-legal tokens at every step.
    pub grammar_constraint: bool,
    pub seed: u64,
    /// Record per-step logits (for teacher-forcing consistency checks).
    pub capture_logits: bool,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            mode: SamplingMode::Greedy,
            max_len: 1024,
            grammar_constraint: true,
            seed: 0,
            capture_logits: false,
        }
    }
}

#[derive(Debug)]
pub enum SampleError {
    Model(ModelError),
    /// `max_len` reached without `<garment_end>`; carries the prefix.
    MaxLen { partial: TokenizedGarment },
    /// Constrained decoding left no legal token.
    Stuck { position: usize },
}

impl fmt::Display for SampleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Model(e) => write!(f, "{e}"),
            Self::MaxLen { partial } => write!(
                f,
                "max length reached after {} garment tokens without <garment_end>",
                partial.tokens.len()
            ),
            Self::Stuck { position } => {
                write!(f, "no grammar-legal token available at position {position}")
            }
        }
    }
}

impl std::error::Error for SampleError {}

impl From<ModelError> for SampleError {
    fn from(e: ModelError) -> Self {
        Self::Model(e)
    }
}

/// Sampled garment: the tokenized garment region plus the full sequence
/// (prompt included) as the model saw it.
#[derive(Debug, Clone)]
pub struct SampleOutput<F> {
    pub garment: TokenizedGarment,
    pub sequence: SeqExample,
    /// Logits for each sampled token, in sampling order (when captured).
    pub logits_trace: Vec<Vec<F>>,
}

struct LayerKv<F> {
    k: Vec<F>,
    v: Vec<F>,
}

/// Incremental evaluation session over a growing sequence.
pub struct InferSession<'m, F: Elem> {
    state: &'m ModelState<F>,
    kv: Vec<LayerKv<F>>,
    pos: usize,
}

/// Read-outs of one incremental step.
pub struct StepOut<F> {
    pub logits: Vec<F>,
    pub edge_pred: [F; EDGE_CHANNELS],
    pub transform_pred: [F; TRANSFORM_CHANNELS],
}

impl<'m, F: Elem> InferSession<'m, F> {
    pub fn new(state: &'m ModelState<F>) -> Self {
        let kv = (0..state.config.layers)
            .map(|_| LayerKv {
                k: Vec::new(),
                v: Vec::new(),
            })
            .collect();
        Self { state, kv, pos: 0 }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    /// Feeds one token (with its PE input, if any) and returns the
    /// read-outs at its position. Bitwise identical to the batched forward.
    pub fn step(&mut self, token: u32, pe_input: Option<&PeInput>) -> Result<StepOut<F>, ModelError> {
        let cfg = &self.state.config;
        let p = &self.state.params;
        let d = cfg.embed_dim;
        if self.pos >= cfg.context_len {
            return Err(ModelError::SequenceTooLong {
                len: self.pos + 1,
                context: cfg.context_len,
            });
        }
        if token as usize >= cfg.vocab_size {
            return Err(ModelError::TokenOutOfRange {
                token,
                vocab: cfg.vocab_size,
            });
        }

        let injection = pe_input.map(|pe| crate::transformer::project_pe(p, pe, self.pos, d).0);
        let mut x = vec![F::ZERO; d];
        embed_row(p, token, self.pos, injection.as_deref(), &mut x);

        let mut xhat = vec![F::ZERO; d];
        for (block, kv) in p.blocks.iter().zip(&mut self.kv) {
            let mut normed = vec![F::ZERO; d];
            layer_norm_row(&x, &block.ln1.gain.data, &block.ln1.bias.data, &mut xhat, &mut normed);
            let mut q = vec![F::ZERO; d];
            let mut k = vec![F::ZERO; d];
            let mut v = vec![F::ZERO; d];
            crate::mat::linear_row(&normed, &block.attn.wq.w, block.attn.wq.bias(), &mut q);
            crate::mat::linear_row(&normed, &block.attn.wk.w, block.attn.wk.bias(), &mut k);
            crate::mat::linear_row(&normed, &block.attn.wv.w, block.attn.wv.bias(), &mut v);
            kv.k.extend_from_slice(&k);
            kv.v.extend_from_slice(&v);

            let mut att = vec![F::ZERO; d];
            attend_row(&q, &kv.k, &kv.v, cfg.heads, &mut att, |_, _| {});
            let mut att_out = vec![F::ZERO; d];
            crate::mat::linear_row(&att, &block.attn.wo.w, block.attn.wo.bias(), &mut att_out);
            for (xi, ao) in x.iter_mut().zip(&att_out) {
                *xi += *ao;
            }

            layer_norm_row(&x, &block.ln2.gain.data, &block.ln2.bias.data, &mut xhat, &mut normed);
            let hidden = d * cfg.mlp_ratio;
            let mut h_pre = vec![F::ZERO; hidden];
            crate::mat::linear_row(&normed, &block.fc1.w, block.fc1.bias(), &mut h_pre);
            for h in h_pre.iter_mut() {
                *h = crate::transformer::gelu(*h);
            }
            let mut mlp_out = vec![F::ZERO; d];
            crate::mat::linear_row(&h_pre, &block.fc2.w, block.fc2.bias(), &mut mlp_out);
            for (xi, mo) in x.iter_mut().zip(&mlp_out) {
                *xi += *mo;
            }
        }

        let mut x_f = vec![F::ZERO; d];
        layer_norm_row(&x, &p.ln_f.gain.data, &p.ln_f.bias.data, &mut xhat, &mut x_f);
        let mut logits = vec![F::ZERO; cfg.vocab_size];
        crate::mat::linear_row(&x_f, &p.lm_head.w, p.lm_head.bias(), &mut logits);

        let mut h_pre = vec![F::ZERO; d];
        let mut h_act = vec![F::ZERO; d];
        let mut edge_pred = [F::ZERO; EDGE_CHANNELS];
        two_layer_row(&p.edge_head, &x_f, &mut h_pre, &mut h_act, &mut edge_pred);
        let mut transform_pred = [F::ZERO; TRANSFORM_CHANNELS];
        two_layer_row(
            &p.transform_head,
            &x_f,
            &mut h_pre,
            &mut h_act,
            &mut transform_pred,
        );

        self.pos += 1;
        Ok(StepOut {
            logits,
            edge_pred,
            transform_pred,
        })
    }
}

fn pick_token<F: Elem>(
    logits: &[F],
    allowed: Option<&[bool]>,
    mode: SamplingMode,
    rng: &mut ChaCha8Rng,
) -> Option<u32> {
    let legal = |i: usize| allowed.map_or(true, |m| m[i]);
    match mode {
        SamplingMode::Greedy => {
            let mut best: Option<usize> = None;
            for (i, &v) in logits.iter().enumerate() {
                if legal(i) && best.map_or(true, |b| v > logits[b]) {
                    best = Some(i);
                }
            }
            best.map(|b| b as u32)
        }
        SamplingMode::Temperature(tau) => {
            let tau = F::from_f64(tau.max(1e-6));
            let mut mx = F::from_f64(f64::NEG_INFINITY);
            for (i, &v) in logits.iter().enumerate() {
                if legal(i) {
                    mx = mx.max_val(v / tau);
                }
            }
            if mx.to_f64() == f64::NEG_INFINITY {
                return None;
            }
            let weights: Vec<f64> = logits
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    if legal(i) {
                        ((v / tau) - mx).exp().to_f64()
                    } else {
                        0.0
                    }
                })
                .collect();
            let total: f64 = weights.iter().sum();
            let mut dart = rng.gen_range(0.0..1.0) * total;
            for (i, w) in weights.iter().enumerate() {
                dart -= w;
                if dart <= 0.0 && *w > 0.0 {
                    return Some(i as u32);
                }
            }
            weights.iter().rposition(|w| *w > 0.0).map(|i| i as u32)
        }
    }
}

/// Runs the autoregressive loop from a prompt until `<garment_end>`,
/// collecting the garment tokens and their regressed payloads.
pub fn sample<F: Elem>(
    state: &ModelState<F>,
    prompt: &SeqExample,
    vocab: &Vocabulary,
    opts: &SampleOptions,
) -> Result<SampleOutput<F>, SampleError> {
    let mut session = InferSession::new(state);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut grammar = Grammar::new(vocab, GrammarConfig::sampling());
    let mut allowed = vec![false; vocab.len()];

    let mut sequence = prompt.clone();
    let mut garment = TokenizedGarment {
        tokens: Vec::new(),
        payloads: Vec::new(),
    };
    let mut logits_trace = Vec::new();

    // prime the session with the prompt; the last read-out seeds sampling
    let mut last: Option<StepOut<F>> = None;
    for i in 0..prompt.tokens.len() {
        last = Some(session.step(prompt.tokens[i], prompt.pe_inputs[i].as_ref())?);
    }
    let mut last = match last {
        Some(out) => out,
        None => return Err(SampleError::Stuck { position: 0 }),
    };

    // the context window is a hard cap regardless of max_len
    let cap = opts.max_len.min(state.config.context_len);
    loop {
        if sequence.tokens.len() >= cap {
            return Err(SampleError::MaxLen { partial: garment });
        }
        let mask = if opts.grammar_constraint {
            grammar.fill_allowed(&mut allowed);
            Some(allowed.as_slice())
        } else {
            None
        };
        if opts.capture_logits {
            logits_trace.push(last.logits.clone());
        }
        let token = pick_token(&last.logits, mask, opts.mode, &mut rng).ok_or(
            SampleError::Stuck {
                position: sequence.tokens.len(),
            },
        )?;
        if opts.grammar_constraint {
            grammar
                .step(token)
                .expect("sampled token came from the allowed mask");
        }

        // payload and PE feedback when the sampled token carries one
        let (payload, pe_input) = if let Some((kind, _)) = vocab.edge_of(token) {
            let mask = channel_mask(kind);
            let mut values = [0.0f64; EDGE_CHANNELS];
            for (c, v) in last.edge_pred.iter().enumerate() {
                if mask[c] {
                    values[c] = v.to_f64();
                }
            }
            let pe = PeInput::Edge([quantize_pe_input(values[0]), quantize_pe_input(values[1])]);
            (Some(Payload::Edge { values, mask }), Some(pe))
        } else if token == vocab.transform_id() {
            let mut values = [0.0f64; TRANSFORM_CHANNELS];
            for (c, v) in last.transform_pred.iter().enumerate() {
                values[c] = v.to_f64();
            }
            let mut quant = [0.0f64; TRANSFORM_CHANNELS];
            for (q, v) in quant.iter_mut().zip(&values) {
                *q = quantize_pe_input(*v);
            }
            (Some(Payload::Transform(values)), Some(PeInput::Transform(quant)))
        } else {
            (None, None)
        };

        sequence.tokens.push(token);
        sequence.pe_inputs.push(pe_input.clone());
        sequence.reg_targets.push(None);
        sequence.loss_mask.push(false);
        garment.tokens.push(token);
        garment.payloads.push(payload);

        if token == vocab.garment_end_id() {
            return Ok(SampleOutput {
                garment,
                sequence,
                logits_trace,
            });
        }
        last = session.step(token, pe_input.as_ref())?;
    }
}
