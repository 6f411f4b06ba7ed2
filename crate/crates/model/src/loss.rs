//! The mixed training objective: next-token cross-entropy on the discrete
//! stream plus L2-norm regression penalties on the continuous payloads,
//! weighted by lambda.
//!
//! Cross-entropy averages over supervised target positions; each regression
//! term averages the channel-masked L2 norm over its supervised payload
//! positions. The reported `edge`/`transform` terms are the raw means, so
//! `total = ce + lambda * (edge + transform)` holds exactly.

use crate::batch::{RegTarget, SeqExample};
use crate::mat::{Elem, Mat};
use crate::state::{EDGE_CHANNELS, TRANSFORM_CHANNELS};
use crate::transformer::{OutputGrads, SeqOutputs};

/// Guard against the L2 norm's singular gradient at zero distance.
const NORM_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    pub total: f64,
    pub ce: f64,
    pub edge: f64,
    pub transform: f64,
    pub ce_positions: usize,
    pub edge_positions: usize,
    pub transform_positions: usize,
    /// Supervised positions whose argmax logit equals the target token.
    pub correct_tokens: usize,
}

impl LossTerms {
    pub fn is_finite(&self) -> bool {
        self.total.is_finite()
            && self.ce.is_finite()
            && self.edge.is_finite()
            && self.transform.is_finite()
    }

    /// Greedy next-token accuracy over supervised positions.
    pub fn token_accuracy(&self) -> f64 {
        if self.ce_positions == 0 {
            return 1.0;
        }
        self.correct_tokens as f64 / self.ce_positions as f64
    }
}

struct Counts {
    ce: usize,
    edge: usize,
    transform: usize,
}

fn count_positions(batch: &[&SeqExample]) -> Counts {
    let mut c = Counts {
        ce: 0,
        edge: 0,
        transform: 0,
    };
    for seq in batch {
        c.ce += seq.loss_mask.iter().filter(|&&m| m).count();
        for (i, t) in seq.reg_targets.iter().enumerate() {
            // position 0 has no preceding hidden state to regress from
            if i == 0 {
                continue;
            }
            match t {
                Some(RegTarget::Edge { .. }) => c.edge += 1,
                Some(RegTarget::Transform(_)) => c.transform += 1,
                None => {}
            }
        }
    }
    c
}

fn logsumexp<F: Elem>(row: &[F]) -> F {
    let mut mx = F::from_f64(f64::NEG_INFINITY);
    for &v in row {
        mx = mx.max_val(v);
    }
    let mut sum = F::ZERO;
    for &v in row {
        sum += (v - mx).exp();
    }
    mx + sum.ln()
}

fn argmax<F: Elem>(row: &[F]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Masked difference between a prediction row and its target; returns the
/// per-channel differences (zero on masked-out channels) and the L2 norm.
fn masked_diff<F: Elem>(pred: &[F], target: &RegTarget) -> (Vec<f64>, f64) {
    let (values, mask): (&[f64], Vec<bool>) = match target {
        RegTarget::Edge { values, mask } => (values.as_slice(), mask.to_vec()),
        RegTarget::Transform(values) => (values.as_slice(), vec![true; TRANSFORM_CHANNELS]),
    };
    let mut diff = vec![0.0; values.len()];
    let mut sq = 0.0;
    for c in 0..values.len() {
        if mask[c] {
            let dch = pred[c].to_f64() - values[c];
            diff[c] = dch;
            sq += dch * dch;
        }
    }
    (diff, sq.sqrt())
}

/// Loss terms over a batch of (outputs, example) pairs.
pub fn mixed_loss<F: Elem>(
    outputs: &[SeqOutputs<F>],
    batch: &[&SeqExample],
    lambda: f64,
) -> LossTerms {
    let counts = count_positions(batch);
    let mut ce_sum = 0.0;
    let mut edge_sum = 0.0;
    let mut transform_sum = 0.0;
    let mut correct = 0usize;

    for (outs, seq) in outputs.iter().zip(batch) {
        for i in 0..seq.tokens.len() {
            if seq.loss_mask[i] {
                let row = outs.logits.row(i);
                let target = seq.tokens[i + 1] as usize;
                ce_sum += (logsumexp(row) - row[target]).to_f64();
                if argmax(row) == target {
                    correct += 1;
                }
            }
            if i == 0 {
                continue;
            }
            match &seq.reg_targets[i] {
                Some(t @ RegTarget::Edge { .. }) => {
                    let (_, norm) = masked_diff(outs.edge_preds.row(i - 1), t);
                    edge_sum += norm;
                }
                Some(t @ RegTarget::Transform(_)) => {
                    let (_, norm) = masked_diff(outs.transform_preds.row(i - 1), t);
                    transform_sum += norm;
                }
                None => {}
            }
        }
    }

    let ce = if counts.ce > 0 {
        ce_sum / counts.ce as f64
    } else {
        0.0
    };
    let edge = if counts.edge > 0 {
        edge_sum / counts.edge as f64
    } else {
        0.0
    };
    let transform = if counts.transform > 0 {
        transform_sum / counts.transform as f64
    } else {
        0.0
    };
    LossTerms {
        total: ce + lambda * (edge + transform),
        ce,
        edge,
        transform,
        ce_positions: counts.ce,
        edge_positions: counts.edge,
        transform_positions: counts.transform,
        correct_tokens: correct,
    }
}

/// Output gradients of the total loss for one sequence of the batch.
/// `counts` must cover the whole batch so the means normalize correctly.
fn output_grads_for<F: Elem>(
    outs: &SeqOutputs<F>,
    seq: &SeqExample,
    counts: &Counts,
    lambda: f64,
) -> OutputGrads<F> {
    let vocab = outs.logits.cols;
    let mut d_logits = Mat::zeros(outs.logits.rows, vocab);
    let mut d_edge = Mat::zeros(outs.edge_preds.rows, EDGE_CHANNELS);
    let mut d_transform = Mat::zeros(outs.transform_preds.rows, TRANSFORM_CHANNELS);

    for i in 0..seq.tokens.len() {
        if seq.loss_mask[i] {
            let row = outs.logits.row(i);
            let target = seq.tokens[i + 1] as usize;
            let lse = logsumexp(row);
            let inv_n = F::from_f64(1.0 / counts.ce as f64);
            let drow = d_logits.row_mut(i);
            for (c, slot) in drow.iter_mut().enumerate() {
                let softmax = (row[c] - lse).exp();
                *slot = softmax * inv_n;
            }
            drow[target] -= inv_n;
        }
        if i == 0 {
            continue;
        }
        match &seq.reg_targets[i] {
            Some(t @ RegTarget::Edge { .. }) => {
                let (diff, norm) = masked_diff(outs.edge_preds.row(i - 1), t);
                let coef = lambda / (norm.max(NORM_EPS) * counts.edge as f64);
                let drow = d_edge.row_mut(i - 1);
                for (c, dch) in diff.iter().enumerate() {
                    drow[c] += F::from_f64(coef * dch);
                }
            }
            Some(t @ RegTarget::Transform(_)) => {
                let (diff, norm) = masked_diff(outs.transform_preds.row(i - 1), t);
                let coef = lambda / (norm.max(NORM_EPS) * counts.transform as f64);
                let drow = d_transform.row_mut(i - 1);
                for (c, dch) in diff.iter().enumerate() {
                    drow[c] += F::from_f64(coef * dch);
                }
            }
            None => {}
        }
    }
    OutputGrads {
        d_logits,
        d_edge,
        d_transform,
    }
}

/// Per-sequence output gradients for a whole batch.
pub fn batch_output_grads<F: Elem>(
    outputs: &[SeqOutputs<F>],
    batch: &[&SeqExample],
    lambda: f64,
) -> Vec<OutputGrads<F>> {
    let counts = count_positions(batch);
    outputs
        .iter()
        .zip(batch)
        .map(|(o, s)| output_grads_for(o, s, &counts, lambda))
        .collect()
}
