//! Finite-difference gradient verification.
//!
//! The oracle side evaluates the loss through the forward pass only
//! (central differences on perturbed parameter copies), fully independent
//! of the analytic backward path it checks. Run on the f64 instantiation;
//! f32 arithmetic cannot resolve the 1e-4 relative tolerance through
//! finite differencing.

use crate::batch::SeqExample;
use crate::loss::{batch_output_grads, mixed_loss};
use crate::state::ModelState;
use crate::transformer::{backward, forward, ForwardOptions, SeqOutputs};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn batch_loss(state: &ModelState<f64>, batch: &[&SeqExample]) -> f64 {
    let outputs: Vec<SeqOutputs<f64>> = batch
        .iter()
        .map(|seq| forward(state, seq, ForwardOptions::default()).expect("forward").0)
        .collect();
    mixed_loss(&outputs, batch, state.config.lambda).total
}

/// Analytic gradients of the total loss for the batch.
pub fn analytic_grads(
    state: &ModelState<f64>,
    batch: &[&SeqExample],
) -> crate::state::ModelParams<f64> {
    let mut results = Vec::new();
    for seq in batch {
        results.push(forward(state, seq, ForwardOptions::default()).expect("forward"));
    }
    let outputs: Vec<SeqOutputs<f64>> = results.iter().map(|(o, _)| o.clone()).collect();
    let grads_out = batch_output_grads(&outputs, batch, state.config.lambda);
    let mut grads = state.zeros_like();
    for ((seq, (_, cache)), og) in batch.iter().zip(&results).zip(&grads_out) {
        backward(state, seq, cache, og, &mut grads);
    }
    grads
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// (tensor name, flat index, analytic, numeric, relative error)
    pub worst: (String, usize, f64, f64, f64),
    pub checked: usize,
}

/// Central-difference check of `count` randomly chosen parameters in every
/// tensor whose name starts with `group_prefix`. Relative error uses
/// |a - n| / max(|a|, |n|, floor).
pub fn check_group(
    state: &ModelState<f64>,
    batch: &[&SeqExample],
    group_prefix: &str,
    count: usize,
    h: f64,
    seed: u64,
) -> GradCheckReport {
    let grads = analytic_grads(state, batch);
    let names = state.params.tensor_names();
    let g_list = grads.tensors();

    // collect eligible (tensor index, len)
    let eligible: Vec<(usize, usize)> = names
        .iter()
        .enumerate()
        .filter(|(_, n)| n.starts_with(group_prefix))
        .map(|(i, _)| (i, g_list[i].len()))
        .filter(|(_, len)| *len > 0)
        .collect();
    assert!(
        !eligible.is_empty(),
        "no tensors match group prefix {group_prefix:?}"
    );
    let total: usize = eligible.iter().map(|(_, l)| l).sum();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = (String::new(), 0usize, 0.0, 0.0, 0.0);
    let mut checked = 0;
    for _ in 0..count {
        let mut flat = rng.gen_range(0..total);
        let mut pick = eligible[0];
        for &(ti, len) in &eligible {
            if flat < len {
                pick = (ti, len);
                break;
            }
            flat -= len;
        }
        let (tensor_idx, _) = pick;
        let analytic = grads.tensors()[tensor_idx].data[flat];

        let mut plus = state.clone();
        plus.params.tensors_mut()[tensor_idx].data[flat] += h;
        let mut minus = state.clone();
        minus.params.tensors_mut()[tensor_idx].data[flat] -= h;
        let numeric = (batch_loss(&plus, batch) - batch_loss(&minus, batch)) / (2.0 * h);

        // floor keeps dead parameters (both sides ~0) from dividing by zero
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
        checked += 1;
        if rel > worst.4 {
            worst = (names[tensor_idx].clone(), flat, analytic, numeric, rel);
        }
    }
    GradCheckReport { worst, checked }
}

/// The parameter groups exercised by the acceptance gradient check.
pub fn standard_groups(layers: usize) -> Vec<String> {
    let mut groups = vec!["token_embed".to_string(), "pos_embed".to_string()];
    for i in 0..layers {
        groups.push(format!("block{i}.attn"));
        groups.push(format!("block{i}.mlp"));
        groups.push(format!("block{i}.ln"));
    }
    groups.push("ln_f".into());
    groups.push("lm_head".into());
    groups.push("edge_head".into());
    groups.push("transform_head".into());
    groups.push("pe_edge".into());
    groups.push("pe_transform".into());
    groups
}
