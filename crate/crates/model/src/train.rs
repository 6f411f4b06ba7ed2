//! Deterministic training loop: modality-mixed batch sampling, the mixed
//! objective, AdamW with warmup + cosine decay, checkpointing, and loss
//! curves.
//!
//! Each step derives its own RNG from (seed, step), so training is
//! resumable from any checkpoint with a bitwise-identical continuation.

use crate::batch::{build_example, SeqExample};
use crate::checkpoint::{save_checkpoint, CheckpointError};
use crate::loss::{batch_output_grads, mixed_loss, LossTerms};
use crate::optim::{lr_at, OptimConfig, Optimizer};
use crate::state::ModelState;
use crate::transformer::{backward, forward, ForwardOptions, SeqOutputs};
use patternlm_core::datagen::{Dataset, Record, Split};
use patternlm_core::rng::stream_rng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;

/// Modality slots of the training mix, in the fixed order
/// text : image : text+image : edit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModalitySlot {
    Text,
    Image,
    TextImage,
    Edit,
}

pub const MODALITY_SLOTS: [ModalitySlot; 4] = [
    ModalitySlot::Text,
    ModalitySlot::Image,
    ModalitySlot::TextImage,
    ModalitySlot::Edit,
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub seed: u64,
    #[serde(default)]
    pub optim: OptimConfig,
    /// Sampling weights for text : image : text+image : edit batches.
    /// The image slot is forced to zero while no image branch exists.
    #[serde(default = "default_modality_weights")]
    pub modality_weights: [f64; 4],
    /// Write a checkpoint every this many steps (0 = only at the end).
    #[serde(default)]
    pub checkpoint_every: usize,
    #[serde(default)]
    pub log_every: usize,
}

fn default_modality_weights() -> [f64; 4] {
    [3.0, 2.0, 4.0, 1.0]
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 2000,
            batch_size: 4,
            seed: 0,
            optim: OptimConfig::default(),
            modality_weights: default_modality_weights(),
            checkpoint_every: 0,
            log_every: 100,
        }
    }
}

impl TrainConfig {
    /// Weights actually used: the image slot is re-weighted to zero.
    pub fn effective_weights(&self) -> [f64; 4] {
        let mut w = self.modality_weights;
        w[1] = 0.0;
        w
    }
}

#[derive(Debug)]
pub enum TrainError {
    Batch(crate::batch::BatchError),
    Model(crate::transformer::ModelError),
    Checkpoint(CheckpointError),
    NoTrainingData { slot: &'static str },
    /// Loss went non-finite; carries the record ids of the offending batch.
    NanLoss { step: usize, record_ids: Vec<u64> },
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Batch(e) => write!(f, "{e}"),
            Self::Model(e) => write!(f, "{e}"),
            Self::Checkpoint(e) => write!(f, "{e}"),
            Self::NoTrainingData { slot } => {
                write!(f, "no training records available for the {slot} slot")
            }
            Self::NanLoss { step, record_ids } => write!(
                f,
                "non-finite loss at step {step}; offending batch records: {record_ids:?}"
            ),
        }
    }
}

impl std::error::Error for TrainError {}

impl From<crate::batch::BatchError> for TrainError {
    fn from(e: crate::batch::BatchError) -> Self {
        Self::Batch(e)
    }
}

impl From<crate::transformer::ModelError> for TrainError {
    fn from(e: crate::transformer::ModelError) -> Self {
        Self::Model(e)
    }
}

impl From<CheckpointError> for TrainError {
    fn from(e: CheckpointError) -> Self {
        Self::Checkpoint(e)
    }
}

/// Loss-curve entry for one step.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StepLog {
    pub step: usize,
    pub lr: f64,
    pub total: f64,
    pub ce: f64,
    pub edge: f64,
    pub transform: f64,
    pub token_accuracy: f64,
}

/// Training examples prebuilt per modality slot (train split only).
pub struct TrainSet {
    pub text: Vec<SeqExample>,
    pub text_image: Vec<SeqExample>,
    pub edit: Vec<SeqExample>,
}

impl TrainSet {
    /// Builds all train-split sequences of the dataset up front.
    pub fn from_dataset(ds: &Dataset, context_len: usize) -> Result<Self, TrainError> {
        let build = |records: &[Record]| -> Result<Vec<SeqExample>, TrainError> {
            let mut out = Vec::new();
            for r in records {
                if ds.split_of(r.id) == Split::Train {
                    out.push(build_example(r, &ds.vocab, &ds.stats, context_len)?);
                }
            }
            Ok(out)
        };
        Ok(Self {
            text: build(&ds.text)?,
            text_image: build(&ds.text_image)?,
            edit: build(&ds.edit)?,
        })
    }

    /// A set with only text sequences (used by overfit experiments).
    pub fn text_only(examples: Vec<SeqExample>) -> Self {
        Self {
            text: examples,
            text_image: Vec::new(),
            edit: Vec::new(),
        }
    }

    fn slot(&self, slot: ModalitySlot) -> &[SeqExample] {
        match slot {
            ModalitySlot::Text => &self.text,
            ModalitySlot::Image => &[],
            ModalitySlot::TextImage => &self.text_image,
            ModalitySlot::Edit => &self.edit,
        }
    }
}

/// Picks the modality and record indices for one step. Pure function of
/// (config, step), which is what makes training resumable.
pub fn plan_batch(cfg: &TrainConfig, sets: &TrainSet, step: usize) -> (ModalitySlot, Vec<usize>) {
    let mut rng = stream_rng(cfg.seed, step as u64, "batch");
    let weights = cfg.effective_weights();
    // drop slots with no data so the draw always lands somewhere valid
    let usable: Vec<(ModalitySlot, f64)> = MODALITY_SLOTS
        .iter()
        .zip(weights)
        .filter(|(slot, w)| *w > 0.0 && !sets.slot(**slot).is_empty())
        .map(|(s, w)| (*s, w))
        .collect();
    if usable.is_empty() {
        return (ModalitySlot::Text, Vec::new());
    }
    let total: f64 = usable.iter().map(|(_, w)| w).sum();
    let mut dart = rng.gen_range(0.0..1.0) * total;
    let mut slot = usable[usable.len() - 1].0;
    for (s, w) in &usable {
        dart -= w;
        if dart <= 0.0 {
            slot = *s;
            break;
        }
    }
    let pool = sets.slot(slot);
    let indices = (0..cfg.batch_size)
        .map(|_| rng.gen_range(0..pool.len()))
        .collect();
    (slot, indices)
}

/// One optimization step; returns the loss terms.
pub fn train_step(
    state: &mut ModelState<f32>,
    optimizer: &mut Optimizer<f32>,
    batch: &[&SeqExample],
    cfg: &TrainConfig,
    step: usize,
) -> Result<LossTerms, TrainError> {
    let mut results = Vec::with_capacity(batch.len());
    for seq in batch {
        results.push(forward(state, seq, ForwardOptions::default())?);
    }
    let outputs: Vec<SeqOutputs<f32>> = results.iter().map(|(o, _)| o.clone()).collect();
    let terms = mixed_loss(&outputs, batch, state.config.lambda);
    if !terms.is_finite() {
        return Err(TrainError::NanLoss {
            step,
            record_ids: batch.iter().map(|s| s.source_id).collect(),
        });
    }
    let out_grads = batch_output_grads(&outputs, batch, state.config.lambda);
    let mut grads = state.zeros_like();
    for ((seq, (_, cache)), og) in batch.iter().zip(&results).zip(&out_grads) {
        backward(state, seq, cache, og, &mut grads);
    }
    let lr = lr_at(&cfg.optim, step + 1, cfg.steps);
    optimizer.apply(&mut state.params, &grads, lr);
    Ok(terms)
}

/// Full training run over prebuilt example sets. Returns the loss curve.
pub fn train(
    state: &mut ModelState<f32>,
    sets: &TrainSet,
    cfg: &TrainConfig,
    checkpoint_dir: Option<&PathBuf>,
    start_step: usize,
    optimizer: Option<Optimizer<f32>>,
) -> Result<(Vec<StepLog>, Optimizer<f32>), TrainError> {
    if sets.text.is_empty() && sets.text_image.is_empty() && sets.edit.is_empty() {
        return Err(TrainError::NoTrainingData { slot: "any" });
    }
    let mut optimizer = optimizer.unwrap_or_else(|| Optimizer::new(cfg.optim, state));
    let mut logs = Vec::with_capacity(cfg.steps.saturating_sub(start_step));

    for step in start_step..cfg.steps {
        let (slot, indices) = plan_batch(cfg, sets, step);
        let pool = sets.slot(slot);
        let batch: Vec<&SeqExample> = indices.iter().map(|&i| &pool[i]).collect();
        let terms = train_step(state, &mut optimizer, &batch, cfg, step)?;
        let log = StepLog {
            step,
            lr: lr_at(&cfg.optim, step + 1, cfg.steps),
            total: terms.total,
            ce: terms.ce,
            edge: terms.edge,
            transform: terms.transform,
            token_accuracy: terms.token_accuracy(),
        };
        if cfg.log_every > 0 && (step % cfg.log_every == 0 || step + 1 == cfg.steps) {
            eprintln!(
                "step {:>5}  lr {:.2e}  total {:.4}  ce {:.4}  edge {:.4}  transform {:.4}  acc {:.3}",
                step, log.lr, log.total, log.ce, log.edge, log.transform, log.token_accuracy
            );
        }
        logs.push(log);

        if let Some(dir) = checkpoint_dir {
            let finished = step + 1;
            let periodic = cfg.checkpoint_every > 0 && finished % cfg.checkpoint_every == 0;
            if periodic || finished == cfg.steps {
                std::fs::create_dir_all(dir).map_err(CheckpointError::Io)?;
                save_checkpoint(
                    state,
                    Some(&optimizer),
                    finished,
                    dir.join(format!("step{finished:06}.plm")),
                )?;
            }
        }
    }
    Ok((logs, optimizer))
}
