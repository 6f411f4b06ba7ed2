//! Training-sequence construction from dataset records.
//!
//! A text sequence is `<bos> caption… garment…`; an edit sequence is
//! `<bos> before-garment… instruction… after-garment…`. The prompt region
//! is masked out of every loss term; positional-embedding inputs are the
//! ground-truth payloads (quantized to bin centers) at every edge/`<R>`
//! token, prompt or not.

use crate::state::{EDGE_CHANNELS, TRANSFORM_CHANNELS};
use patternlm_core::codec::{
    self, CodecError, NormStats, Payload, TokenizedGarment, Vocabulary,
};
use patternlm_core::datagen::Record;
use patternlm_core::SewingPattern;
use std::fmt;

/// Quantized payload channels fed to a PE projection.
#[derive(Debug, Clone, PartialEq)]
pub enum PeInput {
    Edge([f64; 2]),
    Transform([f64; TRANSFORM_CHANNELS]),
}

/// Regression target (normalized, unquantized) plus its channel mask.
#[derive(Debug, Clone, PartialEq)]
pub enum RegTarget {
    Edge {
        values: [f64; EDGE_CHANNELS],
        mask: [bool; EDGE_CHANNELS],
    },
    Transform([f64; TRANSFORM_CHANNELS]),
}

/// One training sequence; batches are plain lists of these (sequences keep
/// their own lengths, nothing is padded).
#[derive(Debug, Clone)]
pub struct SeqExample {
    pub tokens: Vec<u32>,
    /// loss_mask[i] supervises the prediction of tokens[i+1].
    pub loss_mask: Vec<bool>,
    /// Target for the payload carried by the token at each position.
    pub reg_targets: Vec<Option<RegTarget>>,
    /// PE-projection input for the token at each position.
    pub pe_inputs: Vec<Option<PeInput>>,
    /// Record id, for diagnostics.
    pub source_id: u64,
}

#[derive(Debug)]
pub enum BatchError {
    Codec(CodecError),
    TooLong { len: usize, context: usize },
    MissingField { id: u64, field: &'static str },
}

impl fmt::Display for BatchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Codec(e) => write!(f, "{e}"),
            Self::TooLong { len, context } => {
                write!(f, "sequence length {len} exceeds context {context}")
            }
            Self::MissingField { id, field } => {
                write!(f, "record {id} is missing its {field}")
            }
        }
    }
}

impl std::error::Error for BatchError {}

impl From<CodecError> for BatchError {
    fn from(e: CodecError) -> Self {
        Self::Codec(e)
    }
}

fn pe_input_for(payload: &Payload) -> PeInput {
    match payload.quantized() {
        Payload::Edge { values, .. } => PeInput::Edge([values[0], values[1]]),
        Payload::Transform(values) => PeInput::Transform(values),
    }
}

fn reg_target_for(payload: &Payload) -> RegTarget {
    match payload {
        Payload::Edge { values, mask } => RegTarget::Edge {
            values: *values,
            mask: *mask,
        },
        Payload::Transform(values) => RegTarget::Transform(*values),
    }
}

/// Appends a tokenized garment to the sequence; `supervised` controls
/// whether its tokens contribute loss (targets) or only context (PE).
fn extend_with_garment(seq: &mut SeqExample, tg: &TokenizedGarment, supervised: bool) {
    for (tok, payload) in tg.tokens.iter().zip(&tg.payloads) {
        seq.tokens.push(*tok);
        seq.pe_inputs.push(payload.as_ref().map(pe_input_for));
        seq.reg_targets.push(if supervised {
            payload.as_ref().map(reg_target_for)
        } else {
            None
        });
        seq.loss_mask.push(false);
    }
}

fn extend_with_words(seq: &mut SeqExample, ids: &[u32]) {
    for &id in ids {
        seq.tokens.push(id);
        seq.pe_inputs.push(None);
        seq.reg_targets.push(None);
        seq.loss_mask.push(false);
    }
}

/// Marks next-token supervision for the completion region starting at
/// `prompt_len`: position i supervises tokens[i+1].
fn mark_completion(seq: &mut SeqExample, prompt_len: usize) {
    let n = seq.tokens.len();
    for i in 0..n {
        seq.loss_mask[i] = i + 1 >= prompt_len && i + 1 < n;
    }
}

fn empty_seq(id: u64) -> SeqExample {
    SeqExample {
        tokens: Vec::new(),
        loss_mask: Vec::new(),
        reg_targets: Vec::new(),
        pe_inputs: Vec::new(),
        source_id: id,
    }
}

/// Builds the training sequence for one record.
pub fn build_example(
    record: &Record,
    vocab: &Vocabulary,
    stats: &NormStats,
    context_len: usize,
) -> Result<SeqExample, BatchError> {
    let mut seq = empty_seq(record.id);
    seq.tokens.push(vocab.bos_id());
    seq.pe_inputs.push(None);
    seq.reg_targets.push(None);
    seq.loss_mask.push(false);

    match record.modality {
        patternlm_core::datagen::Modality::Text => {
            let caption = record.caption.as_ref().ok_or(BatchError::MissingField {
                id: record.id,
                field: "caption",
            })?;
            extend_with_words(&mut seq, &vocab.words_to_ids_lossy(caption));
            let prompt_len = seq.tokens.len();
            let tg = codec::encode(&record.pattern, vocab, stats)?;
            extend_with_garment(&mut seq, &tg, true);
            mark_completion(&mut seq, prompt_len);
        }
        patternlm_core::datagen::Modality::Edit => {
            let before = record.before.as_ref().ok_or(BatchError::MissingField {
                id: record.id,
                field: "before",
            })?;
            let instruction = record.instruction.as_ref().ok_or(BatchError::MissingField {
                id: record.id,
                field: "instruction",
            })?;
            let before_tg = codec::encode(before, vocab, stats)?;
            extend_with_garment(&mut seq, &before_tg, false);
            extend_with_words(&mut seq, &vocab.words_to_ids_lossy(instruction));
            let prompt_len = seq.tokens.len();
            let tg = codec::encode(&record.pattern, vocab, stats)?;
            extend_with_garment(&mut seq, &tg, true);
            mark_completion(&mut seq, prompt_len);
        }
    }

    if seq.tokens.len() > context_len {
        return Err(BatchError::TooLong {
            len: seq.tokens.len(),
            context: context_len,
        });
    }
    Ok(seq)
}

/// Prompt-only sequence (`<bos>` + words) for sampling.
pub fn build_prompt(words: &[String], vocab: &Vocabulary) -> SeqExample {
    let mut seq = empty_seq(0);
    seq.tokens.push(vocab.bos_id());
    seq.pe_inputs.push(None);
    seq.reg_targets.push(None);
    seq.loss_mask.push(false);
    extend_with_words(&mut seq, &vocab.words_to_ids_lossy(words));
    seq
}

/// Prompt for the editing modality: `<bos>` + before-garment + instruction.
pub fn build_edit_prompt(
    before: &SewingPattern,
    instruction: &[String],
    vocab: &Vocabulary,
    stats: &NormStats,
) -> Result<SeqExample, BatchError> {
    let mut seq = empty_seq(0);
    seq.tokens.push(vocab.bos_id());
    seq.pe_inputs.push(None);
    seq.reg_targets.push(None);
    seq.loss_mask.push(false);
    let tg = codec::encode(before, vocab, stats)?;
    extend_with_garment(&mut seq, &tg, false);
    extend_with_words(&mut seq, &vocab.words_to_ids_lossy(instruction));
    Ok(seq)
}
