//! Bidirectional conversion between sewing patterns and drawing-command
//! token sequences with aligned continuous payloads.
//!
//! A garment encodes as
//! `<garment_start> (<panel_start> name+ <R> (edge tag)+ <panel_end>)* <garment_end>`,
//! where each edge token carries an 8-channel payload (endpoint, Bézier
//! controls, arc point) under a per-type channel mask, and `<R>` carries the
//! 7-channel placement (translation then quaternion). Payload values are in
//! normalized units; stitch pairing travels as matching tag tokens.

pub mod grammar;
pub mod norm;
pub mod vocab;

pub use grammar::{Grammar, GrammarConfig};
pub use norm::{fit_norm_stats, pe_bin_index, quantize_pe_input, NormStats, PE_BIN_WIDTH};
pub use vocab::{StitchTag, VocabFile, Vocabulary, DEFAULT_NUM_TAGS};

use crate::geometry::{Point2, Quaternion};
use crate::pattern::{Edge, EdgeGeometry, EdgeKind, EdgeRef, Panel, SewingPattern, Stitch};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

/// Channels of an edge payload that are live for the given edge type:
/// 0-1 endpoint, 2-3 first control, 4-5 second control, 6-7 arc point.
pub fn channel_mask(kind: EdgeKind) -> [bool; 8] {
    match kind {
        EdgeKind::Line => [true, true, false, false, false, false, false, false],
        EdgeKind::Quad => [true, true, true, true, false, false, false, false],
        EdgeKind::Cubic => [true, true, true, true, true, true, false, false],
        EdgeKind::Arc => [true, true, false, false, false, false, true, true],
    }
}

/// Continuous payload attached to one token position, in normalized units.
/// Masked-out edge channels are stored as zero; the mask is authoritative.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Edge { values: [f64; 8], mask: [bool; 8] },
    Transform([f64; 7]),
}

impl Payload {
    pub fn values(&self) -> &[f64] {
        match self {
            Self::Edge { values, .. } => values,
            Self::Transform(values) => values,
        }
    }

    /// Payload with every channel snapped to its PE bin center.
    pub fn quantized(&self) -> Payload {
        match self {
            Self::Edge { values, mask } => {
                let mut q = [0.0; 8];
                for (i, v) in values.iter().enumerate() {
                    if mask[i] {
                        q[i] = quantize_pe_input(*v);
                    }
                }
                Self::Edge { values: q, mask: *mask }
            }
            Self::Transform(values) => {
                let mut q = [0.0; 7];
                for (i, v) in values.iter().enumerate() {
                    q[i] = quantize_pe_input(*v);
                }
                Self::Transform(q)
            }
        }
    }
}

/// A tokenized garment: token ids plus per-position optional payloads
/// (present exactly at edge and `<R>` positions).
#[derive(Debug, Clone, PartialEq)]
pub struct TokenizedGarment {
    pub tokens: Vec<u32>,
    pub payloads: Vec<Option<Payload>>,
}

impl TokenizedGarment {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Space-separated token text, one garment per line.
    pub fn render_text(&self, vocab: &Vocabulary) -> String {
        self.tokens
            .iter()
            .map(|&id| vocab.token_str(id))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Copy with all payloads snapped to PE bin centers.
    pub fn quantized(&self) -> TokenizedGarment {
        TokenizedGarment {
            tokens: self.tokens.clone(),
            payloads: self
                .payloads
                .iter()
                .map(|p| p.as_ref().map(Payload::quantized))
                .collect(),
        }
    }
}

/// JSONL form of a tokenized garment: token strings plus a sidecar payload
/// array per position (`null` at positions without a payload).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TokenStreamRecord {
    pub tokens: Vec<String>,
    pub payloads: Vec<Option<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CodecError {
    StitchCapacity {
        stitch: (EdgeRef, EdgeRef),
        max: usize,
    },
    UnknownWord {
        panel: String,
        word: String,
    },
    Grammar {
        position: usize,
        message: String,
    },
    TruncatedSequence,
    TagCount {
        tag: usize,
        count: usize,
    },
    PayloadMissing {
        position: usize,
    },
    PayloadUnexpected {
        position: usize,
    },
    PayloadInvalid {
        position: usize,
        message: String,
    },
    UnknownToken {
        position: usize,
        token: String,
    },
    EmptyCorpus,
}

impl fmt::Display for CodecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::StitchCapacity { stitch, max } => write!(
                f,
                "stitch {:?}-{:?} exceeds the {max} available stitch tags",
                stitch.0, stitch.1
            ),
            Self::UnknownWord { panel, word } => {
                write!(f, "panel {panel:?}: name word {word:?} not in vocabulary")
            }
            Self::Grammar { position, message } => {
                write!(f, "grammar violation at position {position}: {message}")
            }
            Self::TruncatedSequence => write!(f, "sequence ended before <garment_end>"),
            Self::TagCount { tag, count } => {
                write!(f, "tag t{tag} matched {count} edge(s), expected 2")
            }
            Self::PayloadMissing { position } => {
                write!(f, "payload missing at position {position}")
            }
            Self::PayloadUnexpected { position } => {
                write!(f, "unexpected payload at position {position}")
            }
            Self::PayloadInvalid { position, message } => {
                write!(f, "invalid payload at position {position}: {message}")
            }
            Self::UnknownToken { position, token } => {
                write!(f, "unknown token {token:?} at position {position}")
            }
            Self::EmptyCorpus => write!(f, "cannot fit statistics on an empty corpus"),
        }
    }
}

impl std::error::Error for CodecError {}

/// Canonical stitch-tag assignment: stitches are numbered 1..k in order of
/// first appearance scanning panels and edges in loop order, so the result
/// is independent of the input stitch-set ordering. Unstitched edges map to
/// the null tag (`None`).
pub fn assign_stitch_tags(
    pattern: &SewingPattern,
    max_tags: usize,
) -> Result<HashMap<EdgeRef, Option<usize>>, CodecError> {
    let mut partner: HashMap<EdgeRef, EdgeRef> = HashMap::new();
    for s in &pattern.stitches {
        partner.insert(s.first, s.second);
        partner.insert(s.second, s.first);
    }

    let mut tags: HashMap<EdgeRef, Option<usize>> = HashMap::new();
    let mut next = 1usize;
    for (pi, panel) in pattern.panels.iter().enumerate() {
        for ei in 0..panel.edges.len() {
            let me = (pi, ei);
            if tags.contains_key(&me) {
                continue;
            }
            match partner.get(&me) {
                Some(&other) => {
                    if next > max_tags {
                        return Err(CodecError::StitchCapacity {
                            stitch: (me, other),
                            max: max_tags,
                        });
                    }
                    tags.insert(me, Some(next));
                    tags.insert(other, Some(next));
                    next += 1;
                }
                None => {
                    tags.insert(me, None);
                }
            }
        }
    }
    Ok(tags)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EncodeOptions {
    /// Map name words missing from the vocabulary to `<unk>` instead of
    /// failing.
    pub allow_unknown_words: bool,
}

pub fn encode(
    pattern: &SewingPattern,
    vocab: &Vocabulary,
    stats: &NormStats,
) -> Result<TokenizedGarment, CodecError> {
    encode_opts(pattern, vocab, stats, EncodeOptions::default())
}

pub fn encode_opts(
    pattern: &SewingPattern,
    vocab: &Vocabulary,
    stats: &NormStats,
    opts: EncodeOptions,
) -> Result<TokenizedGarment, CodecError> {
    let tags = assign_stitch_tags(pattern, vocab.num_tags())?;

    let mut tokens = Vec::new();
    let mut payloads: Vec<Option<Payload>> = Vec::new();
    fn push(t: u32, p: Option<Payload>, tokens: &mut Vec<u32>, payloads: &mut Vec<Option<Payload>>) {
        tokens.push(t);
        payloads.push(p);
    }

    push(vocab.garment_start_id(), None, &mut tokens, &mut payloads);
    for (pi, panel) in pattern.panels.iter().enumerate() {
        push(vocab.panel_start_id(), None, &mut tokens, &mut payloads);
        for word in panel.name.split('_') {
            let id = match vocab.word_id(word) {
                Some(id) => id,
                None if opts.allow_unknown_words => vocab.unk_id(),
                None => {
                    return Err(CodecError::UnknownWord {
                        panel: panel.name.clone(),
                        word: word.to_string(),
                    })
                }
            };
            push(id, None, &mut tokens, &mut payloads);
        }

        let mut transform = [0.0; 7];
        for i in 0..3 {
            transform[i] = stats.norm_transl(i, panel.translation[i]);
        }
        let q = panel.rotation.as_array();
        for i in 0..4 {
            transform[3 + i] = stats.norm_quat(i, q[i]);
        }
        push(
            vocab.transform_id(),
            Some(Payload::Transform(transform)),
            &mut tokens,
            &mut payloads,
        );

        let n = panel.edges.len();
        for (ei, edge) in panel.edges.iter().enumerate() {
            let closing = ei + 1 == n;
            let kind = edge.geometry.kind();
            let mask = channel_mask(kind);
            let mut values = [0.0; 8];
            let end = panel.edge_end(ei);
            values[0] = stats.norm_coord(0, end.x);
            values[1] = stats.norm_coord(1, end.y);
            match edge.geometry {
                EdgeGeometry::Line => {}
                EdgeGeometry::Quad { c1 } => {
                    values[2] = stats.norm_coord(0, c1.x);
                    values[3] = stats.norm_coord(1, c1.y);
                }
                EdgeGeometry::Cubic { c1, c2 } => {
                    values[2] = stats.norm_coord(0, c1.x);
                    values[3] = stats.norm_coord(1, c1.y);
                    values[4] = stats.norm_coord(0, c2.x);
                    values[5] = stats.norm_coord(1, c2.y);
                }
                EdgeGeometry::Arc { mid } => {
                    values[6] = stats.norm_coord(0, mid.x);
                    values[7] = stats.norm_coord(1, mid.y);
                }
            }
            push(
                vocab.edge_id(kind, closing),
                Some(Payload::Edge { values, mask }),
                &mut tokens,
                &mut payloads,
            );
            let tag = match tags.get(&(pi, ei)).copied().flatten() {
                Some(j) => StitchTag::Tag(j),
                None => StitchTag::Null,
            };
            push(vocab.tag_id(tag), None, &mut tokens, &mut payloads);
        }
        push(vocab.panel_end_id(), None, &mut tokens, &mut payloads);
    }
    push(vocab.garment_end_id(), None, &mut tokens, &mut payloads);

    Ok(TokenizedGarment { tokens, payloads })
}

/// A forced correction applied while decoding (quaternion renormalization
/// and the like). Round-tripping an encoded pattern produces none.
#[derive(Debug, Clone, PartialEq)]
pub struct Repair {
    pub panel: usize,
    pub message: String,
}

impl fmt::Display for Repair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "panel {}: {}", self.panel, self.message)
    }
}

struct PendingEdge {
    kind: EdgeKind,
    closing: bool,
    values: [f64; 8],
    tag: Option<usize>,
}

/// Inverse of [`encode`]: rebuilds the pattern by chaining edge endpoints
/// from the origin, forcing the closing edge back to (0, 0) exactly and
/// ignoring its regressed endpoint channels. Returns the pattern plus the
/// repair log.
pub fn decode(
    tg: &TokenizedGarment,
    vocab: &Vocabulary,
    stats: &NormStats,
) -> Result<(SewingPattern, Vec<Repair>), CodecError> {
    if tg.payloads.len() != tg.tokens.len() {
        return Err(CodecError::PayloadMissing {
            position: tg.payloads.len().min(tg.tokens.len()),
        });
    }

    let mut g = Grammar::new(vocab, GrammarConfig::permissive());
    let mut panels: Vec<Panel> = Vec::new();
    let mut repairs: Vec<Repair> = Vec::new();
    let mut tag_refs: HashMap<usize, Vec<EdgeRef>> = HashMap::new();

    let mut name_words: Vec<String> = Vec::new();
    let mut transform: Option<[f64; 7]> = None;
    let mut edges: Vec<PendingEdge> = Vec::new();

    let finite = |pos: usize, vals: &[f64]| -> Result<(), CodecError> {
        if vals.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(CodecError::PayloadInvalid {
                position: pos,
                message: "non-finite channel value".into(),
            })
        }
    };

    for (pos, (&token, payload)) in tg.tokens.iter().zip(&tg.payloads).enumerate() {
        if token as usize >= vocab.len() {
            return Err(CodecError::UnknownToken {
                position: pos,
                token: format!("id {token}"),
            });
        }
        g.step(token).map_err(|message| CodecError::Grammar {
            position: pos,
            message,
        })?;

        let is_edge = vocab.edge_of(token).is_some();
        let is_transform = token == vocab.transform_id();
        match (payload, is_edge || is_transform) {
            (None, true) => return Err(CodecError::PayloadMissing { position: pos }),
            (Some(_), false) => return Err(CodecError::PayloadUnexpected { position: pos }),
            _ => {}
        }

        if token == vocab.panel_start_id() {
            name_words.clear();
            transform = None;
            edges.clear();
        } else if vocab.is_word(token) || token == vocab.unk_id() {
            name_words.push(if token == vocab.unk_id() {
                "unk".to_string()
            } else {
                vocab.token_str(token).to_string()
            });
        } else if is_transform {
            match payload {
                Some(Payload::Transform(values)) => {
                    finite(pos, values)?;
                    transform = Some(*values);
                }
                _ => {
                    return Err(CodecError::PayloadInvalid {
                        position: pos,
                        message: "expected a 7-channel transform payload".into(),
                    })
                }
            }
        } else if let Some((kind, closing)) = vocab.edge_of(token) {
            match payload {
                Some(Payload::Edge { values, .. }) => {
                    finite(pos, values)?;
                    edges.push(PendingEdge {
                        kind,
                        closing,
                        values: *values,
                        tag: None,
                    });
                }
                _ => {
                    return Err(CodecError::PayloadInvalid {
                        position: pos,
                        message: "expected an 8-channel edge payload".into(),
                    })
                }
            }
        } else if let Some(tag) = vocab.tag_of(token) {
            if let StitchTag::Tag(j) = tag {
                let edge_index = edges.len() - 1;
                edges.last_mut().expect("grammar puts tags after edges").tag = Some(j);
                tag_refs
                    .entry(j)
                    .or_default()
                    .push((panels.len(), edge_index));
            }
        } else if token == vocab.panel_end_id() {
            let transform = transform.take().expect("grammar requires <R> before edges");
            let panel = build_panel(
                panels.len(),
                &name_words,
                &transform,
                &edges,
                stats,
                &mut repairs,
            );
            panels.push(panel);
        }
    }

    if !g.is_done() {
        return Err(CodecError::TruncatedSequence);
    }

    let mut stitches: Vec<Stitch> = Vec::new();
    let mut tags: Vec<(usize, Vec<EdgeRef>)> = tag_refs.into_iter().collect();
    tags.sort();
    for (tag, refs) in tags {
        if refs.len() != 2 {
            return Err(CodecError::TagCount {
                tag,
                count: refs.len(),
            });
        }
        stitches.push(Stitch::new(refs[0], refs[1]));
    }
    stitches.sort();

    Ok((SewingPattern::new(panels, stitches), repairs))
}

fn build_panel(
    panel_index: usize,
    name_words: &[String],
    transform: &[f64; 7],
    edges: &[PendingEdge],
    stats: &NormStats,
    repairs: &mut Vec<Repair>,
) -> Panel {
    let mut vertices = vec![Point2::ORIGIN];
    for e in edges {
        if !e.closing {
            vertices.push(Point2 {
                x: stats.denorm_coord(0, e.values[0]),
                y: stats.denorm_coord(1, e.values[1]),
            });
        }
    }

    let built: Vec<Edge> = edges
        .iter()
        .map(|e| {
            let p = |xi: usize| Point2 {
                x: stats.denorm_coord(0, e.values[xi]),
                y: stats.denorm_coord(1, e.values[xi + 1]),
            };
            match e.kind {
                EdgeKind::Line => Edge::line(),
                EdgeKind::Quad => Edge::quad(p(2)),
                EdgeKind::Cubic => Edge::cubic(p(2), p(4)),
                EdgeKind::Arc => Edge::arc(p(6)),
            }
        })
        .collect();

    let translation = [
        stats.denorm_transl(0, transform[0]),
        stats.denorm_transl(1, transform[1]),
        stats.denorm_transl(2, transform[2]),
    ];
    let raw_quat = [
        stats.denorm_quat(0, transform[3]),
        stats.denorm_quat(1, transform[4]),
        stats.denorm_quat(2, transform[5]),
        stats.denorm_quat(3, transform[6]),
    ];
    let norm = raw_quat.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rotation = Quaternion::new(raw_quat[0], raw_quat[1], raw_quat[2], raw_quat[3])
        .unwrap_or(Quaternion::IDENTITY);
    if (norm - 1.0).abs() > 1e-6 {
        repairs.push(Repair {
            panel: panel_index,
            message: format!("quaternion norm {norm:.6} renormalized to 1"),
        });
    }

    Panel {
        name: name_words.join("_"),
        vertices,
        edges: built,
        translation,
        rotation,
    }
}

/// Serializes to the JSONL record form (token strings + payload sidecar).
pub fn to_stream_record(tg: &TokenizedGarment, vocab: &Vocabulary) -> TokenStreamRecord {
    TokenStreamRecord {
        tokens: tg.tokens.iter().map(|&t| vocab.token_str(t).to_string()).collect(),
        payloads: tg
            .payloads
            .iter()
            .map(|p| p.as_ref().map(|p| p.values().to_vec()))
            .collect(),
    }
}

/// Parses a JSONL record back into ids and typed payloads.
pub fn from_stream_record(
    rec: &TokenStreamRecord,
    vocab: &Vocabulary,
) -> Result<TokenizedGarment, CodecError> {
    if rec.payloads.len() != rec.tokens.len() {
        return Err(CodecError::PayloadMissing {
            position: rec.payloads.len().min(rec.tokens.len()),
        });
    }
    let mut tokens = Vec::with_capacity(rec.tokens.len());
    let mut payloads = Vec::with_capacity(rec.tokens.len());
    for (pos, (tok, pay)) in rec.tokens.iter().zip(&rec.payloads).enumerate() {
        let id = vocab.id_of(tok).ok_or_else(|| CodecError::UnknownToken {
            position: pos,
            token: tok.clone(),
        })?;
        tokens.push(id);
        let payload = match (vocab.edge_of(id), id == vocab.transform_id(), pay) {
            (Some((kind, _)), _, Some(vals)) if vals.len() == 8 => {
                let mut values = [0.0; 8];
                values.copy_from_slice(vals);
                Some(Payload::Edge {
                    values,
                    mask: channel_mask(kind),
                })
            }
            (None, true, Some(vals)) if vals.len() == 7 => {
                let mut values = [0.0; 7];
                values.copy_from_slice(vals);
                Some(Payload::Transform(values))
            }
            (None, false, None) => None,
            (Some(_), _, _) | (None, true, _) => {
                return Err(CodecError::PayloadMissing { position: pos })
            }
            (None, false, Some(_)) => {
                return Err(CodecError::PayloadUnexpected { position: pos })
            }
        };
        payloads.push(payload);
    }
    Ok(TokenizedGarment { tokens, payloads })
}

/// Token count implied by the panel structure:
/// `2 + sum(3 + name_words + 2 * edges)`.
pub fn expected_token_count(pattern: &SewingPattern) -> usize {
    2 + pattern
        .panels
        .iter()
        .map(|p| 3 + p.name.split('_').count() + 2 * p.edges.len())
        .sum::<usize>()
}
