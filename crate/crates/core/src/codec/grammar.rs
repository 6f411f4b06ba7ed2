//! Token-sequence grammar for garments:
//!
//! ```text
//! garment = <garment_start> panel* <garment_end>
//! panel   = <panel_start> word+ <R> (edge tag)+ <panel_end>
//! ```
//!
//! with exactly one closing-variant edge token per panel, in last position,
//! and every non-null stitch tag used by exactly two edges garment-wide.
//!
//! The same automaton drives decode-time validation (permissive limits) and
//! grammar-constrained sampling (structural limits that keep generated
//! patterns buildable).

use super::vocab::{StitchTag, Vocabulary};
use crate::pattern::{MAX_PANELS, MAX_TOTAL_EDGES};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrammarConfig {
    /// Non-closing edges required before a closing edge becomes legal.
    pub min_edges_before_close: usize,
    /// Name words after which `<R>` is forced.
    pub max_name_words: usize,
    pub max_panels: usize,
    pub max_total_edges: usize,
    /// Block `<garment_end>` while any tag is used exactly once. Decoding
    /// leaves this off so unpaired tags surface as tag-count errors instead.
    pub require_tag_balance: bool,
}

impl GrammarConfig {
    /// Decode-side validation: accept everything the grammar allows.
    pub fn permissive() -> Self {
        Self {
            min_edges_before_close: 0,
            max_name_words: usize::MAX,
            max_panels: usize::MAX,
            max_total_edges: usize::MAX,
            require_tag_balance: false,
        }
    }

    /// Sampling-side constraints: emitted panels have at least 3 edges and
    /// stay within pattern capacity bounds.
    pub fn sampling() -> Self {
        Self {
            min_edges_before_close: 2,
            max_name_words: 6,
            max_panels: MAX_PANELS,
            max_total_edges: MAX_TOTAL_EDGES,
            require_tag_balance: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum State {
    Start,
    /// Between panels: expect `<panel_start>` or `<garment_end>`.
    Garment,
    /// Inside the panel name: expect a word, or `<R>` once one word is down.
    Name,
    /// Expect an edge token.
    Edges,
    /// Expect the stitch tag of the edge just emitted.
    Tag { closing: bool },
    /// Closing edge tagged: expect `<panel_end>`.
    PanelDone,
    Done,
}

#[derive(Debug, Clone)]
pub struct Grammar<'v> {
    vocab: &'v Vocabulary,
    cfg: GrammarConfig,
    state: State,
    /// Garment-wide usage count per tag (index 0 = `<t1>`).
    tag_uses: Vec<u8>,
    panels: usize,
    edges_in_panel: usize,
    total_edges: usize,
    name_words: usize,
}

impl<'v> Grammar<'v> {
    pub fn new(vocab: &'v Vocabulary, cfg: GrammarConfig) -> Self {
        Self {
            vocab,
            cfg,
            state: State::Start,
            tag_uses: vec![0; vocab.num_tags()],
            panels: 0,
            edges_in_panel: 0,
            total_edges: 0,
            name_words: 0,
        }
    }

    pub fn is_done(&self) -> bool {
        self.state == State::Done
    }

    /// True when every used tag has found its pair.
    pub fn tags_balanced(&self) -> bool {
        self.tag_uses.iter().all(|&c| c != 1)
    }

    pub fn is_allowed(&self, token: u32) -> bool {
        let v = self.vocab;
        match self.state {
            State::Start => token == v.garment_start_id(),
            State::Garment => {
                let room_for_panel = self
                    .total_edges
                    .saturating_add(self.cfg.min_edges_before_close + 1)
                    <= self.cfg.max_total_edges;
                (token == v.panel_start_id()
                    && self.panels < self.cfg.max_panels
                    && room_for_panel)
                    || (token == v.garment_end_id()
                        && (!self.cfg.require_tag_balance || self.tags_balanced()))
            }
            State::Name => {
                let word_ok = (v.is_word(token) || token == v.unk_id())
                    && self.name_words < self.cfg.max_name_words;
                let r_ok = token == v.transform_id() && self.name_words >= 1;
                word_ok || r_ok
            }
            State::Edges => match v.edge_of(token) {
                Some((_, closing)) => {
                    if closing {
                        self.edges_in_panel >= self.cfg.min_edges_before_close
                            && self.total_edges < self.cfg.max_total_edges
                    } else {
                        // leave room for the edges this panel still owes,
                        // including its closing edge
                        let owed = self
                            .cfg
                            .min_edges_before_close
                            .saturating_sub(self.edges_in_panel + 1)
                            + 1;
                        self.total_edges.saturating_add(1 + owed) <= self.cfg.max_total_edges
                    }
                }
                None => false,
            },
            State::Tag { .. } => match v.tag_of(token) {
                Some(StitchTag::Null) => true,
                Some(StitchTag::Tag(j)) => self.tag_uses[j - 1] < 2,
                None => false,
            },
            State::PanelDone => token == v.panel_end_id(),
            State::Done => false,
        }
    }

    /// Marks every legal next token in `mask` (indexed by token id).
    pub fn fill_allowed(&self, mask: &mut [bool]) {
        for (id, slot) in mask.iter_mut().enumerate() {
            *slot = self.is_allowed(id as u32);
        }
    }

    /// Human-readable summary of what the automaton expects next.
    pub fn expected(&self) -> &'static str {
        match self.state {
            State::Start => "<garment_start>",
            State::Garment => "<panel_start> or <garment_end> (with all tags paired)",
            State::Name => "a name word or <R>",
            State::Edges => "an edge token",
            State::Tag { .. } => "a stitch tag",
            State::PanelDone => "<panel_end>",
            State::Done => "end of sequence",
        }
    }

    /// Advances on `token`; `Err` carries the expectation that was violated.
    pub fn step(&mut self, token: u32) -> Result<(), String> {
        if !self.is_allowed(token) {
            return Err(format!(
                "expected {}, got {:?}",
                self.expected(),
                self.vocab.token_str(token)
            ));
        }
        let v = self.vocab;
        self.state = match self.state {
            State::Start => State::Garment,
            State::Garment => {
                if token == v.panel_start_id() {
                    self.panels += 1;
                    self.name_words = 0;
                    self.edges_in_panel = 0;
                    State::Name
                } else {
                    State::Done
                }
            }
            State::Name => {
                if token == v.transform_id() {
                    State::Edges
                } else {
                    self.name_words += 1;
                    State::Name
                }
            }
            State::Edges => {
                let (_, closing) = v.edge_of(token).expect("allowed token is an edge");
                self.edges_in_panel += 1;
                self.total_edges += 1;
                State::Tag { closing }
            }
            State::Tag { closing } => {
                if let Some(StitchTag::Tag(j)) = v.tag_of(token) {
                    self.tag_uses[j - 1] += 1;
                }
                if closing {
                    State::PanelDone
                } else {
                    State::Edges
                }
            }
            State::PanelDone => State::Garment,
            State::Done => unreachable!("no token is allowed after <garment_end>"),
        };
        Ok(())
    }
}
