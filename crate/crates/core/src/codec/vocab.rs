//! Token vocabulary: fixed pattern-special tokens, stitch tags, and a small
//! word-level text vocabulary for names, captions, and instructions.
//!
//! Id layout (dense, stable given the same word corpus):
//!   0..4    text controls: `<pad>` `<bos>` `<eos>` `<unk>`
//!   4..9    `<garment_start>` `<garment_end>` `<panel_start>` `<panel_end>` `<R>`
//!   9..17   edge tokens: `<line>` `<cline>` `<quad>` `<cquad>` `<cubic>`
//!           `<ccubic>` `<arc>` `<carc>`
//!   then    stitch tags `<t1>`..`<tM>` and the null tag `<tN>`
//!   then    words, sorted lexicographically

use crate::pattern::EdgeKind;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::path::Path;

/// Default stitch-tag count: 13 fixed specials + 108 tags + the null tag
/// gives 122 pattern-special tokens.
pub const DEFAULT_NUM_TAGS: usize = 108;

/// Number of non-tag pattern specials (garment/panel delimiters, `<R>`, and
/// the eight edge tokens).
pub const FIXED_PATTERN_SPECIALS: usize = 13;

const NUM_TEXT_CONTROLS: u32 = 4;
const GARMENT_START: u32 = 4;
const GARMENT_END: u32 = 5;
const PANEL_START: u32 = 6;
const PANEL_END: u32 = 7;
const TRANSFORM: u32 = 8;
const EDGE_BASE: u32 = 9;
const TAG_BASE: u32 = 17;

/// Stitch tag carried by each edge token: a pair index or the null tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StitchTag {
    /// 1-based pair tag.
    Tag(usize),
    Null,
}

#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    num_tags: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum VocabError {
    BadWord(String),
    BadLayout(String),
    Io(String),
}

impl fmt::Display for VocabError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::BadWord(w) => write!(f, "word {w:?} collides with special-token syntax"),
            Self::BadLayout(m) => write!(f, "vocabulary file layout: {m}"),
            Self::Io(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for VocabError {}

impl Vocabulary {
    /// Builds a vocabulary with `num_tags` stitch tags and the given text
    /// words (deduplicated and sorted, so ids are corpus-order independent).
    pub fn new(num_tags: usize, words: &[String]) -> Result<Self, VocabError> {
        let mut tokens: Vec<String> = vec![
            "<pad>".into(),
            "<bos>".into(),
            "<eos>".into(),
            "<unk>".into(),
            "<garment_start>".into(),
            "<garment_end>".into(),
            "<panel_start>".into(),
            "<panel_end>".into(),
            "<R>".into(),
            "<line>".into(),
            "<cline>".into(),
            "<quad>".into(),
            "<cquad>".into(),
            "<cubic>".into(),
            "<ccubic>".into(),
            "<arc>".into(),
            "<carc>".into(),
        ];
        for j in 1..=num_tags {
            tokens.push(format!("<t{j}>"));
        }
        tokens.push("<tN>".into());

        let mut sorted: Vec<String> = words.to_vec();
        sorted.sort();
        sorted.dedup();
        for w in &sorted {
            if w.is_empty() || w.starts_with('<') || w.contains(char::is_whitespace) {
                return Err(VocabError::BadWord(w.clone()));
            }
        }
        tokens.extend(sorted);

        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Ok(Self {
            tokens,
            index,
            num_tags,
        })
    }

    pub fn default_tags(words: &[String]) -> Result<Self, VocabError> {
        Self::new(DEFAULT_NUM_TAGS, words)
    }

    /// Rebuilds from a token list in id order (as stored in a vocab file).
    pub fn from_tokens(tokens: Vec<String>, num_tags: usize) -> Result<Self, VocabError> {
        let word_base = TAG_BASE as usize + num_tags + 1;
        if tokens.len() < word_base {
            return Err(VocabError::BadLayout(format!(
                "{} tokens is too few for {num_tags} tags",
                tokens.len()
            )));
        }
        let rebuilt = Self::new(
            num_tags,
            &tokens[word_base..].iter().cloned().collect::<Vec<_>>(),
        )?;
        if rebuilt.tokens != tokens {
            return Err(VocabError::BadLayout(
                "token list is not in canonical id order".into(),
            ));
        }
        Ok(rebuilt)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn num_tags(&self) -> usize {
        self.num_tags
    }

    /// Count of pattern-special tokens: delimiters, `<R>`, edge tokens, and
    /// stitch tags including the null tag.
    pub fn pattern_special_count(&self) -> usize {
        FIXED_PATTERN_SPECIALS + self.num_tags + 1
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn pad_id(&self) -> u32 {
        0
    }
    pub fn bos_id(&self) -> u32 {
        1
    }
    pub fn eos_id(&self) -> u32 {
        2
    }
    pub fn unk_id(&self) -> u32 {
        3
    }
    pub fn garment_start_id(&self) -> u32 {
        GARMENT_START
    }
    pub fn garment_end_id(&self) -> u32 {
        GARMENT_END
    }
    pub fn panel_start_id(&self) -> u32 {
        PANEL_START
    }
    pub fn panel_end_id(&self) -> u32 {
        PANEL_END
    }
    pub fn transform_id(&self) -> u32 {
        TRANSFORM
    }

    pub fn edge_id(&self, kind: EdgeKind, closing: bool) -> u32 {
        let k = match kind {
            EdgeKind::Line => 0,
            EdgeKind::Quad => 1,
            EdgeKind::Cubic => 2,
            EdgeKind::Arc => 3,
        };
        EDGE_BASE + 2 * k + u32::from(closing)
    }

    /// `(kind, closing)` when `id` is an edge token.
    pub fn edge_of(&self, id: u32) -> Option<(EdgeKind, bool)> {
        if !(EDGE_BASE..TAG_BASE).contains(&id) {
            return None;
        }
        let k = (id - EDGE_BASE) / 2;
        let kind = match k {
            0 => EdgeKind::Line,
            1 => EdgeKind::Quad,
            2 => EdgeKind::Cubic,
            _ => EdgeKind::Arc,
        };
        Some((kind, (id - EDGE_BASE) % 2 == 1))
    }

    pub fn tag_id(&self, tag: StitchTag) -> u32 {
        match tag {
            StitchTag::Tag(j) => {
                debug_assert!(j >= 1 && j <= self.num_tags);
                TAG_BASE + (j as u32) - 1
            }
            StitchTag::Null => TAG_BASE + self.num_tags as u32,
        }
    }

    pub fn tag_of(&self, id: u32) -> Option<StitchTag> {
        let null = TAG_BASE + self.num_tags as u32;
        if id == null {
            Some(StitchTag::Null)
        } else if (TAG_BASE..null).contains(&id) {
            Some(StitchTag::Tag((id - TAG_BASE + 1) as usize))
        } else {
            None
        }
    }

    fn word_base(&self) -> u32 {
        TAG_BASE + self.num_tags as u32 + 1
    }

    pub fn is_word(&self, id: u32) -> bool {
        id >= self.word_base() && (id as usize) < self.tokens.len()
    }

    pub fn is_text_control(&self, id: u32) -> bool {
        id < NUM_TEXT_CONTROLS
    }

    pub fn word_ids(&self) -> std::ops::Range<u32> {
        self.word_base()..self.tokens.len() as u32
    }

    pub fn word_id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied().filter(|&id| self.is_word(id))
    }

    pub fn token_str(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn id_of(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    /// Maps prompt words to ids, falling back to `<unk>` for unknown words.
    pub fn words_to_ids_lossy(&self, words: &[String]) -> Vec<u32> {
        words
            .iter()
            .map(|w| self.word_id(w).unwrap_or_else(|| self.unk_id()))
            .collect()
    }
}

/// On-disk vocabulary file: token strings in id order plus the tag count and
/// the normalization statistics fitted on the training split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VocabFile {
    pub tokens: Vec<String>,
    pub num_tags: usize,
    pub norm_stats: super::norm::NormStats,
}

impl VocabFile {
    pub fn new(vocab: &Vocabulary, norm_stats: super::norm::NormStats) -> Self {
        Self {
            tokens: vocab.tokens().to_vec(),
            num_tags: vocab.num_tags(),
            norm_stats,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), VocabError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| VocabError::Io(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| VocabError::Io(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, VocabError> {
        let text = std::fs::read_to_string(&path).map_err(|e| VocabError::Io(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| VocabError::Io(e.to_string()))
    }

    pub fn vocabulary(&self) -> Result<Vocabulary, VocabError> {
        Vocabulary::from_tokens(self.tokens.clone(), self.num_tags)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words() -> Vec<String> {
        ["front", "back", "skirt", "zz", "aa"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    #[test]
    fn default_vocab_has_122_pattern_specials() {
        let v = Vocabulary::default_tags(&words()).unwrap();
        assert_eq!(v.pattern_special_count(), 122);
    }

    #[test]
    fn ids_are_dense_and_sorted_words_are_stable() {
        let v1 = Vocabulary::new(4, &words()).unwrap();
        let mut rev = words();
        rev.reverse();
        let v2 = Vocabulary::new(4, &rev).unwrap();
        assert_eq!(v1.tokens(), v2.tokens());
        // words come after <tN> in sorted order
        assert_eq!(v1.token_str(v1.word_id("aa").unwrap()), "aa");
        let ids: Vec<u32> = ["aa", "back", "front", "skirt", "zz"]
            .iter()
            .map(|w| v1.word_id(w).unwrap())
            .collect();
        for pair in ids.windows(2) {
            assert_eq!(pair[1], pair[0] + 1);
        }
    }

    #[test]
    fn edge_token_mapping_roundtrips() {
        let v = Vocabulary::new(4, &[]).unwrap();
        for kind in [EdgeKind::Line, EdgeKind::Quad, EdgeKind::Cubic, EdgeKind::Arc] {
            for closing in [false, true] {
                let id = v.edge_id(kind, closing);
                assert_eq!(v.edge_of(id), Some((kind, closing)));
            }
        }
        assert_eq!(v.token_str(v.edge_id(EdgeKind::Arc, true)), "<carc>");
        assert_eq!(v.token_str(v.edge_id(EdgeKind::Line, false)), "<line>");
    }

    #[test]
    fn tag_mapping_roundtrips() {
        let v = Vocabulary::new(4, &[]).unwrap();
        assert_eq!(v.token_str(v.tag_id(StitchTag::Tag(1))), "<t1>");
        assert_eq!(v.token_str(v.tag_id(StitchTag::Tag(4))), "<t4>");
        assert_eq!(v.token_str(v.tag_id(StitchTag::Null)), "<tN>");
        assert_eq!(v.tag_of(v.tag_id(StitchTag::Tag(3))), Some(StitchTag::Tag(3)));
        assert_eq!(v.tag_of(v.tag_id(StitchTag::Null)), Some(StitchTag::Null));
        assert_eq!(v.tag_of(v.garment_start_id()), None);
    }

    #[test]
    fn from_tokens_validates_layout() {
        let v = Vocabulary::new(4, &words()).unwrap();
        let rebuilt = Vocabulary::from_tokens(v.tokens().to_vec(), 4).unwrap();
        assert_eq!(rebuilt.tokens(), v.tokens());
        let mut shuffled = v.tokens().to_vec();
        let n = shuffled.len();
        shuffled.swap(n - 1, n - 2);
        assert!(Vocabulary::from_tokens(shuffled, 4).is_err());
    }
}
