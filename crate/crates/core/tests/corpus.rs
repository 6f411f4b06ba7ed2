//! Corpus-level properties: every generated pattern validates, round-trips
//! through the codec with zero repairs, obeys the token-length formula, and
//! evaluates as a perfect metric match against itself.

use patternlm_core::codec::{
    self, decode, encode, fit_norm_stats, NormStats, Vocabulary, PE_BIN_WIDTH,
};
use patternlm_core::datagen::{self, generate_sample};
use patternlm_core::io::pattern_diff;
use patternlm_core::metrics::{evaluate, MetricReport};
use patternlm_core::pattern::validate;
use patternlm_core::SewingPattern;

const CORPUS: usize = 300;
const SEED: u64 = 20240901;

fn corpus() -> (Vec<SewingPattern>, Vocabulary, NormStats) {
    let patterns: Vec<SewingPattern> = (0..CORPUS as u64)
        .map(|i| generate_sample(SEED, i).pattern)
        .collect();
    let vocab = Vocabulary::default_tags(&datagen::vocabulary_words()).unwrap();
    let stats = fit_norm_stats(patterns.iter()).unwrap();
    (patterns, vocab, stats)
}

#[test]
fn corpus_validates_and_roundtrips_without_repairs() {
    let (patterns, vocab, stats) = corpus();
    for (i, p) in patterns.iter().enumerate() {
        assert!(validate(p).is_empty(), "pattern {i} invalid");
        let tg = encode(p, &vocab, &stats).unwrap();
        let (back, repairs) = decode(&tg, &vocab, &stats).unwrap();
        assert!(repairs.is_empty(), "pattern {i}: repairs {repairs:?}");
        assert_eq!(pattern_diff(p, &back, 1e-9), None, "pattern {i}");
    }
}

#[test]
fn corpus_obeys_length_formula_and_token_budget() {
    let (patterns, vocab, stats) = corpus();
    let mut max_len = 0;
    for (i, p) in patterns.iter().enumerate() {
        let tg = encode(p, &vocab, &stats).unwrap();
        assert_eq!(
            tg.len(),
            codec::expected_token_count(p),
            "length formula violated on pattern {i}"
        );
        max_len = max_len.max(tg.len());
    }
    assert!(max_len <= 838, "corpus max {max_len} exceeds the 838 budget");
}

#[test]
fn encode_is_invariant_to_stitch_permutations() {
    let (patterns, vocab, stats) = corpus();
    for p in patterns.iter().take(50) {
        let mut reversed = p.clone();
        reversed.stitches.reverse();
        let a = encode(p, &vocab, &stats).unwrap();
        let b = encode(&reversed, &vocab, &stats).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn quantized_roundtrip_stays_within_half_bin_per_channel() {
    let (patterns, vocab, stats) = corpus();
    let half = PE_BIN_WIDTH / 2.0;
    for p in patterns.iter().take(100) {
        let tg = encode(p, &vocab, &stats).unwrap().quantized();
        let (back, _) = decode(&tg, &vocab, &stats).unwrap();
        for (pa, pb) in p.panels.iter().zip(&back.panels) {
            for (va, vb) in pa.vertices.iter().zip(&pb.vertices) {
                for (axis, (a, b)) in [(0, (va.x, vb.x)), (1, (va.y, vb.y))] {
                    if stats.norm_coord(axis, a).abs() <= 4.0 {
                        assert!(
                            (a - b).abs() <= half * stats.coord_std[axis] + 1e-12,
                            "coordinate deviates more than half a bin"
                        );
                    }
                }
            }
            for i in 0..3 {
                if stats.norm_transl(i, pa.translation[i]).abs() <= 4.0 {
                    assert!(
                        (pa.translation[i] - pb.translation[i]).abs()
                            <= half * stats.transl_std[i] + 1e-12
                    );
                }
            }
        }
    }
}

#[test]
fn self_evaluation_is_perfect_across_the_corpus() {
    let (patterns, _, _) = corpus();
    for p in &patterns {
        assert_eq!(evaluate(p, p), MetricReport::perfect());
    }
}

#[test]
fn uniform_translation_moves_panel_l2_exactly() {
    let (patterns, _, _) = corpus();
    for p in patterns.iter().take(20) {
        let mut shifted = p.clone();
        for panel in &mut shifted.panels {
            for v in &mut panel.vertices {
                v.x += 0.3;
                v.y -= 0.4;
            }
        }
        let r = evaluate(&shifted, p);
        assert!((r.panel_l2 - 0.5).abs() < 1e-12);
    }
}

#[test]
fn edit_pairs_are_always_detected_by_metrics() {
    for i in 0..200u64 {
        let e = datagen::generate_edit(SEED, i);
        let r = evaluate(&e.before, &e.after);
        let detected = r.panel_l2 > 0.0 || r.num_edge_acc < 1.0 || r.num_panel_acc < 1.0;
        assert!(detected, "edit {} went undetected: {r:?}", e.rule_id);
    }
}
