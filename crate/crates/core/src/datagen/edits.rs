//! Before/after editing pairs with templated instructions.
//!
//! Each rule applies a targeted change to the design parameters and rebuilds
//! the garment, so unrelated panels come out byte-identical. Length rules
//! move by 50% of the current length, clamped to the legal range; the other
//! rules toggle or step categorical parameters and are only applicable when
//! the result actually differs.

use super::build::build_pattern;
use super::params::{
    DesignParams, Neckline, Sleeve, MAX_INSERTS, MAX_LENGTH_CM, MIN_INSERTS, MIN_LENGTH_CM,
};
use crate::pattern::SewingPattern;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditRule {
    Lengthen,
    Shorten,
    NecklineSwap,
    WaistbandToggle,
    SleeveAdd,
    SleeveRemove,
    SleeveLengthen,
    SleeveShorten,
    InsertsIncrease,
    InsertsDecrease,
    SymmetryToggle,
}

impl EditRule {
    pub const ALL: [EditRule; 11] = [
        EditRule::Lengthen,
        EditRule::Shorten,
        EditRule::NecklineSwap,
        EditRule::WaistbandToggle,
        EditRule::SleeveAdd,
        EditRule::SleeveRemove,
        EditRule::SleeveLengthen,
        EditRule::SleeveShorten,
        EditRule::InsertsIncrease,
        EditRule::InsertsDecrease,
        EditRule::SymmetryToggle,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            EditRule::Lengthen => "lengthen",
            EditRule::Shorten => "shorten",
            EditRule::NecklineSwap => "neckline_swap",
            EditRule::WaistbandToggle => "waistband_toggle",
            EditRule::SleeveAdd => "sleeve_add",
            EditRule::SleeveRemove => "sleeve_remove",
            EditRule::SleeveLengthen => "sleeve_lengthen",
            EditRule::SleeveShorten => "sleeve_shorten",
            EditRule::InsertsIncrease => "inserts_increase",
            EditRule::InsertsDecrease => "inserts_decrease",
            EditRule::SymmetryToggle => "symmetry_toggle",
        }
    }

    pub fn applicable(&self, p: &DesignParams) -> bool {
        match self {
            EditRule::Lengthen => lengthened(p.length_cm) > p.length_cm,
            EditRule::Shorten => shortened(p.length_cm) < p.length_cm,
            EditRule::NecklineSwap => p.family.uses_neckline(),
            EditRule::WaistbandToggle => p.family.uses_waistband(),
            EditRule::SleeveAdd => p.family.uses_sleeve() && p.sleeve == Sleeve::None,
            EditRule::SleeveRemove => p.family.uses_sleeve() && p.sleeve != Sleeve::None,
            EditRule::SleeveLengthen => p.family.uses_sleeve() && p.sleeve == Sleeve::Short,
            EditRule::SleeveShorten => p.family.uses_sleeve() && p.sleeve == Sleeve::Long,
            EditRule::InsertsIncrease => {
                p.family.is_godet() && p.num_inserts + 2 <= MAX_INSERTS
            }
            EditRule::InsertsDecrease => {
                p.family.is_godet() && p.num_inserts >= MIN_INSERTS + 2
            }
            EditRule::SymmetryToggle => true,
        }
    }

    pub fn apply(&self, p: &DesignParams) -> DesignParams {
        let mut q = p.clone();
        match self {
            EditRule::Lengthen => q.length_cm = lengthened(p.length_cm),
            EditRule::Shorten => q.length_cm = shortened(p.length_cm),
            EditRule::NecklineSwap => {
                q.neckline = match p.neckline {
                    Neckline::Round => Neckline::V,
                    Neckline::V => Neckline::Round,
                }
            }
            EditRule::WaistbandToggle => q.waistband = !p.waistband,
            EditRule::SleeveAdd => q.sleeve = Sleeve::Short,
            EditRule::SleeveRemove => q.sleeve = Sleeve::None,
            EditRule::SleeveLengthen => q.sleeve = Sleeve::Long,
            EditRule::SleeveShorten => q.sleeve = Sleeve::Short,
            EditRule::InsertsIncrease => q.num_inserts = p.num_inserts + 2,
            EditRule::InsertsDecrease => q.num_inserts = p.num_inserts - 2,
            EditRule::SymmetryToggle => q.symmetric = !p.symmetric,
        }
        q
    }

    pub fn instruction(&self, p: &DesignParams) -> Vec<String> {
        let noun = p.family.noun();
        let words: Vec<&str> = match self {
            EditRule::Lengthen => vec!["make", "the", noun, "longer"],
            EditRule::Shorten => vec!["make", "the", noun, "shorter"],
            EditRule::NecklineSwap => match p.neckline {
                Neckline::Round => vec!["switch", "the", "neckline", "from", "round", "to", "v"],
                Neckline::V => vec!["switch", "the", "neckline", "from", "v", "to", "round"],
            },
            EditRule::WaistbandToggle => {
                if p.waistband {
                    vec!["remove", "the", "waistband", "from", "the", "skirt"]
                } else {
                    vec!["add", "a", "waistband", "to", "the", "skirt"]
                }
            }
            EditRule::SleeveAdd => vec!["add", "short", "sleeves", "to", "the", noun],
            EditRule::SleeveRemove => vec!["remove", "the", "sleeves", "from", "the", noun],
            EditRule::SleeveLengthen => vec!["make", "the", "sleeves", "longer"],
            EditRule::SleeveShorten => vec!["make", "the", "sleeves", "shorter"],
            EditRule::InsertsIncrease => vec![
                "increase", "the", "number", "of", "inserts", "in", "the", "skirt", "by", "2",
            ],
            EditRule::InsertsDecrease => vec![
                "decrease", "the", "number", "of", "inserts", "in", "the", "skirt", "by", "2",
            ],
            EditRule::SymmetryToggle => {
                if p.symmetric {
                    vec!["make", "the", "hem", "asymmetric"]
                } else {
                    vec!["make", "the", "hem", "symmetric"]
                }
            }
        };
        words.into_iter().map(str::to_string).collect()
    }
}

/// +50% of the current length, clamped to the legal maximum.
fn lengthened(length: f64) -> f64 {
    (length * 1.5).clamp(MIN_LENGTH_CM, MAX_LENGTH_CM)
}

/// -50% of the current length, clamped to the legal minimum.
fn shortened(length: f64) -> f64 {
    (length * 0.5).clamp(MIN_LENGTH_CM, MAX_LENGTH_CM)
}

#[derive(Debug, Clone)]
pub struct EditSample {
    pub before: SewingPattern,
    pub after: SewingPattern,
    pub instruction: Vec<String>,
    pub rule_id: String,
    pub params_before: DesignParams,
    pub params_after: DesignParams,
}

/// Picks one applicable rule uniformly (the length rules guarantee at least
/// one) and rebuilds the garment under the mutated parameters.
pub fn make_edit(params: &DesignParams, seed: u64) -> EditSample {
    let applicable: Vec<EditRule> = EditRule::ALL
        .into_iter()
        .filter(|r| r.applicable(params))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rule = applicable[rng.gen_range(0..applicable.len())];
    let after_params = rule.apply(params);
    EditSample {
        before: build_pattern(params),
        after: build_pattern(&after_params),
        instruction: rule.instruction(params),
        rule_id: rule.id().to_string(),
        params_before: params.clone(),
        params_after: after_params,
    }
}

/// Every word any instruction can contain.
pub fn instruction_words() -> Vec<&'static str> {
    vec![
        "make", "the", "skirt", "tee", "top", "dress", "longer", "shorter", "switch", "neckline",
        "from", "round", "to", "v", "remove", "waistband", "add", "a", "short", "sleeves", "in",
        "increase", "decrease", "number", "of", "inserts", "by", "2", "hem", "asymmetric",
        "symmetric",
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::params::{sample_params, Family};
    use crate::io::to_canonical_json;
    use crate::pattern::validate;
    use crate::rng::derive_seed;

    fn skirt(length: f64) -> DesignParams {
        DesignParams {
            family: Family::StraightSkirt,
            length_cm: length,
            width_cm: 45.0,
            flare_ratio: 1.0,
            num_inserts: 0,
            waistband: false,
            sleeve: Sleeve::None,
            neckline: Neckline::Round,
            symmetric: true,
        }
    }

    #[test]
    fn lengthen_adds_half_of_current_length() {
        let p = skirt(60.0);
        let q = EditRule::Lengthen.apply(&p);
        assert_eq!(q.length_cm, 90.0);
        assert_eq!(
            EditRule::Lengthen.instruction(&p).join(" "),
            "make the skirt longer"
        );
    }

    #[test]
    fn lengthen_clamps_to_maximum() {
        let p = skirt(120.0);
        let q = EditRule::Lengthen.apply(&p);
        assert_eq!(q.length_cm, 150.0);
        // at the cap the rule stops being applicable
        assert!(!EditRule::Lengthen.applicable(&skirt(150.0)));
        assert!(EditRule::Shorten.applicable(&skirt(150.0)));
    }

    #[test]
    fn some_length_rule_always_applies() {
        for len in [10.0, 10.5, 20.0, 75.0, 149.0, 150.0] {
            let p = skirt(len);
            assert!(
                EditRule::Lengthen.applicable(&p) || EditRule::Shorten.applicable(&p),
                "no length rule at {len}"
            );
        }
    }

    #[test]
    fn neckline_swap_touches_only_the_front_panel() {
        let params = DesignParams {
            family: Family::Tee,
            length_cm: 55.0,
            width_cm: 48.0,
            flare_ratio: 1.0,
            num_inserts: 0,
            waistband: false,
            sleeve: Sleeve::Short,
            neckline: Neckline::Round,
            symmetric: true,
        };
        let before = build_pattern(&params);
        let after = build_pattern(&EditRule::NecklineSwap.apply(&params));
        assert_ne!(
            to_canonical_json(&before.panels[0]),
            to_canonical_json(&after.panels[0])
        );
        for i in 1..before.panels.len() {
            assert_eq!(
                to_canonical_json(&before.panels[i]),
                to_canonical_json(&after.panels[i]),
                "panel {i} should be untouched"
            );
        }
    }

    #[test]
    fn edits_are_valid_and_change_the_pattern() {
        for i in 0..300u64 {
            let params = sample_params(derive_seed(21, i, "params"));
            let e = make_edit(&params, derive_seed(21, i, "edit"));
            assert!(validate(&e.before).is_empty());
            assert!(validate(&e.after).is_empty());
            assert_ne!(
                to_canonical_json(&e.before),
                to_canonical_json(&e.after),
                "rule {} produced no change for {params:?}",
                e.rule_id
            );
            assert!(!e.instruction.is_empty());
        }
    }

    #[test]
    fn instructions_use_the_closed_vocabulary() {
        let vocab: std::collections::HashSet<&str> = instruction_words().into_iter().collect();
        for i in 0..300u64 {
            let params = sample_params(derive_seed(23, i, "params"));
            let e = make_edit(&params, derive_seed(23, i, "edit"));
            for w in &e.instruction {
                assert!(vocab.contains(w.as_str()), "word {w:?} not in closed vocab");
            }
        }
    }
}
