//! Rule-based caption generation.
//!
//! Captions are short phrase collections: one categorical family phrase,
//! threshold qualifiers for continuous parameters, and dependent-parameter
//! phrases only when the parameter is active for the family. The full rule
//! table lives in [`phrases`]; every phrase can be inverted back to a
//! constraint on the parameters, which the tests exploit.

use super::params::{DesignParams, Neckline, Sleeve};
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const MAXI_LENGTH_CM: f64 = 70.0;
pub const MINI_LENGTH_CM: f64 = 45.0;
pub const FLARED_HEM_RATIO: f64 = 1.4;
pub const STRAIGHT_HEM_RATIO: f64 = 1.1;

pub fn number_word(n: u32) -> &'static str {
    match n {
        4 => "four",
        5 => "five",
        6 => "six",
        7 => "seven",
        8 => "eight",
        9 => "nine",
        10 => "ten",
        11 => "eleven",
        12 => "twelve",
        _ => "some",
    }
}

fn family_phrase(params: &DesignParams) -> Vec<&'static str> {
    use super::params::Family::*;
    match params.family {
        StraightSkirt => vec!["straight", "skirt"],
        FlaredSkirt => vec!["flared", "skirt"],
        GodetSkirt => vec!["godet", "skirt"],
        Tee => vec!["tee"],
        Tank => vec!["tank", "top"],
        Dress => vec!["dress"],
    }
}

/// The caption rule table: phrases in canonical rule order.
pub fn phrases(params: &DesignParams) -> Vec<Vec<&'static str>> {
    let mut out = vec![family_phrase(params)];

    out.push(if params.length_cm > MAXI_LENGTH_CM {
        vec!["maxi", "length"]
    } else if params.length_cm < MINI_LENGTH_CM {
        vec!["mini", "length"]
    } else {
        vec!["midi", "length"]
    });

    if params.family.uses_flare() {
        if params.flare_ratio > FLARED_HEM_RATIO {
            out.push(vec!["flared", "hem"]);
        } else if params.flare_ratio < STRAIGHT_HEM_RATIO {
            out.push(vec!["straight", "hem"]);
        } else {
            out.push(vec!["gently", "flared"]);
        }
    }

    if params.family.uses_waistband() && params.waistband {
        out.push(vec!["with", "waistband"]);
    }

    if params.family.uses_sleeve() {
        out.push(match params.sleeve {
            Sleeve::None => vec!["sleeveless"],
            Sleeve::Short => vec!["short", "sleeves"],
            Sleeve::Long => vec!["long", "sleeves"],
        });
    }

    if params.family.uses_neckline() {
        out.push(match params.neckline {
            Neckline::Round => vec!["round", "neckline"],
            Neckline::V => vec!["v", "neckline"],
        });
    }

    if params.family.is_godet() {
        out.push(vec![number_word(params.num_inserts), "inserts"]);
    }

    if !params.symmetric {
        out.push(vec!["asymmetric", "hem"]);
    }

    out
}

/// Caption for the parameters: the phrase multiset in an order shuffled by
/// `seed`, flattened to words.
pub fn caption(params: &DesignParams, seed: u64) -> Vec<String> {
    let mut list = phrases(params);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    list.shuffle(&mut rng);
    list.into_iter()
        .flatten()
        .map(str::to_string)
        .collect()
}

/// Every word any caption can contain.
pub fn caption_words() -> Vec<&'static str> {
    let mut words = vec![
        "straight", "skirt", "flared", "godet", "tee", "tank", "top", "dress", "maxi", "mini",
        "midi", "length", "hem", "gently", "with", "waistband", "sleeveless", "short", "long",
        "sleeves", "round", "v", "neckline", "inserts", "asymmetric",
    ];
    for n in 4..=12 {
        words.push(number_word(n));
    }
    words
}
