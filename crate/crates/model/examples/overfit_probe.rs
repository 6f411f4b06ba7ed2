//! Timing/memorization probe for the default tiny config.
//!
//! Usage: cargo run --release -p patternlm-model --example overfit_probe -- [steps] [batch] [lr]

use patternlm_core::codec::{fit_norm_stats, Vocabulary};
use patternlm_core::datagen::{self, generate_sample, Modality, Record};
use patternlm_model::batch::{build_example, SeqExample};
use patternlm_model::train::{train, TrainConfig, TrainSet};
use patternlm_model::{ModelConfig, ModelState};
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let steps: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(200);
    let batch: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(4);
    let lr: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(3e-4);

    let vocab = Vocabulary::default_tags(&datagen::vocabulary_words()).unwrap();
    // 64 distinct-caption samples, like the acceptance overfit set
    let mut samples = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut i = 0u64;
    while samples.len() < 64 {
        let s = generate_sample(4242, i);
        i += 1;
        if seen.insert(s.caption.join(" ")) {
            samples.push(s);
        }
    }
    let stats = fit_norm_stats(samples.iter().map(|s| &s.pattern)).unwrap();
    let examples: Vec<SeqExample> = samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let r = Record {
                id: i as u64,
                modality: Modality::Text,
                caption: Some(s.caption.clone()),
                instruction: None,
                before: None,
                pattern: s.pattern.clone(),
            };
            build_example(&r, &vocab, &stats, 2048).unwrap()
        })
        .collect();
    let mean_len: f64 =
        examples.iter().map(|e| e.tokens.len() as f64).sum::<f64>() / examples.len() as f64;
    let max_len = examples.iter().map(|e| e.tokens.len()).max().unwrap();
    eprintln!("64 examples, mean len {mean_len:.1}, max len {max_len}");

    let cfg = TrainConfig {
        steps,
        batch_size: batch,
        optim: patternlm_model::optim::OptimConfig {
            lr,
            ..Default::default()
        },
        log_every: 50,
        ..Default::default()
    };
    let mut state = ModelState::<f32>::new(ModelConfig::tiny(vocab.len()), 1);
    eprintln!("params: {}", state.param_count());
    let sets = TrainSet::text_only(examples);
    let t0 = Instant::now();
    let (logs, _) = train(&mut state, &sets, &cfg, None, 0, None).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    let last = logs.last().unwrap();
    eprintln!(
        "{} steps in {:.1}s ({:.3}s/step) | final total {:.4} ce {:.4} acc {:.4}",
        steps,
        dt,
        dt / steps as f64,
        last.total,
        last.ce,
        last.token_accuracy
    );
}
