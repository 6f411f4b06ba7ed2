use crate::AppError;
use patternlm_core::codec::decode;
use patternlm_core::io::pattern_to_string;
use patternlm_core::pattern::validate;
use patternlm_model::batch::build_prompt;
use patternlm_model::checkpoint::load_checkpoint;
use patternlm_model::sample::{sample, SampleError, SampleOptions, SamplingMode};
use std::path::PathBuf;

pub struct Args {
    pub checkpoint: PathBuf,
    pub vocab: PathBuf,
    pub prompt: String,
    pub greedy: bool,
    pub temperature: Option<f64>,
    pub max_len: usize,
    pub no_grammar_constraint: bool,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<(), AppError> {
    if args.greedy && args.temperature.is_some() {
        return Err(AppError::Usage(
            "--greedy and --temperature are mutually exclusive".into(),
        ));
    }
    let (vocab, stats) = super::load_vocab_and_stats(&args.vocab, None)?;
    let ckpt = load_checkpoint(&args.checkpoint)?;
    if ckpt.state.config.vocab_size != vocab.len() {
        return Err(AppError::Usage(format!(
            "checkpoint vocabulary size {} does not match vocab file ({})",
            ckpt.state.config.vocab_size,
            vocab.len()
        )));
    }

    let words: Vec<String> = args
        .prompt
        .split_whitespace()
        .map(str::to_string)
        .collect();
    for w in &words {
        if vocab.word_id(w).is_none() {
            eprintln!("note: prompt word {w:?} is not in the vocabulary; using <unk>");
        }
    }
    let prompt = build_prompt(&words, &vocab);

    let opts = SampleOptions {
        mode: match args.temperature {
            Some(t) => SamplingMode::Temperature(t),
            None => SamplingMode::Greedy,
        },
        max_len: args.max_len,
        grammar_constraint: !args.no_grammar_constraint,
        seed: args.seed,
        capture_logits: false,
    };
    let output = match sample(&ckpt.state, &prompt, &vocab, &opts) {
        Ok(o) => o,
        Err(SampleError::MaxLen { partial }) => {
            return Err(AppError::Validation(format!(
                "sampling hit --max-len after {} garment tokens without <garment_end>; \
                 partial stream: {}",
                partial.tokens.len(),
                partial.render_text(&vocab)
            )))
        }
        Err(other) => return Err(AppError::Runtime(other.into())),
    };

    println!("{}", output.garment.render_text(&vocab));
    let (pattern, repairs) =
        decode(&output.garment, &vocab, &stats).map_err(|e| AppError::Validation(e.to_string()))?;
    for r in &repairs {
        eprintln!("repair: {r}");
    }
    if let Some(out) = &args.out {
        std::fs::write(out, pattern_to_string(&pattern))?;
        eprintln!("wrote {}", out.display());
    }
    let report = validate(&pattern);
    if !report.is_empty() {
        let lines: Vec<String> = report.iter().map(|v| v.to_string()).collect();
        return Err(AppError::Validation(format!(
            "decoded pattern has {} violation(s):\n  {}",
            report.len(),
            lines.join("\n  ")
        )));
    }
    Ok(())
}
