use crate::AppError;
use patternlm_core::codec::{self, TokenStreamRecord};
use patternlm_core::io::{pattern_to_string, read_pattern};
use std::path::Path;

pub fn tokenize(
    pattern_file: &Path,
    vocab_path: &Path,
    stats_path: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), AppError> {
    let (vocab, stats) = super::load_vocab_and_stats(vocab_path, stats_path)?;
    let pattern = read_pattern(pattern_file).map_err(|e| match e {
        patternlm_core::io::IoError::Invalid(_) => AppError::Validation(e.to_string()),
        other => AppError::Runtime(other.into()),
    })?;
    let tg = codec::encode(&pattern, &vocab, &stats)
        .map_err(|e| AppError::Validation(e.to_string()))?;
    println!("{}", tg.render_text(&vocab));
    if let Some(out) = out {
        let record = codec::to_stream_record(&tg, &vocab);
        std::fs::write(
            out,
            patternlm_core::io::to_canonical_json(&record) + "\n",
        )?;
    }
    Ok(())
}

pub fn detokenize(
    stream_file: &Path,
    vocab_path: &Path,
    stats_path: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), AppError> {
    let (vocab, stats) = super::load_vocab_and_stats(vocab_path, stats_path)?;
    let text = std::fs::read_to_string(stream_file)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let line = lines
        .next()
        .ok_or_else(|| AppError::Usage("stream file has no records".into()))?;
    if lines.next().is_some() {
        return Err(AppError::Usage(
            "stream file has multiple records; detokenize expects one".into(),
        ));
    }
    let record: TokenStreamRecord = serde_json::from_str(line)?;
    let tg = codec::from_stream_record(&record, &vocab)
        .map_err(|e| AppError::Validation(e.to_string()))?;
    let (pattern, repairs) = codec::decode(&tg, &vocab, &stats)
        .map_err(|e| AppError::Validation(format!("grammar failure: {e}")))?;
    for r in &repairs {
        eprintln!("repair: {r}");
    }
    let text = pattern_to_string(&pattern);
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
