pub mod eval;
pub mod gen;
pub mod render;
pub mod sample;
pub mod stats;
pub mod tokenize;
pub mod train;
pub mod validate;

use crate::AppError;
use patternlm_core::codec::{NormStats, VocabFile, Vocabulary};
use serde::Serialize;
use std::path::Path;

/// Loads the vocabulary file, with stats optionally overridden from a
/// standalone NormStats JSON.
pub fn load_vocab_and_stats(
    vocab_path: &Path,
    stats_path: Option<&Path>,
) -> Result<(Vocabulary, NormStats), AppError> {
    let file = VocabFile::load(vocab_path)?;
    let vocab = file.vocabulary()?;
    let stats = match stats_path {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
        None => file.norm_stats,
    };
    Ok((vocab, stats))
}

/// Echoes the effective configuration of a run into `<out>/run_config.json`.
pub fn write_run_config<T: Serialize>(out_dir: &Path, config: &T) -> Result<(), AppError> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(
        out_dir.join("run_config.json"),
        serde_json::to_string_pretty(config)? + "\n",
    )?;
    Ok(())
}
