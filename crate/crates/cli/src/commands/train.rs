use crate::AppError;
use patternlm_core::datagen::Dataset;
use patternlm_model::train::{train, TrainConfig, TrainSet};
use patternlm_model::{ModelConfig, ModelState};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Model section of the run config (the vocabulary size comes from the
/// dataset, not the file).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSection {
    pub embed_dim: usize,
    pub layers: usize,
    pub heads: usize,
    pub mlp_ratio: usize,
    pub context_len: usize,
    pub lambda: f64,
    pub dropout: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let tiny = ModelConfig::tiny(1);
        Self {
            embed_dim: tiny.embed_dim,
            layers: tiny.layers,
            heads: tiny.heads,
            mlp_ratio: tiny.mlp_ratio,
            context_len: tiny.context_len,
            lambda: tiny.lambda,
            dropout: tiny.dropout,
        }
    }
}

impl ModelSection {
    fn to_config(&self, vocab_size: usize) -> ModelConfig {
        ModelConfig {
            embed_dim: self.embed_dim,
            layers: self.layers,
            heads: self.heads,
            mlp_ratio: self.mlp_ratio,
            context_len: self.context_len,
            vocab_size,
            lambda: self.lambda,
            dropout: self.dropout,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub model: ModelSection,
    pub train: TrainConfig,
}

pub fn run(
    dataset_dir: &Path,
    config_path: Option<&Path>,
    out: &Path,
    seed: Option<u64>,
    lambda: Option<f64>,
    steps: Option<usize>,
) -> Result<(), AppError> {
    let mut cfg: RunConfig = match config_path {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)
            .map_err(|e| AppError::Usage(format!("bad --config file: {e}")))?,
        None => RunConfig::default(),
    };
    // flags override the config file
    if let Some(s) = seed {
        cfg.train.seed = s;
    }
    if let Some(l) = lambda {
        cfg.model.lambda = l;
    }
    if let Some(s) = steps {
        cfg.train.steps = s;
    }

    let ds = Dataset::load(dataset_dir)?;
    let model_cfg = cfg.model.to_config(ds.vocab.len());
    model_cfg
        .validate()
        .map_err(|e| AppError::Usage(e.to_string()))?;

    super::write_run_config(out, &cfg)?;

    let sets = TrainSet::from_dataset(&ds, model_cfg.context_len)?;
    eprintln!(
        "training on {} text / {} text+image / {} edit sequences, {} steps",
        sets.text.len(),
        sets.text_image.len(),
        sets.edit.len(),
        cfg.train.steps
    );
    let mut state = ModelState::<f32>::new(model_cfg, cfg.train.seed);
    let out_buf = out.to_path_buf();
    let (logs, _) = train(&mut state, &sets, &cfg.train, Some(&out_buf), 0, None)?;

    let mut curve = String::new();
    for l in &logs {
        curve.push_str(&serde_json::to_string(l)?);
        curve.push('\n');
    }
    std::fs::write(out.join("loss_curve.jsonl"), curve)?;
    let last = logs.last();
    println!(
        "done: {} steps, final total {:.4}, checkpoint dir {}",
        logs.len(),
        last.map(|l| l.total).unwrap_or(f64::NAN),
        out.display()
    );
    Ok(())
}
