//! Model and training configuration.

use serde::{Deserialize, Serialize};
use std::fmt;

fn default_embed_dim() -> usize {
    256
}
fn default_layers() -> usize {
    4
}
fn default_heads() -> usize {
    4
}
fn default_mlp_ratio() -> usize {
    4
}
fn default_context_len() -> usize {
    2048
}
fn default_lambda() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(default = "default_embed_dim")]
    pub embed_dim: usize,
    #[serde(default = "default_layers")]
    pub layers: usize,
    #[serde(default = "default_heads")]
    pub heads: usize,
    #[serde(default = "default_mlp_ratio")]
    pub mlp_ratio: usize,
    #[serde(default = "default_context_len")]
    pub context_len: usize,
    pub vocab_size: usize,
    /// Weight balancing the regression losses against cross-entropy.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub dropout: f64,
}

impl ModelConfig {
    pub fn tiny(vocab_size: usize) -> Self {
        Self {
            embed_dim: default_embed_dim(),
            layers: default_layers(),
            heads: default_heads(),
            mlp_ratio: default_mlp_ratio(),
            context_len: default_context_len(),
            vocab_size,
            lambda: default_lambda(),
            dropout: 0.0,
        }
    }

    /// Small configuration for gradient checks and fast tests.
    pub fn test(vocab_size: usize) -> Self {
        Self {
            embed_dim: 32,
            layers: 2,
            heads: 2,
            mlp_ratio: 4,
            context_len: 256,
            vocab_size,
            lambda: 0.1,
            dropout: 0.0,
        }
    }

    pub fn head_dim(&self) -> usize {
        self.embed_dim / self.heads
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.embed_dim % self.heads != 0 {
            return Err(ConfigError::Heads {
                embed_dim: self.embed_dim,
                heads: self.heads,
            });
        }
        if self.vocab_size == 0 {
            return Err(ConfigError::EmptyVocab);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Heads { embed_dim: usize, heads: usize },
    EmptyVocab,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Heads { embed_dim, heads } => {
                write!(f, "embed_dim {embed_dim} not divisible by {heads} heads")
            }
            Self::EmptyVocab => write!(f, "vocab_size must be positive"),
        }
    }
}

impl std::error::Error for ConfigError {}
