//! Tiny decoder-only transformer for sewing-pattern token streams: mixed
//! discrete/continuous objective, regression heads, payload positional
//! embeddings, deterministic training, and a grammar-constrained sampler.

pub mod batch;
pub mod checkpoint;
pub mod config;
pub mod gradcheck;
pub mod loss;
pub mod mat;
pub mod optim;
pub mod sample;
pub mod state;
pub mod train;
pub mod transformer;

pub use batch::{build_example, build_prompt, PeInput, RegTarget, SeqExample};
pub use config::ModelConfig;
pub use loss::{mixed_loss, LossTerms};
pub use state::ModelState;
pub use transformer::{forward, ForwardOptions, SeqOutputs};
