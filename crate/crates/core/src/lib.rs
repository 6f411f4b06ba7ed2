//! Sewing patterns as token sequences: domain types, a drawing-command
//! codec with aligned continuous payloads, reconstruction metrics, and a
//! procedural multimodal dataset generator.

pub mod codec;
pub mod datagen;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod pattern;
pub mod rng;

pub use geometry::{Point2, Quaternion};
pub use pattern::{Edge, EdgeGeometry, EdgeKind, Panel, Placement3, SewingPattern, Stitch};
