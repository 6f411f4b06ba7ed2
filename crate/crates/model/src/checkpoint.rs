//! Checkpoint format: magic `PLM1`, little-endian throughout; a JSON header
//! (length-prefixed) with the model config and training step; one record
//! per tensor (name length, name bytes, rank, dims, raw f32 data); and a
//! trailing CRC32 of all preceding bytes.
//!
//! Optimizer moments are stored as ordinary tensors under `opt.m.*` /
//! `opt.v.*`, which is what makes resumed runs bitwise identical to
//! uninterrupted ones.

use crate::config::ModelConfig;
use crate::mat::Mat;
use crate::optim::{OptimConfig, Optimizer};
use crate::state::ModelState;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"PLM1";

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    model: ModelConfig,
    step: usize,
    optim: Option<OptimConfig>,
}

#[derive(Debug)]
pub enum CheckpointError {
    Io(std::io::Error),
    BadMagic([u8; 4]),
    BadHeader(String),
    Truncated { tensor: String },
    ShapeMismatch { tensor: String, expected: (usize, usize), got: (usize, usize) },
    UnknownTensor(String),
    MissingTensor(String),
    CrcMismatch { stored: u32, computed: u32 },
}

impl fmt::Display for CheckpointError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Io(e) => write!(f, "{e}"),
            Self::BadMagic(m) => write!(f, "bad magic {m:?}, expected PLM1"),
            Self::BadHeader(m) => write!(f, "bad header: {m}"),
            Self::Truncated { tensor } => write!(f, "truncated at tensor {tensor:?}"),
            Self::ShapeMismatch {
                tensor,
                expected,
                got,
            } => write!(
                f,
                "shape mismatch for tensor {tensor:?}: expected {}x{}, got {}x{}",
                expected.0, expected.1, got.0, got.1
            ),
            Self::UnknownTensor(name) => write!(f, "unknown tensor {name:?}"),
            Self::MissingTensor(name) => write!(f, "missing tensor {name:?}"),
            Self::CrcMismatch { stored, computed } => {
                write!(f, "CRC mismatch: stored {stored:#x}, computed {computed:#x}")
            }
        }
    }
}

impl std::error::Error for CheckpointError {}

impl From<std::io::Error> for CheckpointError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}

fn push_tensor(buf: &mut Vec<u8>, name: &str, m: &Mat<f32>) {
    buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
    buf.extend_from_slice(name.as_bytes());
    buf.extend_from_slice(&2u32.to_le_bytes());
    buf.extend_from_slice(&(m.rows as u32).to_le_bytes());
    buf.extend_from_slice(&(m.cols as u32).to_le_bytes());
    for v in &m.data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn save_checkpoint(
    state: &ModelState<f32>,
    optimizer: Option<&Optimizer<f32>>,
    step: usize,
    path: impl AsRef<Path>,
) -> Result<(), CheckpointError> {
    let meta = Meta {
        model: state.config.clone(),
        step,
        optim: optimizer.map(|o| o.cfg),
    };
    let header = serde_json::to_vec(&meta).expect("config serializes");

    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(header.len() as u32).to_le_bytes());
    buf.extend_from_slice(&header);

    let names = state.params.tensor_names();
    for (name, m) in names.iter().zip(state.params.tensors()) {
        push_tensor(&mut buf, name, m);
    }
    if let Some(opt) = optimizer {
        for (name, m) in names.iter().zip(opt.m.tensors()) {
            push_tensor(&mut buf, &format!("opt.m.{name}"), m);
        }
        for (name, m) in names.iter().zip(opt.v.tensors()) {
            push_tensor(&mut buf, &format!("opt.v.{name}"), m);
        }
    }

    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());

    let mut file = std::fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return None;
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Some(s)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4)
            .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

}

/// Loaded checkpoint: model state, optional optimizer, and the step count.
#[derive(Debug)]
pub struct Checkpoint {
    pub state: ModelState<f32>,
    pub optimizer: Option<Optimizer<f32>>,
    pub step: usize,
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, CheckpointError> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < 8 {
        return Err(CheckpointError::Truncated {
            tensor: "<header>".into(),
        });
    }
    let mut r = Reader {
        buf: &bytes,
        pos: 0,
    };
    let magic: [u8; 4] = r.take(4).unwrap().try_into().unwrap();
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic(magic));
    }
    let header_len = r.u32().unwrap() as usize;
    let header = r.take(header_len).ok_or(CheckpointError::Truncated {
        tensor: "<header>".into(),
    })?;
    let meta: Meta = serde_json::from_slice(header)
        .map_err(|e| CheckpointError::BadHeader(e.to_string()))?;
    meta.model
        .validate()
        .map_err(|e| CheckpointError::BadHeader(e.to_string()))?;

    // skeleton state; every tensor must be overwritten below
    let mut state = ModelState::<f32>::new(meta.model.clone(), 0);
    let mut optimizer = meta
        .optim
        .map(|cfg| {
            let mut o = Optimizer::new(cfg, &state);
            o.step = meta.step;
            o
        });

    let names = state.params.tensor_names();
    let mut filled: std::collections::HashSet<String> = std::collections::HashSet::new();

    if bytes.len() < 4 {
        return Err(CheckpointError::Truncated {
            tensor: "<crc>".into(),
        });
    }
    let body_end = bytes.len() - 4;
    while r.pos < body_end {
        let fail = |name: &str| CheckpointError::Truncated {
            tensor: name.to_string(),
        };
        let name_len = r.u32().ok_or_else(|| fail("<name>"))? as usize;
        let name_bytes = r.take(name_len).ok_or_else(|| fail("<name>"))?;
        let name = String::from_utf8_lossy(name_bytes).into_owned();
        let rank = r.u32().ok_or_else(|| fail(&name))? as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(r.u32().ok_or_else(|| fail(&name))? as usize);
        }
        let count: usize = dims.iter().product();
        if r.pos + count * 4 > body_end {
            return Err(CheckpointError::Truncated { tensor: name });
        }
        let raw = r.take(count * 4).ok_or_else(|| fail(&name))?;
        let (rows, cols) = match dims.len() {
            2 => (dims[0], dims[1]),
            1 => (1, dims[0]),
            _ => {
                return Err(CheckpointError::BadHeader(format!(
                    "tensor {name:?} has unsupported rank {rank}"
                )))
            }
        };

        let dest: &mut Mat<f32> = {
            let (params, key) = if let Some(rest) = name.strip_prefix("opt.m.") {
                match optimizer.as_mut() {
                    Some(o) => (&mut o.m, rest.to_string()),
                    None => return Err(CheckpointError::UnknownTensor(name)),
                }
            } else if let Some(rest) = name.strip_prefix("opt.v.") {
                match optimizer.as_mut() {
                    Some(o) => (&mut o.v, rest.to_string()),
                    None => return Err(CheckpointError::UnknownTensor(name)),
                }
            } else {
                (&mut state.params, name.clone())
            };
            let idx = names
                .iter()
                .position(|n| *n == key)
                .ok_or_else(|| CheckpointError::UnknownTensor(name.clone()))?;
            let mut list = params.tensors_mut();
            let m = list.swap_remove(idx);
            if (m.rows, m.cols) != (rows, cols) {
                return Err(CheckpointError::ShapeMismatch {
                    tensor: name.clone(),
                    expected: (m.rows, m.cols),
                    got: (rows, cols),
                });
            }
            m
        };
        for (i, chunk) in raw.chunks_exact(4).enumerate() {
            dest.data[i] = f32::from_le_bytes(chunk.try_into().unwrap());
        }
        filled.insert(name);
    }

    let stored = u32::from_le_bytes(bytes[body_end..].try_into().unwrap());
    let computed = crc32fast::hash(&bytes[..body_end]);
    if stored != computed {
        return Err(CheckpointError::CrcMismatch { stored, computed });
    }

    for name in &names {
        if !filled.contains(name) {
            return Err(CheckpointError::MissingTensor(name.clone()));
        }
        if optimizer.is_some() {
            for prefix in ["opt.m.", "opt.v."] {
                let full = format!("{prefix}{name}");
                if !filled.contains(&full) {
                    return Err(CheckpointError::MissingTensor(full));
                }
            }
        }
    }

    Ok(Checkpoint {
        state,
        optimizer,
        step: meta.step,
    })
}
