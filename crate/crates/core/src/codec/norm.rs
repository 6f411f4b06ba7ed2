//! Per-channel normalization statistics and the 256-bin discretization used
//! for positional-embedding inputs.

use crate::pattern::{EdgeGeometry, SewingPattern};
use serde::{Deserialize, Serialize};

/// Standard deviations are floored here so degenerate channels stay usable.
pub const STD_FLOOR: f64 = 1e-6;

/// Number of discretization bins for positional-embedding inputs.
pub const PE_BINS: usize = 256;
/// Discretization domain is [-PE_RANGE, +PE_RANGE] in normalized units.
pub const PE_RANGE: f64 = 4.0;
/// Width of one bin: 8 / 256.
pub const PE_BIN_WIDTH: f64 = 2.0 * PE_RANGE / PE_BINS as f64;

/// Global mean and standard deviation per channel: panel-frame coordinates
/// (x, y pooled separately), translation (x, y, z), and quaternion
/// (w, x, y, z).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub coord_mean: [f64; 2],
    pub coord_std: [f64; 2],
    pub transl_mean: [f64; 3],
    pub transl_std: [f64; 3],
    pub quat_mean: [f64; 4],
    pub quat_std: [f64; 4],
}

impl NormStats {
    /// Identity statistics (mean 0, std 1); handy for tests.
    pub fn identity() -> Self {
        Self {
            coord_mean: [0.0; 2],
            coord_std: [1.0; 2],
            transl_mean: [0.0; 3],
            transl_std: [1.0; 3],
            quat_mean: [0.0; 4],
            quat_std: [1.0; 4],
        }
    }

    pub fn norm_coord(&self, axis: usize, v: f64) -> f64 {
        (v - self.coord_mean[axis]) / self.coord_std[axis]
    }

    pub fn denorm_coord(&self, axis: usize, v: f64) -> f64 {
        v * self.coord_std[axis] + self.coord_mean[axis]
    }

    pub fn norm_transl(&self, axis: usize, v: f64) -> f64 {
        (v - self.transl_mean[axis]) / self.transl_std[axis]
    }

    pub fn denorm_transl(&self, axis: usize, v: f64) -> f64 {
        v * self.transl_std[axis] + self.transl_mean[axis]
    }

    pub fn norm_quat(&self, axis: usize, v: f64) -> f64 {
        (v - self.quat_mean[axis]) / self.quat_std[axis]
    }

    pub fn denorm_quat(&self, axis: usize, v: f64) -> f64 {
        v * self.quat_std[axis] + self.quat_mean[axis]
    }

    /// Std of edge-payload channel `c` (even channels are x, odd are y).
    pub fn edge_channel_std(&self, c: usize) -> f64 {
        self.coord_std[c % 2]
    }

    /// Std of transform-payload channel `c` (0..3 translation, 3..7 quat).
    pub fn transform_channel_std(&self, c: usize) -> f64 {
        if c < 3 {
            self.transl_std[c]
        } else {
            self.quat_std[c - 3]
        }
    }
}

/// Streaming accumulator for one channel group; two passes (mean, then
/// deviation) keep the result independent of accumulation batching.
struct Channels<const N: usize> {
    sum: [f64; N],
    sq: [f64; N],
    count: u64,
}

impl<const N: usize> Channels<N> {
    fn new() -> Self {
        Self {
            sum: [0.0; N],
            sq: [0.0; N],
            count: 0,
        }
    }

    fn mean(&self) -> [f64; N] {
        let mut m = [0.0; N];
        for i in 0..N {
            m[i] = self.sum[i] / self.count as f64;
        }
        m
    }

    fn std(&self) -> [f64; N] {
        let mut s = [0.0; N];
        for i in 0..N {
            s[i] = (self.sq[i] / self.count as f64).sqrt().max(STD_FLOOR);
        }
        s
    }
}

fn for_each_coord(pattern: &SewingPattern, mut f: impl FnMut([f64; 2])) {
    for panel in &pattern.panels {
        for v in &panel.vertices {
            f([v.x, v.y]);
        }
        for e in &panel.edges {
            match e.geometry {
                EdgeGeometry::Line => {}
                EdgeGeometry::Quad { c1 } => f([c1.x, c1.y]),
                EdgeGeometry::Cubic { c1, c2 } => {
                    f([c1.x, c1.y]);
                    f([c2.x, c2.y]);
                }
                EdgeGeometry::Arc { mid } => f([mid.x, mid.y]),
            }
        }
    }
}

/// Fits per-channel mean/std over all vertex and control coordinates,
/// translations, and quaternions in the corpus. Two-pass, deterministic.
pub fn fit_norm_stats<'a, I>(patterns: I) -> Result<NormStats, super::CodecError>
where
    I: IntoIterator<Item = &'a SewingPattern> + Clone,
{
    let mut coords = Channels::<2>::new();
    let mut transl = Channels::<3>::new();
    let mut quat = Channels::<4>::new();

    for pattern in patterns.clone() {
        for_each_coord(pattern, |v| {
            for i in 0..2 {
                coords.sum[i] += v[i];
            }
            coords.count += 1;
        });
        for panel in &pattern.panels {
            for i in 0..3 {
                transl.sum[i] += panel.translation[i];
            }
            transl.count += 1;
            let q = panel.rotation.as_array();
            for i in 0..4 {
                quat.sum[i] += q[i];
            }
            quat.count += 1;
        }
    }
    if coords.count == 0 || transl.count == 0 {
        return Err(super::CodecError::EmptyCorpus);
    }

    let cm = coords.mean();
    let tm = transl.mean();
    let qm = quat.mean();
    for pattern in patterns {
        for_each_coord(pattern, |v| {
            for i in 0..2 {
                coords.sq[i] += (v[i] - cm[i]) * (v[i] - cm[i]);
            }
        });
        for panel in &pattern.panels {
            for i in 0..3 {
                let d = panel.translation[i] - tm[i];
                transl.sq[i] += d * d;
            }
            let q = panel.rotation.as_array();
            for i in 0..4 {
                let d = q[i] - qm[i];
                quat.sq[i] += d * d;
            }
        }
    }

    Ok(NormStats {
        coord_mean: cm,
        coord_std: coords.std(),
        transl_mean: tm,
        transl_std: transl.std(),
        quat_mean: qm,
        quat_std: quat.std(),
    })
}

/// Bin index of a normalized value: 256 half-open bins over [-4, 4), final
/// bin closed; out-of-range values clamp to the boundary bins.
pub fn pe_bin_index(v: f64) -> usize {
    let idx = ((v + PE_RANGE) / PE_BIN_WIDTH).floor() as i64;
    idx.clamp(0, PE_BINS as i64 - 1) as usize
}

/// Center of the bin containing `v`; this is the value actually fed to the
/// positional-embedding projections, in training and inference alike.
pub fn quantize_pe_input(v: f64) -> f64 {
    -PE_RANGE + (pe_bin_index(v) as f64 + 0.5) * PE_BIN_WIDTH
}
