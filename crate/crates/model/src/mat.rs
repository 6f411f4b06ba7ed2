//! Row-major matrix container and the kernels the transformer is built on.
//!
//! Every output element is produced by one unrolled dot product or axpy
//! chain with a fixed accumulation order, so results are bitwise identical
//! whether rows are computed in a batch, one at a time (KV-cached
//! sampling), or on different rayon thread counts.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

/// Element type of the network: f32 for training, f64 for gradient checks.
pub trait Elem:
    Copy
    + Debug
    + Default
    + PartialOrd
    + Send
    + Sync
    + Sum<Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
    + 'static
{
    const ZERO: Self;
    const ONE: Self;
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    fn from_f32(v: f32) -> Self;
    fn to_f32(self) -> f32;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn tanh(self) -> Self;
    fn max_val(self, other: Self) -> Self;
    fn is_finite_val(self) -> bool;
}

macro_rules! impl_elem {
    ($t:ty) => {
        impl Elem for $t {
            const ZERO: Self = 0.0;
            const ONE: Self = 1.0;
            fn from_f64(v: f64) -> Self {
                v as $t
            }
            fn to_f64(self) -> f64 {
                self as f64
            }
            fn from_f32(v: f32) -> Self {
                v as $t
            }
            fn to_f32(self) -> f32 {
                self as f32
            }
            fn exp(self) -> Self {
                self.exp()
            }
            fn ln(self) -> Self {
                self.ln()
            }
            fn sqrt(self) -> Self {
                self.sqrt()
            }
            fn tanh(self) -> Self {
                self.tanh()
            }
            fn max_val(self, other: Self) -> Self {
                self.max(other)
            }
            fn is_finite_val(self) -> bool {
                self.is_finite()
            }
        }
    };
}

impl_elem!(f32);
impl_elem!(f64);

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<F> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<F>,
}

impl<F: Elem> Mat<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![F::ZERO; rows * cols],
        }
    }

    /// Gaussian init with the given standard deviation. Draws are made in
    /// f64 regardless of `F`, so f32 and f64 nets start from the same values.
    pub fn randn(rows: usize, cols: usize, std: f64, rng: &mut ChaCha8Rng) -> Self {
        let data = (0..rows * cols)
            .map(|_| {
                let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                let u2: f64 = rng.gen();
                let g = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
                F::from_f64(g * std)
            })
            .collect();
        Self { rows, cols, data }
    }

    pub fn row(&self, r: usize) -> &[F] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [F] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn fill_zero(&mut self) {
        self.data.fill(F::ZERO);
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Unrolled dot product with eight independent accumulators; vectorizes
/// without changing results across call sites.
pub fn dot<F: Elem>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [F::ZERO; 8];
    let chunks = a.len() / 8;
    for c in 0..chunks {
        let a8 = &a[c * 8..c * 8 + 8];
        let b8 = &b[c * 8..c * 8 + 8];
        for l in 0..8 {
            acc[l] += a8[l] * b8[l];
        }
    }
    let mut s = F::ZERO;
    for l in 0..8 {
        s += acc[l];
    }
    for i in chunks * 8..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// y += alpha * x
pub fn axpy<F: Elem>(alpha: F, x: &[F], y: &mut [F]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

/// One row of a linear layer: out[o] = dot(x, w.row(o)) + b[o].
pub fn linear_row<F: Elem>(x: &[F], w: &Mat<F>, b: &[F], out: &mut [F]) {
    debug_assert_eq!(x.len(), w.cols);
    debug_assert_eq!(out.len(), w.rows);
    for (o, slot) in out.iter_mut().enumerate() {
        *slot = dot(x, w.row(o)) + b[o];
    }
}

/// Forward pass of `y = x W^T + b` over all rows of `x`, parallel over rows.
pub fn linear_fwd<F: Elem>(x: &Mat<F>, w: &Mat<F>, b: &[F]) -> Mat<F> {
    let mut y = Mat::zeros(x.rows, w.rows);
    y.data
        .par_chunks_mut(w.rows)
        .zip(x.data.par_chunks(x.cols))
        .for_each(|(yrow, xrow)| linear_row(xrow, w, b, yrow));
    y
}

/// Backward pass of the linear layer: accumulates into `dw`/`db` and
/// returns dx.
pub fn linear_bwd<F: Elem>(
    x: &Mat<F>,
    w: &Mat<F>,
    dy: &Mat<F>,
    dw: &mut Mat<F>,
    db: &mut [F],
) -> Mat<F> {
    debug_assert_eq!(dy.rows, x.rows);
    debug_assert_eq!(dy.cols, w.rows);
    // dw[o] += sum_t dy[t,o] * x[t]; parallel over output rows
    dw.data
        .par_chunks_mut(w.cols)
        .enumerate()
        .for_each(|(o, dwrow)| {
            for t in 0..x.rows {
                axpy(dy.row(t)[o], x.row(t), dwrow);
            }
        });
    for t in 0..x.rows {
        for (o, g) in dy.row(t).iter().enumerate() {
            db[o] += *g;
        }
    }
    // dx[t] = sum_o dy[t,o] * w[o]; parallel over rows
    let mut dx = Mat::zeros(x.rows, x.cols);
    dx.data
        .par_chunks_mut(x.cols)
        .zip(dy.data.par_chunks(dy.cols))
        .for_each(|(dxrow, dyrow)| {
            for (o, g) in dyrow.iter().enumerate() {
                axpy(*g, w.row(o), dxrow);
            }
        });
    dx
}
