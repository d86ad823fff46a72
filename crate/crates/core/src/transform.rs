//! Orthonormal transforms used by the encoder and decoder: the separable
//! 3-D DCT-II over a GoP, the Walsh-Hadamard transform applied to channel
//! blocks, and the odd power law `sign(x)·|x|^p`.

use std::f64::consts::PI;

use ndarray::{Array2, Array3, Axis};

use crate::error::{Error, Result};
use crate::frame_io::GopTensor;

/// DCT coefficients of one GoP, same `(time, height, width)` shape.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffTensor {
    pub data: Array3<f64>,
}

impl CoeffTensor {
    pub fn new(data: Array3<f64>) -> Self {
        CoeffTensor { data }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        self.data.dim()
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

/// Orthonormal DCT-II matrix, `m[[k, n]] = s_k cos(pi (2n + 1) k / 2N)`.
pub fn dct_matrix(n: usize) -> Array2<f64> {
    let nf = n as f64;
    Array2::from_shape_fn((n, n), |(k, i)| {
        let scale = if k == 0 {
            (1.0 / nf).sqrt()
        } else {
            (2.0 / nf).sqrt()
        };
        scale * (PI * (2 * i + 1) as f64 * k as f64 / (2.0 * nf)).cos()
    })
}

fn apply_along(data: &mut Array3<f64>, axis: usize, transpose: bool) {
    let n = data.len_of(Axis(axis));
    if n == 1 {
        return;
    }
    let m = dct_matrix(n);
    let mut scratch = vec![0.0; n];
    for mut lane in data.lanes_mut(Axis(axis)) {
        for (k, out) in scratch.iter_mut().enumerate() {
            *out = if transpose {
                lane.iter().enumerate().map(|(j, v)| m[[j, k]] * v).sum()
            } else {
                lane.iter().zip(m.row(k)).map(|(v, c)| c * v).sum()
            };
        }
        for (dst, &src) in lane.iter_mut().zip(&scratch) {
            *dst = src;
        }
    }
}

/// Separable orthonormal 3-D DCT-II: time, then height, then width.
pub fn dct3_forward(gop: &GopTensor) -> CoeffTensor {
    let mut data = gop.data.clone();
    for axis in 0..3 {
        apply_along(&mut data, axis, false);
    }
    CoeffTensor { data }
}

/// Inverse of [`dct3_forward`]; keeps the GoP origin supplied by the caller.
pub fn dct3_inverse(coeffs: &CoeffTensor, origin_index: usize) -> Result<GopTensor> {
    let mut data = coeffs.data.clone();
    for axis in (0..3).rev() {
        apply_along(&mut data, axis, true);
    }
    GopTensor::new(data, origin_index)
}

/// In-place orthonormal Walsh-Hadamard transform. Self-inverse.
pub fn wht_in_place(x: &mut [f64]) -> Result<()> {
    let n = x.len();
    if !n.is_power_of_two() {
        return Err(Error::contract(format!(
            "WHT length {n} is not a power of two"
        )));
    }
    let mut h = 1;
    while h < n {
        for block in x.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (u, v) = (*a, *b);
                *a = u + v;
                *b = u - v;
            }
        }
        h *= 2;
    }
    let scale = 1.0 / (n as f64).sqrt();
    x.iter_mut().for_each(|v| *v *= scale);
    Ok(())
}

pub fn wht_block(x: &[f64]) -> Result<Vec<f64>> {
    let mut out = x.to_vec();
    wht_in_place(&mut out)?;
    Ok(out)
}

/// `sign(x)·|x|^p` with `p > 0`.
pub fn signed_power(x: f64, p: f64) -> Result<f64> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::contract(format!(
            "power exponent must be positive, got {p}"
        )));
    }
    Ok(spow(x, p))
}

#[inline]
pub(crate) fn spow(x: f64, p: f64) -> f64 {
    if p == 1.0 {
        x
    } else if x < 0.0 {
        -(-x).powf(p)
    } else {
        x.powf(p)
    }
}

/// `b^a` for a non-negative base, exact at `a = 1`.
#[inline]
pub(crate) fn pow_exact_one(b: f64, a: f64) -> f64 {
    if a == 1.0 {
        b
    } else {
        b.powf(a)
    }
}
