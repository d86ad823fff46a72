//! LLSE decoding of received chunks.
//!
//! A kept chunk is decoded as `x̂ = ω_i · sign(y)|y|^a + μ_i` with
//!
//! ```text
//! ω_i = σ²_{i0} / (b_i^a (σ²_{i0} + a² σ²_{i2} σ²_n / b_i²))
//! ```
//!
//! which minimizes the linearized mean-squared error of the power-law
//! channel. At `a = 1` it is the usual Wiener shrinkage of SoftCast.

use crate::allocator::{gain, AllocationPlan};
use crate::chunks::{reassemble, ChunkStats, SideInfo};
use crate::error::{Error, Result};
use crate::transform::{spow, CoeffTensor};

#[derive(Debug, Clone, PartialEq)]
pub struct LlseFactors {
    pub omega: Vec<f64>,
    pub noise_var: f64,
    pub a: f64,
}

pub fn llse_factors(
    stats: &[ChunkStats],
    plan: &AllocationPlan,
    noise_var: f64,
) -> Result<LlseFactors> {
    if stats.len() != plan.b.len() {
        return Err(Error::Integrity(format!(
            "{} chunk stats for a plan over {} chunks",
            stats.len(),
            plan.b.len()
        )));
    }
    if !(noise_var >= 0.0) {
        return Err(Error::contract(format!(
            "noise variance must be >= 0, got {noise_var}"
        )));
    }
    let a = plan.a;
    let omega = stats
        .iter()
        .zip(&plan.b)
        .map(|(s, &b)| {
            if b == 0.0 {
                return 0.0;
            }
            let noise_term = a * a * s.var2 * noise_var / (b * b);
            let denom = s.var0 + noise_term;
            if denom == 0.0 {
                // silent chunk on a noiseless channel: plain inverse
                1.0 / gain(b, a)
            } else {
                s.var0 / (gain(b, a) * denom)
            }
        })
        .collect();
    Ok(LlseFactors {
        omega,
        noise_var,
        a,
    })
}

/// Applies the LLSE estimate to each kept chunk and reassembles the tensor.
///
/// `received` holds one vector per kept chunk in ascending index order;
/// a chunk whose factor is zero may be empty and decodes to its mean.
pub fn decode_chunks(
    received: &[Vec<f64>],
    factors: &LlseFactors,
    side: &SideInfo,
) -> Result<CoeffTensor> {
    let kept = side.kept_count();
    if received.len() != kept || factors.omega.len() != kept {
        return Err(Error::Integrity(format!(
            "{} received chunks and {} factors for {kept} kept chunks",
            received.len(),
            factors.omega.len()
        )));
    }
    if factors.a != side.a {
        return Err(Error::Integrity(format!(
            "factors computed for a = {}, side info says a = {}",
            factors.a, side.a
        )));
    }
    let chunk_len = side.chunk_len();
    let a = factors.a;
    let centered = received
        .iter()
        .zip(&factors.omega)
        .map(|(y, &w)| {
            if w == 0.0 {
                vec![0.0; chunk_len]
            } else {
                y.iter().map(|&v| w * spow(v, a)).collect()
            }
        })
        .collect::<Vec<_>>();
    reassemble(&centered, side)
}

/// SoftCast's linear decoder `x̂ = ω_i y + μ_i` with
/// `ω_i = σ²_{i0} / (g_i (σ²_{i0} + σ²_n / g_i²))`.
pub fn decode_softcast(
    received: &[Vec<f64>],
    stats: &[ChunkStats],
    g: &[f64],
    noise_var: f64,
    side: &SideInfo,
) -> Result<CoeffTensor> {
    if received.len() != stats.len() || g.len() != stats.len() || stats.len() != side.kept_count() {
        return Err(Error::Integrity(
            "softcast decoder inputs are misaligned".into(),
        ));
    }
    let chunk_len = side.chunk_len();
    let centered = received
        .iter()
        .zip(stats)
        .zip(g)
        .map(|((y, s), &g)| {
            if g == 0.0 {
                return vec![0.0; chunk_len];
            }
            let denom = s.var0 + noise_var / (g * g);
            let w = if denom == 0.0 {
                1.0 / g
            } else {
                s.var0 / (g * denom)
            };
            y.iter().map(|&v| w * v).collect()
        })
        .collect::<Vec<_>>();
    reassemble(&centered, side)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chunks::{build_side_info, Grid};

    fn st(var0: f64, var2: f64, a: f64) -> ChunkStats {
        ChunkStats {
            mean: 0.0,
            var0,
            var1: var0,
            var2,
            a,
        }
    }

    fn plan(a: f64, b: Vec<f64>) -> AllocationPlan {
        AllocationPlan {
            a,
            power: 1.0,
            unit_distortion: vec![0.0; b.len()],
            b,
            alpha: 0.0,
        }
    }

    #[test]
    fn factor_examples() {
        let f = llse_factors(&[st(4.0, 1.0, 1.0)], &plan(1.0, vec![1.0]), 1.0).unwrap();
        assert!((f.omega[0] - 0.8).abs() < 1e-12);

        let f = llse_factors(&[st(1.0, 1.0, 2.0)], &plan(2.0, vec![2.0]), 1.0).unwrap();
        assert!((f.omega[0] - 0.125).abs() < 1e-12);

        for a in [1.0, 1.3, 2.5] {
            let f = llse_factors(&[st(3.0, 0.7, a)], &plan(a, vec![1.7]), 0.0).unwrap();
            assert_eq!(f.omega[0], 1.0 / gain(1.7, a));
        }

        let f = llse_factors(&[st(3.0, 0.7, 1.2)], &plan(1.2, vec![0.0]), 0.5).unwrap();
        assert_eq!(f.omega[0], 0.0);
    }

    #[test]
    fn huge_noise_decodes_to_mean() {
        let stats = [ChunkStats {
            mean: 4.5,
            ..st(2.0, 1.0, 1.2)
        }];
        let side =
            build_side_info(&stats, &[true], Grid::new(1, 1, 1), (1, 1, 2), 1.2, 1.0).unwrap();
        let f = llse_factors(&stats, &plan(1.2, vec![1.0]), 1e30).unwrap();
        let out = decode_chunks(&[vec![3.0, -2.0]], &f, &side).unwrap();
        for v in out.data.iter() {
            assert!((v - 4.5).abs() < 1e-9);
        }
    }

    #[test]
    fn misalignment_is_integrity_error() {
        let stats = [st(2.0, 1.0, 1.0)];
        let side =
            build_side_info(&stats, &[true], Grid::new(1, 1, 1), (1, 1, 2), 1.0, 1.0).unwrap();
        let f = llse_factors(&stats, &plan(1.0, vec![1.0]), 0.1).unwrap();
        assert!(matches!(
            decode_chunks(&[], &f, &side),
            Err(Error::Integrity(_))
        ));
        let wrong_a = LlseFactors { a: 1.1, ..f };
        assert!(matches!(
            decode_chunks(&[vec![0.0, 0.0]], &wrong_a, &side),
            Err(Error::Integrity(_))
        ));
    }
}
