//! Power allocation across chunks.
//!
//! Under the high-SNR model a kept chunk sent as `b_i · sign(x)|x|^(1/a)`
//! contributes distortion `a² σ²_{i2} σ²_n / b_i²` per coefficient, and the
//! transmit power is `Σ b_i² σ²_{i1}`. Minimizing the first subject to the
//! second being `P` gives
//!
//! ```text
//! b_i = sqrt(P σ_{i2} / Σ_j σ_{j1} σ_{j2}) / sqrt(σ_{i1})
//! ```
//!
//! with multiplier `α = (Σ_j σ_{j1} σ_{j2} / P)²`. At `a = 1` this is the
//! SoftCast scaling `g_i = sqrt(P / Σ_j σ_{j0}) / sqrt(σ_{i0})`.

use crate::chunks::ChunkStats;
use crate::error::{Error, Result};
use crate::transform::pow_exact_one;

/// Which encoder a pipeline run uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// Linear scaling of centered coefficients.
    SoftCast,
    /// Power-law transform `sign(x)|x|^(1/a)` followed by scaling.
    PowerLaw { a: f64 },
}

impl Scheme {
    pub fn exponent(&self) -> f64 {
        match *self {
            Scheme::SoftCast => 1.0,
            Scheme::PowerLaw { a } => a,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::SoftCast => "softcast",
            Scheme::PowerLaw { .. } => "powerlaw",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationPlan {
    pub a: f64,
    pub power: f64,
    /// Scale factor per input chunk; zero for bypassed zero-variance chunks.
    pub b: Vec<f64>,
    pub alpha: f64,
    /// High-SNR distortion per coefficient at unit noise variance,
    /// `a² σ²_{i2} / b_i²`; multiply by `σ²_n`.
    pub unit_distortion: Vec<f64>,
}

impl AllocationPlan {
    /// `Σ b_i² σ²_{i1}` over the chunks the plan was built from.
    pub fn spent_power(&self, stats: &[ChunkStats]) -> f64 {
        self.b.iter().zip(stats).map(|(b, s)| b * b * s.var1).sum()
    }

    /// Ratio of spent to budgeted power; 1 when nothing was sent.
    pub fn power_check(&self, stats: &[ChunkStats]) -> f64 {
        if self.b.iter().all(|&b| b == 0.0) {
            1.0
        } else {
            self.spent_power(stats) / self.power
        }
    }

    /// High-SNR total distortion `Σ a² σ²_{i2} σ²_n / b_i²`.
    pub fn high_snr_distortion(&self, noise_var: f64) -> f64 {
        self.unit_distortion.iter().map(|d| d * noise_var).sum()
    }
}

fn check_inputs(power: f64, a: f64) -> Result<()> {
    if !(power > 0.0) || !power.is_finite() {
        return Err(Error::contract(format!(
            "power budget must be positive, got {power}"
        )));
    }
    if !(a >= 1.0) || !a.is_finite() {
        return Err(Error::contract(format!("exponent a must be >= 1, got {a}")));
    }
    Ok(())
}

fn solve(stds: &[(f64, f64)], power: f64, a: f64) -> AllocationPlan {
    let sum: f64 = stds.iter().map(|(s1, s2)| s1 * s2).sum();
    let b: Vec<f64> = stds
        .iter()
        .map(|&(s1, s2)| (power * s2 / sum).sqrt() / s1.sqrt())
        .collect();
    let unit_distortion = stds
        .iter()
        .zip(&b)
        .map(|(&(_, s2), b)| a * a * s2 * s2 / (b * b))
        .collect();
    let ratio = sum / power;
    AllocationPlan {
        a,
        power,
        b,
        alpha: ratio * ratio,
        unit_distortion,
    }
}

/// Closed-form allocation for the power-law encoder.
///
/// Every chunk must have `var1 > 0`; otherwise returns
/// [`Error::DegenerateChunk`] with the offending position.
pub fn allocate_nonlinear(stats: &[ChunkStats], power: f64, a: f64) -> Result<AllocationPlan> {
    check_inputs(power, a)?;
    if stats.is_empty() {
        return Err(Error::contract("no chunks to allocate"));
    }
    let mut stds = Vec::with_capacity(stats.len());
    for (i, s) in stats.iter().enumerate() {
        if s.a != a {
            return Err(Error::contract(format!(
                "chunk {i} statistics computed for a = {}, allocating for a = {a}",
                s.a
            )));
        }
        if !(s.var1 > 0.0) {
            return Err(Error::DegenerateChunk { index: i });
        }
        stds.push((s.std1(), s.std2()));
    }
    Ok(solve(&stds, power, a))
}

/// SoftCast scaling `g_i`, using only `var0`.
pub fn allocate_softcast(stats: &[ChunkStats], power: f64) -> Result<AllocationPlan> {
    check_inputs(power, 1.0)?;
    if stats.is_empty() {
        return Err(Error::contract("no chunks to allocate"));
    }
    let mut stds = Vec::with_capacity(stats.len());
    for (i, s) in stats.iter().enumerate() {
        if !(s.var0 > 0.0) {
            return Err(Error::DegenerateChunk { index: i });
        }
        stds.push((s.std0(), 1.0));
    }
    Ok(solve(&stds, power, 1.0))
}

/// Allocates over the chunks that carry signal and gives zero-variance
/// chunks `b_i = 0`; those are reconstructed from their mean alone.
pub fn allocate(scheme: Scheme, stats: &[ChunkStats], power: f64) -> Result<AllocationPlan> {
    let a = scheme.exponent();
    let active: Vec<usize> = (0..stats.len())
        .filter(|&i| match scheme {
            Scheme::SoftCast => stats[i].var0 > 0.0,
            Scheme::PowerLaw { .. } => stats[i].var1 > 0.0,
        })
        .collect();
    if active.is_empty() {
        check_inputs(power, a)?;
        return Ok(AllocationPlan {
            a,
            power,
            b: vec![0.0; stats.len()],
            alpha: 0.0,
            unit_distortion: vec![0.0; stats.len()],
        });
    }
    let subset: Vec<ChunkStats> = active.iter().map(|&i| stats[i]).collect();
    let inner = match scheme {
        Scheme::SoftCast => allocate_softcast(&subset, power)?,
        Scheme::PowerLaw { a } => allocate_nonlinear(&subset, power, a)?,
    };
    let mut b = vec![0.0; stats.len()];
    let mut unit_distortion = vec![0.0; stats.len()];
    for (k, &i) in active.iter().enumerate() {
        b[i] = inner.b[k];
        unit_distortion[i] = inner.unit_distortion[k];
    }
    Ok(AllocationPlan {
        b,
        unit_distortion,
        ..inner
    })
}

/// Expected per-coefficient distortion of each chunk after LLSE decoding,
/// plus their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct Distortion {
    pub total: f64,
    pub per_chunk: Vec<f64>,
}

/// Distortion after LLSE decoding,
/// `a² σ²_{i2} σ²_{i0} σ²_n / (b_i² (σ²_{i0} + a² σ²_{i2} σ²_n / b_i²))`.
///
/// A chunk with `b_i = 0` is decoded as its mean and loses all of `σ²_{i0}`.
pub fn predicted_distortion(
    stats: &[ChunkStats],
    plan: &AllocationPlan,
    noise_var: f64,
) -> Result<Distortion> {
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
    let per_chunk: Vec<f64> = stats
        .iter()
        .zip(&plan.b)
        .map(|(s, &b)| {
            if b == 0.0 {
                return s.var0;
            }
            if noise_var == 0.0 || s.var0 == 0.0 {
                return 0.0;
            }
            let noise_term = a * a * s.var2 * noise_var;
            noise_term * s.var0 / (b * b * (s.var0 + noise_term / (b * b)))
        })
        .collect();
    Ok(Distortion {
        total: per_chunk.iter().sum(),
        per_chunk,
    })
}

/// Per-coefficient squared error of a chunk reconstructed as all zeros.
pub fn zero_fill_distortion(stats: &ChunkStats) -> f64 {
    stats.var0 + stats.mean * stats.mean
}

/// The `b_i^a` factor that maps a decoded power-law value back to scale.
pub fn gain(b: f64, a: f64) -> f64 {
    pow_exact_one(b, a)
}
