//! Baseband AWGN channel: scaled coefficients are packed into WHT blocks
//! and every real symbol gets independent Gaussian noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::transform::wht_in_place;

/// `σ²_n = P_sym · 10^(-snr_db / 10)`. An infinite SNR gives a noiseless channel.
pub fn noise_variance_for_snr(mean_symbol_power: f64, snr_db: f64) -> Result<f64> {
    if !(mean_symbol_power > 0.0) {
        return Err(Error::contract(format!(
            "mean symbol power must be positive, got {mean_symbol_power}"
        )));
    }
    if snr_db == f64::INFINITY {
        return Ok(0.0);
    }
    if snr_db.is_nan() {
        return Err(Error::contract("SNR is NaN"));
    }
    Ok(mean_symbol_power * 10f64.powf(-snr_db / 10.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    pub snr_db: f64,
    pub noise_var: f64,
    pub seed: u64,
}

impl ChannelModel {
    pub fn for_snr(snr_db: f64, mean_symbol_power: f64, seed: u64) -> Result<Self> {
        Ok(ChannelModel {
            snr_db,
            noise_var: noise_variance_for_snr(mean_symbol_power, snr_db)?,
            seed,
        })
    }

    pub fn with_noise_var(noise_var: f64, seed: u64) -> Result<Self> {
        if !(noise_var >= 0.0) || !noise_var.is_finite() {
            return Err(Error::contract(format!(
                "noise variance must be >= 0, got {noise_var}"
            )));
        }
        let snr_db = if noise_var == 0.0 {
            f64::INFINITY
        } else {
            -10.0 * noise_var.log10()
        };
        Ok(ChannelModel {
            snr_db,
            noise_var,
            seed,
        })
    }
}

/// How a flat symbol stream maps back to chunks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamLayout {
    pub chunk_lengths: Vec<usize>,
    pub block_size: usize,
    pub padding: usize,
}

impl StreamLayout {
    pub fn payload_len(&self) -> usize {
        self.chunk_lengths.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolStream {
    pub symbols: Vec<f64>,
    pub layout: StreamLayout,
}

impl SymbolStream {
    pub fn energy(&self) -> f64 {
        self.symbols.iter().map(|s| s * s).sum()
    }

    /// Energy per payload symbol; padding symbols are not counted.
    pub fn mean_symbol_power(&self) -> f64 {
        let n = self.layout.payload_len();
        if n == 0 {
            0.0
        } else {
            self.energy() / n as f64
        }
    }
}

/// Concatenates chunks, zero-pads to a whole number of blocks and applies
/// the WHT block by block.
pub fn serialize_symbols(chunks: &[Vec<f64>], block_size: usize) -> Result<SymbolStream> {
    if !block_size.is_power_of_two() {
        return Err(Error::contract(format!(
            "WHT block size {block_size} is not a power of two"
        )));
    }
    let mut symbols: Vec<f64> = chunks.iter().flatten().copied().collect();
    let payload = symbols.len();
    let padded = payload.div_ceil(block_size) * block_size;
    symbols.resize(padded, 0.0);
    for block in symbols.chunks_exact_mut(block_size) {
        wht_in_place(block)?;
    }
    Ok(SymbolStream {
        symbols,
        layout: StreamLayout {
            chunk_lengths: chunks.iter().map(Vec::len).collect(),
            block_size,
            padding: padded - payload,
        },
    })
}

/// Inverse WHT, padding removal and split back into chunks.
pub fn deserialize_symbols(stream: &SymbolStream) -> Result<Vec<Vec<f64>>> {
    let layout = &stream.layout;
    if stream.symbols.len() != layout.payload_len() + layout.padding
        || !stream
            .symbols
            .len()
            .is_multiple_of(layout.block_size.max(1))
    {
        return Err(Error::Integrity(format!(
            "stream of {} symbols does not match its layout",
            stream.symbols.len()
        )));
    }
    let mut symbols = stream.symbols.clone();
    for block in symbols.chunks_exact_mut(layout.block_size) {
        wht_in_place(block)?;
    }
    let mut out = Vec::with_capacity(layout.chunk_lengths.len());
    let mut offset = 0;
    for &len in &layout.chunk_lengths {
        out.push(symbols[offset..offset + len].to_vec());
        offset += len;
    }
    Ok(out)
}

/// Adds `N(0, σ²_n)` to every symbol, padding included. Deterministic in the seed.
pub fn transmit(stream: &SymbolStream, model: &ChannelModel) -> SymbolStream {
    let mut out = stream.clone();
    if model.noise_var == 0.0 {
        return out;
    }
    let sd = model.noise_var.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    for s in &mut out.symbols {
        let z: f64 = StandardNormal.sample(&mut rng);
        *s += sd * z;
    }
    out
}
