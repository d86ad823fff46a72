//! End-to-end transmission of a frame sequence: GoP assembly, 3-D DCT,
//! chunking, allocation, power-law mapping, WHT, AWGN, LLSE decoding and
//! inverse DCT.
//!
//! The total power of a GoP is set to the number of chunks that carry
//! signal, so with equal-sized chunks the mean transmitted symbol power is
//! exactly one and `σ²_n = 10^(-SNR/10)`.

use crate::allocator::{
    allocate, predicted_distortion, zero_fill_distortion, AllocationPlan, Scheme,
};
use crate::channel::{
    deserialize_symbols, serialize_symbols, transmit, ChannelModel, SymbolStream,
};
use crate::chunks::{
    build_side_info, compute_stats, partition_chunks, select_chunks, ChunkStats, Grid, SideInfo,
};
use crate::decoder::{decode_chunks, decode_softcast, llse_factors};
use crate::error::{Error, Result, Stage, StageExt};
use crate::frame_io::{assemble_gops, Frame, FrameSequence, GopTensor};
use crate::metrics::QualityReport;
use crate::transform::{dct3_forward, dct3_inverse, spow, CoeffTensor};

/// Chunk grid; `t = None` means one chunk layer per frame of the GoP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub t: Option<usize>,
    pub h: usize,
    pub w: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            t: None,
            h: 8,
            w: 8,
        }
    }
}

impl GridSpec {
    pub fn resolve(&self, gop_size: usize) -> Grid {
        Grid::new(self.t.unwrap_or(gop_size), self.h, self.w)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineParams {
    pub gop_size: usize,
    pub grid: GridSpec,
    pub keep_fraction: f64,
    pub wht_block: usize,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            gop_size: 4,
            grid: GridSpec::default(),
            keep_fraction: 1.0,
            wht_block: 64,
        }
    }
}

/// Everything the sender produces for one GoP.
#[derive(Debug, Clone)]
pub struct EncodedGop {
    pub side: SideInfo,
    pub stream: SymbolStream,
    pub plan: AllocationPlan,
    /// Stats of every chunk, kept or not; used only for reporting.
    pub all_stats: Vec<ChunkStats>,
    pub origin_index: usize,
}

impl EncodedGop {
    pub fn kept_stats(&self) -> Vec<ChunkStats> {
        self.side.kept().map(|(_, s)| *s).collect()
    }

    pub fn power_check(&self) -> f64 {
        self.plan.power_check(&self.kept_stats())
    }

    /// Predicted squared error summed over the GoP's coefficients.
    pub fn predicted_error(&self, noise_var: f64) -> Result<f64> {
        let kept = self.kept_stats();
        let chunk_len = self.side.chunk_len() as f64;
        let d = predicted_distortion(&kept, &self.plan, noise_var)?;
        let dropped: f64 = self
            .all_stats
            .iter()
            .zip(&self.side.bitmap)
            .filter(|(_, &k)| !k)
            .map(|(s, _)| zero_fill_distortion(s))
            .sum();
        Ok((d.total + dropped) * chunk_len)
    }
}

fn power_budget(kept: &[ChunkStats], scheme: Scheme) -> f64 {
    let active = kept
        .iter()
        .filter(|s| match scheme {
            Scheme::SoftCast => s.var0 > 0.0,
            Scheme::PowerLaw { .. } => s.var1 > 0.0,
        })
        .count();
    // an all-silent GoP sends nothing; any positive budget will do
    active.max(1) as f64
}

pub fn encode_gop(gop: &GopTensor, params: &PipelineParams, scheme: Scheme) -> Result<EncodedGop> {
    let a = scheme.exponent();
    let coeffs = dct3_forward(gop);
    let grid = params.grid.resolve(gop.gop_size());
    let set = partition_chunks(&coeffs, grid).stage(Stage::Chunking)?;
    let all_stats = set
        .chunks
        .iter()
        .map(|c| compute_stats(c, a))
        .collect::<Result<Vec<_>>>()
        .stage(Stage::Chunking)?;
    let bitmap = select_chunks(&all_stats, params.keep_fraction).stage(Stage::Chunking)?;
    let kept: Vec<ChunkStats> = all_stats
        .iter()
        .zip(&bitmap)
        .filter(|(_, &k)| k)
        .map(|(s, _)| *s)
        .collect();
    let power = power_budget(&kept, scheme);
    let side = build_side_info(&all_stats, &bitmap, grid, coeffs.shape(), a, power)
        .stage(Stage::Chunking)?;
    let plan = allocate(scheme, &kept, power).stage(Stage::Allocation)?;

    let scaled: Vec<Vec<f64>> = set
        .chunks
        .iter()
        .zip(&bitmap)
        .filter(|(_, &k)| k)
        .zip(kept.iter().zip(&plan.b))
        .map(|((chunk, _), (s, &b))| {
            if b == 0.0 {
                return Vec::new();
            }
            match scheme {
                Scheme::SoftCast => chunk.values.iter().map(|x| b * (x - s.mean)).collect(),
                Scheme::PowerLaw { a } => chunk
                    .values
                    .iter()
                    .map(|x| b * spow(x - s.mean, 1.0 / a))
                    .collect(),
            }
        })
        .collect();
    let stream = serialize_symbols(&scaled, params.wht_block).stage(Stage::Channel)?;
    Ok(EncodedGop {
        side,
        stream,
        plan,
        all_stats,
        origin_index: gop.origin_index,
    })
}

/// Receiver side: rebuilds the allocation from side information alone and
/// applies the matching decoder.
pub fn decode_gop(
    received: &SymbolStream,
    side: &SideInfo,
    noise_var: f64,
    scheme: Scheme,
) -> Result<CoeffTensor> {
    let kept: Vec<ChunkStats> = side.kept().map(|(_, s)| *s).collect();
    let plan = allocate(scheme, &kept, side.power).stage(Stage::Decode)?;
    let chunks = deserialize_symbols(received).stage(Stage::Decode)?;
    let coeffs = match scheme {
        Scheme::SoftCast => decode_softcast(&chunks, &kept, &plan.b, noise_var, side),
        Scheme::PowerLaw { .. } => {
            let factors = llse_factors(&kept, &plan, noise_var)?;
            decode_chunks(&chunks, &factors, side)
        }
    };
    coeffs.stage(Stage::Decode)
}

/// Channel seed for the `index`-th GoP of a run.
pub fn gop_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Result of one pipeline run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: QualityReport,
    /// Unclamped reconstructed frames.
    pub reconstructed: Vec<Frame>,
    pub decoded: Vec<CoeffTensor>,
    pub encoded: Vec<EncodedGop>,
    pub noise_var: f64,
    pub kept_chunks: usize,
    pub total_chunks: usize,
    /// Spent/budgeted power of the GoP furthest from 1.
    pub power_check: f64,
}

/// Sends every full GoP of `frames` through the channel at `snr_db`.
pub fn transmit_sequence(
    frames: &FrameSequence,
    params: &PipelineParams,
    scheme: Scheme,
    snr_db: f64,
    seed: u64,
) -> Result<RunOutcome> {
    let gops = assemble_gops(frames, params.gop_size).stage(Stage::Load)?;
    if gops.is_empty() {
        return Err(Error::Stage {
            stage: Stage::Load,
            source: Box::new(Error::contract(format!(
                "{} frames do not fill a GoP of {}",
                frames.len(),
                params.gop_size
            ))),
        });
    }
    let encoded = gops
        .iter()
        .map(|g| encode_gop(g, params, scheme))
        .collect::<Result<Vec<_>>>()?;

    let payload: usize = encoded.iter().map(|e| e.stream.layout.payload_len()).sum();
    let energy: f64 = encoded.iter().map(|e| e.stream.energy()).sum();
    let mean_power = if payload > 0 {
        energy / payload as f64
    } else {
        1.0
    };
    let noise_var = ChannelModel::for_snr(snr_db, mean_power, seed)
        .stage(Stage::Channel)?
        .noise_var;

    let mut decoded = Vec::with_capacity(encoded.len());
    let mut reconstructed = Vec::with_capacity(frames.len());
    let mut originals = Vec::with_capacity(frames.len());
    let mut sq_err = 0.0;
    let mut predicted = 0.0;
    for (i, (gop, enc)) in gops.iter().zip(&encoded).enumerate() {
        let model =
            ChannelModel::with_noise_var(noise_var, gop_seed(seed, i)).stage(Stage::Channel)?;
        let received = transmit(&enc.stream, &model);
        let coeffs = decode_gop(&received, &enc.side, noise_var, scheme)?;
        let recon = dct3_inverse(&coeffs, gop.origin_index).stage(Stage::Transform)?;
        sq_err += recon
            .data
            .iter()
            .zip(gop.data.iter())
            .map(|(r, o)| (r - o) * (r - o))
            .sum::<f64>();
        predicted += enc.predicted_error(noise_var).stage(Stage::Metrics)?;
        reconstructed.extend(recon.frames());
        originals.extend(gop.frames());
        decoded.push(coeffs);
    }
    let pixels = (originals.len() * frames.width() * frames.height()) as f64;
    let report = QualityReport::score(
        &originals,
        &reconstructed,
        predicted / pixels,
        sq_err / pixels,
    )
    .stage(Stage::Metrics)?;

    let power_check = encoded
        .iter()
        .map(EncodedGop::power_check)
        .fold(1.0f64, |worst, c| {
            if (c - 1.0).abs() > (worst - 1.0).abs() {
                c
            } else {
                worst
            }
        });
    Ok(RunOutcome {
        report,
        reconstructed,
        decoded,
        kept_chunks: encoded.iter().map(|e| e.side.kept_count()).sum(),
        total_chunks: encoded.iter().map(|e| e.side.chunk_count()).sum(),
        encoded,
        noise_var,
        power_check,
    })
}
