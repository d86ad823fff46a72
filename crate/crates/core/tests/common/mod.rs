#![allow(dead_code)]

use nlcast::channel::{deserialize_symbols, ChannelModel};
use nlcast::chunks::{build_side_info, stats_of};
use nlcast::{
    allocate, decode_chunks, llse_factors, predicted_distortion, serialize_symbols, transmit,
    ChunkStats, Grid, Scheme,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn gaussian_chunks(seed: u64, sds: &[f64], len: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sds.iter()
        .map(|&sd| {
            let d = Normal::new(0.0, sd).unwrap();
            (0..len).map(|_| d.sample(&mut rng)).collect()
        })
        .collect()
}

pub struct ChunkRun {
    pub stats: Vec<ChunkStats>,
    pub decoded: Vec<Vec<f64>>,
    /// Model distortion per coefficient, per chunk.
    pub predicted: Vec<f64>,
    pub measured: Vec<f64>,
    pub noise_var: f64,
}

/// Sends raw chunks (no DCT) through allocation, WHT, AWGN and the LLSE
/// decoder with unit mean symbol power.
pub fn run_chunks(chunks: &[Vec<f64>], a: f64, snr_db: f64, seed: u64) -> ChunkRun {
    let len = chunks[0].len();
    let m = chunks.len();
    let stats: Vec<ChunkStats> = chunks.iter().map(|c| stats_of(c, a).unwrap()).collect();
    let power = m as f64;
    let plan = allocate(Scheme::PowerLaw { a }, &stats, power).unwrap();
    let scaled: Vec<Vec<f64>> = chunks
        .iter()
        .zip(&stats)
        .zip(&plan.b)
        .map(|((c, s), b)| {
            c.iter()
                .map(|x| b * nlcast::signed_power(x - s.mean, 1.0 / a).unwrap())
                .collect()
        })
        .collect();
    let stream = serialize_symbols(&scaled, 64).unwrap();
    let noise_var = 10f64.powf(-snr_db / 10.0);
    let received = transmit(
        &stream,
        &ChannelModel::with_noise_var(noise_var, seed).unwrap(),
    );
    let rx = deserialize_symbols(&received).unwrap();

    let side = build_side_info(
        &stats,
        &vec![true; m],
        Grid::new(m, 1, 1),
        (m, len, 1),
        a,
        power,
    )
    .unwrap();
    let factors = llse_factors(&stats, &plan, noise_var).unwrap();
    let coeffs = decode_chunks(&rx, &factors, &side).unwrap();
    let flat: Vec<f64> = coeffs.data.iter().copied().collect();
    let decoded: Vec<Vec<f64>> = flat.chunks(len).map(<[f64]>::to_vec).collect();
    let measured = decoded
        .iter()
        .zip(chunks)
        .map(|(d, c)| d.iter().zip(c).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / len as f64)
        .collect();
    let predicted = predicted_distortion(&stats, &plan, noise_var)
        .unwrap()
        .per_chunk;
    ChunkRun {
        stats,
        decoded,
        predicted,
        measured,
        noise_var,
    }
}

/// Sample mean squared error of `w · y` against `x`.
pub fn mse_at(x: &[f64], y: &[f64], w: f64) -> f64 {
    x.iter()
        .zip(y)
        .map(|(x, y)| (w * y - x).powi(2))
        .sum::<f64>()
        / x.len() as f64
}
