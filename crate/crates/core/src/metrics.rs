//! Full-reference quality metrics on 8-bit-range luma frames.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::frame_io::Frame;

pub const PEAK: f64 = 255.0;
/// Reported PSNR for identical frames.
pub const PSNR_CAP_DB: f64 = 99.0;

const WINDOW: usize = 11;
const WINDOW_SIGMA: f64 = 1.5;
const C1: f64 = (0.01 * PEAK) * (0.01 * PEAK);
const C2: f64 = (0.03 * PEAK) * (0.03 * PEAK);

fn same_dims(reference: &Frame, test: &Frame) -> Result<()> {
    if reference.dim() != test.dim() {
        return Err(Error::contract(format!(
            "frame dimensions differ: {:?} vs {:?}",
            reference.dim(),
            test.dim()
        )));
    }
    Ok(())
}

pub fn mse(reference: &Frame, test: &Frame) -> Result<f64> {
    same_dims(reference, test)?;
    let n = reference.len() as f64;
    Ok(reference
        .iter()
        .zip(test)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n)
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        PSNR_CAP_DB
    } else {
        (10.0 * (PEAK * PEAK / mse).log10()).min(PSNR_CAP_DB)
    }
}

pub fn psnr(reference: &Frame, test: &Frame) -> Result<f64> {
    Ok(psnr_from_mse(mse(reference, test)?))
}

fn gaussian_kernel() -> [f64; WINDOW] {
    let mut k = [0.0; WINDOW];
    let c = (WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * WINDOW_SIGMA * WINDOW_SIGMA)).exp();
    }
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable "valid" filtering with the Gaussian window.
fn filter_valid(img: &Array2<f64>, k: &[f64; WINDOW]) -> Array2<f64> {
    let (h, w) = img.dim();
    let (oh, ow) = (h - WINDOW + 1, w - WINDOW + 1);
    let rows: Array2<f64> = Array2::from_shape_fn((h, ow), |(y, x)| {
        (0..WINDOW).map(|i| k[i] * img[[y, x + i]]).sum::<f64>()
    });
    Array2::from_shape_fn((oh, ow), |(y, x)| {
        (0..WINDOW).map(|i| k[i] * rows[[y + i, x]]).sum::<f64>()
    })
}

/// SSIM map over all valid 11x11 window positions.
pub fn ssim_map(reference: &Frame, test: &Frame) -> Result<Array2<f64>> {
    same_dims(reference, test)?;
    let (h, w) = reference.dim();
    if h < WINDOW || w < WINDOW {
        return Err(Error::contract(format!(
            "frames of {w}x{h} are smaller than the {WINDOW}x{WINDOW} SSIM window"
        )));
    }
    let k = gaussian_kernel();
    let mu_x = filter_valid(reference, &k);
    let mu_y = filter_valid(test, &k);
    let xx = filter_valid(&(reference * reference), &k);
    let yy = filter_valid(&(test * test), &k);
    let xy = filter_valid(&(reference * test), &k);

    let mut map = Array2::zeros(mu_x.dim());
    ndarray::Zip::from(&mut map)
        .and(&mu_x)
        .and(&mu_y)
        .and(&xx)
        .and(&yy)
        .and(&xy)
        .for_each(|out, &mx, &my, &exx, &eyy, &exy| {
            let vx = exx - mx * mx;
            let vy = eyy - my * my;
            let cov = exy - mx * my;
            *out = ((2.0 * mx * my + C1) * (2.0 * cov + C2))
                / ((mx * mx + my * my + C1) * (vx + vy + C2));
        });
    Ok(map)
}

/// Mean SSIM over the frame.
pub fn mssim(reference: &Frame, test: &Frame) -> Result<f64> {
    let map = ssim_map(reference, test)?;
    Ok(map.iter().sum::<f64>() / map.len() as f64)
}

/// Per-frame and sequence-level scores of one reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub psnr: Vec<f64>,
    pub mssim: Vec<f64>,
    pub mean_psnr: f64,
    pub mean_mssim: f64,
    /// Predicted per-pixel MSE from the allocation and LLSE model.
    pub predicted_mse: f64,
    /// Per-pixel MSE of the unclamped reconstruction.
    pub measured_mse: f64,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

impl QualityReport {
    /// Scores `test` against `reference` frame by frame. Test frames are
    /// clamped to `[0, 255]` before scoring, as they would be on output.
    pub fn score(
        reference: &[Frame],
        test: &[Frame],
        predicted_mse: f64,
        measured_mse: f64,
    ) -> Result<Self> {
        if reference.len() != test.len() {
            return Err(Error::contract(format!(
                "{} reference frames vs {} test frames",
                reference.len(),
                test.len()
            )));
        }
        let mut psnrs = Vec::with_capacity(reference.len());
        let mut mssims = Vec::with_capacity(reference.len());
        for (r, t) in reference.iter().zip(test) {
            let clamped = t.mapv(|v| v.clamp(0.0, PEAK));
            psnrs.push(psnr(r, &clamped)?);
            mssims.push(mssim(r, &clamped)?);
        }
        Ok(QualityReport {
            mean_psnr: mean(&psnrs),
            mean_mssim: mean(&mssims),
            psnr: psnrs,
            mssim: mssims,
            predicted_mse,
            measured_mse,
        })
    }
}
