//! Deterministic synthetic test sequences.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::frame_io::{Frame, FrameRate, FrameSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    /// Dark text blocks on a flat light background, changing every 4 frames.
    Slide,
    /// Smooth diagonal gradient drifting one pixel per frame.
    Gradient,
    /// Independent Gaussian noise around mid-grey.
    Gaussian,
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SyntheticKind::Slide => "slide",
            SyntheticKind::Gradient => "gradient",
            SyntheticKind::Gaussian => "gaussian",
        })
    }
}

impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "slide" => Ok(SyntheticKind::Slide),
            "gradient" => Ok(SyntheticKind::Gradient),
            "gaussian" => Ok(SyntheticKind::Gaussian),
            _ => Err(Error::config(
                "input",
                format!("unknown synthetic sequence `{s}`"),
            )),
        }
    }
}

fn slide_page(width: usize, height: usize, rng: &mut ChaCha8Rng) -> Frame {
    let mut page = Array2::from_elem((height, width), 235.0);
    let margin = (width / 16).max(1);
    let bar = (height / 10).max(2);
    let bar_top = (height / 32).max(1);
    for y in bar_top..(bar_top + bar).min(height) {
        for x in margin..width.saturating_sub(margin) {
            page[[y, x]] = 40.0;
        }
    }
    let line_pitch = 10;
    let glyph_h = 6;
    let mut row = bar_top + bar + 8;
    while row + glyph_h < height.saturating_sub(4) {
        let mut x = margin;
        let line_end = width.saturating_sub(margin + rng.random_range(0..width / 4 + 1));
        while x + 6 < line_end {
            let w = rng.random_range(2..6);
            if rng.random_bool(0.8) {
                let ink = 30.0 + rng.random_range(0..40) as f64;
                for y in row..row + glyph_h {
                    for xx in x..x + w {
                        page[[y, xx]] = ink;
                    }
                }
            }
            x += w + rng.random_range(1..3);
        }
        row += line_pitch;
    }
    page
}

/// Generates `frames` frames of the given kind; identical for equal seeds.
pub fn generate(
    kind: SyntheticKind,
    width: usize,
    height: usize,
    frames: usize,
    seed: u64,
) -> Result<FrameSequence> {
    if width == 0 || height == 0 {
        return Err(Error::config(
            "input",
            "synthetic dimensions must be non-zero",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out: Vec<Frame> = match kind {
        SyntheticKind::Slide => {
            let mut pages = Vec::new();
            (0..frames)
                .map(|t| {
                    let page = t / 4;
                    while pages.len() <= page {
                        pages.push(slide_page(width, height, &mut rng));
                    }
                    pages[page].clone()
                })
                .collect()
        }
        SyntheticKind::Gradient => (0..frames)
            .map(|t| {
                let span = (width + height) as f64;
                Array2::from_shape_fn((height, width), |(y, x)| {
                    let u = (x + y + t) as f64 / span;
                    32.0 + 190.0 * (0.5 - 0.5 * (std::f64::consts::PI * u).cos())
                })
            })
            .collect(),
        SyntheticKind::Gaussian => {
            let normal = Normal::new(128.0, 20.0).expect("valid normal parameters");
            (0..frames)
                .map(|_| {
                    Array2::from_shape_fn((height, width), |_| {
                        let v: f64 = normal.sample(&mut rng);
                        v.clamp(0.0, 255.0)
                    })
                })
                .collect()
        }
    };
    FrameSequence::new(width, height, FrameRate::default(), out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_in_range() {
        for kind in [
            SyntheticKind::Slide,
            SyntheticKind::Gradient,
            SyntheticKind::Gaussian,
        ] {
            let a = generate(kind, 32, 24, 5, 9).unwrap();
            let b = generate(kind, 32, 24, 5, 9).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.len(), 5);
            assert!(a
                .frames()
                .iter()
                .flatten()
                .all(|v| (0.0..=255.0).contains(v)));
        }
    }

    #[test]
    fn slide_changes_every_four_frames() {
        let s = generate(SyntheticKind::Slide, 64, 64, 8, 1).unwrap();
        assert_eq!(s.frames()[0], s.frames()[3]);
        assert_ne!(s.frames()[3], s.frames()[4]);
    }

    #[test]
    fn parse_names() {
        assert_eq!(
            "slide".parse::<SyntheticKind>().unwrap(),
            SyntheticKind::Slide
        );
        assert!("video".parse::<SyntheticKind>().is_err());
    }
}
