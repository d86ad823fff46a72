//! Chunk partitioning, per-chunk statistics, bandwidth selection and the
//! side information the receiver needs to undo all of it.

use std::fmt::Write as _;

use ndarray::{s, Array3};

use crate::error::{Error, Result};
use crate::transform::{spow, CoeffTensor};

/// Number of chunks along time, height and width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub t: usize,
    pub h: usize,
    pub w: usize,
}

impl Grid {
    pub fn new(t: usize, h: usize, w: usize) -> Self {
        Grid { t, h, w }
    }

    pub fn count(&self) -> usize {
        self.t * self.h * self.w
    }

    /// Checks the grid tiles `shape` and returns the cell dimensions.
    pub fn cell_dims(&self, shape: (usize, usize, usize)) -> Result<(usize, usize, usize)> {
        let (t, h, w) = shape;
        for (name, n, g) in [
            ("time", t, self.t),
            ("height", h, self.h),
            ("width", w, self.w),
        ] {
            if g == 0 || n % g != 0 {
                return Err(Error::contract(format!(
                    "grid count {g} does not divide {name} extent {n}"
                )));
            }
        }
        Ok((t / self.t, h / self.h, w / self.w))
    }

    fn cell_origin(&self, index: usize, cell: (usize, usize, usize)) -> (usize, usize, usize) {
        let ct = index / (self.h * self.w);
        let ch = (index / self.w) % self.h;
        let cw = index % self.w;
        (ct * cell.0, ch * cell.1, cw * cell.2)
    }
}

/// Coefficients of one grid cell, in raster order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkData {
    pub index: usize,
    pub values: Vec<f64>,
}

impl ChunkData {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkSet {
    pub chunks: Vec<ChunkData>,
    pub grid: Grid,
    pub shape: (usize, usize, usize),
}

impl ChunkSet {
    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn chunk_len(&self) -> usize {
        self.shape.0 * self.shape.1 * self.shape.2 / self.grid.count()
    }
}

/// Tiles the coefficient tensor into `grid.count()` chunks in raster order.
pub fn partition_chunks(coeffs: &CoeffTensor, grid: Grid) -> Result<ChunkSet> {
    let shape = coeffs.shape();
    let cell = grid.cell_dims(shape)?;
    let chunks = (0..grid.count())
        .map(|index| {
            let (t0, h0, w0) = grid.cell_origin(index, cell);
            let view = coeffs
                .data
                .slice(s![t0..t0 + cell.0, h0..h0 + cell.1, w0..w0 + cell.2]);
            ChunkData {
                index,
                values: view.iter().copied().collect(),
            }
        })
        .collect();
    Ok(ChunkSet {
        chunks,
        grid,
        shape,
    })
}

/// Mean and the three second moments of a chunk's centered coefficients.
///
/// `var1` and `var2` are second moments of `sign(x)|x|^(1/a)` and
/// `sign(x)|x|^(1-1/a)` of the centered data, not variances of those
/// values. At `a = 1` the second exponent is zero and `var2` is 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChunkStats {
    pub mean: f64,
    pub var0: f64,
    pub var1: f64,
    pub var2: f64,
    pub a: f64,
}

impl ChunkStats {
    pub fn std0(&self) -> f64 {
        self.var0.sqrt()
    }

    pub fn std1(&self) -> f64 {
        self.var1.sqrt()
    }

    pub fn std2(&self) -> f64 {
        self.var2.sqrt()
    }
}

pub fn compute_stats(chunk: &ChunkData, a: f64) -> Result<ChunkStats> {
    stats_of(&chunk.values, a)
}

pub fn stats_of(values: &[f64], a: f64) -> Result<ChunkStats> {
    if !(a >= 1.0) || !a.is_finite() {
        return Err(Error::contract(format!("exponent a must be >= 1, got {a}")));
    }
    if values.is_empty() {
        return Err(Error::contract("chunk has no coefficients"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (p1, p2) = (1.0 / a, 1.0 - 1.0 / a);
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for &x in values {
        let c = x - mean;
        s0 += c * c;
        let y1 = spow(c, p1);
        s1 += y1 * y1;
        if a != 1.0 {
            let y2 = spow(c, p2);
            s2 += y2 * y2;
        }
    }
    Ok(ChunkStats {
        mean,
        var0: s0 / n,
        var1: s1 / n,
        var2: if a == 1.0 { 1.0 } else { s2 / n },
        a,
    })
}

/// Keeps the `ceil(keep_fraction * M)` chunks with the largest `var0`,
/// ties going to the smaller index.
pub fn select_chunks(stats: &[ChunkStats], keep_fraction: f64) -> Result<Vec<bool>> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::contract(format!(
            "keep_fraction must lie in (0, 1], got {keep_fraction}"
        )));
    }
    let m = stats.len();
    // the slack absorbs products like 0.7 * 10 = 7.000000000000001
    let keep = ((keep_fraction * m as f64) - 1e-9).ceil().max(0.0) as usize;
    let keep = keep.min(m);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| stats[j].var0.total_cmp(&stats[i].var0).then(i.cmp(&j)));
    let mut bitmap = vec![false; m];
    for &i in &order[..keep] {
        bitmap[i] = true;
    }
    Ok(bitmap)
}

/// Metadata accompanying one GoP: the kept-chunk bitmap plus statistics
/// of every kept chunk.
#[derive(Debug, Clone, PartialEq)]
pub struct SideInfo {
    pub shape: (usize, usize, usize),
    pub grid: Grid,
    pub a: f64,
    pub power: f64,
    pub bitmap: Vec<bool>,
    /// `Some` exactly where `bitmap` is set.
    pub records: Vec<Option<ChunkStats>>,
}

pub fn build_side_info(
    stats: &[ChunkStats],
    bitmap: &[bool],
    grid: Grid,
    shape: (usize, usize, usize),
    a: f64,
    power: f64,
) -> Result<SideInfo> {
    grid.cell_dims(shape)?;
    if stats.len() != grid.count() || bitmap.len() != grid.count() {
        return Err(Error::Integrity(format!(
            "{} stats and {} bitmap entries for a grid of {} chunks",
            stats.len(),
            bitmap.len(),
            grid.count()
        )));
    }
    let records = stats
        .iter()
        .zip(bitmap)
        .map(|(s, &kept)| kept.then_some(*s))
        .collect();
    Ok(SideInfo {
        shape,
        grid,
        a,
        power,
        bitmap: bitmap.to_vec(),
        records,
    })
}

impl SideInfo {
    pub fn chunk_count(&self) -> usize {
        self.bitmap.len()
    }

    pub fn chunk_len(&self) -> usize {
        self.shape.0 * self.shape.1 * self.shape.2 / self.grid.count()
    }

    /// Indices and statistics of kept chunks, ascending.
    pub fn kept(&self) -> impl Iterator<Item = (usize, &ChunkStats)> {
        self.records
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.as_ref().map(|s| (i, s)))
    }

    pub fn kept_count(&self) -> usize {
        self.bitmap.iter().filter(|&&k| k).count()
    }

    fn check(&self) -> Result<()> {
        self.grid.cell_dims(self.shape)?;
        if self.bitmap.len() != self.grid.count() || self.records.len() != self.grid.count() {
            return Err(Error::Integrity(
                "bitmap or record count differs from grid size".into(),
            ));
        }
        for (i, (k, r)) in self.bitmap.iter().zip(&self.records).enumerate() {
            if *k != r.is_some() {
                return Err(Error::Integrity(format!(
                    "chunk {i}: kept flag and record disagree"
                )));
            }
        }
        Ok(())
    }

    /// Text form: header keys, then one line per chunk
    /// `index mean var0 var1 var2 kept`, with `-` for dropped chunks' fields.
    pub fn to_text(&self) -> String {
        let mut out = String::from("nlcast-side-info 1\n");
        let (t, h, w) = self.shape;
        let _ = writeln!(out, "shape {t} {h} {w}");
        let _ = writeln!(out, "grid {} {} {}", self.grid.t, self.grid.h, self.grid.w);
        let _ = writeln!(out, "a {:.16e}", self.a);
        let _ = writeln!(out, "power {:.16e}", self.power);
        let _ = writeln!(out, "chunks {}", self.chunk_count());
        for (i, rec) in self.records.iter().enumerate() {
            match rec {
                Some(s) => {
                    let _ = writeln!(
                        out,
                        "{i} {:.16e} {:.16e} {:.16e} {:.16e} 1",
                        s.mean, s.var0, s.var1, s.var2
                    );
                }
                None => {
                    let _ = writeln!(out, "{i} - - - - 0");
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<SideInfo> {
        let bad = |msg: String| Error::Integrity(format!("side info: {msg}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some("nlcast-side-info 1") {
            return Err(bad("missing `nlcast-side-info 1` header".into()));
        }
        let mut field = |key: &str| -> Result<Vec<String>> {
            let line = lines
                .next()
                .ok_or_else(|| bad(format!("missing `{key}` line")))?;
            let mut parts = line.split_ascii_whitespace();
            if parts.next() != Some(key) {
                return Err(bad(format!("expected `{key}`, found `{line}`")));
            }
            Ok(parts.map(str::to_string).collect())
        };
        fn nums<T: std::str::FromStr>(v: &[String], n: usize, key: &str) -> Result<Vec<T>> {
            if v.len() != n {
                return Err(Error::Integrity(format!(
                    "side info: `{key}` expects {n} values"
                )));
            }
            v.iter()
                .map(|s| {
                    s.parse::<T>().map_err(|_| {
                        Error::Integrity(format!("side info: bad `{key}` value `{s}`"))
                    })
                })
                .collect()
        }
        let shape = nums::<usize>(&field("shape")?, 3, "shape")?;
        let grid = nums::<usize>(&field("grid")?, 3, "grid")?;
        let a = nums::<f64>(&field("a")?, 1, "a")?[0];
        let power = nums::<f64>(&field("power")?, 1, "power")?[0];
        let count = nums::<usize>(&field("chunks")?, 1, "chunks")?[0];

        let mut bitmap = Vec::with_capacity(count);
        let mut records = Vec::with_capacity(count);
        for (expected, line) in lines.enumerate() {
            let parts: Vec<&str> = line.split_ascii_whitespace().collect();
            if parts.len() != 6 {
                return Err(bad(format!("record `{line}` does not have 6 fields")));
            }
            if parts[0].parse::<usize>().ok() != Some(expected) {
                return Err(bad(format!("record `{line}` out of order")));
            }
            match parts[5] {
                "1" => {
                    let v = parts[1..5]
                        .iter()
                        .map(|s| {
                            s.parse::<f64>()
                                .map_err(|_| bad(format!("bad number `{s}`")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    bitmap.push(true);
                    records.push(Some(ChunkStats {
                        mean: v[0],
                        var0: v[1],
                        var1: v[2],
                        var2: v[3],
                        a,
                    }));
                }
                "0" => {
                    bitmap.push(false);
                    records.push(None);
                }
                other => return Err(bad(format!("kept flag `{other}` is not 0 or 1"))),
            }
        }
        if bitmap.len() != count {
            return Err(bad(format!("{} records for {count} chunks", bitmap.len())));
        }
        let info = SideInfo {
            shape: (shape[0], shape[1], shape[2]),
            grid: Grid::new(grid[0], grid[1], grid[2]),
            a,
            power,
            bitmap,
            records,
        };
        info.check()?;
        Ok(info)
    }
}

/// Rebuilds a coefficient tensor from centered, decoded kept chunks.
///
/// `centered` holds one vector per kept chunk in ascending index order.
/// Kept chunks get their mean added back; dropped chunks stay zero.
pub fn reassemble(centered: &[Vec<f64>], side: &SideInfo) -> Result<CoeffTensor> {
    side.check()?;
    let cell = side.grid.cell_dims(side.shape)?;
    let chunk_len = side.chunk_len();
    if centered.len() != side.kept_count() {
        return Err(Error::Integrity(format!(
            "{} decoded chunks for {} kept chunks",
            centered.len(),
            side.kept_count()
        )));
    }
    let mut data = Array3::zeros(side.shape);
    for ((index, stats), values) in side.kept().zip(centered) {
        if values.len() != chunk_len {
            return Err(Error::Integrity(format!(
                "chunk {index} has {} values, expected {chunk_len}",
                values.len()
            )));
        }
        let (t0, h0, w0) = side.grid.cell_origin(index, cell);
        let mut view = data.slice_mut(s![t0..t0 + cell.0, h0..h0 + cell.1, w0..w0 + cell.2]);
        for (dst, v) in view.iter_mut().zip(values) {
            *dst = v + stats.mean;
        }
    }
    Ok(CoeffTensor::new(data))
}
