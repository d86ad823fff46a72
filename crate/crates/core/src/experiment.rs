//! Configuration-driven experiments: single runs, SNR/exponent sweeps
//! against the SoftCast baseline, and coefficient histograms.
//!
//! Config files are `key = value` lines mirroring the CLI flags:
//!
//! ```text
//! # comments start with '#'
//! input = synthetic:slide:128x128x8
//! gop   = 4
//! grid  = 8,8          # or T,H,W
//! keep  = 0.25
//! a     = 1.11,1.2,1.29
//! snr   = 5,10,15,20   # dB; `inf` for a noiseless channel
//! seed  = 0,1,2
//! out   = results
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::allocator::Scheme;
use crate::chunks::{partition_chunks, stats_of};
use crate::error::{Error, Result, Stage, StageExt};
use crate::frame_io::{assemble_gops, load_y4m, FrameSequence};
use crate::metrics::QualityReport;
use crate::pipeline::{transmit_sequence, GridSpec, PipelineParams, RunOutcome};
use crate::synth::{generate, SyntheticKind};
use crate::transform::{dct3_forward, spow};

/// Exponents suggested for sweeps.
pub const DEFAULT_EXPONENTS: [f64; 5] = [1.11, 1.12, 1.2, 1.29, 1.31];
pub const DEFAULT_SNRS: [f64; 4] = [5.0, 10.0, 15.0, 20.0];
pub const HISTOGRAM_BINS: usize = 255;

#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    Y4m(PathBuf),
    Synthetic {
        kind: SyntheticKind,
        width: usize,
        height: usize,
        frames: usize,
    },
}

impl InputSource {
    /// Short name used in report rows.
    pub fn name(&self) -> String {
        match self {
            InputSource::Y4m(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "input".into()),
            InputSource::Synthetic {
                kind,
                width,
                height,
                ..
            } => format!("{kind}_{width}x{height}"),
        }
    }
}

impl FromStr for InputSource {
    type Err = Error;

    /// Either a `.y4m` path or `synthetic:<kind>[:WxHxN]`.
    fn from_str(s: &str) -> Result<Self> {
        let Some(rest) = s.strip_prefix("synthetic:") else {
            if s.is_empty() {
                return Err(Error::config("input", "empty input path"));
            }
            return Ok(InputSource::Y4m(PathBuf::from(s)));
        };
        let (kind, dims) = match rest.split_once(':') {
            Some((k, d)) => (k, Some(d)),
            None => (rest, None),
        };
        let kind: SyntheticKind = kind.parse()?;
        let (width, height, frames) = match dims {
            None => (128, 128, 8),
            Some(d) => {
                let parts: Vec<usize> = d
                    .split('x')
                    .map(|p| p.parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| {
                        Error::config("input", format!("bad synthetic dimensions `{d}`"))
                    })?;
                match parts[..] {
                    [w, h, n] if w > 0 && h > 0 && n > 0 => (w, h, n),
                    _ => {
                        return Err(Error::config(
                            "input",
                            format!("synthetic dimensions `{d}` must be WxHxN"),
                        ))
                    }
                }
            }
        };
        Ok(InputSource::Synthetic {
            kind,
            width,
            height,
            frames,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub input: InputSource,
    pub max_frames: Option<usize>,
    pub params: PipelineParams,
    pub exponents: Vec<f64>,
    pub snrs: Vec<f64>,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn new(input: InputSource) -> Self {
        ExperimentConfig {
            input,
            max_frames: None,
            params: PipelineParams::default(),
            exponents: DEFAULT_EXPONENTS.to_vec(),
            snrs: DEFAULT_SNRS.to_vec(),
            seeds: vec![0],
            out_dir: PathBuf::from("results"),
        }
    }

    /// Applies one `key = value` setting; keys match the CLI flag names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "input" => self.input = value.parse()?,
            "frames" => self.max_frames = Some(parse_one(key, value)?),
            "gop" => self.params.gop_size = parse_one(key, value)?,
            "grid" => self.params.grid = parse_grid(value)?,
            "keep" => self.params.keep_fraction = parse_one(key, value)?,
            "wht" => self.params.wht_block = parse_one(key, value)?,
            "a" => self.exponents = parse_list(key, value)?,
            "snr" => self.snrs = parse_list(key, value)?,
            "seed" => self.seeds = parse_list(key, value)?,
            "out" => self.out_dir = PathBuf::from(value),
            _ => return Err(Error::config(key, "unknown setting")),
        }
        Ok(())
    }

    /// Parses the `key = value` config format. `input` is required.
    pub fn parse(text: &str) -> Result<Self> {
        let mut settings = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::config("config", format!("line {} is not `key = value`", n + 1))
            })?;
            settings.push((k.trim().to_string(), v.trim().to_string()));
        }
        let input = settings
            .iter()
            .find(|(k, _)| k == "input")
            .ok_or_else(|| Error::config("input", "missing"))?
            .1
            .parse()?;
        let mut cfg = ExperimentConfig::new(input);
        for (k, v) in &settings {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        if p.gop_size == 0 {
            return Err(Error::config("gop", "must be at least 1"));
        }
        let grid = p.grid.resolve(p.gop_size);
        if grid.t == 0 || grid.h == 0 || grid.w == 0 {
            return Err(Error::config("grid", "counts must be positive"));
        }
        if !p.gop_size.is_multiple_of(grid.t) {
            return Err(Error::config(
                "grid",
                format!("time count {} does not divide gop {}", grid.t, p.gop_size),
            ));
        }
        if !(p.keep_fraction > 0.0 && p.keep_fraction <= 1.0) {
            return Err(Error::config("keep", "must lie in (0, 1]"));
        }
        if !p.wht_block.is_power_of_two() {
            return Err(Error::config("wht", "must be a power of two"));
        }
        if self.exponents.is_empty()
            || self
                .exponents
                .iter()
                .any(|a| !(*a >= 1.0) || !a.is_finite())
        {
            return Err(Error::config("a", "need at least one finite exponent >= 1"));
        }
        if self.snrs.is_empty()
            || self
                .snrs
                .iter()
                .any(|s| s.is_nan() || *s == f64::NEG_INFINITY)
        {
            return Err(Error::config(
                "snr",
                "need at least one SNR in dB (or `inf`)",
            ));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seed", "need at least one seed"));
        }
        if self.max_frames == Some(0) {
            return Err(Error::config("frames", "must be positive"));
        }
        if let InputSource::Synthetic { width, height, .. } = self.input {
            if width % grid.w != 0 || height % grid.h != 0 {
                return Err(Error::config(
                    "grid",
                    format!("does not tile {width}x{height} frames"),
                ));
            }
        }
        Ok(())
    }

    /// Loads or generates the input sequence.
    pub fn load_frames(&self) -> Result<FrameSequence> {
        let mut seq = match &self.input {
            InputSource::Y4m(path) => load_y4m(path, self.max_frames).stage(Stage::Load)?,
            InputSource::Synthetic {
                kind,
                width,
                height,
                frames,
            } => generate(*kind, *width, *height, *frames, 0).stage(Stage::Load)?,
        };
        if let Some(n) = self.max_frames {
            seq.truncate(n);
        }
        Ok(seq)
    }
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{value}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(|v| parse_one(key, v)).collect()
}

fn parse_grid(value: &str) -> Result<GridSpec> {
    let parts: Vec<usize> = parse_list("grid", value)?;
    match parts[..] {
        [h, w] => Ok(GridSpec { t: None, h, w }),
        [t, h, w] => Ok(GridSpec { t: Some(t), h, w }),
        _ => Err(Error::config("grid", "expected H,W or T,H,W")),
    }
}

/// A config with its input sequence loaded once.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub frames: FrameSequence,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let frames = config.load_frames()?;
        Ok(Experiment { config, frames })
    }

    pub fn run(&self, scheme: Scheme, snr_db: f64, seed: u64) -> Result<RunOutcome> {
        transmit_sequence(&self.frames, &self.config.params, scheme, snr_db, seed)
    }
}

/// Runs the power-law pipeline once for `(a, snr_db, seed)`.
pub fn run_pipeline(
    config: &ExperimentConfig,
    a: f64,
    snr_db: f64,
    seed: u64,
) -> Result<QualityReport> {
    let exp = Experiment::new(config.clone())?;
    Ok(exp.run(Scheme::PowerLaw { a }, snr_db, seed)?.report)
}

/// One data row of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub sequence: String,
    pub scheme: Scheme,
    pub snr_db: f64,
    pub seed: u64,
    pub psnr_db: f64,
    pub mssim: f64,
    pub predicted_mse: f64,
    pub measured_mse: f64,
    pub kept_chunks: usize,
    pub power_check: f64,
}

impl RunRow {
    fn from_outcome(
        sequence: &str,
        scheme: Scheme,
        snr_db: f64,
        seed: u64,
        out: &RunOutcome,
    ) -> Self {
        RunRow {
            sequence: sequence.to_string(),
            scheme,
            snr_db,
            seed,
            psnr_db: out.report.mean_psnr,
            mssim: out.report.mean_mssim,
            predicted_mse: out.report.predicted_mse,
            measured_mse: out.report.measured_mse,
            kept_chunks: out.kept_chunks,
            power_check: out.power_check,
        }
    }

    pub fn a(&self) -> f64 {
        self.scheme.exponent()
    }
}

/// Mean difference (power-law minus SoftCast) at one `(a, snr)` over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaRow {
    pub sequence: String,
    pub a: f64,
    pub snr_db: f64,
    pub baseline_psnr_db: f64,
    pub psnr_db: f64,
    pub baseline_mssim: f64,
    pub mssim: f64,
}

impl DeltaRow {
    pub fn delta_psnr(&self) -> f64 {
        self.psnr_db - self.baseline_psnr_db
    }

    /// Absolute SSIM difference (0.0041 reads as 0.41%).
    pub fn delta_mssim(&self) -> f64 {
        self.mssim - self.baseline_mssim
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<RunRow>,
    pub baseline: Vec<RunRow>,
    pub deltas: Vec<DeltaRow>,
}

fn mean_by<T>(rows: &[&RunRow], f: impl Fn(&RunRow) -> T) -> f64
where
    T: Into<f64>,
{
    rows.iter().map(|r| f(r).into()).sum::<f64>() / rows.len() as f64
}

/// Runs every `(a, snr, seed)` plus the SoftCast baseline at each
/// `(snr, seed)`. Rows come back in config order regardless of scheduling.
pub fn sweep_runs(exp: &Experiment) -> Result<SweepResult> {
    let cfg = &exp.config;
    let name = cfg.input.name();
    let mut jobs = Vec::new();
    for &a in &cfg.exponents {
        for &snr in &cfg.snrs {
            for &seed in &cfg.seeds {
                jobs.push((Scheme::PowerLaw { a }, snr, seed));
            }
        }
    }
    let first_baseline = jobs.len();
    for &snr in &cfg.snrs {
        for &seed in &cfg.seeds {
            jobs.push((Scheme::SoftCast, snr, seed));
        }
    }
    let results = jobs
        .par_iter()
        .map(|&(scheme, snr, seed)| {
            exp.run(scheme, snr, seed)
                .map(|out| RunRow::from_outcome(&name, scheme, snr, seed, &out))
        })
        .collect::<Result<Vec<_>>>()?;
    let (rows, baseline) = results.split_at(first_baseline);

    let mut deltas = Vec::new();
    for &a in &cfg.exponents {
        for &snr in &cfg.snrs {
            let ours: Vec<&RunRow> = rows
                .iter()
                .filter(|r| r.a() == a && r.snr_db == snr)
                .collect();
            let base: Vec<&RunRow> = baseline.iter().filter(|r| r.snr_db == snr).collect();
            deltas.push(DeltaRow {
                sequence: name.clone(),
                a,
                snr_db: snr,
                baseline_psnr_db: mean_by(&base, |r| r.psnr_db),
                psnr_db: mean_by(&ours, |r| r.psnr_db),
                baseline_mssim: mean_by(&base, |r| r.mssim),
                mssim: mean_by(&ours, |r| r.mssim),
            });
        }
    }
    Ok(SweepResult {
        rows: rows.to_vec(),
        baseline: baseline.to_vec(),
        deltas,
    })
}

/// Formats a float for CSV; infinities become `inf`.
pub fn fmt_f64(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else {
        format!("{v}")
    }
}

pub const RUN_HEADER: [&str; 11] = [
    "sequence",
    "scheme",
    "a",
    "snr_db",
    "seed",
    "psnr_db",
    "mssim",
    "predicted_D",
    "measured_mse",
    "kept_chunks",
    "power_check",
];

fn run_record(r: &RunRow) -> Vec<String> {
    vec![
        r.sequence.clone(),
        r.scheme.name().into(),
        fmt_f64(r.a()),
        fmt_f64(r.snr_db),
        r.seed.to_string(),
        fmt_f64(r.psnr_db),
        fmt_f64(r.mssim),
        fmt_f64(r.predicted_mse),
        fmt_f64(r.measured_mse),
        r.kept_chunks.to_string(),
        fmt_f64(r.power_check),
    ]
}

pub fn write_run_rows(path: &Path, rows: &[RunRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RUN_HEADER)?;
    for r in rows {
        w.write_record(run_record(r))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Per-chunk allocation of every GoP in a run: `b`, `alpha` and the
/// predicted per-coefficient distortion `D_i`.
pub fn write_plan(path: &Path, out: &RunOutcome) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["gop", "chunk", "b", "alpha", "D_i"])?;
    for (g, enc) in out.encoded.iter().enumerate() {
        let kept = enc.kept_stats();
        let d = crate::allocator::predicted_distortion(&kept, &enc.plan, out.noise_var)?;
        for (((index, _), b), di) in enc.side.kept().zip(&enc.plan.b).zip(&d.per_chunk) {
            w.write_record([
                g.to_string(),
                index.to_string(),
                fmt_f64(*b),
                fmt_f64(enc.plan.alpha),
                fmt_f64(*di),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_deltas(dir: &Path, sweep: &SweepResult, snrs: &[f64]) -> Result<()> {
    let path = dir.join("deltas.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record([
        "sequence",
        "a",
        "snr_db",
        "baseline_psnr_db",
        "psnr_db",
        "delta_psnr_db",
        "baseline_mssim",
        "mssim",
        "delta_mssim",
    ])?;
    for d in &sweep.deltas {
        w.write_record([
            d.sequence.clone(),
            fmt_f64(d.a),
            fmt_f64(d.snr_db),
            fmt_f64(d.baseline_psnr_db),
            fmt_f64(d.psnr_db),
            fmt_f64(d.delta_psnr()),
            fmt_f64(d.baseline_mssim),
            fmt_f64(d.mssim),
            fmt_f64(d.delta_mssim()),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    // sequences x SNR layout, one table per metric
    for (file, metric) in [
        (
            "delta_psnr.csv",
            DeltaRow::delta_psnr as fn(&DeltaRow) -> f64,
        ),
        ("delta_mssim.csv", DeltaRow::delta_mssim),
    ] {
        let path = dir.join(file);
        let mut w = csv::Writer::from_path(&path)?;
        let mut header = vec!["sequence".to_string(), "a".to_string()];
        header.extend(snrs.iter().map(|s| format!("snr_{}", fmt_f64(*s))));
        w.write_record(&header)?;
        let mut by_a: BTreeMap<String, (f64, Vec<f64>)> = BTreeMap::new();
        for d in &sweep.deltas {
            let entry = by_a
                .entry(format!("{:020.12}", d.a))
                .or_insert((d.a, Vec::new()));
            entry.1.push(metric(d));
        }
        let seq = sweep
            .deltas
            .first()
            .map(|d| d.sequence.clone())
            .unwrap_or_default();
        for (a, values) in by_a.values() {
            let mut rec = vec![seq.clone(), fmt_f64(*a)];
            rec.extend(values.iter().map(|v| fmt_f64(*v)));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Runs the sweep and writes `results.csv`, `baseline.csv`, `deltas.csv`,
/// `delta_psnr.csv` and `delta_mssim.csv` into the output directory.
pub fn sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    let exp = Experiment::new(config.clone())?;
    let result = sweep_runs(&exp)?;
    let dir = &config.out_dir;
    fs::create_dir_all(dir)
        .map_err(|e| Error::io(dir, e))
        .stage(Stage::Report)?;
    write_run_rows(&dir.join("results.csv"), &result.rows).stage(Stage::Report)?;
    write_run_rows(&dir.join("baseline.csv"), &result.baseline).stage(Stage::Report)?;
    write_deltas(dir, &result, &config.snrs).stage(Stage::Report)?;
    Ok(result)
}

/// Fixed-bin histogram over a symmetric range `[-limit, limit]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub limit: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Bins are centered on `k · width`, `k = -127..=127`, so mirrored
    /// inputs land in mirrored bins.
    pub fn symmetric(values: &[f64], bins: usize) -> Self {
        let half = (bins / 2) as i64;
        let limit = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut counts = vec![0u64; bins];
        let width = 2.0 * limit / bins as f64;
        for &v in values {
            let k = if width > 0.0 {
                (v / width).round() as i64
            } else {
                0
            };
            counts[(k.clamp(-half, half) + half) as usize] += 1;
        }
        Histogram { limit, counts }
    }

    pub fn bin_width(&self) -> f64 {
        2.0 * self.limit / self.counts.len() as f64
    }

    pub fn center(&self, bin: usize) -> f64 {
        (bin as f64 - (self.counts.len() / 2) as f64) * self.bin_width()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramDump {
    pub chunk: usize,
    pub a: f64,
    /// Centered coefficients of the chunk.
    pub before_values: Vec<f64>,
    /// Their image under `sign(x)|x|^(1/a)`.
    pub after_values: Vec<f64>,
    pub before: Histogram,
    pub after: Histogram,
}

/// Histograms of one chunk of the first GoP before and after the power law.
pub fn histogram_dump(config: &ExperimentConfig, chunk: usize, a: f64) -> Result<HistogramDump> {
    if !(a >= 1.0) {
        return Err(Error::config("a", "must be >= 1"));
    }
    let frames = config.load_frames()?;
    let gops = assemble_gops(&frames, config.params.gop_size).stage(Stage::Load)?;
    let gop = gops
        .first()
        .ok_or_else(|| Error::config("input", "not enough frames for one GoP"))?;
    let coeffs = dct3_forward(gop);
    let set = partition_chunks(&coeffs, config.params.grid.resolve(gop.gop_size()))
        .stage(Stage::Chunking)?;
    let data = set.chunks.get(chunk).ok_or_else(|| {
        Error::config(
            "chunk",
            format!("index {chunk} out of range for {} chunks", set.len()),
        )
    })?;
    let mean = stats_of(&data.values, a)?.mean;
    let before_values: Vec<f64> = data.values.iter().map(|v| v - mean).collect();
    Ok(histogram_from_values(chunk, a, before_values))
}

pub fn histogram_from_values(chunk: usize, a: f64, before_values: Vec<f64>) -> HistogramDump {
    let after_values: Vec<f64> = before_values.iter().map(|&v| spow(v, 1.0 / a)).collect();
    HistogramDump {
        chunk,
        a,
        before: Histogram::symmetric(&before_values, HISTOGRAM_BINS),
        after: Histogram::symmetric(&after_values, HISTOGRAM_BINS),
        before_values,
        after_values,
    }
}

pub fn write_histogram(path: &Path, dump: &HistogramDump) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "bin",
        "center_before",
        "count_before",
        "center_after",
        "count_after",
    ])?;
    for bin in 0..dump.before.counts.len() {
        w.write_record([
            bin.to_string(),
            fmt_f64(dump.before.center(bin)),
            dump.before.counts[bin].to_string(),
            fmt_f64(dump.after.center(bin)),
            dump.after.counts[bin].to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
