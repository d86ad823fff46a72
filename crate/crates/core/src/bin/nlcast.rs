use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nlcast::error::{Error, Result};
use nlcast::experiment::{
    fmt_f64, histogram_dump, sweep, write_histogram, write_plan, write_run_rows, Experiment,
    ExperimentConfig, RunRow,
};
use nlcast::{write_y4m, FrameSequence, Scheme};

#[derive(Parser)]
#[command(
    name = "nlcast",
    version,
    about = "Pseudo-analog video transmission simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transmit the input once and write reconstruction, scores and allocation.
    Run(Opts),
    /// Sweep exponents, SNRs and seeds against the SoftCast baseline.
    Sweep(Opts),
    /// Dump histograms of one chunk before and after the power law.
    Hist {
        #[command(flatten)]
        opts: Opts,
        /// Chunk index within the first GoP.
        #[arg(long, default_value_t = 0)]
        chunk: usize,
    },
}

#[derive(Args)]
struct Opts {
    /// Config file with `key = value` lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Y4M path or `synthetic:<slide|gradient|gaussian>[:WxHxN]`.
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    frames: Option<String>,
    #[arg(long)]
    gop: Option<String>,
    /// `H,W` (per-frame layers) or `T,H,W`.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    keep: Option<String>,
    /// Comma-separated exponents.
    #[arg(long)]
    a: Option<String>,
    /// Comma-separated SNRs in dB; `inf` for noiseless.
    #[arg(long)]
    snr: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    wht: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

impl Opts {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.input) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(input)) => ExperimentConfig::new(input.parse()?),
            (None, None) => return Err(Error::config("input", "pass --input or --config")),
        };
        let flags = [
            ("input", &self.input),
            ("frames", &self.frames),
            ("gop", &self.gop),
            ("grid", &self.grid),
            ("keep", &self.keep),
            ("a", &self.a),
            ("snr", &self.snr),
            ("seed", &self.seed),
            ("wht", &self.wht),
            ("out", &self.out),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn run(opts: &Opts) -> Result<()> {
    let cfg = opts.config()?;
    let (a, snr, seed) = (cfg.exponents[0], cfg.snrs[0], cfg.seeds[0]);
    let exp = Experiment::new(cfg)?;
    let scheme = Scheme::PowerLaw { a };
    let out = exp.run(scheme, snr, seed)?;
    let dir = &exp.config.out_dir;
    create_dir(dir)?;
    let row = RunRow {
        sequence: exp.config.input.name(),
        scheme,
        snr_db: snr,
        seed,
        psnr_db: out.report.mean_psnr,
        mssim: out.report.mean_mssim,
        predicted_mse: out.report.predicted_mse,
        measured_mse: out.report.measured_mse,
        kept_chunks: out.kept_chunks,
        power_check: out.power_check,
    };
    write_run_rows(&dir.join("run.csv"), std::slice::from_ref(&row))?;
    write_plan(&dir.join("plan.csv"), &out)?;
    let recon = FrameSequence::new(
        exp.frames.width(),
        exp.frames.height(),
        exp.frames.frame_rate(),
        out.reconstructed.clone(),
    )?;
    write_y4m(&recon, dir.join("reconstructed.y4m"))?;
    if let Some(first) = out.encoded.first() {
        let path = dir.join("side_info_gop0.txt");
        fs::write(&path, first.side.to_text()).map_err(|e| Error::Io { path, source: e })?;
    }
    println!(
        "a={} snr={} seed={seed}: psnr={:.4} dB mssim={:.5} predicted_D={:.4} measured_mse={:.4} kept={}/{} power_check={}",
        fmt_f64(a),
        fmt_f64(snr),
        out.report.mean_psnr,
        out.report.mean_mssim,
        out.report.predicted_mse,
        out.report.measured_mse,
        out.kept_chunks,
        out.total_chunks,
        fmt_f64(out.power_check),
    );
    Ok(())
}

fn run_sweep(opts: &Opts) -> Result<()> {
    let cfg = opts.config()?;
    let result = sweep(&cfg)?;
    println!(
        "{} runs, {} baseline runs; tables in {}",
        result.rows.len(),
        result.baseline.len(),
        cfg.out_dir.display()
    );
    for d in &result.deltas {
        println!(
            "a={:<6} snr={:<4} dPSNR={:+.4} dB dMSSIM={:+.5}",
            fmt_f64(d.a),
            fmt_f64(d.snr_db),
            d.delta_psnr(),
            d.delta_mssim()
        );
    }
    Ok(())
}

fn run_hist(opts: &Opts, chunk: usize) -> Result<()> {
    let cfg = opts.config()?;
    create_dir(&cfg.out_dir)?;
    for &a in &cfg.exponents {
        let dump = histogram_dump(&cfg, chunk, a)?;
        let path = cfg
            .out_dir
            .join(format!("hist_chunk{chunk}_a{}.csv", fmt_f64(a)));
        write_histogram(&path, &dump)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(opts) => run(opts),
        Command::Sweep(opts) => run_sweep(opts),
        Command::Hist { opts, chunk } => run_hist(opts, *chunk),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
