//! Raw luma video I/O and group-of-pictures assembly.
//!
//! Input is YUV4MPEG2 with 4:2:0 or mono chroma; only the luma plane is
//! decoded. Output is always mono Y4M.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, Array3, Axis};

use crate::error::{Error, Result};

/// A single luma plane, indexed `[row, column]`.
pub type Frame = Array2<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameRate {
    pub num: u32,
    pub den: u32,
}

impl Default for FrameRate {
    fn default() -> Self {
        FrameRate { num: 30, den: 1 }
    }
}

/// An ordered run of equally sized luma frames.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    width: usize,
    height: usize,
    frame_rate: FrameRate,
    frames: Vec<Frame>,
}

impl FrameSequence {
    /// Builds a sequence, checking every frame is `height x width`.
    ///
    /// Sample range is not checked here; reconstructed frames legitimately
    /// leave `[0, 255]` and are only clamped by [`write_y4m`].
    pub fn new(
        width: usize,
        height: usize,
        frame_rate: FrameRate,
        frames: Vec<Frame>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::contract("frame dimensions must be non-zero"));
        }
        for (i, f) in frames.iter().enumerate() {
            if f.dim() != (height, width) {
                return Err(Error::contract(format!(
                    "frame {i} is {}x{}, expected {width}x{height}",
                    f.ncols(),
                    f.nrows()
                )));
            }
        }
        Ok(FrameSequence {
            width,
            height,
            frame_rate,
            frames,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn frame_rate(&self) -> FrameRate {
        self.frame_rate
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn truncate(&mut self, n: usize) {
        self.frames.truncate(n);
    }
}

/// A group of pictures as a `(time, height, width)` tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct GopTensor {
    pub data: Array3<f64>,
    /// Index of the first frame in the source sequence.
    pub origin_index: usize,
}

impl GopTensor {
    pub fn new(data: Array3<f64>, origin_index: usize) -> Result<Self> {
        let (t, h, w) = data.dim();
        if t == 0 || h == 0 || w == 0 {
            return Err(Error::contract(format!(
                "GoP shape {t}x{h}x{w} has an empty axis"
            )));
        }
        Ok(GopTensor { data, origin_index })
    }

    pub fn gop_size(&self) -> usize {
        self.data.dim().0
    }

    /// Splits the tensor back into frames.
    pub fn frames(&self) -> Vec<Frame> {
        self.data.axis_iter(Axis(0)).map(|f| f.to_owned()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Chroma {
    C420,
    Mono,
}

struct Header {
    width: usize,
    height: usize,
    frame_rate: FrameRate,
    chroma: Chroma,
}

fn parse_header(line: &str) -> Result<Header> {
    let mut tokens = line.split_ascii_whitespace();
    match tokens.next() {
        Some("YUV4MPEG2") => {}
        Some(other) => return Err(Error::Parse(format!("bad magic `{other}`"))),
        None => return Err(Error::Parse("empty header".into())),
    }
    let mut width = None;
    let mut height = None;
    let mut frame_rate = FrameRate::default();
    let mut chroma = Chroma::C420;
    for tok in tokens {
        let (tag, value) = tok.split_at(1);
        let bad = || Error::Parse(format!("malformed header token `{tok}`"));
        match tag {
            "W" => width = Some(value.parse::<usize>().map_err(|_| bad())?),
            "H" => height = Some(value.parse::<usize>().map_err(|_| bad())?),
            "F" => {
                let (n, d) = value.split_once(':').ok_or_else(bad)?;
                let num = n.parse::<u32>().map_err(|_| bad())?;
                let den = d.parse::<u32>().map_err(|_| bad())?;
                if den == 0 {
                    return Err(bad());
                }
                frame_rate = FrameRate { num, den };
            }
            "C" => {
                chroma = match value {
                    "420" | "420jpeg" | "420paldv" | "420mpeg2" => Chroma::C420,
                    "mono" => Chroma::Mono,
                    _ => return Err(Error::Parse(format!("unsupported chroma token `{tok}`"))),
                }
            }
            // interlacing, aspect ratio and extension tokens carry nothing we use
            "I" | "A" | "X" => {}
            _ => return Err(Error::Parse(format!("unknown header token `{tok}`"))),
        }
    }
    let width = width
        .filter(|&w| w > 0)
        .ok_or_else(|| Error::Parse("missing or zero W token".into()))?;
    let height = height
        .filter(|&h| h > 0)
        .ok_or_else(|| Error::Parse("missing or zero H token".into()))?;
    Ok(Header {
        width,
        height,
        frame_rate,
        chroma,
    })
}

fn read_line<R: BufRead>(r: &mut R) -> std::io::Result<Option<String>> {
    let mut buf = Vec::new();
    let n = r.read_until(b'\n', &mut buf)?;
    if n == 0 {
        return Ok(None);
    }
    if buf.last() == Some(&b'\n') {
        buf.pop();
    }
    Ok(Some(String::from_utf8_lossy(&buf).into_owned()))
}

fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

/// Parses a Y4M stream, keeping only luma.
pub fn read_y4m<R: Read>(reader: R, max_frames: Option<usize>) -> Result<FrameSequence> {
    let mut r = BufReader::new(reader);
    let io_err = |e| Error::io("<y4m stream>", e);
    let line = read_line(&mut r)
        .map_err(io_err)?
        .ok_or_else(|| Error::Parse("empty file".into()))?;
    let header = parse_header(&line)?;
    let luma_len = header.width * header.height;
    let chroma_len = match header.chroma {
        Chroma::C420 => 2 * header.width.div_ceil(2) * header.height.div_ceil(2),
        Chroma::Mono => 0,
    };
    let frame_len = luma_len + chroma_len;
    let limit = max_frames.unwrap_or(usize::MAX);

    let mut frames = Vec::new();
    let mut payload = vec![0u8; frame_len];
    while frames.len() < limit {
        let Some(marker) = read_line(&mut r).map_err(io_err)? else {
            break;
        };
        let tag = marker.split_ascii_whitespace().next().unwrap_or("");
        if tag != "FRAME" {
            return Err(Error::Parse(format!(
                "expected FRAME delimiter before frame {}, found `{tag}`",
                frames.len()
            )));
        }
        let got = read_full(&mut r, &mut payload).map_err(io_err)?;
        if got != frame_len {
            return Err(Error::TruncatedPayload {
                frame: frames.len(),
                expected: frame_len,
                actual: got,
            });
        }
        let luma = payload[..luma_len]
            .iter()
            .map(|&b| b as f64)
            .collect::<Vec<_>>();
        let frame = Array2::from_shape_vec((header.height, header.width), luma)
            .expect("luma length matches header dimensions");
        frames.push(frame);
    }
    FrameSequence::new(header.width, header.height, header.frame_rate, frames)
}

/// Loads a Y4M file, optionally truncated to `max_frames`.
pub fn load_y4m(path: impl AsRef<Path>, max_frames: Option<usize>) -> Result<FrameSequence> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_y4m(file, max_frames)
}

/// Rounds to nearest and clamps to the 8-bit range.
pub fn quantize_sample(v: f64) -> u8 {
    if v.is_nan() {
        return 0;
    }
    v.round().clamp(0.0, 255.0) as u8
}

/// Writes a mono-chroma Y4M stream.
pub fn write_y4m_to<W: Write>(frames: &FrameSequence, writer: W) -> Result<()> {
    if frames.is_empty() {
        return Err(Error::contract("cannot write an empty frame sequence"));
    }
    let mut w = BufWriter::new(writer);
    let io_err = |e| Error::io("<y4m stream>", e);
    let FrameRate { num, den } = frames.frame_rate();
    writeln!(
        w,
        "YUV4MPEG2 W{} H{} F{num}:{den} Ip A1:1 Cmono",
        frames.width(),
        frames.height()
    )
    .map_err(io_err)?;
    let mut bytes = Vec::with_capacity(frames.width() * frames.height());
    for frame in frames.frames() {
        bytes.clear();
        bytes.extend(frame.iter().map(|&v| quantize_sample(v)));
        w.write_all(b"FRAME\n").map_err(io_err)?;
        w.write_all(&bytes).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn write_y4m(frames: &FrameSequence, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_y4m_to(frames, file).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        e => e,
    })
}

/// Groups consecutive frames into non-overlapping GoPs of `gop_size`.
///
/// A trailing partial group is dropped with a warning.
pub fn assemble_gops(frames: &FrameSequence, gop_size: usize) -> Result<Vec<GopTensor>> {
    if gop_size == 0 {
        return Err(Error::contract("gop_size must be at least 1"));
    }
    let n = frames.len();
    if n < gop_size {
        log::warn!(
            "only {n} frames available, fewer than one GoP of {gop_size}; nothing to process"
        );
        return Ok(Vec::new());
    }
    let full = n / gop_size;
    if !n.is_multiple_of(gop_size) {
        log::warn!(
            "dropping {} trailing frames that do not fill a GoP of {gop_size}",
            n % gop_size
        );
    }
    let (h, w) = (frames.height(), frames.width());
    (0..full)
        .map(|g| {
            let origin = g * gop_size;
            let mut data = Array3::zeros((gop_size, h, w));
            for (t, frame) in frames.frames()[origin..origin + gop_size]
                .iter()
                .enumerate()
            {
                data.index_axis_mut(Axis(0), t).assign(frame);
            }
            GopTensor::new(data, origin)
        })
        .collect()
}
