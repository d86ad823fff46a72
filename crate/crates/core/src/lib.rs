//! Pseudo-analog video transmission over an AWGN channel.
//!
//! Each group of pictures is 3-D DCT transformed, cut into chunks, and
//! the chunks with the most energy are sent as scaled real symbols. Two
//! encoders are provided:
//!
//! * [`Scheme::SoftCast`] scales centered coefficients linearly;
//! * [`Scheme::PowerLaw`] first maps each centered coefficient through
//!   `sign(x)|x|^(1/a)` and allocates power for the transformed values.
//!
//! The receiver undoes both with a per-chunk LLSE factor. See the book in
//! `book/` for the derivations behind the allocator and decoder.
//!
//! ```
//! use nlcast::{synth, PipelineParams, Scheme, transmit_sequence};
//!
//! let video = synth::generate(synth::SyntheticKind::Slide, 64, 64, 8, 0)?;
//! let params = PipelineParams { keep_fraction: 0.25, ..Default::default() };
//! let out = transmit_sequence(&video, &params, Scheme::PowerLaw { a: 1.2 }, 10.0, 7)?;
//! assert!(out.report.mean_psnr > 15.0);
//! assert!((out.power_check - 1.0).abs() < 1e-6);
//! # Ok::<(), nlcast::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocator;
pub mod channel;
pub mod chunks;
pub mod decoder;
pub mod error;
pub mod experiment;
pub mod frame_io;
pub mod metrics;
pub mod pipeline;
pub mod synth;
pub mod transform;

pub use allocator::{
    allocate, allocate_nonlinear, allocate_softcast, predicted_distortion, AllocationPlan, Scheme,
};
pub use channel::{
    noise_variance_for_snr, serialize_symbols, transmit, ChannelModel, SymbolStream,
};
pub use chunks::{compute_stats, partition_chunks, select_chunks, ChunkStats, Grid, SideInfo};
pub use decoder::{decode_chunks, llse_factors, LlseFactors};
pub use error::{Error, Result, Stage};
pub use experiment::{histogram_dump, run_pipeline, sweep, ExperimentConfig, InputSource};
pub use frame_io::{assemble_gops, load_y4m, write_y4m, Frame, FrameSequence, GopTensor};
pub use metrics::{mssim, psnr, QualityReport};
pub use pipeline::{
    decode_gop, encode_gop, transmit_sequence, GridSpec, PipelineParams, RunOutcome,
};
pub use transform::{dct3_forward, dct3_inverse, signed_power, wht_block, CoeffTensor};

// Book chapters are compiled as doc-tests so their snippets stay current.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/transforms.md")]
    mod transforms {}
    #[doc = include_str!("../../../book/src/chunks.md")]
    mod chunks {}
    #[doc = include_str!("../../../book/src/allocation.md")]
    mod allocation {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/decoding.md")]
    mod decoding {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
