//! Phase-based motion representation built on a complex steerable pyramid.
//!
//! The crate decomposes grayscale frames into oriented complex sub-bands,
//! turns their local phase into denoised, unwrapped, rigid-motion-compensated
//! phase-difference fields, and packs windows of those fields into
//! channel-stacked tensors. A Horn-Schunck optical flow baseline, the
//! concordance correlation coefficient, and a gamma-jitter illumination
//! protocol are included for comparison experiments.
//!
//! ```no_run
//! use phasemotion::{build_filter_bank, snippet_phase_diffs, pack_snippet};
//! use phasemotion::{read_frames, resize_bilinear, PhaseDiffConfig, PyramidSpec};
//!
//! let seq = read_frames("frames/")?;
//! let frames = seq
//!     .frames()
//!     .iter()
//!     .take(13)
//!     .map(|f| resize_bilinear(f, 48, 48))
//!     .collect::<Result<Vec<_>, _>>()?;
//! let bank = build_filter_bank(48, 48, &PyramidSpec::default())?;
//! let pairs = snippet_phase_diffs(&frames, &bank, &PhaseDiffConfig::default())?;
//! let tensors = pack_snippet(&pairs)?;
//! assert_eq!(tensors[0].shape(), (24, 48, 48));
//! # Ok::<(), phasemotion::Error>(())
//! ```

pub mod error;
pub mod fft;
pub mod flow;
pub mod frame_io;
pub mod gray;
pub mod metrics;
mod numeric;
pub mod perturb;
pub mod phase;
pub mod pyramid;
pub mod rng;
pub mod synthetic;

/// Library version, recorded in run sidecars.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use num_complex;

pub use error::{Error, Result};
pub use flow::{
    flow_magnitude_stats, horn_schunck, read_flo, write_flo, FlowField, FlowStats,
    HornSchunckParams,
};
pub use frame_io::{read_frame, read_frames, write_image, write_signed_field, SignedMapping};
pub use gray::{resize_bilinear, to_grayscale, FrameSequence, GrayImage, Plane};
pub use metrics::{ccc, pearson, spearman, SeriesPair};
pub use numeric::{median, wrap_angle};
pub use perturb::{
    gamma_corrupt_frame, gamma_corrupt_sequence, robustness_sweep, sweep_csv, GammaJitterSpec,
    MotionPipeline, SweepRow, SweepSettings,
};
pub use phase::{
    denoise_phase, estimate_translation, pack_snippet, pair_phase_diff, phase_difference,
    read_snippets, remove_rigid_motion, snippet_phase_diffs, write_snippets, PairFields,
    PhaseDiffConfig, PhaseDiffField, SnippetTensor,
};
pub use pyramid::{
    amplitude, build_filter_bank, decompose, phase, Bands, Decomposer, FilterBank, PhaseImage,
    PyramidCoefficients, PyramidSpec, SubBand,
};
