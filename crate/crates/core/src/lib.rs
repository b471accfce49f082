//! Micro-expression spotting from Riesz-pyramid phase.
//!
//! A face video is turned into per-frame motion-likelihood scores and then
//! into spotted intervals:
//!
//! 1. **align**: similarity alignment to the first frame's landmarks, crop to 224×224.
//! 2. **pyramid**: Laplacian subband at the configured level and its Riesz transform.
//! 3. **phase**: quaternionic phase differences between adjacent frames, zero-phase
//!    temporal filtering, accumulation over `K` frames.
//! 4. **roi**: eyebrow and mouth regions resampled into a 30×30×3 feature map.
//! 5. **net**: three-stream shallow CNN producing one score per frame.
//! 6. **postprocess**: smoothing, adaptive threshold, peak picking, intervals.
//!
//! [`eval`] scores spotted intervals against annotations, and [`synth`] renders
//! videos with analytically known motion for testing without real datasets.

pub mod align;
pub mod config;
pub mod error;
pub mod eval;
pub mod filter;
pub mod io;
pub mod net;
pub mod phase;
pub mod pipeline;
pub mod plane;
pub mod postprocess;
pub mod pyramid;
pub mod raster;
pub mod roi;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
pub use plane::{Plane, Point2};

/// Side length of the aligned face crop every frame is resampled to.
pub const FACE_SIZE: usize = 224;

/// Number of facial landmarks per frame (standard 68-point scheme).
pub const NUM_LANDMARKS: usize = 68;
