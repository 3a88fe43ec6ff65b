//! Disparity estimation from multiscopic image sets: a center view plus up
//! to four surround views captured at a shared baseline, one per axis
//! direction. Per-view stereo cost volumes are fused into a single volume
//! that stays informative where individual views are occluded, and two
//! matchers turn it into disparities — winner-take-all block matching with
//! subpixel refinement, and energy minimization by expansion moves with an
//! explicit occlusion label.
//!
//! The crate also bundles what the matchers need around them: PNM/PFM image
//! and disparity IO, a synthetic multiscopic renderer with ground truth for
//! testing, rectification sanity checks, and evaluation metrics.

pub mod blockmatch;
pub mod capture;
pub mod cost;
pub mod disparity;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod graphcut;
pub mod image;
pub mod io;
pub mod maxflow;
pub mod qpbo;

pub use blockmatch::{match_bm, BmParams};
pub use capture::{MultiscopicSet, ViewDirection};
pub use cost::CostVolume;
pub use disparity::DisparityMap;
pub use error::{Error, Result};
pub use eval::EvalReport;
pub use fusion::FusionStrategy;
pub use graphcut::{match_gc, GcParams, Labeling, OCCLUDED};
pub use image::ImageBuffer;
