//! Annotation pipeline for force-sensing gloves paired with egocentric video.
//!
//! The crate turns raw six-channel piezoresistive glove logs into per-frame
//! hand contact labels, aligns the glove clock with the camera clock, and
//! picks a contacted-object mask per hand from precomputed mask proposals by
//! scoring how strongly each proposal violates the static-scene epipolar
//! constraint.
//!
//! Stages:
//!
//! 1. [`signal`]: Hampel outlier removal, Gaussian smoothing, rolling
//!    percentile baseline, clipped subtraction, exclusion masking,
//!    percentile normalization and geometric-mean consolidation.
//! 2. [`labeling`]: dual-threshold contact states and run segmentation.
//! 3. [`sync`]: glove-to-video clock models and per-frame resampling.
//! 4. [`geometry`]: fundamental matrices from poses, Sampson error,
//!    masked scoring and the hand-proximity gate.
//! 5. [`synth`]: seeded generators with exact ground truth.
//! 6. [`io`] and [`dataset`]: file formats, manifests and session-level
//!    orchestration used by the command-line tool.
//!
//! Heavy loops run on rayon when the `parallel` feature is enabled (the
//! default); [`Execution`] selects the path explicitly.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod dataset;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod io;
pub mod labeling;
pub mod signal;
pub mod stats;
pub mod sync;
pub mod synth;

pub use config::Config;
pub use error::{Error, ErrorClass, Result};
pub use exec::Execution;

/// Which glove a stream belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hand {
    Left,
    Right,
}

impl Hand {
    pub const BOTH: [Hand; 2] = [Hand::Left, Hand::Right];

    pub fn as_str(self) -> &'static str {
        match self {
            Hand::Left => "left",
            Hand::Right => "right",
        }
    }
}

impl std::fmt::Display for Hand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Hand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "left" | "l" => Ok(Hand::Left),
            "right" | "r" => Ok(Hand::Right),
            other => Err(Error::Schema(format!("unknown hand '{other}'"))),
        }
    }
}
