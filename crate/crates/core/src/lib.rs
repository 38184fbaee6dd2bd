//! Stereo cost-volume filtering as iterative denoising.
//!
//! A classical matcher builds a group-correlation cost volume. A per-pixel
//! disparity filter is then recovered from Gaussian noise by a short DDIM
//! chain whose clean estimate at every step is the matcher's own prediction on
//! the filtered volume.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datagen;
pub mod error;
pub mod io;
pub mod matcher;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod sampler;
pub mod schedule;
pub mod volume;

pub use error::{Error, Result};
pub use matcher::{ClassicalMatcher, ImagePair, MatcherConfig, VolumeMatcher};
pub use metrics::MetricReport;
pub use rng::NoiseSource;
pub use sampler::{run_reverse, EmbeddingMode, RenewalPolicy, SamplerConfig, SamplerOutput};
pub use schedule::NoiseSchedule;
pub use volume::{CostVolume, DisparityMap, ProbabilityVolume};
