//! Run configuration files (JSON).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datagen::SuiteConfig;
use crate::error::{Error, Result};
use crate::matcher::MatcherConfig;
use crate::sampler::SamplerConfig;

/// A rectified pair on disk. Images are PGM, PNG or PFM; the optional
/// ground truth is a PFM disparity map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairInput {
    pub left: PathBuf,
    pub right: PathBuf,
    #[serde(default)]
    pub ground_truth: Option<PathBuf>,
}

/// Where the scenes come from. Serialized as `{"pair": {...}}` or
/// `{"suite": {...}}`, so exactly one source is always present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSource {
    Pair(PairInput),
    Suite(SuiteConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmitFlags {
    /// `disparity.pfm` plus a colour-mapped `disparity.png`.
    pub disparity_image: bool,
    /// `entropy_trace.tsv`.
    pub entropy_trace: bool,
    /// `metrics.txt` and `metrics.json` (needs ground truth).
    pub metric_report: bool,
    /// `step_<k>.pfm` for every step prediction.
    pub snapshots: bool,
}

impl Default for EmitFlags {
    fn default() -> Self {
        Self { disparity_image: true, entropy_trace: true, metric_report: true, snapshots: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub matcher: MatcherConfig,
    #[serde(default)]
    pub sampler: SamplerConfig,
    pub input: InputSource,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub emit: EmitFlags,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.matcher.validate()?;
        cfg.sampler.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Creates the output directory and checks that it accepts files.
    pub fn prepare_output(&self) -> Result<()> {
        fs::create_dir_all(&self.output_dir)?;
        let probe = self.output_dir.join(".write-check");
        fs::write(&probe, b"")
            .and_then(|_| fs::remove_file(&probe))
            .map_err(|e| Error::Config(format!("output directory {} is not writable: {e}", self.output_dir.display())))
    }
}
