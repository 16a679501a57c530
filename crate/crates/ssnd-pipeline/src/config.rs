//! Pipeline configuration: a TOML key-value tree mirrored onto
//! [`PipelineConfig`]. `SSND_CONFIG` names a default config file.

use std::path::Path;

use serde::{Deserialize, Serialize};
use ssnd_core::diarpost::PostProcessConfig;
use ssnd_core::dsp::StftConfig;

use crate::{PipelineError, Result};

pub const CONFIG_ENV_VAR: &str = "SSND_CONFIG";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
#[derive(Default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub stft: StftSection,
    pub post: PostSection,
    pub segments: SegmentSection,
    pub models: ModelSection,
    pub scoring: ScoringSection,
    pub embedding: EmbeddingSection,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct StftSection {
    pub window_ms: u32,
    pub shift_ms: u32,
    pub dft_size: usize,
    pub sample_rate: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct PostSection {
    pub threshold: f64,
    pub median_len: usize,
    /// Decision-grid hop. The default matches the simulator's boundary
    /// quantum so oracle posteriors rasterize and de-rasterize exactly.
    pub frame_shift_ms: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SegmentSection {
    pub size_s: f64,
    pub shift_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct ModelSection {
    /// `oracle` or `exec:<command>`.
    pub diarizer: String,
    pub separator: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct ScoringSection {
    pub der_resolution_ms: u32,
    pub collar_s: f64,
    pub normalize_text: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
#[derive(Default)]
pub struct EmbeddingSection {
    /// Fall back to active (non-solo) frames when a speaker never appears
    /// alone.
    pub fallback_to_active: bool,
}


impl Default for StftSection {
    fn default() -> Self {
        StftSection { window_ms: 25, shift_ms: 10, dft_size: 512, sample_rate: 16000 }
    }
}

impl Default for PostSection {
    fn default() -> Self {
        PostSection { threshold: 0.5, median_len: 31, frame_shift_ms: 10 }
    }
}

impl Default for SegmentSection {
    fn default() -> Self {
        SegmentSection { size_s: 30.0, shift_s: 27.0 }
    }
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection { diarizer: "oracle".into(), separator: "oracle".into() }
    }
}

impl Default for ScoringSection {
    fn default() -> Self {
        ScoringSection { der_resolution_ms: 10, collar_s: 0.0, normalize_text: true }
    }
}


impl PipelineConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let config: PipelineConfig = toml::from_str(&text).map_err(|e| PipelineError::Parse {
            path: path.into(),
            line: 0,
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Explicit path, else `SSND_CONFIG`, else defaults.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        if let Some(p) = path {
            return Self::from_path(p);
        }
        if let Ok(p) = std::env::var(CONFIG_ENV_VAR) {
            return Self::from_path(Path::new(&p));
        }
        Ok(Self::default())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if !(0.0..=1.0).contains(&self.post.threshold)
            || self.post.threshold == 0.0
            || self.post.threshold == 1.0
        {
            return bad(format!("threshold {} must lie strictly in (0, 1)", self.post.threshold));
        }
        if self.post.median_len.is_multiple_of(2) || self.post.median_len == 0 {
            return bad(format!("median_len {} must be odd", self.post.median_len));
        }
        if self.post.frame_shift_ms == 0 {
            return bad("frame_shift_ms must be positive".into());
        }
        if self.segments.shift_s <= 0.0 || self.segments.size_s < self.segments.shift_s {
            return bad(format!(
                "segments need size >= shift > 0, got {}/{}",
                self.segments.size_s, self.segments.shift_s
            ));
        }
        let shift_ms = (self.segments.shift_s * 1000.0).round() as u64;
        let size_ms = (self.segments.size_s * 1000.0).round() as u64;
        if !shift_ms.is_multiple_of(self.post.frame_shift_ms as u64)
            || !size_ms.is_multiple_of(self.post.frame_shift_ms as u64)
        {
            return bad("segment size/shift must be whole frames".into());
        }
        if self.scoring.der_resolution_ms == 0 {
            return bad("der_resolution_ms must be positive".into());
        }
        if self.stft.shift_ms == 0 || self.stft.window_ms < self.stft.shift_ms {
            return bad("stft needs window >= shift > 0".into());
        }
        if !self.stft.dft_size.is_power_of_two() {
            return bad(format!("dft_size {} must be a power of two", self.stft.dft_size));
        }
        for (name, spec) in
            [("diarizer", &self.models.diarizer), ("separator", &self.models.separator)]
        {
            if spec != "oracle" && !spec.starts_with("exec:") {
                return bad(format!("{name} must be \"oracle\" or \"exec:<command>\", got {spec:?}"));
            }
        }
        Ok(())
    }

    pub fn stft_config(&self) -> StftConfig {
        StftConfig::new(
            self.stft.window_ms,
            self.stft.shift_ms,
            self.stft.dft_size,
            self.stft.sample_rate,
        )
    }

    pub fn post_config(&self) -> PostProcessConfig {
        PostProcessConfig {
            threshold: self.post.threshold,
            median_len: self.post.median_len,
            frame_shift_ms: self.post.frame_shift_ms,
        }
    }

    pub fn segment_size_ms(&self) -> u64 {
        (self.segments.size_s * 1000.0).round() as u64
    }

    pub fn segment_shift_ms(&self) -> u64 {
        (self.segments.shift_s * 1000.0).round() as u64
    }
}
