//! Session directories: mixture and per-speaker WAVs, ground-truth RTTM,
//! transcript manifest, and a TOML session manifest carrying azimuths,
//! levels, seed, and recipe.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use ssnd_core::simulate::{NoiseKind, Session, SessionSpec};

use crate::io::manifest::{write_manifest, ManifestRecord};
use crate::io::rttm::{read_rttm, write_rttm};
use crate::io::wav::{read_wav, write_mono, write_wav, WavEncoding};
use crate::{PipelineError, Result};

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionManifest {
    pub session: String,
    pub measured_overlap: f64,
    pub snr_db: Option<f64>,
    pub speakers: Vec<String>,
    pub azimuths: Vec<f64>,
    pub levels_db: Vec<f64>,
    pub sample_rate: u32,
    pub ref_channel: usize,
    pub geometry: Vec<[f64; 3]>,
    pub spec: SpecManifest,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SpecManifest {
    pub n_speakers: usize,
    pub utterances_per_speaker: [u32; 2],
    pub utterance_len_range_s: [f64; 2],
    pub overlap_range: [f64; 2],
    pub silence_range_s: [f64; 2],
    pub silence_prob: f64,
    pub level_range_db: [f64; 2],
    pub snr_range_db: [f64; 2],
    pub noise: String,
    pub min_azimuth_sep_deg: f64,
    pub max_pair_overlap: f64,
    pub sample_rate: u32,
    pub boundary_quantum_ms: u32,
    pub seed: u64,
}

pub fn noise_kind_name(kind: NoiseKind) -> String {
    match kind {
        NoiseKind::None => "none".into(),
        NoiseKind::Uncorrelated => "uncorrelated".into(),
        NoiseKind::Diffuse { directions } => format!("diffuse:{directions}"),
    }
}

pub fn parse_noise_kind(name: &str) -> Option<NoiseKind> {
    match name {
        "none" => Some(NoiseKind::None),
        "uncorrelated" => Some(NoiseKind::Uncorrelated),
        other => other.strip_prefix("diffuse:").and_then(|d| d.parse().ok()).map(
            |directions| NoiseKind::Diffuse { directions },
        ),
    }
}

impl From<&SessionSpec> for SpecManifest {
    fn from(spec: &SessionSpec) -> Self {
        SpecManifest {
            n_speakers: spec.n_speakers,
            utterances_per_speaker: [spec.utterances_per_speaker.0, spec.utterances_per_speaker.1],
            utterance_len_range_s: [spec.utterance_len_range_s.0, spec.utterance_len_range_s.1],
            overlap_range: [spec.overlap_range.0, spec.overlap_range.1],
            silence_range_s: [spec.silence_range_s.0, spec.silence_range_s.1],
            silence_prob: spec.silence_prob,
            level_range_db: [spec.level_range_db.0, spec.level_range_db.1],
            snr_range_db: [spec.snr_range_db.0, spec.snr_range_db.1],
            noise: noise_kind_name(spec.noise),
            min_azimuth_sep_deg: spec.min_azimuth_sep_deg,
            max_pair_overlap: spec.max_pair_overlap,
            sample_rate: spec.sample_rate,
            boundary_quantum_ms: spec.boundary_quantum_ms,
            seed: spec.seed,
        }
    }
}

impl SpecManifest {
    pub fn to_spec(&self) -> Result<SessionSpec> {
        Ok(SessionSpec {
            n_speakers: self.n_speakers,
            utterances_per_speaker: (self.utterances_per_speaker[0], self.utterances_per_speaker[1]),
            utterance_len_range_s: (self.utterance_len_range_s[0], self.utterance_len_range_s[1]),
            overlap_range: (self.overlap_range[0], self.overlap_range[1]),
            silence_range_s: (self.silence_range_s[0], self.silence_range_s[1]),
            silence_prob: self.silence_prob,
            level_range_db: (self.level_range_db[0], self.level_range_db[1]),
            snr_range_db: (self.snr_range_db[0], self.snr_range_db[1]),
            noise: parse_noise_kind(&self.noise)
                .ok_or_else(|| PipelineError::Config(format!("unknown noise kind {:?}", self.noise)))?,
            min_azimuth_sep_deg: self.min_azimuth_sep_deg,
            max_pair_overlap: self.max_pair_overlap,
            sample_rate: self.sample_rate,
            boundary_quantum_ms: self.boundary_quantum_ms,
            seed: self.seed,
        })
    }
}

/// Writes the full session directory; file names are fixed so sessions can
/// be reloaded or consumed by external tools.
pub fn save_session(session: &Session, name: &str, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    write_wav(&session.mixture, dir.join("mixture.wav"), WavEncoding::Float32)?;
    for (speaker, source) in &session.sources {
        write_mono(
            source,
            session.mixture.sample_rate,
            dir.join(format!("source_{speaker}.wav")),
            WavEncoding::Float32,
        )?;
    }
    write_rttm(&session.intervals, name, dir.join("session.rttm"))?;
    let records: Vec<ManifestRecord> = session
        .transcripts
        .iter()
        .map(|t| ManifestRecord {
            session: name.to_string(),
            speaker: t.speaker.clone(),
            start_ms: t.start_ms,
            end_ms: t.end_ms,
            text: t.words.join(" "),
        })
        .collect();
    write_manifest(&records, dir.join("transcripts.tsv"))?;
    let manifest = SessionManifest {
        session: name.to_string(),
        measured_overlap: session.measured_overlap,
        snr_db: session.snr_db,
        speakers: session.speakers.clone(),
        azimuths: session.azimuths.clone(),
        levels_db: session.levels_db.clone(),
        sample_rate: session.mixture.sample_rate,
        ref_channel: session.mixture.ref_channel,
        geometry: session.mixture.geometry.clone().unwrap_or_default(),
        spec: SpecManifest::from(&session.spec),
    };
    let text = toml::to_string(&manifest)
        .map_err(|e| PipelineError::Config(format!("manifest serialization: {e}")))?;
    std::fs::write(dir.join("session.toml"), text)
        .map_err(|e| PipelineError::io(dir.join("session.toml"), e))
}

/// Reloads a directory written by [`save_session`].
pub fn load_session(dir: impl AsRef<Path>) -> Result<Session> {
    let dir = dir.as_ref();
    let manifest_path = dir.join("session.toml");
    let text = std::fs::read_to_string(&manifest_path)
        .map_err(|e| PipelineError::io(&manifest_path, e))?;
    let manifest: SessionManifest = toml::from_str(&text).map_err(|e| PipelineError::Parse {
        path: manifest_path.clone(),
        line: 0,
        message: e.to_string(),
    })?;
    let mut mixture = read_wav(dir.join("mixture.wav"))?;
    mixture.ref_channel = manifest.ref_channel;
    if !manifest.geometry.is_empty() {
        mixture.geometry = Some(manifest.geometry.clone());
    }
    let mut sources = BTreeMap::new();
    for speaker in &manifest.speakers {
        let audio = read_wav(dir.join(format!("source_{speaker}.wav")))?;
        sources.insert(speaker.clone(), audio.channel(0).to_vec());
    }
    let intervals = read_rttm(dir.join("session.rttm"))?;
    let records = crate::io::manifest::read_manifest(dir.join("transcripts.tsv"))?;
    let transcripts = records.iter().map(|r| r.to_segment(false)).collect();
    Ok(Session {
        mixture,
        sources,
        intervals,
        speakers: manifest.speakers,
        azimuths: manifest.azimuths,
        levels_db: manifest.levels_db,
        transcripts,
        measured_overlap: manifest.measured_overlap,
        snr_db: manifest.snr_db,
        spec: manifest.spec.to_spec()?,
    })
}
