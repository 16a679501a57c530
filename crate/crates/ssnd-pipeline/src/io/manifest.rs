//! Transcript manifests: one tab-separated record per utterance,
//! `session<TAB>speaker<TAB>start_s<TAB>end_s<TAB>text`.

use std::fmt::Write as _;
use std::path::Path;

use ssnd_core::metrics::{normalize_text, TranscriptSegment};

use crate::{PipelineError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRecord {
    pub session: String,
    pub speaker: String,
    pub start_ms: u64,
    pub end_ms: u64,
    pub text: String,
}

impl ManifestRecord {
    /// Tokenized segment for scoring; normalization lowercases and strips
    /// punctuation unless disabled.
    pub fn to_segment(&self, normalize: bool) -> TranscriptSegment {
        let words = if normalize {
            normalize_text(&self.text)
        } else {
            self.text.split_whitespace().map(str::to_string).collect()
        };
        TranscriptSegment {
            speaker: self.speaker.clone(),
            start_ms: self.start_ms,
            end_ms: self.end_ms,
            words,
        }
    }
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    let mut records = Vec::new();
    for (index, line) in text.lines().enumerate() {
        let line_no = index + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.splitn(5, '\t').collect();
        if fields.len() != 5 {
            return Err(PipelineError::Parse {
                path: path.into(),
                line: line_no,
                message: format!("expected 5 tab-separated fields, got {}", fields.len()),
            });
        }
        let time = |s: &str| -> std::result::Result<u64, PipelineError> {
            let v: f64 = s.parse().map_err(|_| PipelineError::Parse {
                path: path.into(),
                line: line_no,
                message: format!("bad time {s:?}"),
            })?;
            Ok((v * 1000.0).round() as u64)
        };
        records.push(ManifestRecord {
            session: fields[0].to_string(),
            speaker: fields[1].to_string(),
            start_ms: time(fields[2])?,
            end_ms: time(fields[3])?,
            text: fields[4].to_string(),
        });
    }
    Ok(records)
}

pub fn format_manifest(records: &[ManifestRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let _ = writeln!(
            out,
            "{}\t{}\t{:.3}\t{:.3}\t{}",
            r.session,
            r.speaker,
            r.start_ms as f64 / 1000.0,
            r.end_ms as f64 / 1000.0,
            r.text
        );
    }
    out
}

pub fn write_manifest(records: &[ManifestRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_manifest(records)).map_err(|e| PipelineError::io(path, e))
}
