//! RTTM SPEAKER records, the diarization interchange format.
//!
//! Lines look like
//! `SPEAKER <session> 1 <onset_s> <duration_s> <NA> <NA> <speaker> <NA> <NA>`;
//! times are written with millisecond precision. Non-SPEAKER record types
//! are skipped.

use std::fmt::Write as _;
use std::path::Path;

use ssnd_core::types::SpeakerInterval;

use crate::{PipelineError, Result};

pub fn read_rttm(path: impl AsRef<Path>) -> Result<Vec<SpeakerInterval>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    parse_rttm(&text).map_err(|(line, message)| PipelineError::Parse {
        path: path.into(),
        line,
        message,
    })
}

pub fn parse_rttm(text: &str) -> std::result::Result<Vec<SpeakerInterval>, (usize, String)> {
    let mut intervals = Vec::new();
    for (index, line) in text.lines().enumerate() {
        let line_no = index + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with(';') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields[0] != "SPEAKER" {
            continue;
        }
        if fields.len() < 8 {
            return Err((line_no, format!("expected >= 8 fields, got {}", fields.len())));
        }
        let onset: f64 = fields[3]
            .parse()
            .map_err(|_| (line_no, format!("bad onset {:?}", fields[3])))?;
        let duration: f64 = fields[4]
            .parse()
            .map_err(|_| (line_no, format!("bad duration {:?}", fields[4])))?;
        if onset < 0.0 || duration <= 0.0 {
            return Err((line_no, format!("bad span: onset {onset}, duration {duration}")));
        }
        intervals.push(SpeakerInterval::new(fields[7], onset, onset + duration));
    }
    Ok(intervals)
}

pub fn format_rttm(intervals: &[SpeakerInterval], session: &str) -> String {
    let mut out = String::new();
    for iv in intervals {
        let _ = writeln!(
            out,
            "SPEAKER {session} 1 {:.3} {:.3} <NA> <NA> {} <NA> <NA>",
            iv.start_s(),
            (iv.end_ms - iv.start_ms) as f64 / 1000.0,
            iv.speaker
        );
    }
    out
}

pub fn write_rttm(
    intervals: &[SpeakerInterval],
    session: &str,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_rttm(intervals, session))
        .map_err(|e| PipelineError::io(path, e))
}
