//! On-disk formats: WAV audio, RTTM diarization records, transcript
//! manifests, the binary matrix dump, and session directories.

pub mod manifest;
pub mod matrix;
pub mod rttm;
pub mod session;
pub mod wav;
