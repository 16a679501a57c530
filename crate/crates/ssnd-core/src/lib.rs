//! Core algorithms for speaker separation via neural diarization.
//!
//! This crate holds the pure, deterministic parts of the pipeline: frame-grid
//! arithmetic and domain types, the feature frontend (STFT, log-Mel, IPD),
//! meeting-style session simulation, permutation-resolution training criteria
//! (azimuth ordering and PIT with brute-force and Hungarian search),
//! diarization post-processing, the two-stream interval assignment with its
//! no-overlap guarantee, and DER/WER/cpWER scoring.
//!
//! Everything here is `no_std` + `alloc`; file formats, model adapters, and
//! the command-line tool live in the companion `ssnd-pipeline` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod criteria;
pub mod diarpost;
pub mod dsp;
pub mod fft;
pub mod metrics;
pub mod rng;
pub mod simulate;
pub mod ssnd;
pub mod types;

pub use num_complex::Complex64;
pub use types::{
    ActivityMatrix, FrameGrid, Matrix, MultichannelAudio, PosteriorMatrix, SpeakerInterval,
};
