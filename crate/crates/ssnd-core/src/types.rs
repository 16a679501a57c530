//! Shared domain types and frame-grid arithmetic.
//!
//! All interval arithmetic runs on integer milliseconds to avoid float drift;
//! seconds only appear at API boundaries. Intervals are half-open
//! `[start, end)`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Rounds seconds to the nearest integer millisecond.
pub fn seconds_to_ms(seconds: f64) -> u64 {
    assert!(seconds >= 0.0 && seconds.is_finite(), "time must be finite and nonnegative");
    libm::round(seconds * 1000.0) as u64
}

/// Milliseconds to seconds.
pub fn ms_to_seconds(ms: u64) -> f64 {
    ms as f64 / 1000.0
}

/// Errors from domain-type construction and conversions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DomainError {
    /// An interval names a speaker missing from the declared ordering.
    UnknownSpeaker(String),
    /// Channels of a multichannel buffer differ in length.
    ChannelLengthMismatch { expected: usize, got: usize },
    /// Reference channel index out of range.
    BadReferenceChannel { reference: usize, channels: usize },
    /// Geometry entry count does not match the channel count.
    GeometryLengthMismatch { channels: usize, positions: usize },
    /// Azimuth count does not match the speaker count.
    AzimuthLengthMismatch { speakers: usize, azimuths: usize },
    /// Audio with zero channels or zero samples where content is required.
    EmptyAudio,
}

impl fmt::Display for DomainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainError::UnknownSpeaker(s) => write!(f, "unknown speaker in intervals: {s}"),
            DomainError::ChannelLengthMismatch { expected, got } => {
                write!(f, "channel length mismatch: expected {expected}, got {got}")
            }
            DomainError::BadReferenceChannel { reference, channels } => {
                write!(f, "reference channel {reference} out of range for {channels} channels")
            }
            DomainError::GeometryLengthMismatch { channels, positions } => {
                write!(f, "geometry has {positions} positions for {channels} channels")
            }
            DomainError::AzimuthLengthMismatch { speakers, azimuths } => {
                write!(f, "{azimuths} azimuths for {speakers} speakers")
            }
            DomainError::EmptyAudio => write!(f, "empty audio buffer"),
        }
    }
}

impl core::error::Error for DomainError {}

/// A uniform analysis grid: frame `t` covers `[t*shift, t*shift + window)` ms.
///
/// `window_ms >= shift_ms` holds for grids built with [`FrameGrid::new`];
/// grids produced by [`FrameGrid::subsampled`] keep their original analysis
/// window, so there the shift may exceed the window (frames no longer tile
/// the timeline but their centers are unchanged).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameGrid {
    pub shift_ms: u32,
    pub window_ms: u32,
    pub n_frames: usize,
}

impl FrameGrid {
    pub fn new(shift_ms: u32, window_ms: u32, n_frames: usize) -> Self {
        assert!(shift_ms > 0, "frame shift must be positive");
        assert!(window_ms >= shift_ms, "analysis window must cover at least one hop");
        FrameGrid { shift_ms, window_ms, n_frames }
    }

    /// Grid whose window equals its hop. Decision grids (thresholding,
    /// median filtering, interval extraction) use this form: rasterization
    /// and interval extraction are then mutually inverse.
    pub fn hop_aligned(shift_ms: u32, n_frames: usize) -> Self {
        FrameGrid::new(shift_ms, shift_ms, n_frames)
    }

    /// Smallest hop-aligned grid covering `[0, len_ms)`.
    pub fn covering(len_ms: u64, shift_ms: u32) -> Self {
        let n = len_ms.div_ceil(shift_ms as u64);
        FrameGrid::hop_aligned(shift_ms, n as usize)
    }

    pub fn frame_start_ms(&self, t: usize) -> u64 {
        t as u64 * self.shift_ms as u64
    }

    /// Frame-center time in half-millisecond units (`2*center_ms`), exact in
    /// integers even for odd windows.
    pub fn frame_center_twice_ms(&self, t: usize) -> u64 {
        2 * t as u64 * self.shift_ms as u64 + self.window_ms as u64
    }

    pub fn frame_center_s(&self, t: usize) -> f64 {
        self.frame_center_twice_ms(t) as f64 / 2000.0
    }

    /// Keeps frames `0, factor, 2*factor, ...`; the hop grows by `factor`,
    /// the analysis window is unchanged so surviving frame centers agree
    /// with the original grid.
    pub fn subsampled(&self, factor: usize) -> Self {
        assert!(factor >= 1, "subsample factor must be >= 1");
        FrameGrid {
            shift_ms: self.shift_ms * factor as u32,
            window_ms: self.window_ms,
            n_frames: if self.n_frames == 0 { 0 } else { (self.n_frames - 1) / factor + 1 },
        }
    }

    /// End of the last frame's span, in ms (zero-frame grids cover nothing).
    pub fn span_ms(&self) -> u64 {
        if self.n_frames == 0 {
            0
        } else {
            (self.n_frames as u64 - 1) * self.shift_ms as u64 + self.window_ms as u64
        }
    }

    /// Frames whose center lies inside `[start_ms, end_ms)`, as a
    /// `lo..hi` index range clamped to the grid.
    pub fn frames_covering(&self, start_ms: u64, end_ms: u64) -> core::ops::Range<usize> {
        if end_ms <= start_ms || self.n_frames == 0 {
            return 0..0;
        }
        let h2 = 2 * self.shift_ms as i64;
        let w = self.window_ms as i64;
        // center(t) = t*h2 + w (in half-ms); want 2*start <= center < 2*end
        let lo = div_ceil(2 * start_ms as i64 - w, h2).max(0);
        let hi = div_ceil(2 * end_ms as i64 - w, h2).max(0);
        let lo = (lo as usize).min(self.n_frames);
        let hi = (hi as usize).min(self.n_frames);
        lo..hi.max(lo)
    }
}

fn div_ceil(a: i64, b: i64) -> i64 {
    debug_assert!(b > 0);
    let q = a / b;
    if a % b > 0 {
        q + 1
    } else {
        q
    }
}

/// A speech-activity span of one speaker, half-open `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SpeakerInterval {
    pub speaker: String,
    pub start_ms: u64,
    pub end_ms: u64,
}

impl SpeakerInterval {
    pub fn new(speaker: impl Into<String>, start_s: f64, end_s: f64) -> Self {
        Self::from_ms(speaker, seconds_to_ms(start_s), seconds_to_ms(end_s))
    }

    pub fn from_ms(speaker: impl Into<String>, start_ms: u64, end_ms: u64) -> Self {
        assert!(start_ms < end_ms, "interval must have positive duration");
        SpeakerInterval { speaker: speaker.into(), start_ms, end_ms }
    }

    pub fn start_s(&self) -> f64 {
        ms_to_seconds(self.start_ms)
    }

    pub fn end_s(&self) -> f64 {
        ms_to_seconds(self.end_ms)
    }

    pub fn duration_ms(&self) -> u64 {
        self.end_ms - self.start_ms
    }

    pub fn overlaps(&self, other: &SpeakerInterval) -> bool {
        self.start_ms < other.end_ms && other.start_ms < self.end_ms
    }
}

/// Dense row-major `rows x cols` matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for r in &rows {
            assert_eq!(r.len(), n_cols, "ragged matrix rows");
            data.extend_from_slice(r);
        }
        Matrix { rows: n_rows, cols: n_cols, data }
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "flat data does not match dimensions");
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Sampled multichannel waveform with optional microphone geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct MultichannelAudio {
    channels: Vec<Vec<f64>>,
    pub sample_rate: u32,
    /// Microphone positions in meters, one per channel, when known.
    pub geometry: Option<Vec<[f64; 3]>>,
    pub ref_channel: usize,
}

impl MultichannelAudio {
    pub fn new(
        channels: Vec<Vec<f64>>,
        sample_rate: u32,
        geometry: Option<Vec<[f64; 3]>>,
        ref_channel: usize,
    ) -> Result<Self, DomainError> {
        if channels.is_empty() {
            return Err(DomainError::EmptyAudio);
        }
        let len = channels[0].len();
        for ch in &channels {
            if ch.len() != len {
                return Err(DomainError::ChannelLengthMismatch { expected: len, got: ch.len() });
            }
        }
        if ref_channel >= channels.len() {
            return Err(DomainError::BadReferenceChannel {
                reference: ref_channel,
                channels: channels.len(),
            });
        }
        if let Some(g) = &geometry {
            if g.len() != channels.len() {
                return Err(DomainError::GeometryLengthMismatch {
                    channels: channels.len(),
                    positions: g.len(),
                });
            }
        }
        Ok(MultichannelAudio { channels, sample_rate, geometry, ref_channel })
    }

    pub fn mono(samples: Vec<f64>, sample_rate: u32) -> Self {
        MultichannelAudio { channels: vec![samples], sample_rate, geometry: None, ref_channel: 0 }
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channel(&self, i: usize) -> &[f64] {
        &self.channels[i]
    }

    pub fn channel_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.channels[i]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn reference(&self) -> &[f64] {
        &self.channels[self.ref_channel]
    }

    pub fn duration_ms(&self) -> u64 {
        (self.len() as u64 * 1000) / self.sample_rate as u64
    }
}

/// Frame-wise binary speaker activity on a declared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityMatrix {
    pub grid: FrameGrid,
    values: Vec<u8>,
    pub speakers: Vec<String>,
    /// Per-speaker azimuths in degrees, when the session geometry is known.
    pub azimuths: Option<Vec<f64>>,
}

impl ActivityMatrix {
    pub fn zeros(grid: FrameGrid, speakers: Vec<String>) -> Self {
        let n = grid.n_frames * speakers.len();
        ActivityMatrix { grid, values: vec![0; n], speakers, azimuths: None }
    }

    pub fn with_azimuths(mut self, azimuths: Vec<f64>) -> Result<Self, DomainError> {
        if azimuths.len() != self.speakers.len() {
            return Err(DomainError::AzimuthLengthMismatch {
                speakers: self.speakers.len(),
                azimuths: azimuths.len(),
            });
        }
        self.azimuths = Some(azimuths);
        Ok(self)
    }

    pub fn n_frames(&self) -> usize {
        self.grid.n_frames
    }

    pub fn n_speakers(&self) -> usize {
        self.speakers.len()
    }

    pub fn get(&self, t: usize, c: usize) -> u8 {
        self.values[t * self.speakers.len() + c]
    }

    pub fn set(&mut self, t: usize, c: usize, v: u8) {
        debug_assert!(v <= 1);
        self.values[t * self.speakers.len() + c] = v;
    }

    pub fn frame(&self, t: usize) -> &[u8] {
        let c = self.speakers.len();
        &self.values[t * c..(t + 1) * c]
    }

    /// Number of active speakers at frame `t`.
    pub fn concurrency(&self, t: usize) -> usize {
        self.frame(t).iter().map(|&v| v as usize).sum()
    }
}

/// Frame-wise speech activity probabilities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMatrix {
    pub grid: FrameGrid,
    values: Matrix,
    pub speakers: Vec<String>,
}

impl PosteriorMatrix {
    pub fn new(grid: FrameGrid, values: Matrix, speakers: Vec<String>) -> Self {
        assert_eq!(values.rows(), grid.n_frames, "posterior rows must match grid");
        assert_eq!(values.cols(), speakers.len(), "posterior cols must match speakers");
        assert!(
            values.data().iter().all(|&p| (0.0..=1.0).contains(&p)),
            "posteriors must lie in [0, 1]"
        );
        PosteriorMatrix { grid, values, speakers }
    }

    /// Hard 0/1 posteriors copying an activity matrix.
    pub fn from_activity(act: &ActivityMatrix) -> Self {
        let mut m = Matrix::zeros(act.n_frames(), act.n_speakers());
        for t in 0..act.n_frames() {
            for c in 0..act.n_speakers() {
                m.set(t, c, act.get(t, c) as f64);
            }
        }
        PosteriorMatrix { grid: act.grid, values: m, speakers: act.speakers.clone() }
    }

    pub fn n_frames(&self) -> usize {
        self.grid.n_frames
    }

    pub fn n_speakers(&self) -> usize {
        self.speakers.len()
    }

    pub fn get(&self, t: usize, c: usize) -> f64 {
        self.values.get(t, c)
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        self.values.row(t)
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    /// Keeps every `factor`-th frame; the grid hop grows accordingly.
    pub fn subsample(&self, factor: usize) -> Self {
        let grid = self.grid.subsampled(factor);
        let mut m = Matrix::zeros(grid.n_frames, self.n_speakers());
        for (i, t) in (0..self.n_frames()).step_by(factor).enumerate() {
            m.row_mut(i).copy_from_slice(self.values.row(t));
        }
        PosteriorMatrix { grid, values: m, speakers: self.speakers.clone() }
    }
}

/// Rasterizes intervals onto a grid: frame `t` is active for a speaker iff
/// the frame center lies inside one of that speaker's intervals.
pub fn intervals_to_activity(
    intervals: &[SpeakerInterval],
    grid: FrameGrid,
    speakers: &[String],
) -> Result<ActivityMatrix, DomainError> {
    let mut act = ActivityMatrix::zeros(grid, speakers.to_vec());
    for iv in intervals {
        let c = speakers
            .iter()
            .position(|s| *s == iv.speaker)
            .ok_or_else(|| DomainError::UnknownSpeaker(iv.speaker.clone()))?;
        for t in grid.frames_covering(iv.start_ms, iv.end_ms) {
            act.set(t, c, 1);
        }
    }
    Ok(act)
}

/// Extracts maximal per-speaker runs of active frames as intervals on the
/// frame-start lattice: a run `t0..=t1` becomes `[t0*shift, (t1+1)*shift)`.
///
/// Together with [`intervals_to_activity`] this is the identity on
/// hop-aligned grids; in general each boundary may move by up to one frame.
pub fn activity_to_intervals(act: &ActivityMatrix) -> Vec<SpeakerInterval> {
    let shift = act.grid.shift_ms as u64;
    let mut out = Vec::new();
    for c in 0..act.n_speakers() {
        let mut run_start: Option<usize> = None;
        for t in 0..=act.n_frames() {
            let on = t < act.n_frames() && act.get(t, c) == 1;
            match (on, run_start) {
                (true, None) => run_start = Some(t),
                (false, Some(t0)) => {
                    out.push(SpeakerInterval::from_ms(
                        act.speakers[c].clone(),
                        t0 as u64 * shift,
                        t as u64 * shift,
                    ));
                    run_start = None;
                }
                _ => {}
            }
        }
    }
    out.sort_by(|a, b| (a.start_ms, a.end_ms, &a.speaker).cmp(&(b.start_ms, b.end_ms, &b.speaker)));
    out
}
