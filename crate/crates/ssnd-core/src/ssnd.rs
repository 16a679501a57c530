//! Stream assembly for separation-by-diarization: speaker embeddings from
//! single-talker frames, the two-stream interval assignment and its
//! no-overlap guarantee, embedding sequences and target streams, stitch-free
//! segment planning, and the separation loss.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::dsp::Spectrogram;
use crate::types::{ActivityMatrix, FrameGrid, Matrix, MultichannelAudio, SpeakerInterval};

#[derive(Debug, Clone, PartialEq)]
pub enum SsndError {
    /// More than two speakers overlap at the given instant; the two-stream
    /// assignment is undefined there.
    ThreeWayOverlap { at_ms: u64 },
    /// The speaker never appears alone; see the active-frame fallback.
    NoSoloFrames(String),
    MissingEmbedding(String),
    MissingSource(String),
    ShapeMismatch(String),
    /// Mixture-variance normalization of an all-zero segment.
    SilentSegment,
}

impl fmt::Display for SsndError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SsndError::ThreeWayOverlap { at_ms } => {
                write!(f, "three speakers overlap at {:.3} s", *at_ms as f64 / 1000.0)
            }
            SsndError::NoSoloFrames(s) => write!(f, "speaker {s} has no single-talker frames"),
            SsndError::MissingEmbedding(s) => write!(f, "no embedding for speaker {s}"),
            SsndError::MissingSource(s) => write!(f, "no source signal for speaker {s}"),
            SsndError::ShapeMismatch(what) => write!(f, "shape mismatch: {what}"),
            SsndError::SilentSegment => write!(f, "cannot normalize an all-zero segment"),
        }
    }
}

impl core::error::Error for SsndError {}

/// A speaker's representative embedding and how many frames produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerEmbedding {
    pub vector: Vec<f64>,
    pub speaker: String,
    pub n_frames: usize,
}

/// Which of the two streams each interval landed on. Within a stream the
/// assigned intervals are pairwise non-overlapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamAssignment {
    /// `(index into the input interval list, stream)` in onset order.
    pub entries: Vec<(usize, usize)>,
}

impl StreamAssignment {
    /// Interval indices per stream.
    pub fn per_stream(&self) -> [Vec<usize>; 2] {
        let mut out = [Vec::new(), Vec::new()];
        for &(interval, stream) in &self.entries {
            out[stream].push(interval);
        }
        out
    }

    pub fn stream_of(&self, interval: usize) -> Option<usize> {
        self.entries.iter().find(|&&(i, _)| i == interval).map(|&(_, s)| s)
    }
}

/// Frame-wise embedding vectors for one output stream; frames outside every
/// assigned interval are exactly zero (the silence embedding).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSequence {
    pub values: Matrix,
    pub grid: FrameGrid,
}

impl EmbeddingSequence {
    pub fn is_silent_frame(&self, t: usize) -> bool {
        self.values.row(t).iter().all(|&v| v == 0.0)
    }
}

/// One processing window of a segment plan. All times in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentWindow {
    pub start_ms: u64,
    pub end_ms: u64,
    pub emit_start_ms: u64,
    pub emit_end_ms: u64,
}

/// Windows of `size` every `shift`, each emitting only its trailing
/// `shift`-long portion (the first window emits everything). Emit regions
/// tile the session exactly once, so no cross-window stitching is needed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentPlan {
    pub size_ms: u64,
    pub shift_ms: u64,
    pub windows: Vec<SegmentWindow>,
}

/// Frames where speaker `c` is active and every other speaker is silent;
/// the set may be discontinuous.
pub fn single_talker_frames(activity: &ActivityMatrix, c: usize) -> Vec<usize> {
    assert!(c < activity.n_speakers());
    (0..activity.n_frames())
        .filter(|&t| activity.get(t, c) == 1 && activity.concurrency(t) == 1)
        .collect()
}

/// Averages the frame embeddings over the speaker's single-talker frames.
///
/// With `fallback_to_active` the average falls back to all frames where the
/// speaker is active when no solo frame exists (off by default in callers:
/// mixtures may simply not contain usable solo frames, and the caller must
/// opt into the weaker estimate).
pub fn extract_embedding(
    frame_embeddings: &Matrix,
    activity: &ActivityMatrix,
    c: usize,
    fallback_to_active: bool,
) -> Result<SpeakerEmbedding, SsndError> {
    if frame_embeddings.rows() != activity.n_frames() {
        return Err(SsndError::ShapeMismatch(String::from(
            "frame embeddings and activity disagree on frame count",
        )));
    }
    let mut frames = single_talker_frames(activity, c);
    if frames.is_empty() && fallback_to_active {
        frames = (0..activity.n_frames()).filter(|&t| activity.get(t, c) == 1).collect();
    }
    if frames.is_empty() {
        return Err(SsndError::NoSoloFrames(activity.speakers[c].clone()));
    }
    let dim = frame_embeddings.cols();
    let mut vector = vec![0.0f64; dim];
    for &t in &frames {
        for (acc, v) in vector.iter_mut().zip(frame_embeddings.row(t)) {
            *acc += v;
        }
    }
    let scale = 1.0 / frames.len() as f64;
    for v in vector.iter_mut() {
        *v *= scale;
    }
    Ok(SpeakerEmbedding {
        vector,
        speaker: activity.speakers[c].clone(),
        n_frames: frames.len(),
    })
}

/// Assigns onset-ordered intervals to two streams.
///
/// The first interval takes stream 0. At each onset, intervals ending at or
/// before the onset have left their stream (intervals are half-open). If
/// only one stream is free the interval takes it. If both are free, the
/// interval joins the stream of the most recently ended interval when the
/// speakers match, otherwise the other stream; "most recently ended" breaks
/// ties by latest end, then later onset, then stream 0.
///
/// Any instant with three concurrent intervals is reported as
/// [`SsndError::ThreeWayOverlap`].
pub fn assign_streams(intervals: &[SpeakerInterval]) -> Result<StreamAssignment, SsndError> {
    let mut order: Vec<usize> = (0..intervals.len()).collect();
    // Simultaneous onsets: longer interval first, then speaker id, then
    // input position; keeps the assignment deterministic.
    order.sort_by(|&a, &b| {
        let (ia, ib) = (&intervals[a], &intervals[b]);
        ia.start_ms
            .cmp(&ib.start_ms)
            .then(ib.duration_ms().cmp(&ia.duration_ms()))
            .then(ia.speaker.cmp(&ib.speaker))
            .then(a.cmp(&b))
    });

    #[derive(Clone, Copy)]
    struct Ended {
        end_ms: u64,
        start_ms: u64,
        stream: usize,
        interval: usize,
    }

    let mut occupied: [Option<usize>; 2] = [None, None];
    let mut last_ended: Option<Ended> = None;
    let mut entries = Vec::with_capacity(intervals.len());

    for &idx in &order {
        let onset = intervals[idx].start_ms;
        for stream in 0..2 {
            if let Some(j) = occupied[stream] {
                if intervals[j].end_ms <= onset {
                    occupied[stream] = None;
                    let candidate = Ended {
                        end_ms: intervals[j].end_ms,
                        start_ms: intervals[j].start_ms,
                        stream,
                        interval: j,
                    };
                    let better = match last_ended {
                        None => true,
                        Some(best) => {
                            (candidate.end_ms, candidate.start_ms, best.stream)
                                > (best.end_ms, best.start_ms, candidate.stream)
                        }
                    };
                    if better {
                        last_ended = Some(candidate);
                    }
                }
            }
        }
        let stream = match (occupied[0], occupied[1]) {
            (Some(_), Some(_)) => return Err(SsndError::ThreeWayOverlap { at_ms: onset }),
            (Some(_), None) => 1,
            (None, Some(_)) => 0,
            (None, None) => match last_ended {
                None => 0,
                Some(prev) => {
                    if intervals[prev.interval].speaker == intervals[idx].speaker {
                        prev.stream
                    } else {
                        1 - prev.stream
                    }
                }
            },
        };
        occupied[stream] = Some(idx);
        entries.push((idx, stream));
    }
    Ok(StreamAssignment { entries })
}

/// Paints each assigned interval's speaker embedding onto every frame of
/// that interval; everything else stays the zero (silence) embedding.
pub fn build_embedding_sequences(
    assignment: &StreamAssignment,
    embeddings: &BTreeMap<String, SpeakerEmbedding>,
    intervals: &[SpeakerInterval],
    grid: FrameGrid,
) -> Result<[EmbeddingSequence; 2], SsndError> {
    let dim = embeddings.values().next().map_or(0, |e| e.vector.len());
    let mut streams =
        [Matrix::zeros(grid.n_frames, dim), Matrix::zeros(grid.n_frames, dim)];
    for &(idx, stream) in &assignment.entries {
        let interval = &intervals[idx];
        let embedding = embeddings
            .get(&interval.speaker)
            .ok_or_else(|| SsndError::MissingEmbedding(interval.speaker.clone()))?;
        if embedding.vector.len() != dim {
            return Err(SsndError::ShapeMismatch(String::from("embedding dimensions differ")));
        }
        for t in grid.frames_covering(interval.start_ms, interval.end_ms) {
            streams[stream].row_mut(t).copy_from_slice(&embedding.vector);
        }
    }
    let [a, b] = streams;
    Ok([
        EmbeddingSequence { values: a, grid },
        EmbeddingSequence { values: b, grid },
    ])
}

/// Builds the two waveform target streams: within an assigned interval the
/// stream carries that speaker's reference source, elsewhere zero.
pub fn build_target_streams(
    assignment: &StreamAssignment,
    sources: &BTreeMap<String, Vec<f64>>,
    intervals: &[SpeakerInterval],
    sample_rate: u32,
    len_samples: usize,
) -> Result<[Vec<f64>; 2], SsndError> {
    let mut streams = [vec![0.0f64; len_samples], vec![0.0f64; len_samples]];
    for &(idx, stream) in &assignment.entries {
        let interval = &intervals[idx];
        let source = sources
            .get(&interval.speaker)
            .ok_or_else(|| SsndError::MissingSource(interval.speaker.clone()))?;
        let lo = ms_to_samples(interval.start_ms, sample_rate).min(len_samples).min(source.len());
        let hi = ms_to_samples(interval.end_ms, sample_rate).min(len_samples).min(source.len());
        streams[stream][lo..hi].copy_from_slice(&source[lo..hi]);
    }
    Ok(streams)
}

pub fn ms_to_samples(ms: u64, sample_rate: u32) -> usize {
    ((ms as u128 * sample_rate as u128) / 1000) as usize
}

/// Segment plan covering `[0, session_len_ms)`; see [`SegmentPlan`].
pub fn plan_segments(session_len_ms: u64, size_ms: u64, shift_ms: u64) -> SegmentPlan {
    assert!(shift_ms > 0 && size_ms >= shift_ms, "need size >= shift > 0");
    let mut windows = Vec::new();
    if session_len_ms > 0 {
        let mut k = 0u64;
        loop {
            let start = k * shift_ms;
            let end = start + size_ms;
            let emit_start = if k == 0 { 0 } else { end - shift_ms };
            let emit_end = end.min(session_len_ms);
            windows.push(SegmentWindow { start_ms: start, end_ms: end, emit_start_ms: emit_start, emit_end_ms: emit_end });
            if emit_end >= session_len_ms {
                break;
            }
            k += 1;
        }
    }
    SegmentPlan { size_ms, shift_ms, windows }
}

/// Scales a mixture segment so its sample variance is exactly one and
/// applies the identical scale to the targets.
pub fn normalize_mixture(
    mixture: &MultichannelAudio,
    targets: &[Vec<f64>],
) -> Result<(MultichannelAudio, Vec<Vec<f64>>, f64), SsndError> {
    let n: usize = mixture.n_channels() * mixture.len();
    if n == 0 {
        return Err(SsndError::SilentSegment);
    }
    let mut mean = 0.0;
    for ch in mixture.channels() {
        for &v in ch {
            mean += v;
        }
    }
    mean /= n as f64;
    let mut var = 0.0;
    for ch in mixture.channels() {
        for &v in ch {
            var += (v - mean) * (v - mean);
        }
    }
    var /= n as f64;
    if var <= 0.0 {
        return Err(SsndError::SilentSegment);
    }
    let scale = 1.0 / libm::sqrt(var);
    let mut scaled = mixture.clone();
    for c in 0..scaled.n_channels() {
        for v in scaled.channel_mut(c) {
            *v *= scale;
        }
    }
    let scaled_targets = targets
        .iter()
        .map(|t| t.iter().map(|&v| v * scale).collect())
        .collect();
    Ok((scaled, scaled_targets, scale))
}

/// L1 loss on real and imaginary parts plus an L1 magnitude term, averaged
/// over the two streams.
pub fn separation_loss(
    estimates: &[Spectrogram; 2],
    targets: &[Spectrogram; 2],
) -> Result<f64, SsndError> {
    let mut total = 0.0;
    for (est, tgt) in estimates.iter().zip(targets) {
        if !est.same_shape(tgt) {
            return Err(SsndError::ShapeMismatch(String::from("spectrogram shapes differ")));
        }
        for t in 0..est.n_frames() {
            for (a, b) in est.frame(t).iter().zip(tgt.frame(t)) {
                total += (a.re - b.re).abs() + (a.im - b.im).abs() + (a.norm() - b.norm()).abs();
            }
        }
    }
    Ok(0.5 * total)
}

/// Everything the separator needs for one session: assignment, embedding
/// sequences, and waveform target streams.
#[derive(Debug, Clone)]
pub struct Assembly {
    pub assignment: StreamAssignment,
    pub sequences: [EmbeddingSequence; 2],
    pub targets: [Vec<f64>; 2],
}

/// Composes assignment, embedding sequences, and target streams.
pub fn assemble(
    intervals: &[SpeakerInterval],
    embeddings: &BTreeMap<String, SpeakerEmbedding>,
    sources: &BTreeMap<String, Vec<f64>>,
    grid: FrameGrid,
    sample_rate: u32,
    len_samples: usize,
) -> Result<Assembly, SsndError> {
    let assignment = assign_streams(intervals)?;
    let sequences = build_embedding_sequences(&assignment, embeddings, intervals, grid)?;
    let targets =
        build_target_streams(&assignment, sources, intervals, sample_rate, len_samples)?;
    Ok(Assembly { assignment, sequences, targets })
}
