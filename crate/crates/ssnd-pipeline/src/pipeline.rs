//! End-to-end pipeline: diarize, post-process, extract embeddings, assign
//! streams, build embedding sequences, separate segment by segment, stitch
//! nothing (emit regions tile the session), and score.

use std::collections::BTreeMap;
use std::time::Instant;

use ssnd_core::criteria::AssignMethod;
use ssnd_core::diarpost::{median_filter, threshold};
use ssnd_core::metrics::{cpwer, der, DerReport, TranscriptSegment, WerReport};
use ssnd_core::simulate::Session;
use ssnd_core::ssnd::{
    assign_streams, build_embedding_sequences, build_target_streams, extract_embedding,
    ms_to_samples, plan_segments, EmbeddingSequence, SpeakerEmbedding, StreamAssignment,
};
use ssnd_core::types::{
    activity_to_intervals, FrameGrid, MultichannelAudio, SpeakerInterval,
};

use crate::config::PipelineConfig;
use crate::model::{Diarizer, MixtureSegment, Separator};
use crate::{PipelineError, Result};

/// Everything a pipeline run produces.
#[derive(Debug)]
pub struct PipelineReport {
    pub decided: Vec<SpeakerInterval>,
    pub assignment: StreamAssignment,
    /// Reference-microphone output streams covering the whole session.
    pub streams: [Vec<f64>; 2],
    pub hyp_transcripts: Vec<TranscriptSegment>,
    pub der: DerReport,
    pub cpwer: Option<WerReport>,
    pub cpwer_mapping: ssnd_core::metrics::SpeakerMapping,
    /// Max absolute sample difference between the output streams and the
    /// ground-truth target streams.
    pub reconstruction_max_err: Option<f64>,
    pub timings_ms: Vec<(&'static str, f64)>,
}

/// Runs the full pipeline on one session with the given models.
pub fn run_pipeline(
    config: &PipelineConfig,
    session: &Session,
    diarizer: &dyn Diarizer,
    separator: &dyn Separator,
) -> Result<PipelineReport> {
    config.validate()?;
    let mut timings: Vec<(&'static str, f64)> = Vec::new();
    let mut clock = Stopwatch::new();

    // Diarize on a hop-aligned decision grid covering the session.
    let len_ms = session.len_ms();
    let grid = FrameGrid::covering(len_ms, config.post.frame_shift_ms);
    let diarized = diarizer.diarize(&session.mixture, grid)?;
    timings.push(("diarize", clock.lap()));

    // Post-process: threshold, median filter, extract intervals.
    let hard = threshold(&diarized.posteriors, config.post.threshold);
    let smoothed = median_filter(&hard, config.post.median_len)
        .map_err(|e| PipelineError::stage("postprocess", e))?;
    let decided = activity_to_intervals(&smoothed);
    timings.push(("postprocess", clock.lap()));

    // One embedding per speaker with decided activity.
    let mut embeddings: BTreeMap<String, SpeakerEmbedding> = BTreeMap::new();
    for (c, name) in smoothed.speakers.iter().enumerate() {
        if decided.iter().any(|iv| iv.speaker == *name) {
            let embedding = extract_embedding(
                &diarized.embeddings,
                &smoothed,
                c,
                config.embedding.fallback_to_active,
            )
            .map_err(|e| PipelineError::stage("embed", e))?;
            embeddings.insert(name.clone(), embedding);
        }
    }
    timings.push(("embed", clock.lap()));

    let assignment =
        assign_streams(&decided).map_err(|e| PipelineError::stage("assign", e))?;
    timings.push(("assign", clock.lap()));

    let sequences = build_embedding_sequences(&assignment, &embeddings, &decided, grid)
        .map_err(|e| PipelineError::stage("sequences", e))?;
    timings.push(("sequences", clock.lap()));

    // Separate per plan window, keep each window's emit region.
    let sr = session.mixture.sample_rate;
    let len_samples = session.len_samples();
    let plan = plan_segments(len_ms, config.segment_size_ms(), config.segment_shift_ms());
    let mut streams = [vec![0.0f64; len_samples], vec![0.0f64; len_samples]];
    for window in &plan.windows {
        let segment = MixtureSegment {
            audio: slice_padded(&session.mixture, window.start_ms, window.end_ms),
            start_ms: window.start_ms,
        };
        let segment_sequences = slice_sequences(&sequences, grid, window.start_ms, window.end_ms);
        let separated = separator.separate(&segment, &segment_sequences)?;
        let emit_lo = ms_to_samples(window.emit_start_ms, sr).min(len_samples);
        let emit_hi = ms_to_samples(window.emit_end_ms, sr).min(len_samples);
        let local_lo = ms_to_samples(window.emit_start_ms - window.start_ms, sr);
        for (stream, out) in separated.iter().zip(streams.iter_mut()) {
            let n = emit_hi - emit_lo;
            out[emit_lo..emit_hi].copy_from_slice(&stream[local_lo..local_lo + n]);
        }
    }
    timings.push(("separate", clock.lap()));

    // Score: DER against the reference intervals, cpWER against the
    // reference transcripts with an oracle transcriber stand-in (each
    // reference utterance is read off the decided interval that covers it
    // best and attributed to that interval's speaker label).
    let der_report = der(
        &session.intervals,
        &decided,
        config.scoring.collar_s,
        config.scoring.der_resolution_ms,
    );
    let hyp_transcripts = attribute_transcripts(&session.transcripts, &decided);
    let (cpwer_report, cpwer_mapping) =
        match cpwer(&session.transcripts, &hyp_transcripts, AssignMethod::Hungarian) {
            Ok((report, mapping)) => (Some(report), mapping),
            Err(_) => (None, Vec::new()),
        };
    let reconstruction_max_err = reconstruction_error(session, &streams);
    timings.push(("score", clock.lap()));

    Ok(PipelineReport {
        decided,
        assignment,
        streams,
        hyp_transcripts,
        der: der_report,
        cpwer: cpwer_report,
        cpwer_mapping,
        reconstruction_max_err,
        timings_ms: timings,
    })
}

struct Stopwatch(Instant);

impl Stopwatch {
    fn new() -> Self {
        Stopwatch(Instant::now())
    }

    fn lap(&mut self) -> f64 {
        let now = Instant::now();
        let elapsed = now.duration_since(self.0).as_secs_f64() * 1000.0;
        self.0 = now;
        elapsed
    }
}

/// Extracts `[start_ms, end_ms)` from every channel, zero-padding past the
/// session end.
fn slice_padded(audio: &MultichannelAudio, start_ms: u64, end_ms: u64) -> MultichannelAudio {
    let sr = audio.sample_rate;
    let lo = ms_to_samples(start_ms, sr);
    let hi = ms_to_samples(end_ms, sr);
    let channels: Vec<Vec<f64>> = (0..audio.n_channels())
        .map(|c| {
            let src = audio.channel(c);
            (lo..hi).map(|i| src.get(i).copied().unwrap_or(0.0)).collect()
        })
        .collect();
    MultichannelAudio::new(channels, sr, audio.geometry.clone(), audio.ref_channel)
        .expect("slicing keeps channels consistent")
}

/// Segment-local views of the embedding sequences (frame rows within the
/// window, zero rows past the session end).
fn slice_sequences(
    sequences: &[EmbeddingSequence; 2],
    grid: FrameGrid,
    start_ms: u64,
    end_ms: u64,
) -> [EmbeddingSequence; 2] {
    let hop = grid.shift_ms as u64;
    let t_lo = (start_ms / hop) as usize;
    let t_hi = (end_ms / hop) as usize;
    let local_grid = FrameGrid::hop_aligned(grid.shift_ms, t_hi - t_lo);
    let out: Vec<EmbeddingSequence> = sequences
        .iter()
        .map(|seq| {
            let dim = seq.values.cols();
            let mut values = ssnd_core::types::Matrix::zeros(t_hi - t_lo, dim);
            for (local, t) in (t_lo..t_hi).enumerate() {
                if t < seq.values.rows() {
                    values.row_mut(local).copy_from_slice(seq.values.row(t));
                }
            }
            EmbeddingSequence { values, grid: local_grid }
        })
        .collect();
    let mut iter = out.into_iter();
    [iter.next().unwrap(), iter.next().unwrap()]
}

/// Oracle transcriber stand-in: each reference utterance lands on the
/// decided interval with the largest temporal overlap and inherits that
/// interval's speaker label; uncovered utterances are dropped.
fn attribute_transcripts(
    reference: &[TranscriptSegment],
    decided: &[SpeakerInterval],
) -> Vec<TranscriptSegment> {
    let mut out = Vec::new();
    for utterance in reference {
        let mut best: Option<(u64, &SpeakerInterval)> = None;
        for interval in decided {
            let lo = interval.start_ms.max(utterance.start_ms);
            let hi = interval.end_ms.min(utterance.end_ms);
            if lo >= hi {
                continue;
            }
            let overlap = hi - lo;
            let better = match best {
                None => true,
                Some((best_overlap, best_iv)) => {
                    (overlap, best_iv.start_ms, &best_iv.speaker)
                        > (best_overlap, interval.start_ms, &interval.speaker)
                }
            };
            if better {
                best = Some((overlap, interval));
            }
        }
        if let Some((_, interval)) = best {
            out.push(TranscriptSegment {
                speaker: interval.speaker.clone(),
                start_ms: utterance.start_ms,
                end_ms: utterance.end_ms,
                words: utterance.words.clone(),
            });
        }
    }
    out
}

/// Max absolute difference between the produced streams and the
/// ground-truth target streams (built from the reference intervals).
fn reconstruction_error(session: &Session, streams: &[Vec<f64>; 2]) -> Option<f64> {
    let assignment = assign_streams(&session.intervals).ok()?;
    let targets = build_target_streams(
        &assignment,
        &session.sources,
        &session.intervals,
        session.mixture.sample_rate,
        session.len_samples(),
    )
    .ok()?;
    let mut max_err = 0.0f64;
    for (stream, target) in streams.iter().zip(&targets) {
        for (a, b) in stream.iter().zip(target) {
            max_err = max_err.max((a - b).abs());
        }
    }
    Some(max_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{OracleDiarizer, OracleSeparator};
    use ssnd_core::simulate::{generate_synthetic_session, NoiseKind, SessionSpec};

    fn session(seed: u64) -> Session {
        let spec = SessionSpec {
            n_speakers: 4,
            utterance_len_range_s: (1.5, 2.2),
            noise: NoiseKind::Uncorrelated,
            ..SessionSpec::diarization(seed)
        };
        generate_synthetic_session(&spec).unwrap()
    }

    #[test]
    fn oracle_closure_on_one_session() {
        let session = session(42);
        let config = PipelineConfig::default();
        let report = run_pipeline(
            &config,
            &session,
            &OracleDiarizer { session: &session },
            &OracleSeparator { session: &session },
        )
        .unwrap();
        assert_eq!(report.der.der, 0.0, "{:?}", report.der);
        assert_eq!(report.cpwer.unwrap().wer(), 0.0);
        assert_eq!(report.reconstruction_max_err, Some(0.0));
        assert_eq!(report.timings_ms.len(), 7);
    }

    #[test]
    fn oracle_closure_with_short_segments() {
        // 5 s / 4 s segmentation exercises real window slicing.
        let session = session(43);
        let mut config = PipelineConfig::default();
        config.segments.size_s = 5.0;
        config.segments.shift_s = 4.0;
        let report = run_pipeline(
            &config,
            &session,
            &OracleDiarizer { session: &session },
            &OracleSeparator { session: &session },
        )
        .unwrap();
        assert_eq!(report.der.der, 0.0);
        assert_eq!(report.reconstruction_max_err, Some(0.0));
    }

    #[test]
    fn onset_jitter_shows_up_as_exactly_that_much_der() {
        use ssnd_core::types::{intervals_to_activity, PosteriorMatrix};

        let session = session(44);
        let config = PipelineConfig::default();
        let jitter_frames = 3u64;
        let shift = config.post.frame_shift_ms as u64;

        // A diarizer that trims the first 3 frames of every utterance.
        struct Jittered<'a> {
            session: &'a Session,
            trim_ms: u64,
        }
        impl Diarizer for Jittered<'_> {
            fn diarize(
                &self,
                _mixture: &MultichannelAudio,
                grid: FrameGrid,
            ) -> Result<crate::model::DiarizerOutput> {
                let trimmed: Vec<SpeakerInterval> = self
                    .session
                    .intervals
                    .iter()
                    .map(|iv| SpeakerInterval {
                        speaker: iv.speaker.clone(),
                        start_ms: iv.start_ms + self.trim_ms,
                        end_ms: iv.end_ms,
                    })
                    .collect();
                let activity =
                    intervals_to_activity(&trimmed, grid, &self.session.speakers).unwrap();
                let n = self.session.speakers.len();
                let mut embeddings = ssnd_core::types::Matrix::zeros(grid.n_frames, n);
                for t in 0..grid.n_frames {
                    for c in 0..n {
                        embeddings.set(t, c, activity.get(t, c) as f64);
                    }
                }
                Ok(crate::model::DiarizerOutput {
                    posteriors: PosteriorMatrix::from_activity(&activity),
                    embeddings,
                })
            }
        }

        let diarizer = Jittered { session: &session, trim_ms: jitter_frames * shift };
        let report = run_pipeline(
            &config,
            &session,
            &diarizer,
            &OracleSeparator { session: &session },
        )
        .unwrap();
        // Each utterance misses exactly jitter_frames frames of reference
        // speech; everything else is untouched.
        let total_ref_frames: u64 = session
            .intervals
            .iter()
            .map(|iv| (iv.end_ms - iv.start_ms) / shift)
            .sum();
        let missed_frames = jitter_frames * session.intervals.len() as u64;
        let expected = missed_frames as f64 / total_ref_frames as f64;
        let slack = session.intervals.len() as f64 / total_ref_frames as f64;
        assert!(
            (report.der.missed - expected).abs() <= slack,
            "missed {} vs expected {expected} (slack {slack})",
            report.der.missed
        );
        assert_eq!(report.der.false_alarm, 0.0);
        assert_eq!(report.der.confusion, 0.0);
    }

    #[test]
    fn embedding_noise_cannot_change_decisions_or_assignment() {
        // Stage isolation: perturbing the embedding matrix leaves the
        // decided intervals and the stream assignment untouched.
        let session = session(45);
        let config = PipelineConfig::default();
        let grid = FrameGrid::covering(session.len_ms(), config.post.frame_shift_ms);
        let clean = OracleDiarizer { session: &session }
            .diarize(&session.mixture, grid)
            .unwrap();

        struct NoisyEmbeddings(crate::model::DiarizerOutput);
        impl Diarizer for NoisyEmbeddings {
            fn diarize(
                &self,
                _mixture: &MultichannelAudio,
                _grid: FrameGrid,
            ) -> Result<crate::model::DiarizerOutput> {
                let mut out = crate::model::DiarizerOutput {
                    posteriors: self.0.posteriors.clone(),
                    embeddings: self.0.embeddings.clone(),
                };
                let mut rng = ssnd_core::rng::Rng::new(9);
                for t in 0..out.embeddings.rows() {
                    for c in 0..out.embeddings.cols() {
                        let v = out.embeddings.get(t, c) + 0.3 * rng.normal();
                        out.embeddings.set(t, c, v);
                    }
                }
                Ok(out)
            }
        }

        let hard = threshold(&clean.posteriors, config.post.threshold);
        let smoothed = median_filter(&hard, config.post.median_len).unwrap();
        let clean_decided = activity_to_intervals(&smoothed);
        let clean_assignment = assign_streams(&clean_decided).unwrap();

        // The noisy embeddings break the oracle separator's one-hot
        // contract, so run only through the sequence stage by hand.
        let diarizer = NoisyEmbeddings(clean);
        let noisy = diarizer.diarize(&session.mixture, grid).unwrap();
        let noisy_hard = threshold(&noisy.posteriors, config.post.threshold);
        let noisy_smoothed = median_filter(&noisy_hard, config.post.median_len).unwrap();
        let noisy_decided = activity_to_intervals(&noisy_smoothed);
        let noisy_assignment = assign_streams(&noisy_decided).unwrap();

        assert_eq!(noisy_decided, clean_decided);
        assert_eq!(noisy_assignment, clean_assignment);
    }

    #[test]
    fn empty_session_produces_empty_outputs() {
        let mut session = session(46);
        session.intervals.clear();
        session.transcripts.clear();
        for source in session.sources.values_mut() {
            source.clear();
        }
        session.mixture = MultichannelAudio::new(
            vec![Vec::new(); session.mixture.n_channels()],
            16000,
            session.mixture.geometry.clone(),
            0,
        )
        .unwrap();
        let config = PipelineConfig::default();
        let report = run_pipeline(
            &config,
            &session,
            &OracleDiarizer { session: &session },
            &OracleSeparator { session: &session },
        )
        .unwrap();
        assert!(report.decided.is_empty());
        assert!(report.assignment.entries.is_empty());
        assert!(report.streams[0].is_empty() && report.streams[1].is_empty());
        assert_eq!(report.der.der, 0.0);
        assert!(report.cpwer.is_none());
    }
}
