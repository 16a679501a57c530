//! Pluggable diarizer and separator interfaces, ground-truth oracle models,
//! and subprocess adapters for external neural models.
//!
//! The oracles stand in for the trained networks so the surrounding
//! algorithmic pipeline can be verified exactly: the oracle diarizer emits
//! the ground-truth activity as hard posteriors plus one-hot-sum frame
//! embeddings, and the oracle separator copies the identified ground-truth
//! source into each stream.

use std::path::Path;
use std::process::Command;

use ssnd_core::ssnd::{ms_to_samples, EmbeddingSequence};
use ssnd_core::simulate::Session;
use ssnd_core::types::{
    intervals_to_activity, FrameGrid, Matrix, MultichannelAudio, PosteriorMatrix,
};

use crate::io::matrix::{read_matrix, write_matrix, MatrixKind};
use crate::io::wav::{read_wav, write_wav, WavEncoding};
use crate::{PipelineError, Result};

/// Frame-synchronous diarizer output: speech-activity posteriors and the
/// frame embeddings they were computed from.
#[derive(Debug, Clone)]
pub struct DiarizerOutput {
    pub posteriors: PosteriorMatrix,
    /// `T x E` frame embeddings on the same grid as the posteriors.
    pub embeddings: Matrix,
}

pub trait Diarizer {
    fn diarize(&self, mixture: &MultichannelAudio, grid: FrameGrid) -> Result<DiarizerOutput>;
}

/// One processing window handed to a separator.
#[derive(Debug, Clone)]
pub struct MixtureSegment {
    pub audio: MultichannelAudio,
    /// Absolute start of the window within the session.
    pub start_ms: u64,
}

pub trait Separator {
    /// Two reference-microphone waveforms, each as long as the segment.
    fn separate(
        &self,
        segment: &MixtureSegment,
        sequences: &[EmbeddingSequence; 2],
    ) -> Result<[Vec<f64>; 2]>;
}

/// Ground-truth diarizer: posteriors are the rasterized reference activity
/// and frame embedding `e_t` is the sum of one-hot indicators of the
/// speakers active at `t`, so solo-frame averaging recovers exact one-hots.
pub struct OracleDiarizer<'a> {
    pub session: &'a Session,
}

impl Diarizer for OracleDiarizer<'_> {
    fn diarize(&self, _mixture: &MultichannelAudio, grid: FrameGrid) -> Result<DiarizerOutput> {
        let activity =
            intervals_to_activity(&self.session.intervals, grid, &self.session.speakers)
                .map_err(|e| PipelineError::stage("diarize", e))?;
        let n_speakers = self.session.speakers.len();
        let mut embeddings = Matrix::zeros(grid.n_frames, n_speakers);
        for t in 0..grid.n_frames {
            for c in 0..n_speakers {
                if activity.get(t, c) == 1 {
                    embeddings.set(t, c, 1.0);
                }
            }
        }
        Ok(DiarizerOutput { posteriors: PosteriorMatrix::from_activity(&activity), embeddings })
    }
}

/// Ground-truth separator: each frame's nonzero embedding names exactly one
/// speaker; the stream copies that speaker's reference source over the
/// frame's span and stays zero on silence.
pub struct OracleSeparator<'a> {
    pub session: &'a Session,
}

impl Separator for OracleSeparator<'_> {
    fn separate(
        &self,
        segment: &MixtureSegment,
        sequences: &[EmbeddingSequence; 2],
    ) -> Result<[Vec<f64>; 2]> {
        let sr = segment.audio.sample_rate;
        let len = segment.audio.len();
        let mut out = [vec![0.0f64; len], vec![0.0f64; len]];
        for (stream, sequence) in sequences.iter().enumerate() {
            let hop_ms = sequence.grid.shift_ms as u64;
            for t in 0..sequence.grid.n_frames {
                let row = sequence.values.row(t);
                let hot: Vec<usize> =
                    (0..row.len()).filter(|&c| row[c] != 0.0).collect();
                let speaker = match hot.len() {
                    0 => continue,
                    1 => hot[0],
                    _ => {
                        return Err(PipelineError::stage(
                            "separate",
                            format!("ambiguous embedding at frame {t}: not one-hot"),
                        ))
                    }
                };
                let name = self.session.speakers.get(speaker).ok_or_else(|| {
                    PipelineError::stage("separate", format!("embedding names speaker {speaker}"))
                })?;
                let source = &self.session.sources[name];
                let abs_ms = segment.start_ms + t as u64 * hop_ms;
                let src_lo = ms_to_samples(abs_ms, sr).min(source.len());
                let src_hi = ms_to_samples(abs_ms + hop_ms, sr).min(source.len());
                let dst_lo = ms_to_samples(t as u64 * hop_ms, sr).min(len);
                let n = (src_hi - src_lo).min(len - dst_lo);
                out[stream][dst_lo..dst_lo + n].copy_from_slice(&source[src_lo..src_lo + n]);
            }
        }
        Ok(out)
    }
}

/// Subprocess diarizer. The command is invoked as
/// `<command...> <input_dir> <output_dir>`; the input directory holds
/// `mixture.wav`, the output directory must come back with
/// `posteriors.bin` (posterior matrix with grid) and `embeddings.bin`
/// (frame embeddings, same frame count).
pub struct ExternalDiarizer {
    pub command: String,
}

impl Diarizer for ExternalDiarizer {
    fn diarize(&self, mixture: &MultichannelAudio, grid: FrameGrid) -> Result<DiarizerOutput> {
        let work = tempfile::tempdir()
            .map_err(|e| PipelineError::stage("diarize", format!("tempdir: {e}")))?;
        let in_dir = work.path().join("in");
        let out_dir = work.path().join("out");
        std::fs::create_dir_all(&in_dir).map_err(|e| PipelineError::io(&in_dir, e))?;
        std::fs::create_dir_all(&out_dir).map_err(|e| PipelineError::io(&out_dir, e))?;
        write_wav(mixture, in_dir.join("mixture.wav"), WavEncoding::Float32)?;
        run_adapter("diarize", &self.command, &in_dir, &out_dir)?;
        let (values, _, file_grid) = read_matrix(out_dir.join("posteriors.bin"))?;
        let grid = file_grid.unwrap_or(grid);
        let speakers = (0..values.cols()).map(|c| format!("spk{c}")).collect();
        let posteriors = PosteriorMatrix::new(grid, values, speakers);
        let (embeddings, _, _) = read_matrix(out_dir.join("embeddings.bin"))?;
        if embeddings.rows() != posteriors.n_frames() {
            return Err(PipelineError::stage(
                "diarize",
                format!(
                    "external model returned {} embedding frames for {} posterior frames",
                    embeddings.rows(),
                    posteriors.n_frames()
                ),
            ));
        }
        Ok(DiarizerOutput { posteriors, embeddings })
    }
}

/// Subprocess separator. The input directory holds `mixture.wav`,
/// `sequence0.bin`, and `sequence1.bin`; the output directory must come
/// back with `stream0.wav` and `stream1.wav` of the segment's length.
pub struct ExternalSeparator {
    pub command: String,
}

impl Separator for ExternalSeparator {
    fn separate(
        &self,
        segment: &MixtureSegment,
        sequences: &[EmbeddingSequence; 2],
    ) -> Result<[Vec<f64>; 2]> {
        let work = tempfile::tempdir()
            .map_err(|e| PipelineError::stage("separate", format!("tempdir: {e}")))?;
        let in_dir = work.path().join("in");
        let out_dir = work.path().join("out");
        std::fs::create_dir_all(&in_dir).map_err(|e| PipelineError::io(&in_dir, e))?;
        std::fs::create_dir_all(&out_dir).map_err(|e| PipelineError::io(&out_dir, e))?;
        write_wav(&segment.audio, in_dir.join("mixture.wav"), WavEncoding::Float32)?;
        for (i, sequence) in sequences.iter().enumerate() {
            write_matrix(
                in_dir.join(format!("sequence{i}.bin")),
                &sequence.values,
                MatrixKind::Embeddings,
                Some(sequence.grid),
            )?;
        }
        run_adapter("separate", &self.command, &in_dir, &out_dir)?;
        let mut out = Vec::with_capacity(2);
        for i in 0..2 {
            let audio = read_wav(out_dir.join(format!("stream{i}.wav")))?;
            if audio.len() != segment.audio.len() {
                return Err(PipelineError::stage(
                    "separate",
                    format!(
                        "external model returned {} samples for a {}-sample segment",
                        audio.len(),
                        segment.audio.len()
                    ),
                ));
            }
            out.push(audio.channel(0).to_vec());
        }
        Ok([out.remove(0), out.remove(0)])
    }
}

fn run_adapter(stage: &'static str, command: &str, in_dir: &Path, out_dir: &Path) -> Result<()> {
    let mut parts = command.split_whitespace();
    let program = parts
        .next()
        .ok_or_else(|| PipelineError::stage(stage, "empty adapter command"))?;
    let status = Command::new(program)
        .args(parts)
        .arg(in_dir)
        .arg(out_dir)
        .status()
        .map_err(|e| PipelineError::stage(stage, format!("spawn {program:?}: {e}")))?;
    if !status.success() {
        return Err(PipelineError::stage(stage, format!("adapter exited with {status}")));
    }
    Ok(())
}

/// Resolves a model spec string (`oracle` or `exec:<command>`).
pub fn make_diarizer<'a>(spec: &str, session: &'a Session) -> Result<Box<dyn Diarizer + 'a>> {
    match spec {
        "oracle" => Ok(Box::new(OracleDiarizer { session })),
        other => match other.strip_prefix("exec:") {
            Some(command) => Ok(Box::new(ExternalDiarizer { command: command.to_string() })),
            None => Err(PipelineError::Config(format!("unknown diarizer {other:?}"))),
        },
    }
}

pub fn make_separator<'a>(spec: &str, session: &'a Session) -> Result<Box<dyn Separator + 'a>> {
    match spec {
        "oracle" => Ok(Box::new(OracleSeparator { session })),
        other => match other.strip_prefix("exec:") {
            Some(command) => Ok(Box::new(ExternalSeparator { command: command.to_string() })),
            None => Err(PipelineError::Config(format!("unknown separator {other:?}"))),
        },
    }
}
