//! WAV reading and writing (16-bit PCM and 32-bit float).

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use ssnd_core::types::MultichannelAudio;

use crate::{PipelineError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavEncoding {
    Pcm16,
    Float32,
}

/// Reads a WAV into channel-major f64 buffers. PCM16 samples are scaled to
/// `[-1, 1]`; float samples pass through.
pub fn read_wav(path: impl AsRef<Path>) -> Result<MultichannelAudio> {
    let path = path.as_ref();
    let mut reader = WavReader::open(path)
        .map_err(|e| PipelineError::Wav { path: path.into(), message: e.to_string() })?;
    let spec = reader.spec();
    let n_channels = spec.channels as usize;
    let mut channels: Vec<Vec<f64>> = vec![Vec::new(); n_channels];
    match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => {
            for (i, sample) in reader.samples::<i16>().enumerate() {
                let v = sample.map_err(|e| PipelineError::Wav {
                    path: path.into(),
                    message: e.to_string(),
                })?;
                channels[i % n_channels].push(v as f64 / 32768.0);
            }
        }
        (SampleFormat::Float, 32) => {
            for (i, sample) in reader.samples::<f32>().enumerate() {
                let v = sample.map_err(|e| PipelineError::Wav {
                    path: path.into(),
                    message: e.to_string(),
                })?;
                channels[i % n_channels].push(v as f64);
            }
        }
        (format, bits) => {
            return Err(PipelineError::Wav {
                path: path.into(),
                message: format!("unsupported encoding: {bits}-bit {format:?}"),
            });
        }
    }
    MultichannelAudio::new(channels, spec.sample_rate, None, 0)
        .map_err(|e| PipelineError::Wav { path: path.into(), message: e.to_string() })
}

/// Writes channel-major audio as an interleaved WAV.
pub fn write_wav(
    audio: &MultichannelAudio,
    path: impl AsRef<Path>,
    encoding: WavEncoding,
) -> Result<()> {
    let path = path.as_ref();
    let spec = WavSpec {
        channels: audio.n_channels() as u16,
        sample_rate: audio.sample_rate,
        bits_per_sample: match encoding {
            WavEncoding::Pcm16 => 16,
            WavEncoding::Float32 => 32,
        },
        sample_format: match encoding {
            WavEncoding::Pcm16 => SampleFormat::Int,
            WavEncoding::Float32 => SampleFormat::Float,
        },
    };
    let mut writer = WavWriter::create(path, spec)
        .map_err(|e| PipelineError::Wav { path: path.into(), message: e.to_string() })?;
    for i in 0..audio.len() {
        for c in 0..audio.n_channels() {
            let v = audio.channel(c)[i];
            let result = match encoding {
                WavEncoding::Pcm16 => {
                    let clipped = (v * 32768.0).clamp(-32768.0, 32767.0);
                    writer.write_sample(clipped as i16)
                }
                WavEncoding::Float32 => writer.write_sample(v as f32),
            };
            result.map_err(|e| PipelineError::Wav { path: path.into(), message: e.to_string() })?;
        }
    }
    writer
        .finalize()
        .map_err(|e| PipelineError::Wav { path: path.into(), message: e.to_string() })
}

/// Writes a mono waveform.
pub fn write_mono(
    samples: &[f64],
    sample_rate: u32,
    path: impl AsRef<Path>,
    encoding: WavEncoding,
) -> Result<()> {
    write_wav(&MultichannelAudio::mono(samples.to_vec(), sample_rate), path, encoding)
}

/// Loads room impulse responses for use with `simulate::convolve`. When an
/// expected channel count is given (the array geometry's size), every RIR
/// must match it.
pub fn import_rirs(
    paths: &[impl AsRef<Path>],
    expected_channels: Option<usize>,
) -> Result<Vec<MultichannelAudio>> {
    let mut rirs = Vec::with_capacity(paths.len());
    for path in paths {
        let rir = read_wav(path)?;
        if let Some(want) = expected_channels {
            if rir.n_channels() != want {
                return Err(PipelineError::Wav {
                    path: path.as_ref().into(),
                    message: format!(
                        "RIR has {} channels, array geometry needs {want}",
                        rir.n_channels()
                    ),
                });
            }
        }
        rirs.push(rir);
    }
    Ok(rirs)
}
