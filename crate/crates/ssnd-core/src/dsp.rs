//! Deterministic feature frontend: STFT/iSTFT, log-Mel filterbank, context
//! splicing, inter-channel phase differences, normalization, subsampling.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use num_complex::Complex64;

use crate::fft::{real_forward, real_inverse, Fft};
use crate::types::{FrameGrid, Matrix};

/// Natural-log floor added to mel energies before the log; keeps silence
/// finite. The mel scale is the HTK formula `2595*log10(1 + f/700)` over
/// 0..Nyquist.
pub const MEL_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    /// Square root of the periodic Hann window.
    SqrtHann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftConfig {
    pub window_ms: u32,
    pub shift_ms: u32,
    pub dft_size: usize,
    pub window: WindowKind,
    pub sample_rate: u32,
}

impl StftConfig {
    pub fn new(window_ms: u32, shift_ms: u32, dft_size: usize, sample_rate: u32) -> Self {
        let cfg = StftConfig { window_ms, shift_ms, dft_size, window: WindowKind::SqrtHann, sample_rate };
        assert!(cfg.dft_size.is_power_of_two(), "DFT size must be a power of two");
        assert!(cfg.window_samples() <= dft_size, "DFT size must cover the window");
        assert!(shift_ms > 0 && window_ms >= shift_ms);
        cfg
    }

    /// 25 ms window, 10 ms shift, 512-point DFT at 16 kHz: the diarization
    /// frontend setting.
    pub fn diarization() -> Self {
        StftConfig::new(25, 10, 512, 16000)
    }

    /// 32 ms window, 10 ms shift: the wide separation setting.
    pub fn separation_hop10() -> Self {
        StftConfig::new(32, 10, 512, 16000)
    }

    /// 32 ms window, 16 ms shift: the half-overlap separation setting.
    pub fn separation_hop16() -> Self {
        StftConfig::new(32, 16, 512, 16000)
    }

    pub fn window_samples(&self) -> usize {
        samples_for_ms(self.window_ms, self.sample_rate)
    }

    pub fn hop_samples(&self) -> usize {
        samples_for_ms(self.shift_ms, self.sample_rate)
    }

    pub fn n_bins(&self) -> usize {
        self.dft_size / 2 + 1
    }

    pub fn window_values(&self) -> Vec<f64> {
        match self.window {
            WindowKind::SqrtHann => {
                let n = self.window_samples();
                (0..n)
                    .map(|i| {
                        let hann =
                            0.5 * (1.0 - libm::cos(2.0 * core::f64::consts::PI * i as f64 / n as f64));
                        libm::sqrt(hann)
                    })
                    .collect()
            }
        }
    }
}

fn samples_for_ms(ms: u32, sample_rate: u32) -> usize {
    let n = ms as u64 * sample_rate as u64;
    assert!(n.is_multiple_of(1000), "window/shift must be whole samples at this rate");
    (n / 1000) as usize
}

/// Complex time-frequency representation of one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    values: Vec<Complex64>,
    n_frames: usize,
    n_bins: usize,
    pub config: StftConfig,
    pub channel: usize,
}

impl Spectrogram {
    pub fn zeros(config: StftConfig, n_frames: usize) -> Self {
        let n_bins = config.n_bins();
        Spectrogram { values: vec![Complex64::new(0.0, 0.0); n_frames * n_bins], n_frames, n_bins, config, channel: 0 }
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn get(&self, t: usize, k: usize) -> Complex64 {
        self.values[t * self.n_bins + k]
    }

    pub fn set(&mut self, t: usize, k: usize, v: Complex64) {
        self.values[t * self.n_bins + k] = v;
    }

    pub fn frame(&self, t: usize) -> &[Complex64] {
        &self.values[t * self.n_bins..(t + 1) * self.n_bins]
    }

    pub fn grid(&self) -> FrameGrid {
        FrameGrid::new(self.config.shift_ms, self.config.window_ms, self.n_frames)
    }

    /// Same shape and frame count.
    pub fn same_shape(&self, other: &Spectrogram) -> bool {
        self.n_frames == other.n_frames && self.n_bins == other.n_bins
    }
}

/// Feature matrices carry a tag describing what the columns are.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    /// Log-mel filterbank energies.
    LogMel,
    /// Context-spliced log-mel frames.
    Spliced,
    /// Cosine/sine inter-channel phase differences.
    Ipd,
    /// Spliced spectral features concatenated with spatial features.
    Fused,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: Matrix,
    pub kind: FeatureKind,
}

impl FeatureMatrix {
    pub fn n_frames(&self) -> usize {
        self.values.rows()
    }

    pub fn dim(&self) -> usize {
        self.values.cols()
    }

    /// Keeps frames `0, factor, 2*factor, ...`.
    pub fn subsample(&self, factor: usize) -> FeatureMatrix {
        assert!(factor >= 1);
        let kept: Vec<usize> = (0..self.n_frames()).step_by(factor).collect();
        let mut m = Matrix::zeros(kept.len(), self.dim());
        for (i, &t) in kept.iter().enumerate() {
            m.row_mut(i).copy_from_slice(self.values.row(t));
        }
        FeatureMatrix { values: m, kind: self.kind }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DspError {
    SignalTooShort { len: usize, window: usize },
    ShapeMismatch(String),
    NeedTwoChannels,
}

impl fmt::Display for DspError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DspError::SignalTooShort { len, window } => {
                write!(f, "signal of {len} samples is shorter than one {window}-sample window")
            }
            DspError::ShapeMismatch(what) => write!(f, "shape mismatch: {what}"),
            DspError::NeedTwoChannels => write!(f, "IPD needs at least two channels"),
        }
    }
}

impl core::error::Error for DspError {}

/// Short-time Fourier transform. Frame `t` windows the samples starting at
/// `t * hop`, zero-padded right to the DFT size.
pub fn stft(signal: &[f64], config: StftConfig) -> Result<Spectrogram, DspError> {
    let win = config.window_samples();
    let hop = config.hop_samples();
    if signal.len() < win {
        return Err(DspError::SignalTooShort { len: signal.len(), window: win });
    }
    let n_frames = (signal.len() - win) / hop + 1;
    let window = config.window_values();
    let fft = Fft::new(config.dft_size);
    let mut spec = Spectrogram::zeros(config, n_frames);
    let mut frame = vec![0.0f64; config.dft_size];
    for t in 0..n_frames {
        let start = t * hop;
        for i in 0..win {
            frame[i] = signal[start + i] * window[i];
        }
        for v in frame.iter_mut().skip(win) {
            *v = 0.0;
        }
        let bins = real_forward(&fft, &frame);
        spec.values[t * spec.n_bins..(t + 1) * spec.n_bins].copy_from_slice(&bins);
    }
    Ok(spec)
}

/// Least-squares inverse STFT: overlap-add of windowed inverse frames,
/// divided by the summed squared analysis window. Reconstruction is exact
/// wherever that sum is positive (it vanishes only at the very first
/// sample of the sqrt-Hann window); such samples come back as zero.
pub fn istft(spec: &Spectrogram) -> Vec<f64> {
    let config = spec.config;
    let win = config.window_samples();
    let hop = config.hop_samples();
    if spec.n_frames == 0 {
        return Vec::new();
    }
    let out_len = (spec.n_frames - 1) * hop + win;
    let window = config.window_values();
    let fft = Fft::new(config.dft_size);
    let mut out = vec![0.0f64; out_len];
    let mut wsum = vec![0.0f64; out_len];
    for t in 0..spec.n_frames {
        let time = real_inverse(&fft, spec.frame(t));
        let start = t * hop;
        for i in 0..win {
            out[start + i] += time[i] * window[i];
            wsum[start + i] += window[i] * window[i];
        }
    }
    for (o, w) in out.iter_mut().zip(&wsum) {
        if *w > 1e-12 {
            *o /= *w;
        } else {
            *o = 0.0;
        }
    }
    out
}

/// Triangular mel filterbank, `n_mels x n_bins`, spanning `0..sample_rate/2`.
pub fn mel_filterbank(n_mels: usize, dft_size: usize, sample_rate: u32) -> Matrix {
    let n_bins = dft_size / 2 + 1;
    let f_max = sample_rate as f64 / 2.0;
    let mel_max = hz_to_mel(f_max);
    let edges: Vec<f64> =
        (0..n_mels + 2).map(|i| mel_to_hz(mel_max * i as f64 / (n_mels + 1) as f64)).collect();
    let mut fb = Matrix::zeros(n_mels, n_bins);
    for m in 0..n_mels {
        let (lo, center, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        for k in 0..n_bins {
            let f = k as f64 * sample_rate as f64 / dft_size as f64;
            let w = if f <= lo || f >= hi {
                0.0
            } else if f <= center {
                (f - lo) / (center - lo)
            } else {
                (hi - f) / (hi - center)
            };
            fb.set(m, k, w);
        }
    }
    fb
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * libm::log10(1.0 + f / 700.0)
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (libm::pow(10.0, m / 2595.0) - 1.0)
}

/// Log-mel energies of a power spectrogram: `ln(fb * |X|^2 + floor)`.
pub fn logmel(spec: &Spectrogram, n_mels: usize) -> FeatureMatrix {
    let fb = mel_filterbank(n_mels, spec.config.dft_size, spec.config.sample_rate);
    let mut out = Matrix::zeros(spec.n_frames(), n_mels);
    for t in 0..spec.n_frames() {
        let frame = spec.frame(t);
        for m in 0..n_mels {
            let row = fb.row(m);
            let mut acc = 0.0;
            for (k, x) in frame.iter().enumerate() {
                acc += row[k] * x.norm_sqr();
            }
            out.set(t, m, libm::log(acc + MEL_FLOOR));
        }
    }
    FeatureMatrix { values: out, kind: FeatureKind::LogMel }
}

/// Concatenates each frame with its `left` preceding and `right` succeeding
/// neighbors; boundary frames are repeated at the edges.
pub fn splice(features: &FeatureMatrix, left: usize, right: usize) -> FeatureMatrix {
    assert_eq!(features.kind, FeatureKind::LogMel, "splicing is defined on log-mel features");
    let t_total = features.n_frames();
    let d = features.dim();
    let width = left + right + 1;
    let mut out = Matrix::zeros(t_total, d * width);
    for t in 0..t_total {
        let row = out.row_mut(t);
        for (slot, offset) in (-(left as i64)..=(right as i64)).enumerate() {
            let src = (t as i64 + offset).clamp(0, t_total as i64 - 1) as usize;
            row[slot * d..(slot + 1) * d].copy_from_slice(features.values.row(src));
        }
    }
    FeatureMatrix { values: out, kind: FeatureKind::Spliced }
}

/// Inter-channel phase differences against the reference channel.
///
/// Output dimension is `2*(M-1)*n_bins`; for the `j`-th non-reference
/// channel the block `[j*2F, j*2F+F)` holds cosines and `[j*2F+F, (j+1)*2F)`
/// holds sines of `angle(X_ref) - angle(X_m)` per bin.
pub fn ipd(spectrograms: &[Spectrogram], ref_channel: usize) -> Result<FeatureMatrix, DspError> {
    if spectrograms.len() < 2 {
        return Err(DspError::NeedTwoChannels);
    }
    if ref_channel >= spectrograms.len() {
        return Err(DspError::ShapeMismatch(String::from("reference channel out of range")));
    }
    let reference = &spectrograms[ref_channel];
    for s in spectrograms {
        if !s.same_shape(reference) {
            return Err(DspError::ShapeMismatch(String::from("spectrogram shapes differ")));
        }
    }
    let f_bins = reference.n_bins();
    let pairs: Vec<usize> =
        (0..spectrograms.len()).filter(|&m| m != ref_channel).collect();
    let mut out = Matrix::zeros(reference.n_frames(), 2 * pairs.len() * f_bins);
    for t in 0..reference.n_frames() {
        let ref_frame = reference.frame(t);
        let row = out.row_mut(t);
        for (j, &m) in pairs.iter().enumerate() {
            let other = spectrograms[m].frame(t);
            let base = j * 2 * f_bins;
            for k in 0..f_bins {
                let delta = libm::atan2(ref_frame[k].im, ref_frame[k].re)
                    - libm::atan2(other[k].im, other[k].re);
                row[base + k] = libm::cos(delta);
                row[base + f_bins + k] = libm::sin(delta);
            }
        }
    }
    Ok(FeatureMatrix { values: out, kind: FeatureKind::Ipd })
}

/// Column-wise standardization to zero mean and unit (population) variance.
/// Constant columns map to zero and report a standard deviation of 0.
pub fn normalize(features: &FeatureMatrix) -> (FeatureMatrix, Vec<f64>, Vec<f64>) {
    let t_total = features.n_frames();
    assert!(t_total >= 2, "normalization needs at least two frames");
    let d = features.dim();
    let mut mean = vec![0.0f64; d];
    for t in 0..t_total {
        for (m, x) in mean.iter_mut().zip(features.values.row(t)) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= t_total as f64;
    }
    let mut var = vec![0.0f64; d];
    for t in 0..t_total {
        for (i, x) in features.values.row(t).iter().enumerate() {
            let e = x - mean[i];
            var[i] += e * e;
        }
    }
    let std: Vec<f64> = var
        .iter()
        .map(|v| {
            let s = libm::sqrt(v / t_total as f64);
            if s < 1e-12 {
                0.0
            } else {
                s
            }
        })
        .collect();
    let mut out = Matrix::zeros(t_total, d);
    for t in 0..t_total {
        let src = features.values.row(t);
        let dst = out.row_mut(t);
        for i in 0..d {
            dst[i] = if std[i] == 0.0 { 0.0 } else { (src[i] - mean[i]) / std[i] };
        }
    }
    (FeatureMatrix { values: out, kind: features.kind }, mean, std)
}

/// Concatenates spectral and spatial features frame-by-frame (spectral
/// columns first).
pub fn fuse(spectral: &FeatureMatrix, spatial: &FeatureMatrix) -> Result<FeatureMatrix, DspError> {
    if spectral.n_frames() != spatial.n_frames() {
        return Err(DspError::ShapeMismatch(String::from("frame counts differ")));
    }
    let d = spectral.dim() + spatial.dim();
    let mut out = Matrix::zeros(spectral.n_frames(), d);
    for t in 0..spectral.n_frames() {
        let row = out.row_mut(t);
        row[..spectral.dim()].copy_from_slice(spectral.values.row(t));
        row[spectral.dim()..].copy_from_slice(spatial.values.row(t));
    }
    Ok(FeatureMatrix { values: out, kind: FeatureKind::Fused })
}
