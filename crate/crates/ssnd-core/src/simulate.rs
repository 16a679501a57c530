//! Seeded generation of meeting-style multichannel sessions with controlled
//! overlap, azimuths, levels, and noise, plus the short-session separation
//! training recipe.
//!
//! All randomness flows from `SessionSpec::seed`; identical spec and pool
//! reproduce bit-identical sessions. Utterance boundaries are quantized to
//! `boundary_quantum_ms` so decision grids whose hop divides the quantum
//! rasterize them exactly.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use num_complex::Complex64;

use crate::fft::Fft;
use crate::metrics::TranscriptSegment;
use crate::rng::Rng;
use crate::ssnd::ms_to_samples;
use crate::types::{MultichannelAudio, SpeakerInterval};

pub const SPEED_OF_SOUND_M_S: f64 = 343.0;

#[derive(Debug, Clone, PartialEq)]
pub enum SimulateError {
    PoolExhausted { speaker: String, have: usize, need: usize },
    AzimuthPacking { speakers: usize, min_sep_deg: f64 },
    /// The drawn overlap target cannot be realized under the per-pair caps.
    OverlapInfeasible { target: f64, realized: f64 },
    ZeroPowerSignal,
    /// Diffuse noise needs microphone geometry.
    GeometryRequired,
    RirMismatch { channels: usize, rir_channels: usize },
    SessionTooShort { len_ms: u64, segment_ms: u64 },
}

impl fmt::Display for SimulateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimulateError::PoolExhausted { speaker, have, need } => {
                write!(f, "utterance pool exhausted for {speaker}: have {have}, need {need}")
            }
            SimulateError::AzimuthPacking { speakers, min_sep_deg } => {
                write!(f, "{speakers} speakers cannot keep {min_sep_deg} degrees of separation")
            }
            SimulateError::OverlapInfeasible { target, realized } => {
                write!(f, "overlap target {target:.3} unreachable (realized {realized:.3})")
            }
            SimulateError::ZeroPowerSignal => write!(f, "signal has zero power"),
            SimulateError::GeometryRequired => write!(f, "diffuse noise needs microphone geometry"),
            SimulateError::RirMismatch { channels, rir_channels } => {
                write!(f, "RIR has {rir_channels} channels for a {channels}-channel target")
            }
            SimulateError::SessionTooShort { len_ms, segment_ms } => {
                write!(f, "session of {len_ms} ms shorter than one {segment_ms} ms segment")
            }
        }
    }
}

impl core::error::Error for SimulateError {}

/// What gets mixed on top of the speech.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    /// No noise at all (the "infinite SNR" sentinel).
    None,
    /// Independent white Gaussian noise per channel.
    Uncorrelated,
    /// Superposition of plane-wave white noises from random azimuths.
    Diffuse { directions: usize },
}

/// Recipe knobs for one simulated session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionSpec {
    pub n_speakers: usize,
    /// Inclusive range of utterances per speaker.
    pub utterances_per_speaker: (u32, u32),
    /// Synthetic utterance length range in seconds.
    pub utterance_len_range_s: (f64, f64),
    /// Session-level overlap ratio range (overlapped time / total speech).
    pub overlap_range: (f64, f64),
    pub silence_range_s: (f64, f64),
    pub silence_prob: f64,
    pub level_range_db: (f64, f64),
    pub snr_range_db: (f64, f64),
    pub noise: NoiseKind,
    pub min_azimuth_sep_deg: f64,
    /// Cap on one pair's overlap as a fraction of the shorter utterance.
    pub max_pair_overlap: f64,
    pub sample_rate: u32,
    /// All utterance boundaries land on multiples of this quantum.
    pub boundary_quantum_ms: u32,
    pub seed: u64,
}

impl SessionSpec {
    /// Meeting recipe for diarization training: eight speakers, two
    /// utterances each, overlap drawn from 0-45%, pauses of 0.5-3 s with
    /// probability 0.26, levels within +-3.5 dB, SNR 10-30 dB, azimuths at
    /// least 5 degrees apart.
    pub fn diarization(seed: u64) -> Self {
        SessionSpec {
            n_speakers: 8,
            utterances_per_speaker: (2, 2),
            utterance_len_range_s: (1.5, 2.5),
            overlap_range: (0.0, 0.45),
            silence_range_s: (0.5, 3.0),
            silence_prob: 0.26,
            level_range_db: (-3.5, 3.5),
            snr_range_db: (10.0, 30.0),
            noise: NoiseKind::Diffuse { directions: 36 },
            min_azimuth_sep_deg: 5.0,
            max_pair_overlap: 0.40,
            sample_rate: 16000,
            boundary_quantum_ms: 10,
            seed,
        }
    }

    /// Short-session recipe for separation training: one or two utterances
    /// per speaker, overlap 40-50%, sparse short pauses.
    pub fn separation(seed: u64) -> Self {
        SessionSpec {
            n_speakers: 8,
            utterances_per_speaker: (1, 2),
            utterance_len_range_s: (4.0, 8.0),
            overlap_range: (0.4, 0.5),
            silence_range_s: (0.5, 1.0),
            silence_prob: 0.05,
            level_range_db: (-3.5, 3.5),
            snr_range_db: (10.0, 30.0),
            noise: NoiseKind::Diffuse { directions: 36 },
            min_azimuth_sep_deg: 5.0,
            max_pair_overlap: 0.70,
            sample_rate: 16000,
            boundary_quantum_ms: 10,
            seed,
        }
    }

    pub fn speaker_names(&self) -> Vec<String> {
        (0..self.n_speakers).map(|i| format!("spk{i}")).collect()
    }
}

/// A generated session: the multichannel mixture, per-speaker direct-path
/// reference signals, ground-truth intervals and transcripts, and the
/// provenance spec.
#[derive(Debug, Clone)]
pub struct Session {
    pub mixture: MultichannelAudio,
    /// Direct-path reference-microphone signal per speaker, already scaled;
    /// zero outside that speaker's intervals.
    pub sources: BTreeMap<String, Vec<f64>>,
    pub intervals: Vec<SpeakerInterval>,
    pub speakers: Vec<String>,
    /// Azimuth in degrees per speaker (same order as `speakers`).
    pub azimuths: Vec<f64>,
    pub levels_db: Vec<f64>,
    pub transcripts: Vec<TranscriptSegment>,
    pub measured_overlap: f64,
    pub snr_db: Option<f64>,
    pub spec: SessionSpec,
}

impl Session {
    pub fn len_samples(&self) -> usize {
        self.mixture.len()
    }

    pub fn len_ms(&self) -> u64 {
        self.intervals.iter().map(|iv| iv.end_ms).max().unwrap_or(0)
    }

    pub fn azimuth_of(&self, speaker: &str) -> Option<f64> {
        self.speakers.iter().position(|s| s == speaker).map(|i| self.azimuths[i])
    }
}

/// Per-speaker utterance waveforms feeding the generator.
#[derive(Debug, Clone)]
pub struct UtterancePool {
    pub utterances: BTreeMap<String, Vec<Vec<f64>>>,
    pub sample_rate: u32,
}

/// Deterministic pool of colored-noise bursts with amplitude envelopes; the
/// recipe is content-agnostic, so synthetic "speech" stands in for real
/// utterances at desk scale.
pub fn synthetic_pool(spec: &SessionSpec) -> UtterancePool {
    let mut rng = Rng::new(spec.seed ^ 0x706f6f6c); // "pool"
    let q = spec.boundary_quantum_ms.max(1) as u64;
    let mut utterances = BTreeMap::new();
    for name in spec.speaker_names() {
        // A per-speaker lowpass pole gives each voice its own spectral tilt.
        let pole = rng.range(0.3, 0.95);
        let count = spec.utterances_per_speaker.1 as usize;
        let mut list = Vec::with_capacity(count);
        for _ in 0..count {
            let len_ms_raw = rng.range(
                spec.utterance_len_range_s.0 * 1000.0,
                spec.utterance_len_range_s.1 * 1000.0,
            );
            let len_ms = ((libm::round(len_ms_raw / q as f64) as u64).max(1)) * q;
            let n = ms_to_samples(len_ms, spec.sample_rate);
            list.push(burst(&mut rng, n, pole, spec.sample_rate));
        }
        utterances.insert(name, list);
    }
    UtterancePool { utterances, sample_rate: spec.sample_rate }
}

fn burst(rng: &mut Rng, n: usize, pole: f64, sample_rate: u32) -> Vec<f64> {
    let mut y = vec![0.0f64; n];
    let mut state = 0.0;
    for v in y.iter_mut() {
        state = pole * state + (1.0 - pole) * rng.normal();
        *v = state;
    }
    let rms = libm::sqrt(y.iter().map(|v| v * v).sum::<f64>() / n as f64).max(1e-12);
    let ramp = (sample_rate as usize / 20).min(n / 4).max(1); // 50 ms attack/release
    for (i, v) in y.iter_mut().enumerate() {
        let attack = ((i + 1) as f64 / ramp as f64).min(1.0);
        let release = ((n - i) as f64 / ramp as f64).min(1.0);
        let env = 0.1 + 0.9 * attack.min(release);
        *v *= env / rms;
    }
    y
}

/// Microphone positions: one center microphone followed by `ring` equally
/// spaced microphones on a circle of the given radius (meters).
pub fn circular_array_with_center(ring: usize, radius_m: f64) -> Vec<[f64; 3]> {
    let mut mics = vec![[0.0, 0.0, 0.0]];
    for i in 0..ring {
        let phi = 2.0 * core::f64::consts::PI * i as f64 / ring as f64;
        mics.push([radius_m * libm::cos(phi), radius_m * libm::sin(phi), 0.0]);
    }
    mics
}

/// The recipe's array: six microphones on a 4.25 cm circle plus the center
/// reference microphone (channel 0).
pub fn default_geometry() -> Vec<[f64; 3]> {
    circular_array_with_center(6, 0.0425)
}

/// Far-field plane-wave delays in seconds relative to the reference
/// channel: `d_m = (p_m - p_ref) . u / c` with `u` the unit vector toward
/// the azimuth. For a microphone at ring angle `phi` and the reference at
/// the center this is `(r/c) * cos(azimuth - phi)`.
pub fn farfield_delays_s(azimuth_deg: f64, geometry: &[[f64; 3]], ref_channel: usize) -> Vec<f64> {
    let theta = azimuth_deg.to_radians();
    let u = [libm::cos(theta), libm::sin(theta), 0.0];
    let proj = |p: &[f64; 3]| (p[0] * u[0] + p[1] * u[1] + p[2] * u[2]) / SPEED_OF_SOUND_M_S;
    let reference = proj(&geometry[ref_channel]);
    geometry.iter().map(|p| proj(p) - reference).collect()
}

fn next_pow2(n: usize) -> usize {
    n.next_power_of_two().max(2)
}

/// Circular fractional delay: pads to the next power of two, applies the
/// frequency-domain phase ramp, and returns the full padded buffer (the
/// delay is exact in the circular sense on that buffer).
pub fn fractional_delay_circular(samples: &[f64], delay_samples: f64) -> Vec<f64> {
    let pad = next_pow2(samples.len());
    let fft = Fft::new(pad);
    let mut buf: Vec<Complex64> =
        (0..pad).map(|i| Complex64::new(samples.get(i).copied().unwrap_or(0.0), 0.0)).collect();
    fft.forward(&mut buf);
    fractional_delay(&fft, &buf, delay_samples, pad)
}

/// Applies a fractional delay (in samples) as a frequency-domain phase ramp
/// over a padded power-of-two buffer.
fn fractional_delay(fft: &Fft, spectrum: &[Complex64], delay_samples: f64, out_len: usize) -> Vec<f64> {
    let n = fft.len();
    let mut shifted: Vec<Complex64> = Vec::with_capacity(n);
    for (k, &v) in spectrum.iter().enumerate() {
        let k_signed = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        let angle = -2.0 * core::f64::consts::PI * k_signed * delay_samples / n as f64;
        shifted.push(v * Complex64::new(libm::cos(angle), libm::sin(angle)));
    }
    fft.inverse(&mut shifted);
    shifted.truncate(out_len);
    shifted.iter().map(|c| c.re).collect()
}

/// Spatializes a dry source at the given azimuth with the anechoic
/// far-field model: every channel is the source under a fractional delay,
/// the reference channel is the source unchanged.
pub fn spatialize(
    source: &[f64],
    azimuth_deg: f64,
    geometry: &[[f64; 3]],
    ref_channel: usize,
    sample_rate: u32,
) -> MultichannelAudio {
    assert!(!geometry.is_empty(), "geometry needs at least one microphone");
    assert!(ref_channel < geometry.len());
    let delays = farfield_delays_s(azimuth_deg, geometry, ref_channel);
    let max_delay = delays.iter().fold(0.0f64, |m, d| m.max(d.abs())) * sample_rate as f64;
    let pad = next_pow2(source.len() + libm::ceil(max_delay) as usize * 2 + 64);
    let fft = Fft::new(pad);
    let mut buf: Vec<Complex64> =
        (0..pad).map(|i| Complex64::new(source.get(i).copied().unwrap_or(0.0), 0.0)).collect();
    fft.forward(&mut buf);
    let channels = delays
        .iter()
        .map(|&delay_s| {
            let delay_samples = delay_s * sample_rate as f64;
            if delay_samples == 0.0 {
                source.to_vec()
            } else {
                fractional_delay(&fft, &buf, delay_samples, source.len())
            }
        })
        .collect();
    MultichannelAudio::new(channels, sample_rate, Some(geometry.to_vec()), ref_channel)
        .expect("channels built consistently")
}

/// Linear convolution of a dry source with a (possibly multichannel) room
/// impulse response; output length is `n + k - 1`.
pub fn convolve(source: &[f64], rir: &MultichannelAudio) -> MultichannelAudio {
    let n = source.len();
    let k = rir.len();
    let out_len = if n == 0 || k == 0 { 0 } else { n + k - 1 };
    let pad = next_pow2(out_len.max(1));
    let fft = Fft::new(pad);
    let mut src: Vec<Complex64> =
        (0..pad).map(|i| Complex64::new(source.get(i).copied().unwrap_or(0.0), 0.0)).collect();
    fft.forward(&mut src);
    let channels = (0..rir.n_channels())
        .map(|c| {
            let mut h: Vec<Complex64> = (0..pad)
                .map(|i| Complex64::new(rir.channel(c).get(i).copied().unwrap_or(0.0), 0.0))
                .collect();
            fft.forward(&mut h);
            for (hv, sv) in h.iter_mut().zip(&src) {
                *hv *= sv;
            }
            fft.inverse(&mut h);
            h.truncate(out_len);
            h.iter().map(|v| v.re).collect()
        })
        .collect();
    MultichannelAudio::new(channels, rir.sample_rate, rir.geometry.clone(), rir.ref_channel)
        .expect("channels built consistently")
}

/// Mixes noise into a signal at an exact SNR (signal power measured over
/// the whole buffer, all channels). `NoiseKind::None` or an infinite SNR
/// return the input unchanged.
pub fn add_noise(
    mixture: &MultichannelAudio,
    snr_db: f64,
    kind: NoiseKind,
    seed: u64,
) -> Result<MultichannelAudio, SimulateError> {
    if matches!(kind, NoiseKind::None) || snr_db.is_infinite() {
        return Ok(mixture.clone());
    }
    let n_total = mixture.n_channels() * mixture.len();
    let signal_power: f64 =
        mixture.channels().iter().flatten().map(|v| v * v).sum::<f64>() / n_total as f64;
    if signal_power <= 0.0 {
        return Err(SimulateError::ZeroPowerSignal);
    }
    let mut rng = Rng::new(seed);
    let noise: Vec<Vec<f64>> = match kind {
        NoiseKind::None => unreachable!(),
        NoiseKind::Uncorrelated => {
            (0..mixture.n_channels()).map(|_| rng.normal_vec(mixture.len())).collect()
        }
        NoiseKind::Diffuse { directions } => {
            let directions = directions.max(36);
            let geometry =
                mixture.geometry.as_ref().ok_or(SimulateError::GeometryRequired)?;
            let mut acc = vec![vec![0.0f64; mixture.len()]; mixture.n_channels()];
            for _ in 0..directions {
                let azimuth = rng.range(0.0, 360.0);
                let white = rng.normal_vec(mixture.len());
                let wave =
                    spatialize(&white, azimuth, geometry, mixture.ref_channel, mixture.sample_rate);
                for (acc_ch, wave_ch) in acc.iter_mut().zip(wave.channels()) {
                    for (a, w) in acc_ch.iter_mut().zip(wave_ch) {
                        *a += w;
                    }
                }
            }
            acc
        }
    };
    let noise_power: f64 =
        noise.iter().flatten().map(|v| v * v).sum::<f64>() / n_total as f64;
    let gain = libm::sqrt(signal_power / (noise_power * libm::pow(10.0, snr_db / 10.0)));
    let mut out = mixture.clone();
    for (c, noise_ch) in noise.iter().enumerate() {
        for (o, nv) in out.channel_mut(c).iter_mut().zip(noise_ch) {
            *o += gain * nv;
        }
    }
    Ok(out)
}

/// Fraction of speech time where at least two speakers are active:
/// (time with >= 2 active) / (time with >= 1 active), 0 for no speech.
pub fn overlap_ratio(intervals: &[SpeakerInterval]) -> f64 {
    let mut events: Vec<(u64, i32)> = Vec::with_capacity(intervals.len() * 2);
    for iv in intervals {
        events.push((iv.start_ms, 1));
        events.push((iv.end_ms, -1));
    }
    events.sort_unstable();
    let mut active = 0i32;
    let mut last = 0u64;
    let mut speech = 0u64;
    let mut overlapped = 0u64;
    for (time, delta) in events {
        if active >= 1 {
            speech += time - last;
        }
        if active >= 2 {
            overlapped += time - last;
        }
        active += delta;
        last = time;
    }
    if speech == 0 {
        0.0
    } else {
        overlapped as f64 / speech as f64
    }
}

struct Timeline {
    /// (speaker index, start_ms, len_ms) per utterance.
    placed: Vec<(usize, u64, u64)>,
    realized_overlap: f64,
}

/// Lays utterances on the timeline. Consecutive utterances either overlap
/// (amount budgeted from the session overlap target) or are separated by a
/// pause. Per-pair caps keep concurrency at two, leave every utterance a
/// solo region, and forbid same-speaker overlap.
fn plan_timeline(
    spec: &SessionSpec,
    order: &[usize],
    lens_ms: &[u64],
    rng: &mut Rng,
) -> Result<Timeline, SimulateError> {
    let q = spec.boundary_quantum_ms.max(1) as u64;
    let k = order.len();
    let total_speech: u64 = lens_ms.iter().sum();

    // Pair kinds: silence between same-speaker neighbors is forced.
    let mut is_silence = vec![false; k];
    for i in 1..k {
        is_silence[i] = order[i] == order[i - 1] || rng.bernoulli(spec.silence_prob);
    }
    let mut gaps: Vec<u64> = (0..k)
        .map(|i| {
            if i > 0 && is_silence[i] {
                let g = rng.range(spec.silence_range_s.0 * 1000.0, spec.silence_range_s.1 * 1000.0);
                ((libm::round(g / q as f64) as u64).max(1)) * q
            } else {
                0
            }
        })
        .collect();

    // Overlap budget from the session target g: O = g*S/(1+g). Quantized
    // toward the range interior so a fully placed budget keeps the realized
    // ratio inside the range: floor at the upper bound, ceil at the lower.
    let g_target = rng.range(spec.overlap_range.0, spec.overlap_range.1);
    let to_budget = |g: f64| g * total_speech as f64 / (1.0 + g);
    let budget_max = (to_budget(spec.overlap_range.1) / q as f64) as u64 * q;
    let budget_min = (libm::ceil(to_budget(spec.overlap_range.0) / q as f64)) as u64 * q;
    let mut budget = ((libm::round(to_budget(g_target) / q as f64)) as u64 * q)
        .clamp(budget_min.min(budget_max), budget_max);

    // Per-pair overlap cap: the configured fraction of the shorter
    // utterance, and never reaching past either neighbor pair's territory
    // (o[i] + o[i+1] <= len[i] - q keeps concurrency at two and leaves a
    // solo region inside every utterance).
    let mut overlaps = vec![0u64; k];
    let cap_full = |i: usize, overlaps: &[u64]| -> u64 {
        let shorter = lens_ms[i - 1].min(lens_ms[i]);
        let frac_cap = (spec.max_pair_overlap * shorter as f64 / q as f64) as u64 * q;
        let reach_prev = lens_ms[i - 1].saturating_sub(overlaps[i - 1]).saturating_sub(q);
        let reach_next = if i + 1 < k {
            lens_ms[i].saturating_sub(overlaps[i + 1]).saturating_sub(q)
        } else {
            u64::MAX
        };
        frac_cap.min(reach_prev).min(reach_next)
    };

    let eligible: Vec<usize> = (1..k).filter(|&i| !is_silence[i]).collect();
    let capacity_weight: u64 = eligible
        .iter()
        .map(|&i| (spec.max_pair_overlap * lens_ms[i - 1].min(lens_ms[i]) as f64) as u64)
        .sum::<u64>()
        .max(1);
    // Proportional pass, then a top-up pass against the dynamic caps.
    let target_total = budget;
    for &i in &eligible {
        let weight = (spec.max_pair_overlap * lens_ms[i - 1].min(lens_ms[i]) as f64) as u64;
        let share = ((target_total as u128 * weight as u128 / capacity_weight as u128) as u64
            / q)
            * q;
        let o = share.min(cap_full(i, &overlaps)).min(budget);
        overlaps[i] = o;
        budget -= o;
    }
    for &i in &eligible {
        if budget == 0 {
            break;
        }
        let room = cap_full(i, &overlaps).saturating_sub(overlaps[i]);
        let add = room.min(budget) / q * q;
        overlaps[i] += add;
        budget -= add;
    }
    // When pauses starve the budget below the range's lower bound, convert
    // just enough silence pairs (never same-speaker ones) into overlaps.
    let placed_so_far = |overlaps: &[u64]| overlaps.iter().sum::<u64>();
    if placed_so_far(&overlaps) < budget_min {
        for i in 1..k {
            if placed_so_far(&overlaps) >= budget_min {
                break;
            }
            if is_silence[i] && order[i] != order[i - 1] {
                let want = (budget_min - placed_so_far(&overlaps)).min(budget);
                let o = cap_full(i, &overlaps).min(want);
                if o > 0 {
                    is_silence[i] = false;
                    gaps[i] = 0;
                    overlaps[i] = o;
                    budget -= o;
                }
            }
        }
    }

    // Placement.
    let mut placed = Vec::with_capacity(k);
    let mut prev_end = 0u64;
    for i in 0..k {
        let start = if i == 0 {
            0
        } else if is_silence[i] {
            prev_end + gaps[i]
        } else {
            prev_end - overlaps[i]
        };
        placed.push((order[i], start, lens_ms[i]));
        prev_end = start + lens_ms[i];
    }

    let placed_overlap: u64 = overlaps.iter().sum();
    let realized = if total_speech == placed_overlap {
        0.0
    } else {
        placed_overlap as f64 / (total_speech - placed_overlap) as f64
    };
    // The upper bound holds by construction; the lower bound can still fail
    // when caps starve the budget even after silence conversion.
    if realized < spec.overlap_range.0 - 1e-9 {
        return Err(SimulateError::OverlapInfeasible { target: g_target, realized });
    }
    Ok(Timeline { placed, realized_overlap: realized })
}

/// Draws azimuths with guaranteed pairwise circular separation by
/// constructing gaps of at least the minimum separation that sum to 360.
fn draw_azimuths(spec: &SessionSpec, rng: &mut Rng) -> Result<Vec<f64>, SimulateError> {
    let n = spec.n_speakers;
    if n as f64 * spec.min_azimuth_sep_deg > 360.0 {
        return Err(SimulateError::AzimuthPacking {
            speakers: n,
            min_sep_deg: spec.min_azimuth_sep_deg,
        });
    }
    if n == 1 {
        return Ok(vec![rng.range(0.0, 360.0)]);
    }
    let leftover = 360.0 - n as f64 * spec.min_azimuth_sep_deg;
    let weights: Vec<f64> = (0..n).map(|_| -libm::log(1.0 - rng.uniform())).collect();
    let weight_sum: f64 = weights.iter().sum();
    let offset = rng.range(0.0, 360.0);
    let mut azimuths = Vec::with_capacity(n);
    let mut angle = offset;
    for w in &weights {
        azimuths.push(angle % 360.0);
        angle += spec.min_azimuth_sep_deg + leftover * w / weight_sum;
    }
    // Random speaker-to-position assignment.
    rng.shuffle(&mut azimuths);
    Ok(azimuths)
}

fn make_words(rng: &mut Rng, n_words: usize) -> Vec<String> {
    const SYLLABLES: [&str; 10] = ["ka", "to", "ri", "mo", "sa", "ne", "lu", "di", "pa", "vo"];
    (0..n_words)
        .map(|_| {
            let syls = 2 + rng.below(2) as usize;
            (0..syls).map(|_| SYLLABLES[rng.below(10) as usize]).collect::<Vec<_>>().concat()
        })
        .collect()
}

/// Generates one session from the recipe. Deterministic in
/// `spec.seed` and the pool contents.
pub fn generate_session(spec: &SessionSpec, pool: &UtterancePool) -> Result<Session, SimulateError> {
    let speakers = spec.speaker_names();
    let mut rng = Rng::new(spec.seed);
    let mut order_rng = rng.fork(1);
    let mut timeline_rng = rng.fork(2);
    let mut azimuth_rng = rng.fork(3);
    let mut level_rng = rng.fork(4);
    let mut word_rng = rng.fork(5);
    let noise_seed = rng.fork(6).next_u64();

    // Utterance counts and a speaker order that avoids adjacent repeats
    // where possible.
    let counts: Vec<usize> = (0..spec.n_speakers)
        .map(|_| {
            order_rng.int_range(
                spec.utterances_per_speaker.0 as u64,
                spec.utterances_per_speaker.1 as u64,
            ) as usize
        })
        .collect();
    for (i, name) in speakers.iter().enumerate() {
        let have = pool.utterances.get(name).map_or(0, Vec::len);
        if have < counts[i] {
            return Err(SimulateError::PoolExhausted {
                speaker: name.clone(),
                have,
                need: counts[i],
            });
        }
    }
    let mut order: Vec<usize> = Vec::new();
    for (speaker, &count) in counts.iter().enumerate() {
        for _ in 0..count {
            order.push(speaker);
        }
    }
    order_rng.shuffle(&mut order);
    // Repair adjacent repeats by swapping with a later compatible slot.
    for i in 1..order.len() {
        if order[i] == order[i - 1] {
            if let Some(j) = (i + 1..order.len()).find(|&j| order[j] != order[i]) {
                order.swap(i, j);
            }
        }
    }

    // Pull utterances from the pool in order of use.
    let mut next_utt = vec![0usize; spec.n_speakers];
    let mut utt_index = Vec::with_capacity(order.len());
    let mut lens_ms = Vec::with_capacity(order.len());
    for &speaker in &order {
        let idx = next_utt[speaker];
        next_utt[speaker] += 1;
        let wave = &pool.utterances[&speakers[speaker]][idx];
        utt_index.push(idx);
        lens_ms.push((wave.len() as u64 * 1000) / spec.sample_rate as u64);
    }

    let timeline = plan_timeline(spec, &order, &lens_ms, &mut timeline_rng)?;
    let azimuths = draw_azimuths(spec, &mut azimuth_rng)?;
    let levels_db: Vec<f64> = (0..spec.n_speakers)
        .map(|_| level_rng.range(spec.level_range_db.0, spec.level_range_db.1))
        .collect();

    let len_ms = timeline.placed.iter().map(|&(_, s, l)| s + l).max().unwrap_or(0);
    let len_samples = ms_to_samples(len_ms, spec.sample_rate);
    let geometry = default_geometry();
    let n_channels = geometry.len();

    let mut sources: BTreeMap<String, Vec<f64>> = speakers
        .iter()
        .map(|name| (name.clone(), vec![0.0f64; len_samples]))
        .collect();
    let mut mixture = vec![vec![0.0f64; len_samples]; n_channels];
    let mut intervals = Vec::with_capacity(order.len());
    let mut transcripts = Vec::with_capacity(order.len());

    for (&(speaker, start_ms, ulen_ms), &uidx) in timeline.placed.iter().zip(&utt_index) {
        let name = &speakers[speaker];
        let gain = libm::pow(10.0, levels_db[speaker] / 20.0);
        let wave = &pool.utterances[name][uidx];
        let scaled: Vec<f64> = wave.iter().map(|v| v * gain).collect();
        let start = ms_to_samples(start_ms, spec.sample_rate);

        let source = sources.get_mut(name).expect("speaker source exists");
        for (i, v) in scaled.iter().enumerate() {
            source[start + i] = *v;
        }
        let spatial = spatialize(&scaled, azimuths[speaker], &geometry, 0, spec.sample_rate);
        for (mix_ch, sp_ch) in mixture.iter_mut().zip(spatial.channels()) {
            for (i, v) in sp_ch.iter().enumerate() {
                mix_ch[start + i] += v;
            }
        }

        intervals.push(SpeakerInterval::from_ms(name.clone(), start_ms, start_ms + ulen_ms));
        let n_words = 4 + word_rng.below(6) as usize;
        transcripts.push(TranscriptSegment {
            speaker: name.clone(),
            start_ms,
            end_ms: start_ms + ulen_ms,
            words: make_words(&mut word_rng, n_words),
        });
    }
    intervals.sort_by(|a, b| (a.start_ms, a.end_ms, &a.speaker).cmp(&(b.start_ms, b.end_ms, &b.speaker)));
    transcripts.sort_by(|a, b| (a.start_ms, &a.speaker).cmp(&(b.start_ms, &b.speaker)));

    let clean = MultichannelAudio::new(mixture, spec.sample_rate, Some(geometry), 0)
        .expect("consistent mixture channels");
    let (mixture, snr_db) = match spec.noise {
        NoiseKind::None => (clean, None),
        kind => {
            let snr = rng.range(spec.snr_range_db.0, spec.snr_range_db.1);
            (add_noise(&clean, snr, kind, noise_seed)?, Some(snr))
        }
    };

    Ok(Session {
        mixture,
        sources,
        intervals,
        speakers,
        azimuths,
        levels_db,
        transcripts,
        measured_overlap: timeline.realized_overlap,
        snr_db,
        spec: spec.clone(),
    })
}

/// Convenience wrapper: a synthetic pool plus [`generate_session`].
pub fn generate_synthetic_session(spec: &SessionSpec) -> Result<Session, SimulateError> {
    generate_session(spec, &synthetic_pool(spec))
}

/// One training example cut from a session.
#[derive(Debug, Clone)]
pub struct TrainingSegment {
    pub start_ms: u64,
    pub mixture: MultichannelAudio,
    pub targets: [Vec<f64>; 2],
    /// Active-speaker count per boundary-quantum frame.
    pub speaker_counts: Vec<u8>,
    /// Number of distinct speakers with any activity in the chunk.
    pub distinct_speakers: usize,
}

#[derive(Debug, Clone)]
pub struct SegmentBatch {
    pub segments: Vec<TrainingSegment>,
    /// Fraction of chunks containing exactly one distinct speaker.
    pub single_speaker_fraction: f64,
}

/// Cuts a session into non-overlapping fixed-length training chunks with
/// two-stream targets (the trailing remainder is dropped).
pub fn make_training_segments(
    session: &Session,
    segment_s: f64,
) -> Result<SegmentBatch, SimulateError> {
    use crate::ssnd::{assign_streams, build_target_streams};

    let segment_ms = (segment_s * 1000.0) as u64;
    let len_ms = session.len_ms();
    if len_ms < segment_ms || segment_ms == 0 {
        return Err(SimulateError::SessionTooShort { len_ms, segment_ms });
    }
    let assignment = assign_streams(&session.intervals).map_err(|_| {
        SimulateError::OverlapInfeasible { target: 0.0, realized: f64::NAN }
    })?;
    let sr = session.mixture.sample_rate;
    let targets = build_target_streams(
        &assignment,
        &session.sources,
        &session.intervals,
        sr,
        session.len_samples(),
    )
    .expect("session sources cover all interval speakers");

    let q = session.spec.boundary_quantum_ms.max(1) as u64;
    let n_chunks = (len_ms / segment_ms) as usize;
    let mut segments = Vec::with_capacity(n_chunks);
    let mut single = 0usize;
    for chunk in 0..n_chunks {
        let lo_ms = chunk as u64 * segment_ms;
        let hi_ms = lo_ms + segment_ms;
        let lo = ms_to_samples(lo_ms, sr);
        let hi = ms_to_samples(hi_ms, sr).min(session.len_samples());

        let channels: Vec<Vec<f64>> = (0..session.mixture.n_channels())
            .map(|c| session.mixture.channel(c)[lo..hi].to_vec())
            .collect();
        let mixture = MultichannelAudio::new(
            channels,
            sr,
            session.mixture.geometry.clone(),
            session.mixture.ref_channel,
        )
        .expect("consistent chunk channels");

        let n_frames = (segment_ms / q) as usize;
        let mut counts = vec![0u8; n_frames];
        let mut seen: Vec<&str> = Vec::new();
        for iv in &session.intervals {
            let from = iv.start_ms.max(lo_ms);
            let to = iv.end_ms.min(hi_ms);
            if from < to {
                if !seen.contains(&iv.speaker.as_str()) {
                    seen.push(&iv.speaker);
                }
                for t in (from - lo_ms) / q..(to - lo_ms).div_ceil(q) {
                    counts[t as usize] += 1;
                }
            }
        }
        if seen.len() == 1 {
            single += 1;
        }
        segments.push(TrainingSegment {
            start_ms: lo_ms,
            mixture,
            targets: [targets[0][lo..hi].to_vec(), targets[1][lo..hi].to_vec()],
            speaker_counts: counts,
            distinct_speakers: seen.len(),
        });
    }
    Ok(SegmentBatch {
        single_speaker_fraction: single as f64 / n_chunks as f64,
        segments,
    })
}
