//! Posterior-to-decision post-processing: thresholding, median filtering,
//! interval extraction, and threshold/frame-shift tuning sweeps.

use alloc::vec::Vec;
use core::fmt;

use crate::metrics::{der, DerReport};
use crate::types::{activity_to_intervals, ActivityMatrix, PosteriorMatrix, SpeakerInterval};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostProcessConfig {
    /// Speech-activity decision threshold; a posterior equal to the
    /// threshold counts as active.
    pub threshold: f64,
    /// Median filter length in frames, odd.
    pub median_len: usize,
    /// Frame shift the posteriors are expected on.
    pub frame_shift_ms: u32,
}

impl Default for PostProcessConfig {
    fn default() -> Self {
        PostProcessConfig { threshold: 0.5, median_len: 31, frame_shift_ms: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiarPostError {
    EvenMedianLength(usize),
    ShiftMismatch { config_ms: u32, grid_ms: u32 },
}

impl fmt::Display for DiarPostError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiarPostError::EvenMedianLength(n) => write!(f, "median filter length {n} must be odd"),
            DiarPostError::ShiftMismatch { config_ms, grid_ms } => {
                write!(f, "configured frame shift {config_ms} ms but posteriors are on {grid_ms} ms")
            }
        }
    }
}

impl core::error::Error for DiarPostError {}

/// Binarizes posteriors: active iff `p >= tau` (inclusive).
pub fn threshold(posteriors: &PosteriorMatrix, tau: f64) -> ActivityMatrix {
    assert!(tau > 0.0 && tau < 1.0, "threshold must lie in (0, 1)");
    let mut act = ActivityMatrix::zeros(posteriors.grid, posteriors.speakers.clone());
    for t in 0..posteriors.n_frames() {
        for c in 0..posteriors.n_speakers() {
            act.set(t, c, u8::from(posteriors.get(t, c) >= tau));
        }
    }
    act
}

/// Per-speaker majority vote in a centered window; edge windows shrink to
/// the valid range rather than padding (a truncated even-size window with a
/// tied vote counts as inactive).
pub fn median_filter(activity: &ActivityMatrix, len: usize) -> Result<ActivityMatrix, DiarPostError> {
    if len.is_multiple_of(2) {
        return Err(DiarPostError::EvenMedianLength(len));
    }
    let half = len / 2;
    let t_total = activity.n_frames();
    let mut out = ActivityMatrix::zeros(activity.grid, activity.speakers.clone());
    out.azimuths = activity.azimuths.clone();
    for c in 0..activity.n_speakers() {
        // Prefix sums per column keep the filter linear in T.
        let mut prefix = Vec::with_capacity(t_total + 1);
        prefix.push(0u32);
        for t in 0..t_total {
            prefix.push(prefix[t] + activity.get(t, c) as u32);
        }
        for t in 0..t_total {
            let lo = t.saturating_sub(half);
            let hi = (t + half + 1).min(t_total);
            let ones = prefix[hi] - prefix[lo];
            let window = (hi - lo) as u32;
            out.set(t, c, u8::from(2 * ones > window));
        }
    }
    Ok(out)
}

/// Threshold, median-filter, and extract intervals.
pub fn decide(
    posteriors: &PosteriorMatrix,
    config: &PostProcessConfig,
) -> Result<Vec<SpeakerInterval>, DiarPostError> {
    if posteriors.grid.shift_ms != config.frame_shift_ms {
        return Err(DiarPostError::ShiftMismatch {
            config_ms: config.frame_shift_ms,
            grid_ms: posteriors.grid.shift_ms,
        });
    }
    let hard = threshold(posteriors, config.threshold);
    let smoothed = median_filter(&hard, config.median_len)?;
    Ok(activity_to_intervals(&smoothed))
}

/// One cell of a tuning sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub frame_shift_ms: u32,
    pub threshold: f64,
    pub report: DerReport,
}

/// Scores every (frame shift, threshold) combination against a reference.
///
/// Each posterior matrix contributes its own grid's frame shift; thresholds
/// come from `taus`. Smaller thresholds trade missed speech for false
/// alarms, larger frame shifts coarsen boundaries.
pub fn tuning_sweep(
    posteriors_per_shift: &[PosteriorMatrix],
    reference: &[SpeakerInterval],
    taus: &[f64],
    median_len: usize,
    der_resolution_ms: u32,
) -> Result<Vec<SweepRow>, DiarPostError> {
    let mut rows = Vec::with_capacity(posteriors_per_shift.len() * taus.len());
    for posteriors in posteriors_per_shift {
        for &tau in taus {
            let config = PostProcessConfig {
                threshold: tau,
                median_len,
                frame_shift_ms: posteriors.grid.shift_ms,
            };
            let hyp = decide(posteriors, &config)?;
            let report = der(reference, &hyp, 0.0, der_resolution_ms);
            rows.push(SweepRow { frame_shift_ms: posteriors.grid.shift_ms, threshold: tau, report });
        }
    }
    rows.sort_by(|a, b| {
        (a.frame_shift_ms, a.threshold)
            .partial_cmp(&(b.frame_shift_ms, b.threshold))
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use crate::types::{intervals_to_activity, FrameGrid, Matrix};
    use alloc::format;
    use alloc::string::{String, ToString};
    use alloc::vec;

    fn posterior(shift_ms: u32, values: Vec<Vec<f64>>) -> PosteriorMatrix {
        let t = values.len();
        let c = values[0].len();
        let speakers = (0..c).map(|i| format!("s{i}")).collect();
        PosteriorMatrix::new(FrameGrid::hop_aligned(shift_ms, t), Matrix::from_rows(values), speakers)
    }

    #[test]
    fn threshold_all_above() {
        let p = posterior(10, vec![vec![0.6; 3]; 4]);
        let act = threshold(&p, 0.5);
        for t in 0..4 {
            assert_eq!(act.concurrency(t), 3);
        }
    }

    #[test]
    fn threshold_is_inclusive_at_tau() {
        let p = posterior(10, vec![vec![0.5], vec![0.49999]]);
        let act = threshold(&p, 0.5);
        assert_eq!(act.get(0, 0), 1);
        assert_eq!(act.get(1, 0), 0);
    }

    #[test]
    fn threshold_monotone_in_tau() {
        let mut rng = Rng::new(41);
        let p = posterior(
            10,
            (0..50).map(|_| (0..4).map(|_| rng.uniform()).collect()).collect(),
        );
        let mut taus = [0.1, 0.3, 0.5, 0.7, 0.9];
        taus.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for pair in taus.windows(2) {
            let low = threshold(&p, pair[0]);
            let high = threshold(&p, pair[1]);
            for t in 0..50 {
                for c in 0..4 {
                    assert!(low.get(t, c) >= high.get(t, c));
                }
            }
        }
    }

    #[test]
    fn median_constant_column_unchanged() {
        let mut act = ActivityMatrix::zeros(FrameGrid::hop_aligned(10, 64), vec!["a".to_string()]);
        for t in 0..64 {
            act.set(t, 0, 1);
        }
        let out = median_filter(&act, 31).unwrap();
        assert_eq!(out, { let mut want = act.clone(); want.azimuths = None; want });
    }

    #[test]
    fn median_removes_isolated_frame() {
        let mut act = ActivityMatrix::zeros(FrameGrid::hop_aligned(10, 64), vec!["a".to_string()]);
        act.set(30, 0, 1);
        let out = median_filter(&act, 31).unwrap();
        for t in 0..64 {
            assert_eq!(out.get(t, 0), 0);
        }
    }

    #[test]
    fn median_matches_direct_majority_oracle() {
        let mut rng = Rng::new(42);
        for _ in 0..20 {
            let t_total = 1 + rng.below(80) as usize;
            let mut act =
                ActivityMatrix::zeros(FrameGrid::hop_aligned(10, t_total), vec!["a".to_string()]);
            for t in 0..t_total {
                if rng.bernoulli(0.5) {
                    act.set(t, 0, 1);
                }
            }
            let len = [1usize, 3, 7, 31][rng.below(4) as usize];
            let out = median_filter(&act, len).unwrap();
            for t in 0..t_total {
                let lo = t.saturating_sub(len / 2);
                let hi = (t + len / 2 + 1).min(t_total);
                let ones: u32 = (lo..hi).map(|i| act.get(i, 0) as u32).sum();
                let want = u8::from(2 * ones > (hi - lo) as u32);
                assert_eq!(out.get(t, 0), want, "t={t} len={len}");
            }
        }
    }

    #[test]
    fn median_rejects_even_length() {
        let act = ActivityMatrix::zeros(FrameGrid::hop_aligned(10, 4), vec!["a".to_string()]);
        assert_eq!(median_filter(&act, 4), Err(DiarPostError::EvenMedianLength(4)));
    }

    #[test]
    fn median_is_idempotent_on_long_runs() {
        let mut act = ActivityMatrix::zeros(FrameGrid::hop_aligned(10, 120), vec!["a".to_string()]);
        for t in 20..70 {
            act.set(t, 0, 1);
        }
        let once = median_filter(&act, 31).unwrap();
        let twice = median_filter(&once, 31).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn decide_recovers_clean_utterance() {
        let grid = FrameGrid::hop_aligned(10, 400);
        let speakers = vec!["a".to_string()];
        let reference = vec![SpeakerInterval::new("a", 0.5, 2.5)];
        let act = intervals_to_activity(&reference, grid, &speakers).unwrap();
        let p = PosteriorMatrix::from_activity(&act);
        let cfg = PostProcessConfig { threshold: 0.5, median_len: 31, frame_shift_ms: 10 };
        let decided = decide(&p, &cfg).unwrap();
        assert_eq!(decided, reference);
    }

    #[test]
    fn decide_empty_posteriors_give_nothing() {
        let p = posterior(10, vec![vec![0.0; 2]; 50]);
        let cfg = PostProcessConfig { threshold: 0.5, median_len: 31, frame_shift_ms: 10 };
        assert!(decide(&p, &cfg).unwrap().is_empty());
    }

    #[test]
    fn decide_heals_short_dropout() {
        let mut values = vec![vec![1.0]; 100];
        for row in values.iter_mut().skip(40).take(5) {
            row[0] = 0.0;
        }
        let p = posterior(10, values);
        let cfg = PostProcessConfig { threshold: 0.5, median_len: 31, frame_shift_ms: 10 };
        let decided = decide(&p, &cfg).unwrap();
        assert_eq!(decided.len(), 1);
        assert_eq!(decided[0].start_ms, 0);
        assert_eq!(decided[0].end_ms, 1000);
    }

    #[test]
    fn decide_checks_frame_shift() {
        let p = posterior(30, vec![vec![1.0]; 10]);
        let cfg = PostProcessConfig { threshold: 0.5, median_len: 1, frame_shift_ms: 50 };
        assert!(matches!(decide(&p, &cfg), Err(DiarPostError::ShiftMismatch { .. })));
    }

    #[test]
    fn decide_never_overlaps_same_speaker() {
        let mut rng = Rng::new(43);
        let p = posterior(
            10,
            (0..200).map(|_| (0..3).map(|_| rng.uniform()).collect()).collect(),
        );
        let cfg = PostProcessConfig { threshold: 0.5, median_len: 7, frame_shift_ms: 10 };
        let decided = decide(&p, &cfg).unwrap();
        for a in 0..decided.len() {
            for b in a + 1..decided.len() {
                if decided[a].speaker == decided[b].speaker {
                    assert!(!decided[a].overlaps(&decided[b]));
                }
            }
        }
    }

    fn noisy_oracle_posteriors(
        shift_ms: u32,
        reference: &[SpeakerInterval],
        speakers: &[String],
        len_ms: u64,
        seed: u64,
    ) -> PosteriorMatrix {
        let grid = FrameGrid::covering(len_ms, shift_ms);
        let act = intervals_to_activity(reference, grid, speakers).unwrap();
        let mut rng = Rng::new(seed);
        let mut m = Matrix::zeros(act.n_frames(), act.n_speakers());
        for t in 0..act.n_frames() {
            for c in 0..act.n_speakers() {
                // Active frames cluster near 0.85, silence near 0.15, with
                // enough spread that both thresholds bite.
                let base = if act.get(t, c) == 1 { 0.85 } else { 0.15 };
                m.set(t, c, (base + rng.range(-0.45, 0.45)).clamp(0.0, 1.0));
            }
        }
        PosteriorMatrix::new(grid, m, speakers.to_vec())
    }

    #[test]
    fn sweep_perfect_posteriors_score_zero_everywhere() {
        let speakers = vec!["a".to_string(), "b".to_string()];
        let reference =
            vec![SpeakerInterval::new("a", 0.5, 3.0), SpeakerInterval::new("b", 3.5, 6.0)];
        let mats: Vec<PosteriorMatrix> = [10u32, 20]
            .iter()
            .map(|&shift| {
                let grid = FrameGrid::covering(6500, shift);
                let act = intervals_to_activity(&reference, grid, &speakers).unwrap();
                PosteriorMatrix::from_activity(&act)
            })
            .collect();
        let rows = tuning_sweep(&mats, &reference, &[0.3, 0.5], 31, 10).unwrap();
        assert_eq!(rows.len(), 4);
        for row in rows {
            assert!(row.report.der < 1e-12, "{row:?}");
        }
    }

    #[test]
    fn sweep_false_alarm_monotone_in_threshold() {
        let speakers = vec!["a".to_string(), "b".to_string()];
        let reference =
            vec![SpeakerInterval::new("a", 1.0, 9.0), SpeakerInterval::new("b", 10.0, 19.0)];
        let mats = vec![
            noisy_oracle_posteriors(10, &reference, &speakers, 20_000, 7),
            noisy_oracle_posteriors(50, &reference, &speakers, 20_000, 8),
        ];
        let rows = tuning_sweep(&mats, &reference, &[0.3, 0.5], 7, 10).unwrap();
        for shift in [10u32, 50] {
            let grid_rows: Vec<&SweepRow> =
                rows.iter().filter(|r| r.frame_shift_ms == shift).collect();
            assert_eq!(grid_rows.len(), 2);
            // Thresholds come out sorted ascending: FA must not grow and MI
            // must not shrink as tau rises.
            assert!(grid_rows[0].threshold < grid_rows[1].threshold);
            assert!(grid_rows[0].report.false_alarm >= grid_rows[1].report.false_alarm);
            assert!(grid_rows[0].report.missed <= grid_rows[1].report.missed);
        }
    }
}
