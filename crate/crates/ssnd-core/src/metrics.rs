//! Evaluation metrics: frame-based NIST-style DER with missed/false-alarm/
//! confusion decomposition, word error rate via Levenshtein alignment, and
//! concatenated minimum-permutation WER (cpWER).

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::criteria::{hungarian, AssignMethod};
use crate::types::{Matrix, SpeakerInterval};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricsError {
    /// cpWER needs at least one reference word.
    EmptyReference,
    /// Brute-force mapping search refused beyond the documented speaker bound.
    BruteTooLarge { speakers: usize, limit: usize },
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::EmptyReference => write!(f, "reference transcripts contain no words"),
            MetricsError::BruteTooLarge { speakers, limit } => {
                write!(f, "brute-force mapping over {speakers} speakers exceeds the {limit} limit")
            }
        }
    }
}

impl core::error::Error for MetricsError {}

/// Diarization error rate decomposition; all rates are fractions of the
/// total reference speaker time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerReport {
    pub der: f64,
    pub missed: f64,
    pub false_alarm: f64,
    pub confusion: f64,
    pub collar_s: f64,
    /// Scored reference speaker time in seconds (overlap counted per
    /// speaker).
    pub scored_time_s: f64,
}

/// Word error rate decomposition. `wer = (S + D + I) / n_ref_words`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WerReport {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub n_ref_words: usize,
}

impl WerReport {
    pub fn edits(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }

    pub fn wer(&self) -> f64 {
        if self.n_ref_words == 0 {
            if self.edits() == 0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.edits() as f64 / self.n_ref_words as f64
        }
    }
}

/// One attributed utterance for cpWER scoring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptSegment {
    pub speaker: String,
    pub start_ms: u64,
    pub end_ms: u64,
    pub words: Vec<String>,
}

/// Frame-based DER at the given resolution with a one-to-one speaker
/// mapping that maximizes jointly-active time (Hungarian on the overlap
/// matrix). Frames whose center falls within `collar_s` of any reference
/// boundary are excluded from scoring when the collar is positive.
pub fn der(
    reference: &[SpeakerInterval],
    hypothesis: &[SpeakerInterval],
    collar_s: f64,
    resolution_ms: u32,
) -> DerReport {
    assert!(resolution_ms > 0);
    let res = resolution_ms as u64;
    let end_ms = reference
        .iter()
        .chain(hypothesis)
        .map(|iv| iv.end_ms)
        .max()
        .unwrap_or(0);
    let n_frames = end_ms.div_ceil(res) as usize;

    let ref_speakers = speaker_list(reference);
    let hyp_speakers = speaker_list(hypothesis);
    let ref_active = rasterize(reference, &ref_speakers, res, n_frames);
    let hyp_active = rasterize(hypothesis, &hyp_speakers, res, n_frames);

    // Scored-frame mask from the collar around reference boundaries.
    let collar_ms = collar_s * 1000.0;
    let mut scored = vec![true; n_frames];
    if collar_ms > 0.0 {
        let mut boundaries: Vec<u64> = Vec::new();
        for iv in reference {
            boundaries.push(iv.start_ms);
            boundaries.push(iv.end_ms);
        }
        for (t, s) in scored.iter_mut().enumerate() {
            let center = t as f64 * res as f64 + res as f64 / 2.0;
            if boundaries.iter().any(|&b| (center - b as f64).abs() < collar_ms) {
                *s = false;
            }
        }
    }

    // Joint-activity counts over scored frames.
    let (n_ref, n_hyp) = (ref_speakers.len(), hyp_speakers.len());
    let mut overlap = Matrix::zeros(n_ref, n_hyp);
    for t in 0..n_frames {
        if !scored[t] {
            continue;
        }
        for r in 0..n_ref {
            if ref_active[r][t] {
                for h in 0..n_hyp {
                    if hyp_active[h][t] {
                        overlap.set(r, h, overlap.get(r, h) + 1.0);
                    }
                }
            }
        }
    }

    let mapping = best_mapping(&overlap);

    let mut missed = 0u64;
    let mut false_alarm = 0u64;
    let mut confusion = 0u64;
    let mut total_ref = 0u64;
    for t in 0..n_frames {
        if !scored[t] {
            continue;
        }
        let nr = (0..n_ref).filter(|&r| ref_active[r][t]).count() as u64;
        let nh = (0..n_hyp).filter(|&h| hyp_active[h][t]).count() as u64;
        let nc = mapping
            .iter()
            .enumerate()
            .filter(|(r, h)| h.is_some_and(|h| ref_active[*r][t] && hyp_active[h][t]))
            .count() as u64;
        total_ref += nr;
        missed += nr.saturating_sub(nh);
        false_alarm += nh.saturating_sub(nr);
        confusion += nr.min(nh) - nc;
    }

    let denom = total_ref as f64;
    let frac = |n: u64| {
        if denom == 0.0 {
            if n == 0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            n as f64 / denom
        }
    };
    let (missed, false_alarm, confusion) = (frac(missed), frac(false_alarm), frac(confusion));
    DerReport {
        der: missed + false_alarm + confusion,
        missed,
        false_alarm,
        confusion,
        collar_s,
        scored_time_s: total_ref as f64 * res as f64 / 1000.0,
    }
}

fn speaker_list(intervals: &[SpeakerInterval]) -> Vec<String> {
    let mut names: Vec<String> = intervals.iter().map(|iv| iv.speaker.clone()).collect();
    names.sort();
    names.dedup();
    names
}

fn rasterize(
    intervals: &[SpeakerInterval],
    speakers: &[String],
    res_ms: u64,
    n_frames: usize,
) -> Vec<Vec<bool>> {
    let mut active = vec![vec![false; n_frames]; speakers.len()];
    for iv in intervals {
        let s = speakers.iter().position(|n| *n == iv.speaker).unwrap();
        // Frame centers at t*res + res/2; center in [start, end).
        for t in 0..n_frames {
            let center_twice = 2 * t as u64 * res_ms + res_ms;
            if center_twice >= 2 * iv.start_ms && center_twice < 2 * iv.end_ms {
                active[s][t] = true;
            }
        }
    }
    active
}

/// One-to-one reference-to-hypothesis mapping maximizing total joint time;
/// `mapping[r]` is the mapped hypothesis index, if any.
fn best_mapping(overlap: &Matrix) -> Vec<Option<usize>> {
    let (n_ref, n_hyp) = (overlap.rows(), overlap.cols());
    let n = n_ref.max(n_hyp);
    if n == 0 {
        return Vec::new();
    }
    let mut cost = Matrix::zeros(n, n);
    for r in 0..n {
        for h in 0..n {
            let v = if r < n_ref && h < n_hyp { -overlap.get(r, h) } else { 0.0 };
            cost.set(r, h, v);
        }
    }
    let (assign, _) = hungarian(&cost).expect("finite square cost");
    (0..n_ref)
        .map(|r| {
            let h = assign[r];
            // Zero-overlap pairs are not a real mapping.
            if h < n_hyp && overlap.get(r, h) > 0.0 {
                Some(h)
            } else {
                None
            }
        })
        .collect()
}

/// Levenshtein alignment with unit costs; ties prefer substitutions over
/// deletion, and deletion over insertion.
pub fn wer<S: AsRef<str>>(reference: &[S], hypothesis: &[S]) -> WerReport {
    let n = reference.len();
    let m = hypothesis.len();
    let mut dist = vec![0u32; (n + 1) * (m + 1)];
    let idx = |i: usize, j: usize| i * (m + 1) + j;
    for i in 0..=n {
        dist[idx(i, 0)] = i as u32;
    }
    for j in 0..=m {
        dist[idx(0, j)] = j as u32;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = dist[idx(i - 1, j - 1)]
                + u32::from(reference[i - 1].as_ref() != hypothesis[j - 1].as_ref());
            let del = dist[idx(i - 1, j)] + 1;
            let ins = dist[idx(i, j - 1)] + 1;
            dist[idx(i, j)] = sub.min(del).min(ins);
        }
    }
    // Backtrace one optimal alignment with the documented tie preference.
    let (mut i, mut j) = (n, m);
    let (mut subs, mut dels, mut inss) = (0usize, 0usize, 0usize);
    while i > 0 || j > 0 {
        let here = dist[idx(i, j)];
        if i > 0 && j > 0 {
            let matched = reference[i - 1].as_ref() == hypothesis[j - 1].as_ref();
            let diag = dist[idx(i - 1, j - 1)];
            if matched && diag == here {
                i -= 1;
                j -= 1;
                continue;
            }
            if !matched && diag + 1 == here {
                subs += 1;
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && dist[idx(i - 1, j)] + 1 == here {
            dels += 1;
            i -= 1;
            continue;
        }
        inss += 1;
        j -= 1;
    }
    WerReport { substitutions: subs, deletions: dels, insertions: inss, n_ref_words: n }
}

/// Lowercases, strips punctuation (keeping in-word apostrophes), and splits
/// on whitespace.
pub fn normalize_text(text: &str) -> Vec<String> {
    let mut cleaned = String::with_capacity(text.len());
    for ch in text.chars() {
        if ch.is_alphanumeric() || ch == '\'' {
            for lower in ch.to_lowercase() {
                cleaned.push(lower);
            }
        } else {
            cleaned.push(' ');
        }
    }
    cleaned.split_whitespace().map(ToString::to_string).collect()
}

/// Joins each speaker's utterances in time order.
fn concatenated(segments: &[TranscriptSegment]) -> Vec<(String, Vec<String>)> {
    let mut by_speaker: BTreeMap<&str, Vec<(u64, &[String])>> = BTreeMap::new();
    for seg in segments {
        by_speaker.entry(&seg.speaker).or_default().push((seg.start_ms, &seg.words));
    }
    by_speaker
        .into_iter()
        .map(|(speaker, mut utts)| {
            utts.sort_by_key(|&(start, _)| start);
            let words = utts.into_iter().flat_map(|(_, w)| w.iter().cloned()).collect();
            (speaker.to_string(), words)
        })
        .collect()
}

/// Reference-to-hypothesis speaker pairing; `None` marks padded slots.
pub type SpeakerMapping = Vec<(Option<String>, Option<String>)>;

/// Concatenated minimum-permutation WER.
///
/// Each speaker's utterances are concatenated in time order; the smaller
/// side is padded with empty transcripts; the one-to-one speaker mapping
/// minimizing total edits is found by the requested method. The mapping is
/// returned as `(reference speaker, hypothesis speaker)` pairs with `None`
/// marking padded slots.
pub fn cpwer(
    reference: &[TranscriptSegment],
    hypothesis: &[TranscriptSegment],
    method: AssignMethod,
) -> Result<(WerReport, SpeakerMapping), MetricsError> {
    let refs = concatenated(reference);
    let hyps = concatenated(hypothesis);
    let total_ref_words: usize = refs.iter().map(|(_, w)| w.len()).sum();
    if total_ref_words == 0 {
        return Err(MetricsError::EmptyReference);
    }
    let n = refs.len().max(hyps.len());
    let empty: Vec<String> = Vec::new();
    let ref_words = |i: usize| refs.get(i).map_or(&empty, |(_, w)| w);
    let hyp_words = |j: usize| hyps.get(j).map_or(&empty, |(_, w)| w);

    let mut cost = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            cost.set(i, j, wer(ref_words(i), hyp_words(j)).edits() as f64);
        }
    }

    let assign: Vec<usize> = match method {
        AssignMethod::Hungarian => hungarian(&cost).expect("finite square cost").0,
        AssignMethod::BruteForce => {
            const BRUTE_LIMIT: usize = 8;
            if n > BRUTE_LIMIT {
                return Err(MetricsError::BruteTooLarge { speakers: n, limit: BRUTE_LIMIT });
            }
            let mut best = f64::INFINITY;
            let mut best_assign: Vec<usize> = (0..n).collect();
            permutations(n, &mut |perm: &[usize]| {
                let total: f64 = (0..n).map(|i| cost.get(i, perm[i])).sum();
                if total < best {
                    best = total;
                    best_assign.copy_from_slice(perm);
                }
            });
            best_assign
        }
    };

    let mut report =
        WerReport { substitutions: 0, deletions: 0, insertions: 0, n_ref_words: total_ref_words };
    let mut mapping = Vec::with_capacity(n);
    for i in 0..n {
        let j = assign[i];
        let pair = wer(ref_words(i), hyp_words(j));
        report.substitutions += pair.substitutions;
        report.deletions += pair.deletions;
        report.insertions += pair.insertions;
        mapping.push((
            refs.get(i).map(|(s, _)| s.clone()),
            hyps.get(j).map(|(s, _)| s.clone()),
        ));
    }
    Ok((report, mapping))
}

fn permutations(n: usize, visit: &mut dyn FnMut(&[usize])) {
    let mut items: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    visit(&items);
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            visit(&items);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Per-session scores tagged with an evaluation condition.
#[derive(Debug, Clone)]
pub struct SessionScore {
    pub session: String,
    pub condition: String,
    pub der: DerReport,
    pub cpwer: Option<WerReport>,
}

/// One aggregated row of a condition report.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionRow {
    pub condition: String,
    pub n_sessions: usize,
    pub der: f64,
    pub missed: f64,
    pub false_alarm: f64,
    pub confusion: f64,
    pub cpwer: Option<f64>,
}

/// Aggregates per-session scores by condition (time-weighted DER,
/// word-weighted cpWER) and appends an `all` row over every session.
pub fn condition_report(scores: &[SessionScore]) -> Vec<ConditionRow> {
    let mut groups: BTreeMap<&str, Vec<&SessionScore>> = BTreeMap::new();
    for s in scores {
        groups.entry(&s.condition).or_default().push(s);
    }
    let mut rows: Vec<ConditionRow> =
        groups.into_iter().map(|(name, group)| aggregate(name, &group)).collect();
    if !scores.is_empty() {
        let all: Vec<&SessionScore> = scores.iter().collect();
        rows.push(aggregate("all", &all));
    }
    rows
}

fn aggregate(condition: &str, group: &[&SessionScore]) -> ConditionRow {
    let total_time: f64 = group.iter().map(|s| s.der.scored_time_s).sum();
    let weighted = |f: fn(&DerReport) -> f64| {
        if total_time == 0.0 {
            0.0
        } else {
            group.iter().map(|s| f(&s.der) * s.der.scored_time_s).sum::<f64>() / total_time
        }
    };
    let missed = weighted(|d| d.missed);
    let false_alarm = weighted(|d| d.false_alarm);
    let confusion = weighted(|d| d.confusion);
    let total_words: usize = group.iter().filter_map(|s| s.cpwer.map(|w| w.n_ref_words)).sum();
    let total_edits: usize = group.iter().filter_map(|s| s.cpwer.map(|w| w.edits())).sum();
    let cpwer = if total_words > 0 {
        Some(total_edits as f64 / total_words as f64)
    } else {
        None
    };
    ConditionRow {
        condition: condition.to_string(),
        n_sessions: group.len(),
        der: missed + false_alarm + confusion,
        missed,
        false_alarm,
        confusion,
        cpwer,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use alloc::format;

    fn iv(speaker: &str, start: f64, end: f64) -> SpeakerInterval {
        SpeakerInterval::new(speaker, start, end)
    }

    fn words(text: &str) -> Vec<String> {
        text.split_whitespace().map(ToString::to_string).collect()
    }

    fn seg(speaker: &str, start_ms: u64, text: &str) -> TranscriptSegment {
        TranscriptSegment { speaker: speaker.to_string(), start_ms, end_ms: start_ms + 1000, words: words(text) }
    }

    #[test]
    fn der_identical_is_zero() {
        let r = vec![iv("a", 0.0, 10.0), iv("b", 3.0, 6.0)];
        let report = der(&r, &r, 0.0, 10);
        assert_eq!(report.der, 0.0);
    }

    #[test]
    fn der_empty_hypothesis_is_all_missed() {
        let r = vec![iv("a", 0.0, 10.0)];
        let report = der(&r, &[], 0.0, 10);
        assert!((report.missed - 1.0).abs() < 1e-12);
        assert!((report.der - 1.0).abs() < 1e-12);
        assert_eq!(report.false_alarm, 0.0);
        assert_eq!(report.confusion, 0.0);
    }

    #[test]
    fn der_half_covered_reference() {
        // Frame count: 500 of 1000 reference frames missed.
        let r = vec![iv("a", 0.0, 10.0)];
        let h = vec![iv("x", 0.0, 5.0)];
        let report = der(&r, &h, 0.0, 10);
        assert!((report.missed - 0.5).abs() < 1e-12);
        assert_eq!(report.false_alarm, 0.0);
        assert_eq!(report.confusion, 0.0);
        assert!((report.der - 0.5).abs() < 1e-12);
    }

    #[test]
    fn der_overlap_with_single_hypothesis_speaker() {
        // Per frame n_ref = 2, n_hyp = 1: one mapped match, one miss.
        let r = vec![iv("a", 0.0, 10.0), iv("b", 0.0, 10.0)];
        let h = vec![iv("x", 0.0, 10.0)];
        let report = der(&r, &h, 0.0, 10);
        assert!((report.missed - 0.5).abs() < 1e-12);
        assert_eq!(report.confusion, 0.0);
        assert!((report.der - 0.5).abs() < 1e-12);
    }

    #[test]
    fn der_confusion_when_speakers_swap() {
        // Hypothesis swaps the speakers in the second half.
        let r = vec![iv("a", 0.0, 10.0), iv("b", 10.0, 20.0)];
        let h = vec![iv("x", 0.0, 10.0), iv("x", 15.0, 20.0), iv("y", 10.0, 15.0)];
        let report = der(&r, &h, 0.0, 10);
        // x maps to a (1000 joint frames vs 500 for b); frames 15..20 s are
        // x over b: confusion. Frames 10..15 are y over b: y maps to b.
        assert!((report.confusion - 500.0 / 2000.0).abs() < 1e-12);
        assert_eq!(report.missed, 0.0);
        assert_eq!(report.false_alarm, 0.0);
    }

    #[test]
    fn der_invariant_to_hypothesis_relabeling() {
        let mut rng = Rng::new(31);
        for _ in 0..20 {
            let r: Vec<SpeakerInterval> = (0..4)
                .map(|i| {
                    let start = rng.below(50) as f64 / 10.0;
                    iv(&format!("r{i}"), start, start + 0.3 + rng.uniform() * 3.0)
                })
                .collect();
            let h: Vec<SpeakerInterval> = (0..3)
                .map(|i| {
                    let start = rng.below(50) as f64 / 10.0;
                    iv(&format!("h{i}"), start, start + 0.3 + rng.uniform() * 3.0)
                })
                .collect();
            let relabeled: Vec<SpeakerInterval> = h
                .iter()
                .map(|s| SpeakerInterval {
                    speaker: format!("z{}", 2 - s.speaker[1..].parse::<usize>().unwrap()),
                    ..s.clone()
                })
                .collect();
            let a = der(&r, &h, 0.0, 10);
            let b = der(&r, &relabeled, 0.0, 10);
            assert!((a.der - b.der).abs() < 1e-12);
        }
    }

    #[test]
    fn der_collar_excludes_boundary_frames() {
        // With a 0.25 s collar the first/last quarter second around each
        // boundary stops being scored; an error confined to the collar
        // disappears.
        let r = vec![iv("a", 0.0, 10.0)];
        let h = vec![iv("x", 0.2, 10.0)];
        let strict = der(&r, &h, 0.0, 10);
        let lenient = der(&r, &h, 0.25, 10);
        assert!(strict.missed > 0.0);
        assert_eq!(lenient.missed, 0.0);
    }

    #[test]
    fn wer_identical_is_zero() {
        let report = wer(&words("a b c"), &words("a b c"));
        assert_eq!(report.edits(), 0);
        assert_eq!(report.wer(), 0.0);
    }

    #[test]
    fn wer_empty_hypothesis_is_all_deletions() {
        let report = wer(&words("a b c"), &words(""));
        assert_eq!(report.deletions, 3);
        assert_eq!(report.wer(), 1.0);
    }

    #[test]
    fn wer_hand_dp_case() {
        // ref "a b c", hyp "a x c d": one substitution, one insertion.
        let report = wer(&words("a b c"), &words("a x c d"));
        assert_eq!(report.substitutions, 1);
        assert_eq!(report.insertions, 1);
        assert_eq!(report.deletions, 0);
        assert!((report.wer() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn wer_counts_sum_to_distance() {
        let mut rng = Rng::new(32);
        let vocab = ["a", "b", "c", "d"];
        for _ in 0..200 {
            let r: Vec<String> =
                (0..rng.below(10)).map(|_| vocab[rng.below(4) as usize].to_string()).collect();
            let h: Vec<String> =
                (0..rng.below(10)).map(|_| vocab[rng.below(4) as usize].to_string()).collect();
            let report = wer(&r, &h);
            // Oracle: recursive edit distance with memoization is overkill;
            // check against the classic DP recomputed locally.
            let mut d = vec![vec![0usize; h.len() + 1]; r.len() + 1];
            for i in 0..=r.len() {
                d[i][0] = i;
            }
            for j in 0..=h.len() {
                d[0][j] = j;
            }
            for i in 1..=r.len() {
                for j in 1..=h.len() {
                    let c = usize::from(r[i - 1] != h[j - 1]);
                    d[i][j] = (d[i - 1][j - 1] + c).min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
                }
            }
            assert_eq!(report.edits(), d[r.len()][h.len()]);
        }
    }

    #[test]
    fn wer_appending_common_suffix_never_increases_edits() {
        let mut rng = Rng::new(33);
        let vocab = ["a", "b", "c"];
        for _ in 0..100 {
            let mut r: Vec<String> =
                (0..1 + rng.below(6)).map(|_| vocab[rng.below(3) as usize].to_string()).collect();
            let mut h: Vec<String> =
                (0..1 + rng.below(6)).map(|_| vocab[rng.below(3) as usize].to_string()).collect();
            let before = wer(&r, &h).edits();
            for _ in 0..rng.below(4) {
                let w = vocab[rng.below(3) as usize].to_string();
                r.push(w.clone());
                h.push(w);
            }
            let after = wer(&r, &h).edits();
            assert!(after <= before, "{before} -> {after}");
        }
    }

    #[test]
    fn cpwer_absorbs_relabeling() {
        let r = vec![seg("a", 0, "hello there"), seg("b", 2000, "general remark")];
        let h = vec![seg("two", 2000, "general remark"), seg("one", 0, "hello there")];
        let (report, _) = cpwer(&r, &h, AssignMethod::Hungarian).unwrap();
        assert_eq!(report.edits(), 0);
        assert_eq!(report.wer(), 0.0);
    }

    #[test]
    fn cpwer_pads_missing_hypothesis_speaker() {
        let r = vec![seg("a", 0, "a b"), seg("b", 1000, "c d")];
        let h = vec![seg("x", 0, "a b")];
        let (report, mapping) = cpwer(&r, &h, AssignMethod::Hungarian).unwrap();
        assert_eq!(report.deletions, 2);
        assert!((report.wer() - 0.5).abs() < 1e-12);
        assert!(mapping.iter().any(|(r, h)| r.as_deref() == Some("b") && h.is_none()));
    }

    #[test]
    fn cpwer_brute_equals_hungarian() {
        let mut rng = Rng::new(34);
        let vocab = ["uh", "so", "well", "right", "okay", "sure", "fine", "yes"];
        for _ in 0..50 {
            let n_ref = 1 + rng.below(4) as usize;
            let n_hyp = 1 + rng.below(4) as usize;
            let mk = |prefix: &str, n: usize, rng: &mut Rng| -> Vec<TranscriptSegment> {
                (0..n)
                    .map(|i| {
                        let text: Vec<&str> =
                            (0..1 + rng.below(8)).map(|_| vocab[rng.below(8) as usize]).collect();
                        seg(&format!("{prefix}{i}"), i as u64 * 500, &text.join(" "))
                    })
                    .collect()
            };
            let r = mk("r", n_ref, &mut rng);
            let h = mk("h", n_hyp, &mut rng);
            let (a, _) = cpwer(&r, &h, AssignMethod::BruteForce).unwrap();
            let (b, _) = cpwer(&r, &h, AssignMethod::Hungarian).unwrap();
            assert_eq!(a.edits(), b.edits());
        }
    }

    #[test]
    fn cpwer_time_orders_utterances() {
        let r = vec![seg("a", 5000, "world"), seg("a", 0, "hello")];
        let h = vec![seg("x", 0, "hello world")];
        let (report, _) = cpwer(&r, &h, AssignMethod::Hungarian).unwrap();
        assert_eq!(report.edits(), 0);
    }

    #[test]
    fn cpwer_never_exceeds_identity_mapping_wer() {
        let mut rng = Rng::new(35);
        let vocab = ["ah", "um", "see", "go"];
        for _ in 0..50 {
            let mk = |prefix: &str, rng: &mut Rng| -> Vec<TranscriptSegment> {
                (0..2)
                    .map(|i| {
                        let text: Vec<&str> =
                            (0..1 + rng.below(6)).map(|_| vocab[rng.below(4) as usize]).collect();
                        seg(&format!("{prefix}{i}"), i as u64 * 1000, &text.join(" "))
                    })
                    .collect()
            };
            let r = mk("k", &mut rng);
            let h = mk("k", &mut rng);
            let (best, _) = cpwer(&r, &h, AssignMethod::Hungarian).unwrap();
            // Fixed identity mapping: same speaker names pair up directly.
            let fixed: usize = (0..2)
                .map(|i| wer(&r[i].words, &h[i].words).edits())
                .sum();
            assert!(best.edits() <= fixed);
        }
    }

    #[test]
    fn cpwer_rejects_empty_reference() {
        let h = vec![seg("x", 0, "hello")];
        assert_eq!(cpwer(&[], &h, AssignMethod::Hungarian), Err(MetricsError::EmptyReference));
    }

    #[test]
    fn normalize_text_strips_and_lowercases() {
        assert_eq!(normalize_text("Hello, World!"), words("hello world"));
        assert_eq!(normalize_text("it's   OK."), words("it's ok"));
        assert!(normalize_text("  ").is_empty());
    }

    fn score(condition: &str, missed: f64, time: f64) -> SessionScore {
        SessionScore {
            session: "s".to_string(),
            condition: condition.to_string(),
            der: DerReport {
                der: missed,
                missed,
                false_alarm: 0.0,
                confusion: 0.0,
                collar_s: 0.0,
                scored_time_s: time,
            },
            cpwer: None,
        }
    }

    #[test]
    fn condition_report_single_group_matches_global() {
        let rows = condition_report(&[score("0S", 0.2, 10.0), score("0S", 0.4, 10.0)]);
        assert_eq!(rows.len(), 2);
        assert!((rows[0].der - 0.3).abs() < 1e-12);
        assert_eq!(rows[0].der, rows[1].der);
        assert_eq!(rows[1].condition, "all");
    }

    #[test]
    fn condition_report_weighted_global() {
        let rows = condition_report(&[score("0S", 0.2, 30.0), score("OV40", 0.6, 10.0)]);
        let all = rows.iter().find(|r| r.condition == "all").unwrap();
        let want = (0.2 * 30.0 + 0.6 * 10.0) / 40.0;
        assert!((all.der - want).abs() < 1e-12);
    }

    #[test]
    fn condition_report_empty_is_empty() {
        assert!(condition_report(&[]).is_empty());
    }
}
