//! Permutation-resolution training criteria for diarization.
//!
//! Location-based training fixes the output-speaker pairing by sorting
//! speakers by azimuth (linear in the speaker count); permutation-invariant
//! training searches all pairings, either by brute-force enumeration or with
//! the Hungarian algorithm on the matrix of per-pair BCE sums.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::types::{ActivityMatrix, FrameGrid, Matrix, PosteriorMatrix};

/// Probability clip inside every BCE evaluation; guards `ln(0)` and sits
/// well below all test tolerances.
pub const PROB_EPS: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CriteriaError {
    ShapeMismatch { want: String, got: String },
    MissingAzimuths,
    /// Brute-force enumeration refused for more speakers than the documented
    /// bound.
    BruteTooLarge { speakers: usize, limit: usize },
    NonFiniteCost,
    NotSquare,
}

impl fmt::Display for CriteriaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CriteriaError::ShapeMismatch { want, got } => {
                write!(f, "shape mismatch: want {want}, got {got}")
            }
            CriteriaError::MissingAzimuths => write!(f, "activity matrix carries no azimuths"),
            CriteriaError::BruteTooLarge { speakers, limit } => {
                write!(f, "brute-force search over {speakers} speakers exceeds the {limit} limit")
            }
            CriteriaError::NonFiniteCost => write!(f, "cost matrix contains non-finite entries"),
            CriteriaError::NotSquare => write!(f, "cost matrix must be square"),
        }
    }
}

impl core::error::Error for CriteriaError {}

/// How a permutation search is carried out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignMethod {
    BruteForce,
    Hungarian,
}

/// A bijection on speaker indices; `order[c]` is the label column paired
/// with output column `c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelPermutation {
    order: Vec<usize>,
}

impl LabelPermutation {
    pub fn new(order: Vec<usize>) -> Self {
        let n = order.len();
        let mut seen = vec![false; n];
        for &i in &order {
            assert!(i < n && !seen[i], "order must be a permutation of 0..{n}");
            seen[i] = true;
        }
        LabelPermutation { order }
    }

    pub fn identity(n: usize) -> Self {
        LabelPermutation { order: (0..n).collect() }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Speaker attractors plus the stop attractor, with existence probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct AttractorSet {
    /// `(C+1) x E`: one row per speaker attractor, final row is the stop
    /// attractor.
    pub vectors: Matrix,
    /// Length `C+1` existence probabilities in `[0, 1]`.
    pub existence: Vec<f64>,
}

impl AttractorSet {
    pub fn new(vectors: Matrix, existence: Vec<f64>) -> Self {
        assert_eq!(vectors.rows(), existence.len(), "one existence prob per attractor");
        assert!(vectors.rows() >= 1, "need at least the stop attractor");
        assert!(existence.iter().all(|p| (0.0..=1.0).contains(p)));
        AttractorSet { vectors, existence }
    }

    pub fn n_speakers(&self) -> usize {
        self.vectors.rows() - 1
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }
}

/// Sorts speakers by ascending azimuth; ties keep the original index order.
pub fn lbt_order(azimuths: &[f64]) -> LabelPermutation {
    let mut idx: Vec<usize> = (0..azimuths.len()).collect();
    idx.sort_by(|&a, &b| {
        azimuths[a].partial_cmp(&azimuths[b]).unwrap_or(core::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    LabelPermutation { order: idx }
}

fn bce_term(y: f64, p: f64) -> f64 {
    let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
    -(y * libm::log(p) + (1.0 - y) * libm::log(1.0 - p))
}

/// Binary cross entropy summed over one frame's speakers.
pub fn bce(labels: &[u8], probs: &[f64]) -> f64 {
    assert_eq!(labels.len(), probs.len());
    labels.iter().zip(probs).map(|(&y, &p)| bce_term(y as f64, p)).sum()
}

fn check_shapes(posteriors: &PosteriorMatrix, labels: &ActivityMatrix) -> Result<(), CriteriaError> {
    if posteriors.n_frames() != labels.n_frames()
        || posteriors.n_speakers() != labels.n_speakers()
    {
        return Err(CriteriaError::ShapeMismatch {
            want: format!("{}x{}", labels.n_frames(), labels.n_speakers()),
            got: format!("{}x{}", posteriors.n_frames(), posteriors.n_speakers()),
        });
    }
    Ok(())
}

fn permuted_loss(posteriors: &PosteriorMatrix, labels: &ActivityMatrix, order: &[usize]) -> f64 {
    let t_total = posteriors.n_frames();
    let c_total = posteriors.n_speakers();
    let mut acc = 0.0;
    for t in 0..t_total {
        let p = posteriors.frame(t);
        let y = labels.frame(t);
        for c in 0..c_total {
            acc += bce_term(y[order[c]] as f64, p[c]);
        }
    }
    acc / (t_total * c_total) as f64
}

/// Diarization loss with the label vector arranged by ascending azimuth.
pub fn eend_loss_lbt(
    posteriors: &PosteriorMatrix,
    labels: &ActivityMatrix,
) -> Result<f64, CriteriaError> {
    check_shapes(posteriors, labels)?;
    let azimuths = labels.azimuths.as_ref().ok_or(CriteriaError::MissingAzimuths)?;
    let perm = lbt_order(azimuths);
    Ok(permuted_loss(posteriors, labels, perm.order()))
}

/// Per-pair BCE sums: entry `(c_out, c_label)` is the summed BCE of output
/// column `c_out` against label column `c_label`.
fn pair_costs(posteriors: &PosteriorMatrix, labels: &ActivityMatrix) -> Matrix {
    let c_total = posteriors.n_speakers();
    let mut cost = Matrix::zeros(c_total, c_total);
    for t in 0..posteriors.n_frames() {
        let p = posteriors.frame(t);
        let y = labels.frame(t);
        for c_out in 0..c_total {
            for c_label in 0..c_total {
                let v = cost.get(c_out, c_label) + bce_term(y[c_label] as f64, p[c_out]);
                cost.set(c_out, c_label, v);
            }
        }
    }
    cost
}

fn for_each_permutation(n: usize, mut visit: impl FnMut(&[usize])) {
    // Heap's algorithm, iterative.
    let mut items: Vec<usize> = (0..n).collect();
    let mut stack = vec![0usize; n];
    visit(&items);
    let mut i = 1;
    while i < n {
        if stack[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(stack[i], i);
            }
            visit(&items);
            stack[i] += 1;
            i = 1;
        } else {
            stack[i] = 0;
            i += 1;
        }
    }
}

/// Permutation-invariant diarization loss: the minimum over all
/// output-to-label pairings, with the minimizing permutation.
pub fn eend_loss_pit(
    posteriors: &PosteriorMatrix,
    labels: &ActivityMatrix,
    method: AssignMethod,
) -> Result<(f64, LabelPermutation), CriteriaError> {
    check_shapes(posteriors, labels)?;
    let c_total = posteriors.n_speakers();
    if c_total == 0 {
        return Ok((0.0, LabelPermutation::identity(0)));
    }
    let costs = pair_costs(posteriors, labels);
    let scale = 1.0 / (posteriors.n_frames() * c_total) as f64;
    match method {
        AssignMethod::BruteForce => {
            const BRUTE_LIMIT: usize = 10;
            if c_total > BRUTE_LIMIT {
                return Err(CriteriaError::BruteTooLarge { speakers: c_total, limit: BRUTE_LIMIT });
            }
            let mut best = f64::INFINITY;
            let mut best_order: Vec<usize> = (0..c_total).collect();
            for_each_permutation(c_total, |order| {
                let total: f64 =
                    (0..c_total).map(|c| costs.get(c, order[c])).sum();
                if total < best {
                    best = total;
                    best_order.copy_from_slice(order);
                }
            });
            Ok((best * scale, LabelPermutation::new(best_order)))
        }
        AssignMethod::Hungarian => {
            let (assign, total) = hungarian(&costs)?;
            Ok((total * scale, LabelPermutation::new(assign)))
        }
    }
}

/// Minimum-cost perfect matching on a square cost matrix; `O(n^3)`.
///
/// Returns the column assigned to each row and the total cost.
pub fn hungarian(cost: &Matrix) -> Result<(Vec<usize>, f64), CriteriaError> {
    if cost.rows() != cost.cols() {
        return Err(CriteriaError::NotSquare);
    }
    if cost.data().iter().any(|v| !v.is_finite()) {
        return Err(CriteriaError::NonFiniteCost);
    }
    let n = cost.rows();
    if n == 0 {
        return Ok((Vec::new(), 0.0));
    }
    // Potentials-based shortest augmenting path (rows/columns 1-indexed,
    // index 0 is the virtual source).
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost.get(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        // Unwind the augmenting path.
        while j0 != 0 {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        assign[matched_row[j] - 1] = j - 1;
    }
    let total = (0..n).map(|i| cost.get(i, assign[i])).sum();
    Ok((assign, total))
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// Frame-wise speech activity probabilities from embeddings and the first
/// `C` attractors: `p[t][c] = sigmoid(e_t . a_c)`.
pub fn attractor_probs(
    embeddings: &Matrix,
    attractors: &AttractorSet,
    grid: FrameGrid,
) -> Result<PosteriorMatrix, CriteriaError> {
    if embeddings.cols() != attractors.dim() {
        return Err(CriteriaError::ShapeMismatch {
            want: format!("embedding dim {}", attractors.dim()),
            got: format!("{}", embeddings.cols()),
        });
    }
    if grid.n_frames != embeddings.rows() {
        return Err(CriteriaError::ShapeMismatch {
            want: format!("{} frames", grid.n_frames),
            got: format!("{}", embeddings.rows()),
        });
    }
    let c_total = attractors.n_speakers();
    let mut probs = Matrix::zeros(embeddings.rows(), c_total);
    for t in 0..embeddings.rows() {
        let e = embeddings.row(t);
        for c in 0..c_total {
            let a = attractors.vectors.row(c);
            let dot: f64 = e.iter().zip(a).map(|(x, y)| x * y).sum();
            probs.set(t, c, sigmoid(dot));
        }
    }
    let speakers: Vec<String> = (0..c_total).map(|c| format!("spk{c}")).collect();
    Ok(PosteriorMatrix::new(grid, probs, speakers))
}

/// Attractor-existence loss: BCE of `q` against `(1, ..., 1, 0)`, averaged
/// over the `C+1` attractors.
pub fn eda_loss(existence: &[f64]) -> f64 {
    assert!(!existence.is_empty());
    let c = existence.len() - 1;
    let mut labels = vec![1u8; c];
    labels.push(0);
    bce(&labels, existence) / (c + 1) as f64
}

/// Combined diarization loss: activity term plus attractor term.
pub fn total_diar_loss(eend: f64, eda: f64) -> f64 {
    eend + eda
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use crate::types::FrameGrid;
    use alloc::string::ToString;

    const LN2: f64 = core::f64::consts::LN_2;

    fn grid(t: usize) -> FrameGrid {
        FrameGrid::hop_aligned(10, t)
    }

    fn posterior(values: Vec<Vec<f64>>) -> PosteriorMatrix {
        let t = values.len();
        let c = values[0].len();
        let speakers = (0..c).map(|i| format!("s{i}")).collect();
        PosteriorMatrix::new(grid(t), Matrix::from_rows(values), speakers)
    }

    fn activity(values: Vec<Vec<u8>>, azimuths: Option<Vec<f64>>) -> ActivityMatrix {
        let t = values.len();
        let c = values[0].len();
        let speakers: Vec<String> = (0..c).map(|i| format!("s{i}")).collect();
        let mut act = ActivityMatrix::zeros(grid(t), speakers);
        for (ti, row) in values.iter().enumerate() {
            for (ci, &v) in row.iter().enumerate() {
                act.set(ti, ci, v);
            }
        }
        match azimuths {
            Some(az) => act.with_azimuths(az).unwrap(),
            None => act,
        }
    }

    #[test]
    fn lbt_sorted_input_is_identity() {
        assert_eq!(lbt_order(&[10.0, 90.0, 170.0]).order(), &[0, 1, 2]);
    }

    #[test]
    fn lbt_unsorted_input() {
        assert_eq!(lbt_order(&[170.0, 10.0, 90.0]).order(), &[1, 2, 0]);
    }

    #[test]
    fn lbt_output_is_nondecreasing() {
        let mut rng = Rng::new(21);
        for _ in 0..1000 {
            let n = 1 + rng.below(12) as usize;
            let az: Vec<f64> = (0..n).map(|_| rng.range(0.0, 360.0)).collect();
            let perm = lbt_order(&az);
            for w in perm.order().windows(2) {
                assert!(az[w[0]] <= az[w[1]]);
            }
        }
    }

    #[test]
    fn bce_perfect_prediction_is_tiny() {
        let loss = bce(&[1, 0], &[1.0, 0.0]);
        assert!((0.0..=1e-6).contains(&loss), "{loss}");
    }

    #[test]
    fn bce_uniform_is_ln2() {
        assert!((bce(&[1], &[0.5]) - LN2).abs() < 1e-12);
    }

    #[test]
    fn bce_matches_scalar_oracle() {
        let mut rng = Rng::new(22);
        for _ in 0..100 {
            let n = 1 + rng.below(8) as usize;
            let y: Vec<u8> = (0..n).map(|_| rng.bernoulli(0.5) as u8).collect();
            let p: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
            let got = bce(&y, &p);
            let mut want = 0.0;
            for i in 0..n {
                let pi = p[i].clamp(PROB_EPS, 1.0 - PROB_EPS);
                want -= if y[i] == 1 { libm::log(pi) } else { libm::log(1.0 - pi) };
            }
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn lbt_loss_zero_for_permuted_hard_labels() {
        // Labels for azimuth order (1, 2, 0): posterior column c matches
        // label column order[c].
        let labels = activity(
            vec![vec![1, 0, 1], vec![0, 1, 0]],
            Some(vec![170.0, 10.0, 90.0]),
        );
        let p = posterior(vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 0.0]]);
        let loss = eend_loss_lbt(&p, &labels).unwrap();
        assert!(loss < 1e-6, "{loss}");
    }

    #[test]
    fn lbt_loss_uniform_half_is_ln2() {
        let labels = activity(vec![vec![1, 0], vec![0, 0]], Some(vec![40.0, 10.0]));
        let p = posterior(vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
        let loss = eend_loss_lbt(&p, &labels).unwrap();
        assert!((loss - LN2).abs() < 1e-9);
    }

    #[test]
    fn lbt_loss_hand_case() {
        // T=2, C=2, azimuths already ordered: direct expansion.
        let labels = activity(vec![vec![1, 0], vec![1, 1]], Some(vec![10.0, 20.0]));
        let p = posterior(vec![vec![0.8, 0.3], vec![0.6, 0.9]]);
        let want = -(libm::log(0.8) + libm::log(0.7) + libm::log(0.6) + libm::log(0.9)) / 4.0;
        let got = eend_loss_lbt(&p, &labels).unwrap();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn lbt_loss_requires_azimuths() {
        let labels = activity(vec![vec![1, 0]], None);
        let p = posterior(vec![vec![0.5, 0.5]]);
        assert_eq!(eend_loss_lbt(&p, &labels), Err(CriteriaError::MissingAzimuths));
    }

    #[test]
    fn pit_recovers_the_permuting_assignment() {
        let labels = activity(vec![vec![1, 0, 0], vec![0, 0, 1]], None);
        // Posterior columns are labels shuffled by (2, 0, 1).
        let p = posterior(vec![vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0]]);
        for method in [AssignMethod::BruteForce, AssignMethod::Hungarian] {
            let (loss, perm) = eend_loss_pit(&p, &labels, method).unwrap();
            assert!(loss < 1e-6, "{loss}");
            assert_eq!(perm.order(), &[2, 0, 1]);
        }
    }

    #[test]
    fn pit_single_speaker_is_identity() {
        let labels = activity(vec![vec![1], vec![0]], None);
        let p = posterior(vec![vec![0.9], vec![0.2]]);
        let (_, perm) = eend_loss_pit(&p, &labels, AssignMethod::BruteForce).unwrap();
        assert_eq!(perm.order(), &[0]);
    }

    #[test]
    fn pit_brute_equals_hungarian_on_random_cases() {
        let mut rng = Rng::new(23);
        for _ in 0..60 {
            let t = 1 + rng.below(20) as usize;
            let c = 1 + rng.below(6) as usize;
            let p = posterior((0..t).map(|_| (0..c).map(|_| rng.uniform()).collect()).collect());
            let labels = activity(
                (0..t).map(|_| (0..c).map(|_| rng.bernoulli(0.5) as u8).collect()).collect(),
                None,
            );
            let (lb, _) = eend_loss_pit(&p, &labels, AssignMethod::BruteForce).unwrap();
            let (lh, _) = eend_loss_pit(&p, &labels, AssignMethod::Hungarian).unwrap();
            assert!((lb - lh).abs() < 1e-9, "{lb} vs {lh}");
        }
    }

    #[test]
    fn pit_never_exceeds_lbt() {
        let mut rng = Rng::new(24);
        for _ in 0..50 {
            let t = 1 + rng.below(12) as usize;
            let c = 2 + rng.below(5) as usize;
            let p = posterior((0..t).map(|_| (0..c).map(|_| rng.uniform()).collect()).collect());
            let az: Vec<f64> = (0..c).map(|_| rng.range(0.0, 360.0)).collect();
            let labels = activity(
                (0..t).map(|_| (0..c).map(|_| rng.bernoulli(0.4) as u8).collect()).collect(),
                Some(az),
            );
            let (pit, _) = eend_loss_pit(&p, &labels, AssignMethod::Hungarian).unwrap();
            let lbt = eend_loss_lbt(&p, &labels).unwrap();
            assert!(pit <= lbt + 1e-12, "pit {pit} > lbt {lbt}");
        }
    }

    #[test]
    fn pit_invariant_to_joint_label_column_permutation() {
        let mut rng = Rng::new(25);
        let t = 8;
        let c = 4;
        let p = posterior((0..t).map(|_| (0..c).map(|_| rng.uniform()).collect()).collect());
        let raw: Vec<Vec<u8>> =
            (0..t).map(|_| (0..c).map(|_| rng.bernoulli(0.5) as u8).collect()).collect();
        let shuffle = [2usize, 0, 3, 1];
        let permuted: Vec<Vec<u8>> =
            raw.iter().map(|row| shuffle.iter().map(|&j| row[j]).collect()).collect();
        let (a, _) = eend_loss_pit(&p, &activity(raw, None), AssignMethod::Hungarian).unwrap();
        let (b, _) = eend_loss_pit(&p, &activity(permuted, None), AssignMethod::Hungarian).unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn pit_brute_refuses_large_c() {
        let c = 11;
        let p = posterior(vec![(0..c).map(|_| 0.5).collect()]);
        let labels = activity(vec![(0..c).map(|_| 0).collect()], None);
        assert!(matches!(
            eend_loss_pit(&p, &labels, AssignMethod::BruteForce),
            Err(CriteriaError::BruteTooLarge { .. })
        ));
    }

    #[test]
    fn hungarian_zero_diagonal_picks_identity() {
        let mut cost = Matrix::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                cost.set(i, j, if i == j { 0.0 } else { 1.0 + (i + j) as f64 });
            }
        }
        let (assign, total) = hungarian(&cost).unwrap();
        assert_eq!(assign, vec![0, 1, 2, 3]);
        assert_eq!(total, 0.0);
    }

    #[test]
    fn hungarian_two_by_two() {
        // Enumerating both pairings: identity costs 1 + 0 = 1, swap costs
        // 2 + 3 = 5.
        let cost = Matrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 0.0]]);
        let (assign, total) = hungarian(&cost).unwrap();
        assert_eq!(assign, vec![0, 1]);
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hungarian_matches_enumeration() {
        let mut rng = Rng::new(26);
        for _ in 0..200 {
            let n = 1 + rng.below(7) as usize;
            let cost = Matrix::from_rows(
                (0..n).map(|_| (0..n).map(|_| rng.range(-5.0, 5.0)).collect()).collect(),
            );
            let (_, total) = hungarian(&cost).unwrap();
            let mut best = f64::INFINITY;
            for_each_permutation(n, |perm| {
                let c: f64 = (0..n).map(|i| cost.get(i, perm[i])).sum();
                if c < best {
                    best = c;
                }
            });
            assert!((total - best).abs() < 1e-9, "{total} vs {best}");
        }
    }

    #[test]
    fn hungarian_rejects_bad_input() {
        let cost = Matrix::from_rows(vec![vec![f64::INFINITY]]);
        assert_eq!(hungarian(&cost), Err(CriteriaError::NonFiniteCost));
        let rect = Matrix::zeros(2, 3);
        assert_eq!(hungarian(&rect), Err(CriteriaError::NotSquare));
    }

    #[test]
    fn attractor_probs_saturate_on_scaled_one_hots() {
        let scale = 40.0;
        let emb = Matrix::from_rows(vec![vec![scale, 0.0], vec![0.0, scale]]);
        let attr = AttractorSet::new(
            Matrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]]),
            vec![1.0, 1.0, 0.0],
        );
        let p = attractor_probs(&emb, &attr, grid(2)).unwrap();
        assert!(p.get(0, 0) > 0.999 && p.get(1, 1) > 0.999);
        assert!((p.get(0, 1) - 0.5).abs() < 1e-9 && (p.get(1, 0) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn attractor_probs_zero_embeddings_are_half() {
        let emb = Matrix::zeros(3, 4);
        let attr = AttractorSet::new(Matrix::from_rows(vec![vec![1.0; 4]; 3]), vec![1.0, 1.0, 0.0]);
        let p = attractor_probs(&emb, &attr, grid(3)).unwrap();
        for t in 0..3 {
            for c in 0..2 {
                assert!((p.get(t, c) - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn attractor_probs_match_scalar_loop() {
        let mut rng = Rng::new(27);
        let emb = Matrix::from_rows((0..5).map(|_| rng.normal_vec(6)).collect());
        let vectors = Matrix::from_rows((0..4).map(|_| rng.normal_vec(6)).collect());
        let attr = AttractorSet::new(vectors.clone(), vec![0.9, 0.9, 0.9, 0.1]);
        let p = attractor_probs(&emb, &attr, grid(5)).unwrap();
        for t in 0..5 {
            for c in 0..3 {
                let mut dot = 0.0;
                for e in 0..6 {
                    dot += emb.get(t, e) * vectors.get(c, e);
                }
                assert!((p.get(t, c) - sigmoid(dot)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn attractor_probs_dim_mismatch() {
        let emb = Matrix::zeros(2, 3);
        let attr = AttractorSet::new(Matrix::zeros(2, 4), vec![1.0, 0.0]);
        assert!(attractor_probs(&emb, &attr, grid(2)).is_err());
    }

    #[test]
    fn eda_loss_perfect_is_tiny() {
        let loss = eda_loss(&[1.0, 1.0, 0.0]);
        assert!(loss <= 1e-6, "{loss}");
    }

    #[test]
    fn eda_loss_uniform_is_ln2() {
        assert!((eda_loss(&[0.5, 0.5, 0.5]) - LN2).abs() < 1e-12);
    }

    #[test]
    fn eda_loss_hand_case() {
        // C = 2: -(ln 0.8 + ln 0.6 + ln 0.7) / 3.
        let want = -(libm::log(0.8) + libm::log(0.6) + libm::log(1.0 - 0.3)) / 3.0;
        assert!((eda_loss(&[0.8, 0.6, 0.3]) - want).abs() < 1e-12);
    }

    #[test]
    fn total_loss_sums() {
        assert_eq!(total_diar_loss(0.0, 0.0), 0.0);
        assert!((total_diar_loss(0.3, 0.2) - 0.5).abs() < 1e-15);
        let mut rng = Rng::new(28);
        let (a, b) = (rng.uniform(), rng.uniform());
        assert_eq!(total_diar_loss(a, b), a + b);
    }

    #[test]
    fn permutation_validation() {
        let p = LabelPermutation::new(vec![1, 0, 2]);
        assert_eq!(p.order(), &[1, 0, 2]);
        assert_eq!(LabelPermutation::identity(3).order(), &[0, 1, 2]);
    }

    #[test]
    fn pit_loss_speakers_named() {
        let p = posterior(vec![vec![0.5]]);
        assert_eq!(p.speakers, vec!["s0".to_string()]);
    }
}
