//! Batch dynamic time warping: aligning a set of multivariate trials onto a
//! common timeline.
//!
//! The reference starts as the trial closest in length to the median,
//! resampled to the median length. Each round aligns every trial to the
//! reference by DTW (squared-Euclidean local cost over all degrees,
//! symmetric step pattern) and replaces the reference with the mean of the
//! aligned trials, until the reference stops moving.

use nalgebra::DMatrix;

use super::{MotionError, TrialSet};

/// Trials warped onto a common length, with their warping paths against the
/// final reference.
#[derive(Debug, Clone)]
pub struct AlignedTrials {
    trials: Vec<DMatrix<f64>>,
    paths: Vec<Vec<(usize, usize)>>,
    costs: Vec<f64>,
    degree_names: Vec<String>,
    angular: std::collections::BTreeSet<usize>,
    common_len: usize,
}

impl AlignedTrials {
    /// Wraps trials that are already on a common timeline (equal lengths)
    /// with identity warps and zero cost, skipping DTW.
    pub fn from_equal_length(trials: &TrialSet) -> Result<Self, MotionError> {
        if trials.is_empty() {
            return Err(MotionError::EmptyTrialSet);
        }
        let common_len = trials.trials()[0].ncols();
        for (index, t) in trials.trials().iter().enumerate() {
            if t.ncols() != common_len {
                return Err(MotionError::LengthMismatch {
                    index,
                    len: t.ncols(),
                    expected: common_len,
                });
            }
        }
        let identity: Vec<(usize, usize)> = (0..common_len).map(|i| (i, i)).collect();
        Ok(AlignedTrials {
            trials: trials.trials().to_vec(),
            paths: vec![identity; trials.len()],
            costs: vec![0.0; trials.len()],
            degree_names: trials.degree_names().to_vec(),
            angular: trials.angular_degrees().clone(),
            common_len,
        })
    }

    pub fn trials(&self) -> &[DMatrix<f64>] {
        &self.trials
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    /// Warping paths as 0-based (trial index, reference index) pairs,
    /// monotone in both coordinates, from (0, 0) to (T_i - 1, T - 1).
    pub fn paths(&self) -> &[Vec<(usize, usize)>] {
        &self.paths
    }

    /// Per-trial DTW cost against the final reference.
    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn total_cost(&self) -> f64 {
        self.costs.iter().sum()
    }

    pub fn common_len(&self) -> usize {
        self.common_len
    }

    pub fn degree_names(&self) -> &[String] {
        &self.degree_names
    }

    pub fn angular_degrees(&self) -> &std::collections::BTreeSet<usize> {
        &self.angular
    }
}

/// Squared Euclidean distance between column `i` of `a` and column `j` of `b`.
fn local_cost(a: &DMatrix<f64>, i: usize, b: &DMatrix<f64>, j: usize) -> f64 {
    let mut acc = 0.0;
    for d in 0..a.nrows() {
        let diff = a[(d, i)] - b[(d, j)];
        acc += diff * diff;
    }
    acc
}

/// Plain DTW between two multivariate series (columns = time). Returns the
/// optimal warping path as (i, j) pairs and its total cost. Ties prefer the
/// diagonal step, so identical series warp onto the identity path.
pub(crate) fn dtw_pair(a: &DMatrix<f64>, b: &DMatrix<f64>) -> (Vec<(usize, usize)>, f64) {
    let (n, m) = (a.ncols(), b.ncols());
    let mut acc = DMatrix::from_element(n + 1, m + 1, f64::INFINITY);
    acc[(0, 0)] = 0.0;
    for i in 1..=n {
        for j in 1..=m {
            let best = acc[(i - 1, j - 1)]
                .min(acc[(i - 1, j)])
                .min(acc[(i, j - 1)]);
            acc[(i, j)] = local_cost(a, i - 1, b, j - 1) + best;
        }
    }

    let mut path = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 && j > 0 {
        path.push((i - 1, j - 1));
        let diag = acc[(i - 1, j - 1)];
        let up = acc[(i - 1, j)];
        let left = acc[(i, j - 1)];
        if diag <= up && diag <= left {
            i -= 1;
            j -= 1;
        } else if up <= left {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    path.reverse();
    (path, acc[(n, m)])
}

/// Linear resampling of a D x T matrix onto `len` columns.
fn resample(m: &DMatrix<f64>, len: usize) -> DMatrix<f64> {
    let t = m.ncols();
    if t == len {
        return m.clone();
    }
    let mut out = DMatrix::zeros(m.nrows(), len);
    for col in 0..len {
        let pos = if len == 1 {
            0.0
        } else {
            col as f64 * (t - 1) as f64 / (len - 1) as f64
        };
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(t - 1);
        let frac = pos - lo as f64;
        for d in 0..m.nrows() {
            out[(d, col)] = m[(d, lo)] * (1.0 - frac) + m[(d, hi)] * frac;
        }
    }
    out
}

/// Warps a trial onto the reference timeline: each reference column becomes
/// the mean of the trial columns its path pairs map to.
fn warp_onto_reference(
    trial: &DMatrix<f64>,
    path: &[(usize, usize)],
    ref_len: usize,
) -> DMatrix<f64> {
    let d = trial.nrows();
    let mut out = DMatrix::zeros(d, ref_len);
    let mut counts = vec![0usize; ref_len];
    for &(i, j) in path {
        for deg in 0..d {
            out[(deg, j)] += trial[(deg, i)];
        }
        counts[j] += 1;
    }
    for (j, &c) in counts.iter().enumerate() {
        debug_assert!(c > 0, "warping path covers every reference column");
        for deg in 0..d {
            out[(deg, j)] /= c as f64;
        }
    }
    out
}

const MAX_ROUNDS: usize = 20;
const REFERENCE_TOLERANCE: f64 = 1e-8;

/// Aligns all trials onto a common length (the median trial length) by
/// iterated DTW against an evolving mean reference.
pub fn batch_dtw_align(trials: &TrialSet) -> Result<AlignedTrials, MotionError> {
    if trials.is_empty() {
        return Err(MotionError::EmptyTrialSet);
    }
    let mut lengths: Vec<usize> = trials.trials().iter().map(|t| t.ncols()).collect();
    lengths.sort_unstable();
    let common_len = lengths[(lengths.len() - 1) / 2];

    // Initial reference: the trial whose length is closest to the median,
    // ties to the earliest trial.
    let seed = trials
        .trials()
        .iter()
        .enumerate()
        .min_by_key(|(i, t)| (t.ncols().abs_diff(common_len), *i))
        .map(|(_, t)| t)
        .expect("non-empty trial set");
    let mut reference = resample(seed, common_len);

    let mut aligned = Vec::new();
    let mut paths = Vec::new();
    let mut costs = Vec::new();
    for _ in 0..MAX_ROUNDS {
        aligned.clear();
        paths.clear();
        costs.clear();
        for trial in trials.trials() {
            let (path, cost) = dtw_pair(trial, &reference);
            aligned.push(warp_onto_reference(trial, &path, common_len));
            paths.push(path);
            costs.push(cost);
        }
        let mut mean = DMatrix::zeros(trials.degree_count(), common_len);
        for t in &aligned {
            mean += t;
        }
        mean /= aligned.len() as f64;
        let delta = (&mean - &reference).abs().max();
        reference = mean;
        if delta < REFERENCE_TOLERANCE {
            break;
        }
    }

    Ok(AlignedTrials {
        trials: aligned,
        paths,
        costs,
        degree_names: trials.degree_names().to_vec(),
        angular: trials.angular_degrees().clone(),
        common_len,
    })
}
