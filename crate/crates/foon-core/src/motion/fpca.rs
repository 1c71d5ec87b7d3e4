//! Motion-model learning: per-degree principal component decomposition of
//! aligned trial curves (discretized functional PCA).
//!
//! For each degree the aligned trials form an N x T matrix. Its column mean
//! is the mean trajectory; the top right singular vectors of the centered
//! matrix are the motion harmonics (orthonormal over the T samples); each
//! trial's projections onto the harmonics are its weights, and the weights'
//! sample mean and covariance parameterize the per-degree Gaussian.

use nalgebra::{DMatrix, DVector};

use super::dtw::AlignedTrials;
use super::{MotionError, MotionModel};

/// How many harmonics to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HarmonicSelector {
    /// Exactly this many harmonics per degree.
    Count(usize),
    /// The smallest count whose explained variance reaches this fraction,
    /// evaluated per degree; the model keeps the largest count any degree
    /// needs so it stays rectangular.
    VarianceThreshold(f64),
}

impl HarmonicSelector {
    /// Default: 95% explained variance.
    pub fn default_threshold() -> Self {
        HarmonicSelector::VarianceThreshold(0.95)
    }
}

/// A learned model along with the per-degree weights (N x M, one row per
/// trial) and the explained-variance fraction of each kept harmonic.
#[derive(Debug, Clone)]
pub struct LearnedMotion {
    pub model: MotionModel,
    pub weights: Vec<DMatrix<f64>>,
    pub explained_variance: Vec<Vec<f64>>,
}

struct DegreeSpectrum {
    mean: Vec<f64>,
    /// (singular value, harmonic curve), singular values descending.
    components: Vec<(f64, DVector<f64>)>,
    centered: DMatrix<f64>,
    total_variance: f64,
}

impl DegreeSpectrum {
    fn of(aligned: &AlignedTrials, degree: usize) -> Self {
        let n = aligned.len();
        let t = aligned.common_len();
        let mut data = DMatrix::zeros(n, t);
        for (i, trial) in aligned.trials().iter().enumerate() {
            for j in 0..t {
                data[(i, j)] = trial[(degree, j)];
            }
        }
        let mean: Vec<f64> = (0..t)
            .map(|j| (0..n).map(|i| data[(i, j)]).sum::<f64>() / n as f64)
            .collect();
        let mut centered = data;
        for i in 0..n {
            for j in 0..t {
                centered[(i, j)] -= mean[j];
            }
        }

        let svd = centered.clone().svd(false, true);
        let v_t = svd.v_t.expect("requested right singular vectors");
        let mut components: Vec<(f64, DVector<f64>)> = svd
            .singular_values
            .iter()
            .enumerate()
            .map(|(k, &sigma)| (sigma, v_t.row(k).transpose()))
            .collect();
        components.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
        let total_variance = components.iter().map(|(s, _)| s * s).sum();
        DegreeSpectrum {
            mean,
            components,
            centered,
            total_variance,
        }
    }

    /// Smallest harmonic count reaching the variance threshold; zero when
    /// the trials carry no variance.
    fn count_for_threshold(&self, threshold: f64, cap: usize) -> usize {
        if self.total_variance <= 0.0 {
            return 0;
        }
        let mut cumulative = 0.0;
        for (k, (s, _)) in self.components.iter().take(cap).enumerate() {
            cumulative += s * s;
            if cumulative / self.total_variance >= threshold {
                return k + 1;
            }
        }
        cap
    }
}

/// Learns a motion model from aligned trials.
///
/// With `HarmonicSelector::Count(m)`, `m` must not exceed
/// min(trials - 1, samples); keeping any harmonics requires at least two
/// trials. A variance threshold picks the smallest count reaching it (zero
/// harmonics when the trials carry no variance at all).
pub fn learn_motion_model(
    aligned: &AlignedTrials,
    selector: HarmonicSelector,
) -> Result<LearnedMotion, MotionError> {
    let n = aligned.len();
    if n == 0 {
        return Err(MotionError::EmptyTrialSet);
    }
    let t = aligned.common_len();
    let d = aligned.degree_names().len();
    let max_harmonics = n.saturating_sub(1).min(t);

    if let HarmonicSelector::Count(m) = selector {
        if m > 0 && n < 2 {
            return Err(MotionError::TooFewTrials {
                trials: n,
                requested: m,
            });
        }
        if m > max_harmonics {
            return Err(MotionError::HarmonicCountTooLarge {
                requested: m,
                max: max_harmonics,
            });
        }
    }

    let spectra: Vec<DegreeSpectrum> = (0..d).map(|deg| DegreeSpectrum::of(aligned, deg)).collect();
    let kept = match selector {
        HarmonicSelector::Count(m) => m,
        HarmonicSelector::VarianceThreshold(threshold) => spectra
            .iter()
            .map(|s| s.count_for_threshold(threshold, max_harmonics))
            .max()
            .unwrap_or(0),
    };

    let mut mean = Vec::with_capacity(d);
    let mut harmonics = Vec::with_capacity(d);
    let mut mu = Vec::with_capacity(d);
    let mut sigma = Vec::with_capacity(d);
    let mut weights = Vec::with_capacity(d);
    let mut explained = Vec::with_capacity(d);

    for spectrum in spectra {
        harmonics.push(
            spectrum
                .components
                .iter()
                .take(kept)
                .map(|(_, v)| v.iter().copied().collect::<Vec<f64>>())
                .collect::<Vec<_>>(),
        );
        explained.push(
            spectrum
                .components
                .iter()
                .take(kept)
                .map(|(s, _)| {
                    if spectrum.total_variance > 0.0 {
                        s * s / spectrum.total_variance
                    } else {
                        0.0
                    }
                })
                .collect::<Vec<f64>>(),
        );

        // Weights: projections of each centered trial onto each harmonic.
        let mut w = DMatrix::zeros(n, kept);
        for (j, (_, harmonic)) in spectrum.components.iter().take(kept).enumerate() {
            for i in 0..n {
                w[(i, j)] = spectrum.centered.row(i).transpose().dot(harmonic);
            }
        }
        let mut degree_mu = vec![0.0; kept];
        for j in 0..kept {
            degree_mu[j] = (0..n).map(|i| w[(i, j)]).sum::<f64>() / n as f64;
        }
        let mut degree_sigma = vec![vec![0.0; kept]; kept];
        if n > 1 {
            for a in 0..kept {
                for b in a..kept {
                    let cov = (0..n)
                        .map(|i| (w[(i, a)] - degree_mu[a]) * (w[(i, b)] - degree_mu[b]))
                        .sum::<f64>()
                        / (n - 1) as f64;
                    degree_sigma[a][b] = cov;
                    degree_sigma[b][a] = cov;
                }
            }
        }

        mean.push(spectrum.mean);
        mu.push(degree_mu);
        sigma.push(degree_sigma);
        weights.push(w);
    }

    let model = MotionModel {
        degree_names: aligned.degree_names().to_vec(),
        angular_degrees: aligned.angular_degrees().clone(),
        samples: t,
        harmonic_count: kept,
        mean,
        harmonics,
        mu,
        sigma,
    };
    Ok(LearnedMotion {
        model,
        weights,
        explained_variance: explained,
    })
}
