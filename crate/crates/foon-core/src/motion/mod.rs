//! Motion learning and generation.
//!
//! Demonstrated trajectories (D degrees x T samples, six degrees by
//! default: x, y, z, phi, theta, psi) are angle-transformed, time-aligned
//! with batch DTW, and decomposed into a mean curve plus motion harmonics
//! (principal component curves) with a Gaussian over harmonic weights per
//! degree. New trajectories are generated from the model by solving a
//! ridge-regularized least-squares problem against point constraints.
//!
//! Angular degrees are handled in a transformed space: normalized angle
//! values in [-1, 1] are mapped through atanh before learning, and
//! generation maps back through tanh, so generated angles always stay
//! strictly inside the valid range.

mod dtw;
mod files;
mod fpca;
mod generate;

pub use dtw::{batch_dtw_align, AlignedTrials};
pub use files::{
    load_trials_dir, model_from_json, model_to_json, parse_trial_csv, trajectory_to_csv,
};
pub use fpca::{learn_motion_model, HarmonicSelector, LearnedMotion};
pub use generate::{generate_trajectory, Constraint, ConstraintSet, GeneratedTrajectory};

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MotionError {
    #[error("trial set is empty")]
    EmptyTrialSet,
    #[error("trial {index} has {rows} degrees, expected {expected}")]
    DegreeMismatch {
        index: usize,
        rows: usize,
        expected: usize,
    },
    #[error("trial {index} has {len} samples, expected {expected} (already-aligned trials must share a length)")]
    LengthMismatch {
        index: usize,
        len: usize,
        expected: usize,
    },
    #[error("angular degree {degree} holds {value} at sample {sample}: outside [-1, 1]")]
    AngularOutOfRange {
        degree: usize,
        sample: usize,
        value: f64,
    },
    #[error("learning needs at least 2 trials for {requested} harmonics, got {trials}")]
    TooFewTrials { trials: usize, requested: usize },
    #[error("harmonic count {requested} exceeds maximum {max} (min of trials-1 and samples)")]
    HarmonicCountTooLarge { requested: usize, max: usize },
    #[error("invalid constraint: {0}")]
    BadConstraint(String),
    #[error("constraint system is singular ({diagnostic})")]
    SingularSystem { diagnostic: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("trial file {file}:{line}: {message}")]
    BadTrialFile {
        file: String,
        line: usize,
        message: String,
    },
    #[error("model file: {0}")]
    BadModelFile(String),
}

/// Standard degree names for captured rigid-body trajectories.
pub const DEFAULT_DEGREE_NAMES: [&str; 6] = ["x", "y", "z", "phi", "theta", "psi"];

/// Indices of the Euler-angle degrees among [`DEFAULT_DEGREE_NAMES`].
pub fn default_angular_degrees() -> BTreeSet<usize> {
    [3, 4, 5].into_iter().collect()
}

/// A set of demonstration trials of one motion type. Trials share degree
/// count and order; lengths may differ.
#[derive(Debug, Clone)]
pub struct TrialSet {
    trials: Vec<DMatrix<f64>>,
    degree_names: Vec<String>,
    angular: BTreeSet<usize>,
}

impl TrialSet {
    pub fn new(
        trials: Vec<DMatrix<f64>>,
        degree_names: Vec<String>,
        angular: BTreeSet<usize>,
    ) -> Result<Self, MotionError> {
        if trials.is_empty() {
            return Err(MotionError::EmptyTrialSet);
        }
        let expected = degree_names.len();
        for (index, t) in trials.iter().enumerate() {
            if t.nrows() != expected {
                return Err(MotionError::DegreeMismatch {
                    index,
                    rows: t.nrows(),
                    expected,
                });
            }
        }
        Ok(TrialSet {
            trials,
            degree_names,
            angular,
        })
    }

    /// Trials against the default six degrees with angular phi/theta/psi.
    pub fn with_default_degrees(trials: Vec<DMatrix<f64>>) -> Result<Self, MotionError> {
        Self::new(
            trials,
            DEFAULT_DEGREE_NAMES.iter().map(|s| s.to_string()).collect(),
            default_angular_degrees(),
        )
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

    pub fn degree_count(&self) -> usize {
        self.degree_names.len()
    }

    pub fn degree_names(&self) -> &[String] {
        &self.degree_names
    }

    pub fn angular_degrees(&self) -> &BTreeSet<usize> {
        &self.angular
    }

    /// Scales angular rows by `factor` (e.g. 1/pi maps raw radians into the
    /// normalized [-1, 1] range; pi maps back).
    pub fn scale_angular(&self, factor: f64) -> TrialSet {
        let mut out = self.clone();
        for trial in &mut out.trials {
            for &d in &out.angular {
                for v in trial.row_mut(d).iter_mut() {
                    *v *= factor;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformDirection {
    Forward,
    Inverse,
}

/// The distance angular values are clamped away from ±1 before atanh.
pub const ANGLE_CLAMP_MARGIN: f64 = 1e-9;

/// Tolerance granted beyond |1| before a forward transform rejects a value
/// as badly normalized.
pub const ANGLE_RANGE_SLACK: f64 = 1e-6;

/// Maps angular degrees through atanh (`Forward`, for learning) or tanh
/// (`Inverse`). Forward input must be normalized to [-1, 1]; values within
/// the range are clamped to ±(1 - 1e-9) so the transform stays finite, and
/// values beyond 1 + 1e-6 are rejected. Non-angular degrees pass through.
pub fn angle_transform(
    trials: &TrialSet,
    direction: TransformDirection,
) -> Result<TrialSet, MotionError> {
    let mut out = trials.clone();
    for trial in &mut out.trials {
        for &d in &out.angular {
            for (sample, v) in trial.row_mut(d).iter_mut().enumerate() {
                match direction {
                    TransformDirection::Forward => {
                        if v.abs() > 1.0 + ANGLE_RANGE_SLACK {
                            return Err(MotionError::AngularOutOfRange {
                                degree: d,
                                sample: sample + 1,
                                value: *v,
                            });
                        }
                        let clamped = v.clamp(-1.0 + ANGLE_CLAMP_MARGIN, 1.0 - ANGLE_CLAMP_MARGIN);
                        *v = clamped.atanh();
                    }
                    TransformDirection::Inverse => {
                        *v = v.tanh();
                    }
                }
            }
        }
    }
    Ok(out)
}

/// A learned motion: mean trajectory, orthonormal harmonics, and the
/// Gaussian over harmonic weights, per degree. Serializes to the JSON model
/// file (`mean` is D x T, `harmonics` D x M x T, `mu` D x M, `sigma`
/// D x M x M, all row-major nested arrays).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionModel {
    pub degree_names: Vec<String>,
    pub angular_degrees: BTreeSet<usize>,
    #[serde(rename = "T")]
    pub samples: usize,
    #[serde(rename = "M")]
    pub harmonic_count: usize,
    pub mean: Vec<Vec<f64>>,
    pub harmonics: Vec<Vec<Vec<f64>>>,
    pub mu: Vec<Vec<f64>>,
    pub sigma: Vec<Vec<Vec<f64>>>,
}

impl MotionModel {
    pub fn degree_count(&self) -> usize {
        self.degree_names.len()
    }

    /// Index of a degree by name.
    pub fn degree_index(&self, name: &str) -> Option<usize> {
        self.degree_names.iter().position(|n| n == name)
    }

    /// Checks internal shape consistency; used after deserialization.
    pub fn validate(&self) -> Result<(), MotionError> {
        let d = self.degree_names.len();
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(MotionError::BadModelFile(format!("inconsistent {what}")))
            }
        };
        check(self.mean.len() == d, "mean rows")?;
        check(self.harmonics.len() == d, "harmonics rows")?;
        check(self.mu.len() == d, "mu rows")?;
        check(self.sigma.len() == d, "sigma rows")?;
        for i in 0..d {
            check(self.mean[i].len() == self.samples, "mean length")?;
            check(self.harmonics[i].len() == self.harmonic_count, "harmonic count")?;
            check(
                self.harmonics[i].iter().all(|h| h.len() == self.samples),
                "harmonic length",
            )?;
            check(self.mu[i].len() == self.harmonic_count, "mu length")?;
            check(self.sigma[i].len() == self.harmonic_count, "sigma rows")?;
            check(
                self.sigma[i].iter().all(|r| r.len() == self.harmonic_count),
                "sigma columns",
            )?;
        }
        for &a in &self.angular_degrees {
            check(a < d, "angular degree index")?;
        }
        Ok(())
    }

    /// Reconstruction with the mean weights: mean + mu·harmonics, with tanh
    /// applied on angular degrees. This is the trajectory generation
    /// produces when no constraints are given.
    pub fn mean_weight_trajectory(&self) -> DMatrix<f64> {
        let d = self.degree_count();
        let mut out = DMatrix::zeros(d, self.samples);
        for deg in 0..d {
            for t in 0..self.samples {
                let mut v = self.mean[deg][t];
                for (j, h) in self.harmonics[deg].iter().enumerate() {
                    v += self.mu[deg][j] * h[t];
                }
                if self.angular_degrees.contains(&deg) {
                    v = v.tanh();
                }
                out[(deg, t)] = v;
            }
        }
        out
    }
}
