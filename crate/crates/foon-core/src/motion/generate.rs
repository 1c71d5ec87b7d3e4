//! Constrained trajectory generation from a learned motion model.
//!
//! Each constrained degree solves a ridge-regularized least-squares problem
//! for its harmonic weights: the quadratic loss is the squared mismatch at
//! the constrained samples plus lambda times the Mahalanobis distance of
//! the weights from their learned mean. The stationarity system A c = b is
//! assembled from the constraint-centered harmonic values and solved
//! directly; the offset c0 then absorbs the mean residual, so with a tiny
//! lambda the generated curve passes through the constraints. Unconstrained
//! degrees keep the mean weights. Angular degrees go through tanh at the
//! end, so the solve (and constraint values) for them live in the
//! transformed space.

use nalgebra::{DMatrix, DVector};

use super::{MotionError, MotionModel};

/// A point constraint: degree `degree` must hold `value` at the 1-based
/// sample `timestamp`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraint {
    pub degree: usize,
    pub timestamp: usize,
    pub value: f64,
}

/// A set of point constraints plus the regularization weight lambda.
#[derive(Debug, Clone)]
pub struct ConstraintSet {
    entries: Vec<Constraint>,
    lambda: f64,
}

impl ConstraintSet {
    pub fn new(entries: Vec<Constraint>, lambda: f64) -> Result<Self, MotionError> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(MotionError::BadConstraint(format!(
                "lambda must be positive and finite, got {lambda}"
            )));
        }
        Ok(ConstraintSet { entries, lambda })
    }

    /// No constraints: generation reproduces the mean-weight trajectory.
    pub fn unconstrained() -> Self {
        ConstraintSet {
            entries: Vec::new(),
            lambda: 1.0,
        }
    }

    pub fn entries(&self) -> &[Constraint] {
        &self.entries
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn validate_against(&self, model: &MotionModel) -> Result<(), MotionError> {
        for c in &self.entries {
            if c.degree >= model.degree_count() {
                return Err(MotionError::BadConstraint(format!(
                    "degree index {} out of range (model has {} degrees)",
                    c.degree,
                    model.degree_count()
                )));
            }
            if c.timestamp < 1 || c.timestamp > model.samples {
                return Err(MotionError::BadConstraint(format!(
                    "timestamp {} outside [1, {}]",
                    c.timestamp, model.samples
                )));
            }
            if !c.value.is_finite() {
                return Err(MotionError::BadConstraint(format!(
                    "constraint value {} is not finite",
                    c.value
                )));
            }
        }
        Ok(())
    }
}

/// The generated D x T trajectory along with the weights the solve chose
/// per degree.
#[derive(Debug, Clone)]
pub struct GeneratedTrajectory {
    pub trajectory: DMatrix<f64>,
    /// Per degree: the harmonic weight vector c and offset c0.
    pub weights: Vec<(DVector<f64>, f64)>,
}

/// Regularization added to the weight covariance before inversion; keeps
/// the solve defined when fewer trials than harmonics made it singular.
pub const SIGMA_RIDGE: f64 = 1e-9;

fn sigma_inverse(model: &MotionModel, degree: usize) -> Result<DMatrix<f64>, MotionError> {
    let m = model.harmonic_count;
    let mut sigma = DMatrix::from_fn(m, m, |a, b| model.sigma[degree][a][b]);
    for i in 0..m {
        sigma[(i, i)] += SIGMA_RIDGE;
    }
    sigma
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| MotionError::SingularSystem {
            diagnostic: format!(
                "weight covariance for degree {degree} is not positive definite even after +{SIGMA_RIDGE:e} ridge"
            ),
        })
}

fn solve_system(a: DMatrix<f64>, b: DVector<f64>, degree: usize) -> Result<DVector<f64>, MotionError> {
    if let Some(chol) = a.clone().cholesky() {
        return Ok(chol.solve(&b));
    }
    if let Some(solution) = a.clone().lu().solve(&b) {
        return Ok(solution);
    }
    // Conditioning diagnostic from the eigenvalue spread.
    let eigen = a.symmetric_eigen();
    let max = eigen.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    let min = eigen.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
    Err(MotionError::SingularSystem {
        diagnostic: format!(
            "degree {degree}: eigenvalues span [{min:.3e}, {max:.3e}], condition ~{:.3e}",
            if min.abs() > 0.0 { max / min } else { f64::INFINITY }
        ),
    })
}

/// Generates a D x T trajectory meeting the constraints.
///
/// Unconstrained degrees take c = mu(d), c0 = 0. Each constrained degree
/// solves A c = b with
/// A = sum_s g'(t_s) g'(t_s)^T + lambda Sigma^-1 and
/// b = sum_s f'_s g'(t_s) + lambda Sigma^-1 mu, where g' and f' are the
/// harmonic values and residuals centered over the constrained samples;
/// then c0 = (sum_s f_s - c^T sum_s g(t_s)) / S. Angular degrees pass
/// through tanh.
pub fn generate_trajectory(
    model: &MotionModel,
    constraints: &ConstraintSet,
) -> Result<GeneratedTrajectory, MotionError> {
    model.validate()?;
    constraints.validate_against(model)?;
    let d = model.degree_count();
    let t = model.samples;
    let m = model.harmonic_count;
    let lambda = constraints.lambda();

    let mut trajectory = DMatrix::zeros(d, t);
    let mut weights = Vec::with_capacity(d);

    for degree in 0..d {
        let active: Vec<&Constraint> = constraints
            .entries()
            .iter()
            .filter(|c| c.degree == degree)
            .collect();

        let (c, c0) = if active.is_empty() {
            (DVector::from_iterator(m, model.mu[degree].iter().copied()), 0.0)
        } else {
            let s = active.len();
            // g(t_s) per constraint and raw residuals f_s.
            let g_at: Vec<DVector<f64>> = active
                .iter()
                .map(|c| {
                    DVector::from_iterator(
                        m,
                        (0..m).map(|j| model.harmonics[degree][j][c.timestamp - 1]),
                    )
                })
                .collect();
            let f: Vec<f64> = active
                .iter()
                .map(|c| c.value - model.mean[degree][c.timestamp - 1])
                .collect();

            let g_mean = g_at.iter().fold(DVector::zeros(m), |acc, g| acc + g) / s as f64;
            let f_mean = f.iter().sum::<f64>() / s as f64;

            let sigma_inv = sigma_inverse(model, degree)?;
            let mu = DVector::from_iterator(m, model.mu[degree].iter().copied());

            let mut a = &sigma_inv * lambda;
            let mut b = sigma_inv * &mu * lambda;
            for (g, &fs) in g_at.iter().zip(&f) {
                let centered = g - &g_mean;
                a += &centered * centered.transpose();
                b += &centered * (fs - f_mean);
            }
            let c = if m == 0 {
                DVector::zeros(0)
            } else {
                solve_system(a, b, degree)?
            };

            let g_sum = g_at.iter().fold(DVector::zeros(m), |acc, g| acc + g);
            let f_sum: f64 = f.iter().sum();
            let c0 = (f_sum - c.dot(&g_sum)) / s as f64;
            (c, c0)
        };

        let angular = model.angular_degrees.contains(&degree);
        for sample in 0..t {
            let mut v = model.mean[degree][sample] + c0;
            for j in 0..m {
                v += c[j] * model.harmonics[degree][j][sample];
            }
            if angular {
                // f64 tanh saturates to exactly ±1 for large inputs; clamp
                // by the same margin the forward transform uses so angular
                // outputs stay strictly inside (-1, 1).
                v = v.tanh().clamp(
                    -1.0 + super::ANGLE_CLAMP_MARGIN,
                    1.0 - super::ANGLE_CLAMP_MARGIN,
                );
            }
            trajectory[(degree, sample)] = v;
        }
        weights.push((c, c0));
    }

    Ok(GeneratedTrajectory {
        trajectory,
        weights,
    })
}
