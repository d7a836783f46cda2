use nalgebra::{Matrix3, Vector3};

use crate::pose::{wrap_angle, Pose2};

/// Gaussian belief over the vehicle pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseBelief {
    pub mean: Pose2,
    pub cov: Matrix3<f64>,
}

impl PoseBelief {
    pub fn new(mean: Pose2, cov: Matrix3<f64>) -> Self {
        Self { mean, cov }
    }

    /// Independent per-axis standard deviations.
    pub fn from_sigmas(mean: Pose2, sigma: [f64; 3]) -> Self {
        Self {
            mean,
            cov: Matrix3::from_diagonal(&Vector3::from(sigma.map(|s| s * s))),
        }
    }

    pub fn sigmas(&self) -> [f64; 3] {
        [0, 1, 2].map(|i| self.cov[(i, i)].max(0.0).sqrt())
    }
}

/// Why a measurement was not applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rejection {
    /// The measurement covariance failed a Cholesky factorization.
    NotPositiveDefinite,
    /// Squared Mahalanobis distance of the innovation exceeded the gate.
    Gated { mahalanobis2: f64 },
    /// The innovation covariance could not be inverted.
    Singular,
}

fn symmetrize(m: Matrix3<f64>) -> Matrix3<f64> {
    (m + m.transpose()) * 0.5
}

/// Composes the mean with a body-frame increment and propagates the
/// covariance through the Jacobian of the composition, plus `q`.
pub fn predict(belief: &PoseBelief, odometry: &Pose2, q: &Matrix3<f64>) -> PoseBelief {
    let (s, c) = belief.mean.h.sin_cos();
    let (dx, dy) = (odometry.x, odometry.y);
    let f = Matrix3::new(
        1.0, 0.0, -s * dx - c * dy, //
        0.0, 1.0, c * dx - s * dy, //
        0.0, 0.0, 1.0,
    );
    PoseBelief {
        mean: belief.mean.compose(odometry),
        cov: symmetrize(f * belief.cov * f.transpose() + q),
    }
}

/// Innovation `z − mean` with the heading taken along the short arc.
pub(crate) fn innovation(mean: &Pose2, z: &Pose2) -> Vector3<f64> {
    Vector3::new(z.x - mean.x, z.y - mean.y, wrap_angle(z.h - mean.h))
}

/// Kalman update with a direct pose measurement `z` of covariance `r`,
/// using the Joseph form for the posterior covariance.
pub fn update(belief: &PoseBelief, z: &Pose2, r: &Matrix3<f64>) -> Result<PoseBelief, Rejection> {
    if r.cholesky().is_none() {
        return Err(Rejection::NotPositiveDefinite);
    }
    let nu = innovation(&belief.mean, z);
    let s = belief.cov + r;
    let s_inv = s.try_inverse().ok_or(Rejection::Singular)?;
    let k = belief.cov * s_inv;
    let dm = k * nu;
    let mean = Pose2::new(
        belief.mean.x + dm[0],
        belief.mean.y + dm[1],
        wrap_angle(belief.mean.h + dm[2]),
    );
    let i_k = Matrix3::identity() - k;
    let cov = i_k * belief.cov * i_k.transpose() + k * r * k.transpose();
    Ok(PoseBelief {
        mean,
        cov: symmetrize(cov),
    })
}

/// Squared Mahalanobis distance of `z` under the innovation covariance.
pub(crate) fn mahalanobis2(belief: &PoseBelief, z: &Pose2, r: &Matrix3<f64>) -> Option<f64> {
    let nu = innovation(&belief.mean, z);
    let s_inv = (belief.cov + r).try_inverse()?;
    Some((nu.transpose() * s_inv * nu)[0])
}
