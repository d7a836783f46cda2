//! Planar rigid poses `(x, y, heading)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// A planar pose, also used as a rigid transform from the body frame into
/// the parent frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub h: f64,
}

impl Pose2 {
    pub const fn new(x: f64, y: f64, h: f64) -> Self {
        Self { x, y, h }
    }

    pub const fn identity() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    /// Maps a body-frame point into the parent frame.
    #[inline]
    pub fn transform_point(&self, px: f64, py: f64) -> (f64, f64) {
        let (s, c) = self.h.sin_cos();
        (self.x + c * px - s * py, self.y + s * px + c * py)
    }

    /// Maps a parent-frame point into the body frame.
    #[inline]
    pub fn inverse_transform_point(&self, px: f64, py: f64) -> (f64, f64) {
        let (s, c) = self.h.sin_cos();
        let dx = px - self.x;
        let dy = py - self.y;
        (c * dx + s * dy, -s * dx + c * dy)
    }

    /// `self ∘ other`: applies `other` in the body frame of `self`.
    pub fn compose(&self, other: &Pose2) -> Pose2 {
        let (x, y) = self.transform_point(other.x, other.y);
        Pose2::new(x, y, wrap_angle(self.h + other.h))
    }

    pub fn inverse(&self) -> Pose2 {
        let (s, c) = self.h.sin_cos();
        Pose2::new(
            -(c * self.x + s * self.y),
            s * self.x - c * self.y,
            wrap_angle(-self.h),
        )
    }

    /// Relative motion expressed in the body frame of `self`: `self⁻¹ ∘ to`.
    pub fn between(&self, to: &Pose2) -> Pose2 {
        let (x, y) = self.inverse_transform_point(to.x, to.y);
        Pose2::new(x, y, wrap_angle(to.h - self.h))
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.h]
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.h.is_finite()
    }
}
