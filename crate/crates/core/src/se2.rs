//! Planar rigid placements and body-frame twists.
//!
//! A [`Pose`] is the pair (rotation angle, centre of mass). The angle is kept
//! unwrapped so trajectories can be differentiated and compared without
//! branch jumps; equality checks wrap it into (-pi, pi].

use nalgebra::{Matrix2, Vector2, Vector3};
use std::f64::consts::PI;

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

pub fn rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Rotates a planar vector by a quarter turn: `perp(x) = (-x.y, x.x)`.
#[inline]
pub fn perp(v: Vector2<f64>) -> Vector2<f64> {
    Vector2::new(-v.y, v.x)
}

#[inline]
pub fn cross(a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub theta: f64,
    pub r: Vector2<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn new(theta: f64, x: f64, y: f64) -> Self {
        Self { theta, r: Vector2::new(x, y) }
    }

    pub fn identity() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    /// Packs the pose as `(theta, x, y)`.
    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::new(self.theta, self.r.x, self.r.y)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn rotation(&self) -> Matrix2<f64> {
        rotation(self.theta)
    }

    /// Group product: `self` followed by `other` expressed in `self`'s frame.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose { theta: self.theta + other.theta, r: self.r + self.rotation() * other.r }
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation().transpose();
        Pose { theta: -self.theta, r: -(rt * self.r) }
    }

    /// Maps a body-frame point to the world frame.
    pub fn apply(&self, p: Vector2<f64>) -> Vector2<f64> {
        self.r + self.rotation() * p
    }

    /// Chart distance `sqrt(dtheta^2 + |dr|^2)` with the unwrapped angle.
    pub fn distance(&self, other: &Pose) -> f64 {
        (self.to_vector() - other.to_vector()).norm()
    }

    /// Equality up to `tol`, comparing wrapped angles.
    pub fn approx_eq(&self, other: &Pose, tol: f64) -> bool {
        wrap_angle(self.theta - other.theta).abs() <= tol && (self.r - other.r).norm() <= tol
    }
}

/// Body-frame rigid velocity `(omega*, v*)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyTwist {
    pub omega: f64,
    pub v: Vector2<f64>,
}

impl BodyTwist {
    pub fn new(omega: f64, vx: f64, vy: f64) -> Self {
        Self { omega, v: Vector2::new(vx, vy) }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::new(self.omega, self.v.x, self.v.y)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn is_finite(&self) -> bool {
        self.omega.is_finite() && self.v.x.is_finite() && self.v.y.is_finite()
    }

    /// Velocity of the body-frame point `x` under this twist.
    pub fn point_velocity(&self, x: Vector2<f64>) -> Vector2<f64> {
        self.omega * perp(x) + self.v
    }

    pub fn scale(&self, a: f64) -> BodyTwist {
        BodyTwist { omega: a * self.omega, v: a * self.v }
    }
}

/// World-frame velocity `(theta_dot, r_dot)` of a body twist at pose `q`.
pub fn world_map(q: &Pose, t: &BodyTwist) -> Vector3<f64> {
    let rv = q.rotation() * t.v;
    Vector3::new(t.omega, rv.x, rv.y)
}

/// Inverse of [`world_map`].
pub fn body_map(q: &Pose, w: &Vector3<f64>) -> BodyTwist {
    let v = q.rotation().transpose() * Vector2::new(w[1], w[2]);
    BodyTwist { omega: w[0], v }
}
