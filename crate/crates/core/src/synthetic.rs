//! Analytic fields with known answers, used as oracles and in scenarios.

use crate::engine::SwimmerField;
use crate::error::Result;
use crate::se2::{world_map, BodyTwist, Pose};
use nalgebra::{DMatrix, Vector3};

/// World velocity `C s'`, independent of pose and shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantField {
    /// 3 x m matrix mapping shape rates to `(theta', x', y')`.
    pub c: DMatrix<f64>,
}

impl SwimmerField for ConstantField {
    fn shape_dim(&self) -> usize {
        self.c.ncols()
    }
    fn velocity(&self, _q: &Pose, _s: &[f64], rate: &[f64]) -> Result<Vector3<f64>> {
        let v = &self.c * DMatrix::from_column_slice(rate.len(), 1, rate);
        Ok(Vector3::new(v[0], v[1], v[2]))
    }
    fn bound_k(&self) -> f64 {
        f64::INFINITY
    }
}

/// Left-invariant field on a circle of shapes with body twist
/// `(w cos phi, c + a cos phi, b sin phi) phi'`.
///
/// Every full turn of `phi` returns the heading to its start, so each loop
/// adds the same world displacement; with `w = 0` that displacement is `(2 pi c, 0)`
/// in the body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolonomyField {
    pub w: f64,
    pub c: f64,
    pub a: f64,
    pub b: f64,
}

impl HolonomyField {
    pub fn twist(&self, phi: f64) -> BodyTwist {
        BodyTwist::new(self.w * phi.cos(), self.c + self.a * phi.cos(), self.b * phi.sin())
    }
}

impl SwimmerField for HolonomyField {
    fn shape_dim(&self) -> usize {
        1
    }
    fn velocity(&self, q: &Pose, s: &[f64], rate: &[f64]) -> Result<Vector3<f64>> {
        Ok(world_map(q, &self.twist(s[0]).scale(rate[0])))
    }
    fn bound_k(&self) -> f64 {
        (self.w.abs() + self.c.abs() + self.a.abs() + self.b.abs()) * 1.01
    }
    /// The circle has no origin; the bound is taken against a unit norm.
    fn shape_norm(&self, _s: &[f64]) -> f64 {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::integrate;
    use crate::paths::{FnPath, WindingStroke};
    use std::f64::consts::PI;

    #[test]
    fn constant_field_is_exact_under_rk4() {
        let f = ConstantField { c: DMatrix::from_column_slice(3, 1, &[0.1, 2.0, -1.0]) };
        let path = FnPath {
            dim: 1,
            horizon: 3.0,
            value: |t: f64| vec![t],
            rate: |_: f64| vec![1.0],
        };
        let q0 = Pose::new(0.2, 1.0, 1.0);
        let tr = integrate(&f, &path, q0, 0.01).unwrap();
        for s in &tr.samples {
            let exact = q0.to_vector() + Vector3::new(0.1, 2.0, -1.0) * s.t;
            assert!((s.pose.to_vector() - exact).norm() < 1e-12);
        }
    }

    #[test]
    fn straight_holonomy_advances_two_pi_c_per_loop() {
        let f = HolonomyField { w: 0.0, c: 0.3, a: 0.5, b: 0.2 };
        let tr = integrate(&f, &WindingStroke { rate: 1.0, horizon: 2.0 * PI }, Pose::identity(), 1e-3).unwrap();
        let d = tr.net_displacement();
        assert!((d.y - 2.0 * PI * 0.3).abs() < 1e-10 && d.z.abs() < 1e-10 && d.x.abs() < 1e-12, "{d}");
    }
}
