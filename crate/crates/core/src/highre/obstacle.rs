//! Second-order potential-flow dynamics of a one-coordinate swimmer beside a
//! fixed rigid obstacle, in world coordinates `Q = (theta, x, y)`.

use super::{added_mass, body_inertia, coupling_highre, shape_added_mass, HighReModel, KirchhoffBasis};
use crate::error::{Result, SwimError};
use crate::geometry::{check_self_propulsion, BodyBoundary};
use crate::se2::{body_map, cross, world_map, BodyTwist, Pose};
use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use std::fmt::Write as _;

/// World-frame kinetic-energy blocks `T = 1/2 Q'M Q' + Q'N s' + 1/2 C s'^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldMatrices {
    pub m: Matrix3<f64>,
    pub n: Vector3<f64>,
    pub c: f64,
    /// Clearance between swimmer and obstacle (infinite without one).
    pub gap: f64,
}

/// Swimmer pose and its body-frame velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RichState {
    pub q: Pose,
    pub qdot: BodyTwist,
}

/// Time derivative of a [`RichState`]: world velocity and body-frame acceleration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RichDerivative {
    pub q_rate: Vector3<f64>,
    pub qdot_rate: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RichSample {
    pub t: f64,
    pub s: f64,
    pub pose: Pose,
    /// World velocity `(theta', x', y')`.
    pub velocity: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RichTrajectory {
    pub samples: Vec<RichSample>,
    pub step: f64,
    /// True when the run stopped because the clearance fell to the collision threshold.
    pub collided: bool,
}

impl RichTrajectory {
    /// CSV with header `t,alpha,theta,x,y,omega,vx,vy`; `alpha` is the stroke offset.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,alpha,theta,x,y,omega,vx,vy\n");
        for s in &self.samples {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                s.t, s.s, s.pose.theta, s.pose.r.x, s.pose.r.y, s.velocity.x, s.velocity.y, s.velocity.z
            );
        }
        out
    }

    /// Change of `x` over each complete period, from the hermite-free sample grid.
    pub fn per_stroke_displacement(&self, period: f64) -> Vec<f64> {
        let end = self.samples.last().map_or(0.0, |s| s.t);
        let strokes = ((end + 1e-9) / period).floor() as usize;
        let x_at = |t: f64| {
            let i = self.samples.partition_point(|s| s.t < t - 1e-9).min(self.samples.len() - 1);
            self.samples[i].pose.r.x
        };
        (0..strokes).map(|k| x_at((k + 1) as f64 * period) - x_at(k as f64 * period)).collect()
    }

    pub fn speeds(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.velocity.y.hypot(s.velocity.z)).collect()
    }
}

/// Potential-flow swimmer and obstacle with finite-difference metric derivatives.
#[derive(Debug, Clone)]
pub struct ObstacleModel {
    pub model: HighReModel,
    pub obstacle: Option<BodyBoundary>,
    /// Clearance at which the run stops.
    pub collision_gap: f64,
    pub dx: f64,
    pub dtheta: f64,
    pub ds: f64,
}

impl ObstacleModel {
    pub fn new(model: HighReModel, obstacle: Option<BodyBoundary>) -> Self {
        let length = 2.0 * model.geom.semi_major;
        ObstacleModel {
            model,
            obstacle,
            collision_gap: 0.05 * model.geom.semi_minor,
            dx: 1e-4 * length,
            dtheta: 1e-4,
            ds: 1e-4,
        }
    }

    fn placed(&self, s: f64, q: &Pose) -> Result<(BodyBoundary, f64)> {
        let body = self.model.body(s)?.transformed(q);
        let gap = match &self.obstacle {
            Some(o) => body
                .polygons
                .iter()
                .flat_map(|p| o.polygons.iter().map(move |r| crate::geometry::polygon_distance(p, r)))
                .fold(f64::INFINITY, f64::min),
            None => f64::INFINITY,
        };
        Ok((body, gap))
    }

    pub fn gap(&self, s: f64, q: &Pose) -> Result<f64> {
        Ok(self.placed(s, q)?.1)
    }

    pub fn world_matrices(&self, s: f64, q: &Pose) -> Result<WorldMatrices> {
        let (body, gap) = self.placed(s, q)?;
        if gap <= 0.5 * self.collision_gap {
            return Err(SwimError::Proximity { gap, limit: 0.5 * self.collision_gap });
        }
        let basis = KirchhoffBasis::solve(&body, self.obstacle.as_ref(), q.r)?;
        let (mass, inertia) = body_inertia(&body, self.model.rho0, q.r);
        let m = Matrix3::from_diagonal(&Vector3::new(inertia, mass, mass))
            + added_mass(&basis, self.model.rho_f).matrix;
        let nf = coupling_highre(&basis, self.model.rho_f);
        let own = check_self_propulsion(&body, self.model.rho0)[0];
        let n = Vector3::new(
            nf[(0, 0)] + own.angular - cross(q.r, own.linear),
            nf[(1, 0)] + own.linear.x,
            nf[(2, 0)] + own.linear.y,
        );
        let c = shape_added_mass(&basis, self.model.rho_f)[(0, 0)] + self.own_shape_energy(&body);
        Ok(WorldMatrices { m, n, c, gap })
    }

    // Kinetic energy of the body's own deformation at unit rate (times two).
    fn own_shape_energy(&self, body: &BodyBoundary) -> f64 {
        body.loop_moments()
            .iter()
            .zip(&body.mode_motions[0])
            .map(|(mo, t)| {
                let w = t.omega;
                let v = t.v;
                // int |w perp(x) + v|^2 dA over the loop
                self.model.rho0 * (w * w * mo.polar + 2.0 * w * cross(mo.first, v) + mo.area * v.norm_squared())
            })
            .sum()
    }

    /// Generalised impulse `M Q' + N s'`, conserved in free space.
    pub fn impulse(&self, s: f64, rate: f64, q: &Pose, qdot_world: &Vector3<f64>) -> Result<Vector3<f64>> {
        let w = self.world_matrices(s, q)?;
        Ok(w.m * qdot_world + w.n * rate)
    }

    /// World velocity with zero impulse, the state reached from rest.
    pub fn rest_velocity(&self, s: f64, rate: f64, q: &Pose) -> Result<Vector3<f64>> {
        let w = self.world_matrices(s, q)?;
        solve3(&w.m, &(-w.n * rate))
    }

    /// World acceleration from the Euler-Lagrange equations.
    pub fn acceleration(&self, shape: (f64, f64, f64), q: &Pose, qd: &Vector3<f64>) -> Result<Vector3<f64>> {
        let (s, sd, sdd) = shape;
        let steps = [self.dtheta, self.dx, self.dx, self.ds];
        let stencil: Vec<(f64, Pose)> = (0..4)
            .flat_map(|k| {
                [1.0, -1.0].into_iter().map(move |sign| {
                    let mut v = q.to_vector();
                    let mut s1 = s;
                    if k < 3 {
                        v[k] += sign * steps[k];
                    } else {
                        s1 += sign * steps[k];
                    }
                    (s1, Pose::from_vector(&v))
                })
            })
            .collect();
        let mut all: Vec<Result<WorldMatrices>> = std::iter::once((s, *q))
            .chain(stencil)
            .collect::<Vec<_>>()
            .par_iter()
            .map(|(s1, q1)| self.world_matrices(*s1, q1))
            .collect();
        let mut mats = Vec::with_capacity(all.len());
        for r in all.drain(..) {
            mats.push(r?);
        }
        let centre = mats[0];
        let d = |k: usize| {
            let (p, m) = (&mats[1 + 2 * k], &mats[2 + 2 * k]);
            let h = 2.0 * steps[k];
            ((p.m - m.m) / h, (p.n - m.n) / h, (p.c - m.c) / h)
        };
        let derivs: Vec<_> = (0..4).map(d).collect();
        let mut mdot = derivs[3].0 * sd;
        let mut ndot = derivs[3].1 * sd;
        let mut grad = Vector3::zeros();
        for k in 0..3 {
            let (dm, dn, dc) = derivs[k];
            mdot += dm * qd[k];
            ndot += dn * qd[k];
            grad[k] = 0.5 * qd.dot(&(dm * qd)) + qd.dot(&dn) * sd + 0.5 * dc * sd * sd;
        }
        let rhs = -mdot * qd - ndot * sd - centre.n * sdd + grad;
        solve3(&centre.m, &rhs)
    }

    /// Right-hand side in body form, for callers that keep body velocities.
    pub fn dynamics_step(&self, shape: (f64, f64, f64), state: &RichState) -> Result<RichDerivative> {
        let qd = world_map(&state.q, &state.qdot);
        let acc = self.acceleration(shape, &state.q, &qd)?;
        // d/dt (R^T v_w) = R^T a_w - theta' J R^T v_w
        let body_acc = body_map(&state.q, &acc);
        let omega = qd.x;
        let v = state.qdot.v;
        let qdot_rate = Vector3::new(acc.x, body_acc.v.x + omega * v.y, body_acc.v.y - omega * v.x);
        Ok(RichDerivative { q_rate: qd, qdot_rate })
    }

    /// Integrates from rest (zero impulse) with RK4 until `horizon` or collision.
    ///
    /// `shape(t)` returns `(s, s', s'')`.
    pub fn integrate(
        &self,
        shape: &(dyn Fn(f64) -> (f64, f64, f64) + Sync),
        q0: Pose,
        horizon: f64,
        h: f64,
    ) -> Result<RichTrajectory> {
        let (n, step) = crate::engine::step_grid(horizon, h)?;
        let (s0, r0, _) = shape(0.0);
        let mut q = q0.to_vector();
        let mut qd = self.rest_velocity(s0, r0, &q0)?;
        let mut samples = vec![RichSample { t: 0.0, s: s0, pose: q0, velocity: qd }];
        let mut collided = false;
        let rhs = |t: f64, q: &Vector3<f64>, qd: &Vector3<f64>| -> Result<Vector3<f64>> {
            self.acceleration(shape(t), &Pose::from_vector(q), qd)
        };
        for i in 0..n {
            let t = i as f64 * step;
            if self.gap(shape(t).0, &Pose::from_vector(&q))? <= self.collision_gap {
                collided = true;
                break;
            }
            let stage = (|| -> Result<_> {
                let a1 = rhs(t, &q, &qd)?;
                let (q2, v2) = (q + 0.5 * step * qd, qd + 0.5 * step * a1);
                let a2 = rhs(t + 0.5 * step, &q2, &v2)?;
                let (q3, v3) = (q + 0.5 * step * v2, qd + 0.5 * step * a2);
                let a3 = rhs(t + 0.5 * step, &q3, &v3)?;
                let (q4, v4) = (q + step * v3, qd + step * a3);
                let a4 = rhs(t + step, &q4, &v4)?;
                Ok((
                    q + step / 6.0 * (qd + 2.0 * v2 + 2.0 * v3 + v4),
                    qd + step / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
                ))
            })();
            let (qn, vn) = match stage {
                Ok(v) => v,
                Err(SwimError::Proximity { .. }) if self.obstacle.is_some() => {
                    collided = true;
                    break;
                }
                Err(e) => return Err(e),
            };
            let t1 = (i + 1) as f64 * step;
            if !qn.iter().chain(vn.iter()).all(|v| v.is_finite()) {
                return Err(SwimError::NonFinite { t: t1, s: vec![shape(t1).0], theta: qn.x, x: qn.y, y: qn.z });
            }
            q = qn;
            qd = vn;
            samples.push(RichSample { t: t1, s: shape(t1).0, pose: Pose::from_vector(&q), velocity: qd });
        }
        Ok(RichTrajectory { samples, step, collided })
    }

    /// Per-panel source strengths of the four elementary potentials, for debugging.
    pub fn strengths_csv(&self, s: f64, q: &Pose) -> Result<String> {
        let (body, _) = self.placed(s, q)?;
        let basis = KirchhoffBasis::solve(&body, self.obstacle.as_ref(), q.r)?;
        let mut out = String::from("panel,x,y,sigma_theta,sigma_x,sigma_y,sigma_shape\n");
        let domain = match &self.obstacle {
            Some(o) => body.merged_with(o),
            None => body,
        };
        for (i, p) in domain.panels.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                i,
                p.mid.x,
                p.mid.y,
                basis.rigid[0].strengths[i],
                basis.rigid[1].strengths[i],
                basis.rigid[2].strengths[i],
                basis.shape[0].strengths[i]
            );
        }
        Ok(out)
    }
}

fn solve3(m: &Matrix3<f64>, rhs: &Vector3<f64>) -> Result<Vector3<f64>> {
    m.cholesky()
        .map(|c| c.solve(rhs))
        .ok_or_else(|| SwimError::SingularAssembly { min_eig: nalgebra::SymmetricEigen::new(*m).eigenvalues.min(), threshold: 0.0 })
}
