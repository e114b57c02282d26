//! Fixed-step integration of linear-swimmer dynamics `q' = F(q, s) s'`.
//!
//! Fields and shape paths are traits so the same integrator drives the
//! resistive, potential-flow and synthetic models. Rotation is integrated
//! additively in the angle chart, which is exact for planar motion.

use crate::error::{Result, SwimError};
use crate::se2::Pose;
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;

/// Shape and shape rate at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeSample {
    pub s: Vec<f64>,
    pub rate: Vec<f64>,
}

/// A smooth shape function `t -> s(t)` on `[0, horizon]`.
pub trait ShapePath: Send + Sync {
    fn dim(&self) -> usize;
    fn horizon(&self) -> f64;
    fn sample(&self, t: f64) -> ShapeSample;

    /// Whether coordinate `i` lives on the circle (period 2 pi).
    fn is_circle(&self, _i: usize) -> bool {
        false
    }

    /// Second derivative, by default a central difference of the rate.
    fn accel(&self, t: f64) -> Vec<f64> {
        let h = 1e-5;
        let a = self.sample(t + h).rate;
        let b = self.sample(t - h).rate;
        a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * h)).collect()
    }
}

impl<P: ShapePath + ?Sized> ShapePath for &P {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn horizon(&self) -> f64 {
        (**self).horizon()
    }
    fn sample(&self, t: f64) -> ShapeSample {
        (**self).sample(t)
    }
    fn is_circle(&self, i: usize) -> bool {
        (**self).is_circle(i)
    }
    fn accel(&self, t: f64) -> Vec<f64> {
        (**self).accel(t)
    }
}

impl<P: ShapePath + ?Sized> ShapePath for Box<P> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn horizon(&self) -> f64 {
        (**self).horizon()
    }
    fn sample(&self, t: f64) -> ShapeSample {
        (**self).sample(t)
    }
    fn is_circle(&self, i: usize) -> bool {
        (**self).is_circle(i)
    }
    fn accel(&self, t: f64) -> Vec<f64> {
        (**self).accel(t)
    }
}

/// Plug-in right-hand side of the linear-swimmer equation.
pub trait SwimmerField: Send + Sync {
    fn shape_dim(&self) -> usize;

    /// World-frame velocity `(theta', x', y')` for pose `q`, shape `s` and rate `rate`.
    fn velocity(&self, q: &Pose, s: &[f64], rate: &[f64]) -> Result<Vector3<f64>>;

    /// Claimed constant `K` with `|F(q,s) r| <= K |s| |r|`.
    fn bound_k(&self) -> f64;

    /// Norm on shape space used by the growth bound.
    fn shape_norm(&self, s: &[f64]) -> f64 {
        s.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

impl<F: SwimmerField + ?Sized> SwimmerField for &F {
    fn shape_dim(&self) -> usize {
        (**self).shape_dim()
    }
    fn velocity(&self, q: &Pose, s: &[f64], rate: &[f64]) -> Result<Vector3<f64>> {
        (**self).velocity(q, s, rate)
    }
    fn bound_k(&self) -> f64 {
        (**self).bound_k()
    }
    fn shape_norm(&self, s: &[f64]) -> f64 {
        (**self).shape_norm(s)
    }
}

impl<F: SwimmerField + ?Sized> SwimmerField for Box<F> {
    fn shape_dim(&self) -> usize {
        (**self).shape_dim()
    }
    fn velocity(&self, q: &Pose, s: &[f64], rate: &[f64]) -> Result<Vector3<f64>> {
        (**self).velocity(q, s, rate)
    }
    fn bound_k(&self) -> f64 {
        (**self).bound_k()
    }
    fn shape_norm(&self, s: &[f64]) -> f64 {
        (**self).shape_norm(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub s: Vec<f64>,
    pub pose: Pose,
    /// World velocity at this sample, kept for dense output.
    pub velocity: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub step: f64,
}

impl Trajectory {
    pub fn first(&self) -> &TrajectorySample {
        &self.samples[0]
    }

    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectory has at least one sample")
    }

    pub fn final_pose(&self) -> Pose {
        self.last().pose
    }

    /// Net change `q(T) - q(0)` in the angle chart.
    pub fn net_displacement(&self) -> Vector3<f64> {
        self.last().pose.to_vector() - self.first().pose.to_vector()
    }

    /// Pose at an arbitrary time by cubic Hermite interpolation (fourth-order accurate).
    pub fn pose_at(&self, t: f64) -> Pose {
        let n = self.samples.len();
        if n == 1 || t <= self.samples[0].t {
            return self.samples[0].pose;
        }
        if t >= self.samples[n - 1].t {
            return self.samples[n - 1].pose;
        }
        let idx = self.samples.partition_point(|s| s.t <= t).clamp(1, n - 1);
        let (a, b) = (&self.samples[idx - 1], &self.samples[idx]);
        let h = b.t - a.t;
        let u = (t - a.t) / h;
        let (h00, h10, h01, h11) = (
            2.0 * u.powi(3) - 3.0 * u * u + 1.0,
            u.powi(3) - 2.0 * u * u + u,
            -2.0 * u.powi(3) + 3.0 * u * u,
            u.powi(3) - u * u,
        );
        let v = h00 * a.pose.to_vector() + h10 * h * a.velocity + h01 * b.pose.to_vector() + h11 * h * b.velocity;
        Pose::from_vector(&v)
    }

    /// Largest pairwise chart distance between samples.
    pub fn diameter(&self) -> f64 {
        let pts: Vec<Vector3<f64>> = self.samples.iter().map(|s| s.pose.to_vector()).collect();
        // Pairs are visited by decreasing distance from the bounding-box centre
        // and pruned with the triangle inequality.
        let (lo, hi) = pts.iter().fold((pts[0], pts[0]), |(lo, hi), p| (lo.inf(p), hi.sup(p)));
        let c = 0.5 * (lo + hi);
        let mut order: Vec<(f64, usize)> = pts.iter().enumerate().map(|(i, p)| ((p - c).norm(), i)).collect();
        order.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut best: f64 = 0.0;
        for (a, &(ra, i)) in order.iter().enumerate() {
            if 2.0 * ra <= best {
                break;
            }
            for &(rb, j) in &order[a + 1..] {
                if ra + rb <= best {
                    break;
                }
                best = best.max((pts[i] - pts[j]).norm());
            }
        }
        best
    }

    /// Maximum chart distance from the initial pose.
    pub fn max_excursion(&self) -> f64 {
        let q0 = self.first().pose;
        self.samples.iter().map(|s| s.pose.distance(&q0)).fold(0.0, f64::max)
    }

    /// CSV with header `t,alpha,theta,x,y`; `alpha` is the first shape coordinate.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,alpha,theta,x,y\n");
        for s in &self.samples {
            let alpha = s.s.first().copied().unwrap_or(0.0);
            let _ = writeln!(out, "{},{},{},{},{}", s.t, alpha, s.pose.theta, s.pose.r.x, s.pose.r.y);
        }
        out
    }
}

/// Number of steps and the effective step for a horizon.
pub fn step_grid(horizon: f64, h: f64) -> Result<(usize, f64)> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(SwimError::InvalidArgument(format!("step must be positive, got {h}")));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(SwimError::InvalidArgument(format!("horizon must be non-negative, got {horizon}")));
    }
    let n = (horizon / h).round().max(1.0) as usize;
    Ok((n, horizon / n as f64))
}

fn eval_rhs<F: SwimmerField + ?Sized, P: ShapePath + ?Sized>(
    field: &F,
    path: &P,
    t: f64,
    y: &Vector3<f64>,
) -> Result<(Vector3<f64>, ShapeSample)> {
    let smp = path.sample(t);
    let q = Pose::from_vector(y);
    let v = field.velocity(&q, &smp.s, &smp.rate)?;
    if !(v[0].is_finite() && v[1].is_finite() && v[2].is_finite()) {
        return Err(SwimError::NonFinite { t, s: smp.s, theta: q.theta, x: q.r.x, y: q.r.y });
    }
    Ok((v, smp))
}

/// Classical fourth-order Runge-Kutta integration of the swimmer ODE on `[0, path.horizon()]`.
pub fn integrate<F: SwimmerField + ?Sized, P: ShapePath + ?Sized>(
    field: &F,
    path: &P,
    q0: Pose,
    h: f64,
) -> Result<Trajectory> {
    let (n, h) = step_grid(path.horizon(), h)?;
    let mut y = q0.to_vector();
    let mut samples = Vec::with_capacity(n + 1);
    let (mut k1, mut smp) = eval_rhs(field, path, 0.0, &y)?;
    for i in 0..n {
        let t = i as f64 * h;
        samples.push(TrajectorySample { t, s: smp.s.clone(), pose: Pose::from_vector(&y), velocity: k1 });
        let (k2, _) = eval_rhs(field, path, t + 0.5 * h, &(y + 0.5 * h * k1))?;
        let (k3, _) = eval_rhs(field, path, t + 0.5 * h, &(y + 0.5 * h * k2))?;
        let (k4, _) = eval_rhs(field, path, t + h, &(y + h * k3))?;
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        let t1 = (i + 1) as f64 * h;
        (k1, smp) = eval_rhs(field, path, t1, &y)?;
    }
    samples.push(TrajectorySample { t: n as f64 * h, s: smp.s, pose: Pose::from_vector(&y), velocity: k1 });
    Ok(Trajectory { samples, step: h })
}

/// A C1 time change `beta: R+ -> R+`; need not be monotone.
pub trait TimeWarp: Send + Sync {
    fn value(&self, t: f64) -> f64;
    fn rate(&self, t: f64) -> f64;
}

impl<W: TimeWarp + ?Sized> TimeWarp for &W {
    fn value(&self, t: f64) -> f64 {
        (**self).value(t)
    }
    fn rate(&self, t: f64) -> f64 {
        (**self).rate(t)
    }
}

impl<W: TimeWarp + ?Sized> TimeWarp for Box<W> {
    fn value(&self, t: f64) -> f64 {
        (**self).value(t)
    }
    fn rate(&self, t: f64) -> f64 {
        (**self).rate(t)
    }
}

/// `beta(t) = c t`.
#[derive(Debug, Clone, Copy)]
pub struct LinearWarp(pub f64);

impl TimeWarp for LinearWarp {
    fn value(&self, t: f64) -> f64 {
        self.0 * t
    }
    fn rate(&self, _t: f64) -> f64 {
        self.0
    }
}

/// `beta(t) = scale * sin^2(freq t)`, a bounded flapping warp.
#[derive(Debug, Clone, Copy)]
pub struct SinSquaredWarp {
    pub scale: f64,
    pub freq: f64,
}

impl TimeWarp for SinSquaredWarp {
    fn value(&self, t: f64) -> f64 {
        self.scale * (self.freq * t).sin().powi(2)
    }
    fn rate(&self, t: f64) -> f64 {
        self.scale * self.freq * (2.0 * self.freq * t).sin()
    }
}

/// `beta(t) = c0 + c1 t + sum_k a_k sin(w_k t)^2`-style warps built from closures.
pub struct FnWarp<V, D> {
    pub value: V,
    pub rate: D,
}

impl<V, D> TimeWarp for FnWarp<V, D>
where
    V: Fn(f64) -> f64 + Send + Sync,
    D: Fn(f64) -> f64 + Send + Sync,
{
    fn value(&self, t: f64) -> f64 {
        (self.value)(t)
    }
    fn rate(&self, t: f64) -> f64 {
        (self.rate)(t)
    }
}

/// The shape path `t -> s(beta(t))` with rate `s'(beta(t)) beta'(t)`.
pub struct Reparameterized<P, B> {
    pub path: P,
    pub warp: B,
    pub horizon: f64,
}

impl<P: ShapePath, B: TimeWarp> ShapePath for Reparameterized<P, B> {
    fn dim(&self) -> usize {
        self.path.dim()
    }
    fn horizon(&self) -> f64 {
        self.horizon
    }
    fn sample(&self, t: f64) -> ShapeSample {
        let b = self.warp.value(t);
        let db = self.warp.rate(t);
        let mut smp = self.path.sample(b);
        smp.rate.iter_mut().for_each(|r| *r *= db);
        smp
    }
    fn is_circle(&self, i: usize) -> bool {
        self.path.is_circle(i)
    }
}

pub fn reparameterize<P: ShapePath, B: TimeWarp>(path: P, warp: B, horizon: f64) -> Reparameterized<P, B> {
    Reparameterized { path, warp, horizon }
}

/// Outcome of probing a field for linearity in the shape rate and for the growth bound.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractReport {
    pub probes: usize,
    pub linearity_residual: f64,
    /// Largest observed `|F(q,s) r| / (|s| |r|)`.
    pub bound_ratio: f64,
    pub passed: bool,
}

/// Random superposition probes: `F(a r1 + b r2) = a F(r1) + b F(r2)`.
///
/// `sampler` draws an admissible `(pose, shape)` pair; probes are seeded so reports are reproducible.
pub fn check_field_contract<F: SwimmerField + ?Sized>(
    field: &F,
    probes: usize,
    mut sampler: impl FnMut(&mut ChaCha8Rng) -> (Pose, Vec<f64>),
) -> Result<ContractReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5ca1_10b5);
    let m = field.shape_dim();
    let mut lin: f64 = 0.0;
    let mut ratio: f64 = 0.0;
    for _ in 0..probes {
        let (q, s) = sampler(&mut rng);
        let r1: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r2: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let combo: Vec<f64> = r1.iter().zip(&r2).map(|(x, y)| a * x + b * y).collect();
        let f1 = field.velocity(&q, &s, &r1)?;
        let f2 = field.velocity(&q, &s, &r2)?;
        let fc = field.velocity(&q, &s, &combo)?;
        let scale = 1.0 + (a * f1).norm() + (b * f2).norm();
        lin = lin.max((fc - a * f1 - b * f2).norm() / scale);
        let sn = field.shape_norm(&s);
        let rn = r1.iter().map(|x| x * x).sum::<f64>().sqrt();
        if sn > 0.0 && rn > 0.0 {
            ratio = ratio.max(f1.norm() / (sn * rn));
        }
    }
    Ok(ContractReport { probes, linearity_residual: lin, bound_ratio: ratio, passed: lin < 1e-8 })
}

/// Trapezoid estimate of `K * int_0^T |s| |s'| dt` along a path.
pub fn growth_bound<F: SwimmerField + ?Sized, P: ShapePath + ?Sized>(field: &F, path: &P, samples: usize) -> f64 {
    let n = samples.max(2);
    let dt = path.horizon() / n as f64;
    let g = |t: f64| {
        let smp = path.sample(t);
        let rn = smp.rate.iter().map(|x| x * x).sum::<f64>().sqrt();
        field.shape_norm(&smp.s) * rn
    };
    let mut acc = 0.5 * (g(0.0) + g(path.horizon()));
    for i in 1..n {
        acc += g(i as f64 * dt);
    }
    field.bound_k() * acc * dt
}

/// Worst-case chart distance between `q(beta(t))` and the integrated `q_beta(t)`.
pub fn reparameterization_gap(base: &Trajectory, warped: &Trajectory, warp: &dyn TimeWarp) -> f64 {
    warped
        .samples
        .iter()
        .map(|s| base.pose_at(warp.value(s.t)).distance(&s.pose))
        .fold(0.0, f64::max)
}
