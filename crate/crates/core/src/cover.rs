//! Lifting one-dimensional shape paths to the universal cover (the real line)
//! and the boundedness verdict that goes with it.
//!
//! A path on the circle is unwrapped sample by sample; a path on the line is
//! its own lift. The verdict is horizon-relative: it looks at whether the
//! image of the lift stopped growing over the trailing window.

use crate::engine::ShapePath;
use crate::error::{Result, SwimError};
use crate::se2::wrap_angle;
use std::f64::consts::{PI, TAU};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct LiftedPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub base_point: f64,
    pub circle: bool,
}

/// Projection from the cover back to the shape manifold.
pub fn project(x: f64, circle: bool) -> f64 {
    if circle {
        x.rem_euclid(TAU)
    } else {
        x
    }
}

/// Unwraps `values` (sampled at `times`) starting from `base_point`, which must lie over `values[0]`.
pub fn lift_samples(times: &[f64], values: &[f64], circle: bool, base_point: f64) -> Result<LiftedPath> {
    if values.is_empty() || times.len() != values.len() {
        return Err(SwimError::InvalidArgument("lift needs matching, non-empty time and value arrays".into()));
    }
    let off = if circle { wrap_angle(base_point - values[0]) } else { base_point - values[0] };
    if off.abs() > 1e-9 {
        return Err(SwimError::InvalidArgument(format!(
            "base point {base_point} does not lie over the initial shape {}",
            values[0]
        )));
    }
    let mut out = Vec::with_capacity(values.len());
    out.push(base_point);
    for i in 1..values.len() {
        let step = if circle {
            let d = wrap_angle(values[i] - values[i - 1]);
            if d.abs() >= PI - 1e-12 {
                return Err(SwimError::Undersampled { index: i, increment: d });
            }
            d
        } else {
            values[i] - values[i - 1]
        };
        out.push(out[i - 1] + step);
    }
    Ok(LiftedPath { times: times.to_vec(), values: out, base_point, circle })
}

/// Lift of raw samples with unit time spacing (used for data without timestamps).
pub fn lift(values: &[f64], circle: bool, base_point: f64) -> Result<LiftedPath> {
    let times: Vec<f64> = (0..values.len()).map(|i| i as f64).collect();
    lift_samples(&times, values, circle, base_point)
}

/// Samples a one-coordinate shape path on a uniform grid and lifts it from `s(0)`.
pub fn lift_path<P: ShapePath + ?Sized>(path: &P, samples: usize) -> Result<LiftedPath> {
    if path.dim() != 1 {
        return Err(SwimError::MultiDof(path.dim()));
    }
    let n = samples.max(1);
    let times: Vec<f64> = (0..=n).map(|i| path.horizon() * i as f64 / n as f64).collect();
    let values: Vec<f64> = times.iter().map(|&t| path.sample(t).s[0]).collect();
    lift_samples(&times, &values, path.is_circle(0), values[0])
}

impl LiftedPath {
    pub fn horizon(&self) -> f64 {
        self.times[self.times.len() - 1] - self.times[0]
    }

    /// Shifts the base point by `2 pi k` (circle) or any amount along the same fiber.
    pub fn rebased(&self, base_point: f64) -> Result<LiftedPath> {
        let proj: Vec<f64> = self.values.iter().map(|v| project(*v, self.circle)).collect();
        lift_samples(&self.times, &proj, self.circle, base_point)
    }

    /// Closed interval spanned by the lift up to sample `end` (inclusive).
    pub fn image_until(&self, end: usize) -> (f64, f64) {
        self.values[..=end]
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)))
    }

    pub fn image(&self) -> (f64, f64) {
        self.image_until(self.values.len() - 1)
    }
}

/// Total variation of the lift over the sampled horizon.
pub fn lift_length(lp: &LiftedPath) -> f64 {
    lp.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictKind {
    /// The lift image stayed inside a compact interval: every trajectory is bounded.
    FiniteLiftLength,
    /// The lift image keeps growing; the criterion is silent about locomotion.
    GrowingLift,
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerdictKind::FiniteLiftLength => write!(f, "FiniteLiftLength"),
            VerdictKind::GrowingLift => write!(f, "GrowingLift"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerdictOptions {
    /// Fraction of the horizon making up the trailing window.
    pub tail_fraction: f64,
    /// Image growth per unit time above which the lift counts as growing.
    pub tolerance: f64,
}

impl Default for VerdictOptions {
    fn default() -> Self {
        VerdictOptions { tail_fraction: 0.1, tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub lift_length: f64,
    pub interval: (f64, f64),
    pub tail_growth_rate: f64,
    pub horizon: f64,
    pub base_point: f64,
    pub circle: bool,
    /// Guaranteed trajectory diameter, when a field bound was supplied and the lift is finite.
    pub witness: Option<f64>,
}

pub fn verdict(lp: &LiftedPath, opts: &VerdictOptions) -> Verdict {
    let n = lp.values.len();
    let t0 = lp.times[0];
    let cut_t = t0 + (1.0 - opts.tail_fraction) * lp.horizon();
    let cut = lp.times.partition_point(|t| *t <= cut_t).clamp(1, n) - 1;
    let (lo_c, hi_c) = lp.image_until(cut);
    let (lo, hi) = lp.image();
    let window = lp.times[n - 1] - lp.times[cut];
    let growth = (hi - lo) - (hi_c - lo_c);
    let rate = if window > 0.0 { growth / window } else { 0.0 };
    // New extrema smaller than one sample step are resolution, not growth.
    let resolution = lp.values[cut..].windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    let growing = rate > opts.tolerance && growth > resolution;
    let kind = if growing { VerdictKind::GrowingLift } else { VerdictKind::FiniteLiftLength };
    Verdict {
        kind,
        lift_length: lift_length(lp),
        interval: (lo, hi),
        tail_growth_rate: rate,
        horizon: lp.horizon(),
        base_point: lp.base_point,
        circle: lp.circle,
        witness: None,
    }
}

impl Verdict {
    /// Attaches `K * int_lo^hi |p(x)| dx`, the diameter bound for any trajectory
    /// driven by a field with growth constant `k` and shape norm `norm`.
    pub fn with_witness(mut self, k: f64, norm: impl Fn(f64) -> f64) -> Self {
        if self.kind == VerdictKind::FiniteLiftLength {
            let (lo, hi) = self.interval;
            let n = 2000;
            let h = (hi - lo) / n as f64;
            let g = |x: f64| norm(project(x, self.circle));
            let mut acc = g(lo) + g(hi);
            for i in 1..n {
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(lo + i as f64 * h);
            }
            self.witness = Some(k * acc * h / 3.0);
        }
        self
    }

    /// Plain-text report, one `key: value` per line.
    pub fn report(&self) -> String {
        let mut s = format!(
            "verdict: {}\nlift_length: {}\nlift_interval: [{}, {}]\ntail_growth_rate: {}\nhorizon: {}\nbase_point: {}\ncircle: {}\n",
            self.kind,
            self.lift_length,
            self.interval.0,
            self.interval.1,
            self.tail_growth_rate,
            self.horizon,
            self.base_point,
            self.circle
        );
        match self.witness {
            Some(w) => s.push_str(&format!("witness_bound: {w}\n")),
            None => s.push_str("witness_bound: none\n"),
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{CosineStroke, DampedStroke, WindingStroke};

    fn grid(n: usize, t_end: f64) -> Vec<f64> {
        (0..=n).map(|i| t_end * i as f64 / n as f64).collect()
    }

    #[test]
    fn constant_path() {
        let t = grid(10, 1.0);
        let lp = lift_samples(&t, &vec![0.4; 11], true, 0.4).unwrap();
        assert!(lp.values.iter().all(|v| *v == 0.4));
        assert_eq!(lift_length(&lp), 0.0);
    }

    #[test]
    fn two_windings_recovered() {
        let t = grid(4000, 4.0 * PI);
        let s: Vec<f64> = t.iter().map(|x| x.rem_euclid(TAU)).collect();
        let lp = lift_samples(&t, &s, true, 0.0).unwrap();
        for (x, y) in t.iter().zip(&lp.values) {
            assert!((x - y).abs() < 1e-9);
        }
        assert!((lift_length(&lp) - 4.0 * PI).abs() < 1e-9);
        let shifted = lp.rebased(TAU).unwrap();
        for (a, b) in lp.values.iter().zip(&shifted.values) {
            assert!((b - a - TAU).abs() < 1e-9);
        }
        assert_eq!(verdict(&lp, &Default::default()).kind, verdict(&shifted, &Default::default()).kind);
    }

    #[test]
    fn projection_round_trip() {
        let t = grid(500, 10.0);
        let s: Vec<f64> = t.iter().map(|x| (3.0 * x.sin() + x).rem_euclid(TAU)).collect();
        let lp = lift_samples(&t, &s, true, s[0] + 4.0 * PI).unwrap();
        for (v, orig) in lp.values.iter().zip(&s) {
            assert!(wrap_angle(project(*v, true) - orig).abs() < 1e-12);
        }
    }

    #[test]
    fn undersampling_is_detected() {
        let err = lift_samples(&[0.0, 1.0], &[0.0, PI], true, 0.0).unwrap_err();
        assert!(matches!(err, SwimError::Undersampled { index: 1, .. }));
    }

    #[test]
    fn base_point_must_lie_over_start() {
        assert!(lift_samples(&[0.0], &[1.0], true, 1.5).is_err());
        assert!(lift_samples(&[0.0], &[1.0], true, 1.0 - TAU).is_ok());
    }

    #[test]
    fn verdicts() {
        let damped = DampedStroke { amplitude: 1.0, decay: 1.0, frequency: 1.0, horizon: 20.0 };
        let v = verdict(&lift_path(&damped, 20000).unwrap(), &Default::default());
        assert_eq!(v.kind, VerdictKind::FiniteLiftLength);

        let winding = WindingStroke { rate: 1.0, horizon: 40.0 };
        let v = verdict(&lift_path(&winding, 20000).unwrap(), &Default::default());
        assert_eq!(v.kind, VerdictKind::GrowingLift);
        assert!(v.witness.is_none());

        let stroke = CosineStroke::new(PI / 3.0, 1.0, 8.0 * PI);
        let v = verdict(&lift_path(&stroke, 20000).unwrap(), &Default::default()).with_witness(2.0, f64::abs);
        assert_eq!(v.kind, VerdictKind::FiniteLiftLength);
        assert!((v.interval.0 + PI / 3.0).abs() < 1e-9 && (v.interval.1 - PI / 3.0).abs() < 1e-9);
        // int_{-pi/3}^{pi/3} |x| dx = (pi/3)^2
        assert!((v.witness.unwrap() - 2.0 * (PI / 3.0).powi(2)).abs() < 1e-6);
        assert!(v.report().contains("verdict: FiniteLiftLength"));
    }

    #[test]
    fn coarse_periodic_samples_are_finite() {
        let t = grid(1000, 40.0);
        let s: Vec<f64> = t.iter().map(|x| x.sin()).collect();
        let v = verdict(&lift_samples(&t, &s, false, 0.0).unwrap(), &Default::default());
        assert!(v.tail_growth_rate > 0.0);
        assert_eq!(v.kind, VerdictKind::FiniteLiftLength);

        let slow: Vec<f64> = t.iter().map(|x| 0.05 * x + 0.1 * x.sin()).collect();
        let v = verdict(&lift_samples(&t, &slow, false, 0.0).unwrap(), &Default::default());
        assert_eq!(v.kind, VerdictKind::GrowingLift);
    }

    #[test]
    fn multi_dof_rejected() {
        let p = crate::paths::FnPath { dim: 2, horizon: 1.0, value: |_t| vec![0.0, 0.0], rate: |_t| vec![0.0, 0.0] };
        assert!(matches!(lift_path(&p, 10), Err(SwimError::MultiDof(2))));
    }
}
