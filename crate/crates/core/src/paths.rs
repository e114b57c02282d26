//! Shape functions used by the scenarios: named waveforms and sampled data.

use crate::engine::{ShapePath, ShapeSample};
use crate::error::{Result, SwimError};
use std::f64::consts::{PI, TAU};

/// `offset + amplitude * cos(frequency t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineStroke {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
    pub offset: f64,
    pub horizon: f64,
}

impl CosineStroke {
    pub fn new(amplitude: f64, frequency: f64, horizon: f64) -> Self {
        CosineStroke { amplitude, frequency, phase: 0.0, offset: 0.0, horizon }
    }

    pub fn period(&self) -> f64 {
        TAU / self.frequency
    }
}

impl ShapePath for CosineStroke {
    fn dim(&self) -> usize {
        1
    }
    fn horizon(&self) -> f64 {
        self.horizon
    }
    fn sample(&self, t: f64) -> ShapeSample {
        let arg = self.frequency * t + self.phase;
        ShapeSample {
            s: vec![self.offset + self.amplitude * arg.cos()],
            rate: vec![-self.amplitude * self.frequency * arg.sin()],
        }
    }
    fn accel(&self, t: f64) -> Vec<f64> {
        let arg = self.frequency * t + self.phase;
        vec![-self.amplitude * self.frequency * self.frequency * arg.cos()]
    }
}

/// `amplitude * exp(-decay t) * sin(frequency t)`: a damped, non-periodic stroke.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedStroke {
    pub amplitude: f64,
    pub decay: f64,
    pub frequency: f64,
    pub horizon: f64,
}

impl ShapePath for DampedStroke {
    fn dim(&self) -> usize {
        1
    }
    fn horizon(&self) -> f64 {
        self.horizon
    }
    fn sample(&self, t: f64) -> ShapeSample {
        let e = self.amplitude * (-self.decay * t).exp();
        let (s, c) = (self.frequency * t).sin_cos();
        ShapeSample { s: vec![e * s], rate: vec![e * (self.frequency * c - self.decay * s)] }
    }
}

/// Uniform winding on the circle: `s(t) = rate t mod 2 pi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindingStroke {
    pub rate: f64,
    pub horizon: f64,
}

impl ShapePath for WindingStroke {
    fn dim(&self) -> usize {
        1
    }
    fn horizon(&self) -> f64 {
        self.horizon
    }
    fn sample(&self, t: f64) -> ShapeSample {
        ShapeSample { s: vec![(self.rate * t).rem_euclid(TAU)], rate: vec![self.rate] }
    }
    fn is_circle(&self, _i: usize) -> bool {
        true
    }
    fn accel(&self, _t: f64) -> Vec<f64> {
        vec![0.0]
    }
}

/// Shape path given by closures for the value and the rate.
pub struct FnPath<S, D> {
    pub dim: usize,
    pub horizon: f64,
    pub value: S,
    pub rate: D,
}

impl<S, D> ShapePath for FnPath<S, D>
where
    S: Fn(f64) -> Vec<f64> + Send + Sync,
    D: Fn(f64) -> Vec<f64> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn horizon(&self) -> f64 {
        self.horizon
    }
    fn sample(&self, t: f64) -> ShapeSample {
        ShapeSample { s: (self.value)(t), rate: (self.rate)(t) }
    }
}

/// Scalar shape samples interpolated with cubic Hermite segments and
/// finite-difference slopes. Circle-valued data is unwrapped on load.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    pub t: Vec<f64>,
    pub s: Vec<f64>,
    slopes: Vec<f64>,
    pub circle: bool,
}

impl SampledPath {
    pub fn new(t: Vec<f64>, s: Vec<f64>, circle: bool) -> Result<Self> {
        if t.len() != s.len() || t.len() < 2 {
            return Err(SwimError::InvalidArgument("sampled path needs at least two (t, s) rows".into()));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SwimError::InvalidArgument("sample times must be strictly increasing".into()));
        }
        let s = if circle { crate::cover::lift_samples(&t, &s, true, s[0])?.values } else { s };
        let n = t.len();
        let slopes = (0..n)
            .map(|i| {
                let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
                (s[b] - s[a]) / (t[b] - t[a])
            })
            .collect();
        Ok(SampledPath { t, s, slopes, circle })
    }

    /// Parses `t,s` CSV; a non-numeric first line is treated as a header.
    pub fn from_csv(text: &str, circle: bool) -> Result<Self> {
        let mut ts = Vec::new();
        let mut ss = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (a, b) = (cols.next(), cols.next());
            match (a.and_then(|x| x.parse::<f64>().ok()), b.and_then(|x| x.parse::<f64>().ok())) {
                (Some(t), Some(s)) => {
                    ts.push(t);
                    ss.push(s);
                }
                _ if i == 0 => continue,
                _ => return Err(SwimError::InvalidArgument(format!("line {}: expected `t,s`", i + 1))),
            }
        }
        Self::new(ts, ss, circle)
    }
}

impl ShapePath for SampledPath {
    fn dim(&self) -> usize {
        1
    }
    fn horizon(&self) -> f64 {
        self.t[self.t.len() - 1] - self.t[0]
    }
    fn sample(&self, t: f64) -> ShapeSample {
        let tt = (t + self.t[0]).clamp(self.t[0], self.t[self.t.len() - 1]);
        let i = self.t.partition_point(|x| *x <= tt).clamp(1, self.t.len() - 1);
        let (t0, t1) = (self.t[i - 1], self.t[i]);
        let h = t1 - t0;
        let u = (tt - t0) / h;
        let (p0, p1, m0, m1) = (self.s[i - 1], self.s[i], self.slopes[i - 1] * h, self.slopes[i] * h);
        let val = (2.0 * u.powi(3) - 3.0 * u * u + 1.0) * p0
            + (u.powi(3) - 2.0 * u * u + u) * m0
            + (-2.0 * u.powi(3) + 3.0 * u * u) * p1
            + (u.powi(3) - u * u) * m1;
        let der = ((6.0 * u * u - 6.0 * u) * p0
            + (3.0 * u * u - 4.0 * u + 1.0) * m0
            + (-6.0 * u * u + 6.0 * u) * p1
            + (3.0 * u * u - 2.0 * u) * m1)
            / h;
        let val = if self.circle { val.rem_euclid(TAU) } else { val };
        ShapeSample { s: vec![val], rate: vec![der] }
    }
    fn is_circle(&self, _i: usize) -> bool {
        self.circle
    }
}

/// Formats an angle amplitude as `pi/k` when it is one.
pub fn format_pi_fraction(x: f64) -> String {
    for k in 1..=12 {
        if (x - PI / k as f64).abs() < 1e-12 {
            return if k == 1 { "pi".into() } else { format!("pi/{k}") };
        }
    }
    format!("{x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates_match_finite_differences() {
        let paths: Vec<Box<dyn ShapePath>> = vec![
            Box::new(CosineStroke { amplitude: 0.9, frequency: 1.3, phase: 0.2, offset: 0.1, horizon: 10.0 }),
            Box::new(DampedStroke { amplitude: 1.0, decay: 0.3, frequency: 2.0, horizon: 10.0 }),
        ];
        for p in &paths {
            for k in 1..20 {
                let t = 0.37 * k as f64;
                let h = 1e-6;
                let fd = (p.sample(t + h).s[0] - p.sample(t - h).s[0]) / (2.0 * h);
                assert!((fd - p.sample(t).rate[0]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn sampled_path_reproduces_smooth_data() {
        let t: Vec<f64> = (0..=400).map(|i| i as f64 * 0.01).collect();
        let s: Vec<f64> = t.iter().map(|x| x.sin()).collect();
        let p = SampledPath::new(t, s, false).unwrap();
        let smp = p.sample(1.234);
        assert!((smp.s[0] - 1.234f64.sin()).abs() < 1e-6);
        assert!((smp.rate[0] - 1.234f64.cos()).abs() < 1e-4);
    }

    #[test]
    fn csv_with_header() {
        let p = SampledPath::from_csv("t,s\n0,0\n1,1\n2,0\n", false).unwrap();
        assert_eq!(p.t.len(), 3);
        assert!(SampledPath::from_csv("t,s\n0,0\n1,x\n", false).is_err());
    }

    #[test]
    fn pi_fraction_labels() {
        assert_eq!(format_pi_fraction(PI / 3.0), "pi/3");
        assert_eq!(format_pi_fraction(0.5), "0.5");
    }
}
