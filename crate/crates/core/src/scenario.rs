//! Scenario files, the builtin library and the run pipeline.
//!
//! A scenario is a TOML document. Parsing walks the table by hand so that
//! every problem is reported, each with the key path it belongs to.

use crate::cover::{lift_samples, verdict, Verdict, VerdictKind, VerdictOptions};
use crate::engine::{check_field_contract, growth_bound, integrate, reparameterize, ShapePath, SinSquaredWarp, SwimmerField, Trajectory};
use crate::error::{Result, SwimError};
use crate::geometry::{rectangle_polygon, BodyBoundary, ScallopGeometry};
use crate::highre::{tabulated_highre, HighReFreeField, HighReModel, ObstacleModel, RichTrajectory};
use crate::lowre::{scallop_field, STROKE_LIMIT};
use crate::paths::{format_pi_fraction, CosineStroke, DampedStroke, SampledPath, WindingStroke};
use crate::se2::Pose;
use crate::synthetic::HolonomyField;
use nalgebra::Vector2;
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::path::{Path, PathBuf};
use toml::{Table, Value as Toml};

/// Environment variable that overrides every scenario's output directory.
pub const OUT_DIR_ENV: &str = "SWIMKIT_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rectangle {
    pub center: Vector2<f64>,
    pub width: f64,
    pub height: f64,
    pub panels: usize,
}

impl Rectangle {
    pub fn boundary(&self) -> Result<BodyBoundary> {
        BodyBoundary::from_polygons(vec![rectangle_polygon(self.center, self.width, self.height, self.panels)])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    LowRe { geometry: ScallopGeometry, rest: f64, mu: f64, drag_ratio: f64, wall: Option<Rectangle> },
    HighReFree { geometry: ScallopGeometry, rest: f64, rho0: f64, rho_f: f64, table_nodes: Option<usize> },
    HighReObstacle { geometry: ScallopGeometry, rest: f64, rho0: f64, rho_f: f64, obstacle: Rectangle },
    Synthetic(HolonomyField),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::LowRe { .. } => "lowre",
            Model::HighReFree { .. } => "highre-free",
            Model::HighReObstacle { .. } => "highre-obstacle",
            Model::Synthetic(_) => "synthetic",
        }
    }

    pub fn geometry(&self) -> Option<ScallopGeometry> {
        match self {
            Model::LowRe { geometry, .. } | Model::HighReFree { geometry, .. } | Model::HighReObstacle { geometry, .. } => {
                Some(*geometry)
            }
            Model::Synthetic(_) => None,
        }
    }

    pub fn rest(&self) -> f64 {
        match self {
            Model::LowRe { rest, .. } | Model::HighReFree { rest, .. } | Model::HighReObstacle { rest, .. } => *rest,
            Model::Synthetic(_) => 0.0,
        }
    }
}

/// Named shape-function templates.
#[derive(Debug, Clone, PartialEq)]
pub enum Waveform {
    Cosine { amplitude: f64, frequency: f64, phase: f64, offset: f64 },
    Damped { amplitude: f64, decay: f64, frequency: f64 },
    Winding { rate: f64 },
    /// `amplitude cos(frequency beta(t))` with `beta(t) = warp_scale sin^2(warp_frequency t)`.
    WarpedCosine { amplitude: f64, frequency: f64, warp_scale: f64, warp_frequency: f64 },
    Csv { path: PathBuf, circle: bool },
}

impl Waveform {
    /// Stroke period, for the per-stroke summary.
    pub fn period(&self) -> Option<f64> {
        match self {
            Waveform::Cosine { frequency, .. } => Some(TAU / frequency),
            Waveform::Winding { rate } => Some(TAU / rate.abs()),
            _ => None,
        }
    }

    pub fn is_circle(&self) -> bool {
        matches!(self, Waveform::Winding { .. } | Waveform::Csv { circle: true, .. })
    }

    pub fn build(&self, horizon: f64) -> Result<Box<dyn ShapePath>> {
        Ok(match self {
            Waveform::Cosine { amplitude, frequency, phase, offset } => Box::new(CosineStroke {
                amplitude: *amplitude,
                frequency: *frequency,
                phase: *phase,
                offset: *offset,
                horizon,
            }),
            Waveform::Damped { amplitude, decay, frequency } => {
                Box::new(DampedStroke { amplitude: *amplitude, decay: *decay, frequency: *frequency, horizon })
            }
            Waveform::Winding { rate } => Box::new(WindingStroke { rate: *rate, horizon }),
            Waveform::WarpedCosine { amplitude, frequency, warp_scale, warp_frequency } => Box::new(reparameterize(
                CosineStroke::new(*amplitude, *frequency, *warp_scale),
                SinSquaredWarp { scale: *warp_scale, freq: *warp_frequency },
                horizon,
            )),
            Waveform::Csv { path, circle } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| SwimError::InvalidArgument(format!("{}: {e}", path.display())))?;
                let p = SampledPath::from_csv(&text, *circle)?;
                if p.horizon() + 1e-9 < horizon {
                    return Err(SwimError::InvalidArgument(format!(
                        "{} covers {} time units, horizon is {horizon}",
                        path.display(),
                        p.horizon()
                    )));
                }
                Box::new(p)
            }
        })
    }

    /// Largest `|s|` the waveform can reach, when known without sampling.
    fn max_abs(&self) -> Option<f64> {
        match self {
            Waveform::Cosine { amplitude, offset, .. } => Some(amplitude.abs() + offset.abs()),
            Waveform::Damped { amplitude, .. } | Waveform::WarpedCosine { amplitude, .. } => Some(amplitude.abs()),
            _ => None,
        }
    }
}

fn signed(x: f64, first: bool) -> String {
    let s = format_pi_fraction(x.abs());
    match (x < 0.0, first) {
        (true, _) => format!("-{s}"),
        (false, true) => s,
        (false, false) => format!("+{s}"),
    }
}

impl fmt::Display for Waveform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arg = |freq: f64| if freq == 1.0 { "t".to_string() } else { format!("{}*t", format_pi_fraction(freq)) };
        match self {
            Waveform::Cosine { amplitude, frequency, phase, offset } => {
                if *offset != 0.0 {
                    write!(f, "{}", signed(*offset, true))?;
                }
                write!(f, "{}*cos({}", signed(*amplitude, *offset == 0.0), arg(*frequency))?;
                if *phase != 0.0 {
                    write!(f, "{}", signed(*phase, false))?;
                }
                write!(f, ")")
            }
            Waveform::Damped { amplitude, decay, frequency } => {
                write!(f, "{}*exp(-{}*t)*sin({})", signed(*amplitude, true), decay, arg(*frequency))
            }
            Waveform::Winding { rate } => write!(f, "{} mod 2pi", arg(*rate)),
            Waveform::WarpedCosine { amplitude, frequency, warp_scale, warp_frequency } => write!(
                f,
                "{}*cos({}*{}*sin^2({}))",
                signed(*amplitude, true),
                format_pi_fraction(*frequency),
                warp_scale,
                arg(*warp_frequency)
            ),
            Waveform::Csv { path, circle } => {
                write!(f, "csv:{}{}", path.display(), if *circle { " (circle)" } else { "" })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// File stem; defaults to the scenario name.
    pub stem: String,
    /// Dump per-frame panel strengths (obstacle runs only).
    pub strengths: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub model: Model,
    pub stroke: Waveform,
    pub step: f64,
    pub horizon: f64,
    pub initial: Pose,
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigErrorKind {
    UnknownKey,
    Missing,
    OutOfRange(String),
    WrongType(&'static str),
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// Dotted key path, e.g. `stroke.amplitude`.
    pub path: String,
    pub kind: ConfigErrorKind,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ConfigErrorKind::UnknownKey => write!(f, "{}: unknown key", self.path),
            ConfigErrorKind::Missing => write!(f, "{}: missing required field", self.path),
            ConfigErrorKind::OutOfRange(m) => write!(f, "{}: out of range: {m}", self.path),
            ConfigErrorKind::WrongType(t) => write!(f, "{}: expected {t}", self.path),
            ConfigErrorKind::Invalid(m) => write!(f, "{}: {m}", self.path),
        }
    }
}

/// Every problem found in one configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl ConfigErrors {
    pub fn mentions(&self, path: &str) -> bool {
        self.0.iter().any(|e| e.path == path)
    }
}

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

struct Walker {
    errors: Vec<ConfigError>,
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

/// Accepts numbers and the strings `pi`, `pi/k`, `k*pi`, `k*pi/m`.
fn parse_angle(s: &str) -> Option<f64> {
    let s = s.trim().replace(' ', "");
    let (neg, s) = match s.strip_prefix('-') {
        Some(r) => (true, r.to_string()),
        None => (false, s),
    };
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.to_string(), b.parse::<f64>().ok()?),
        None => (s.clone(), 1.0),
    };
    let coeff = if num == "pi" {
        1.0
    } else if let Some(c) = num.strip_suffix("*pi") {
        c.parse::<f64>().ok()?
    } else {
        return num.parse::<f64>().ok().map(|x| if neg { -x / den } else { x / den });
    };
    let v = coeff * PI / den;
    Some(if neg { -v } else { v })
}

impl Walker {
    fn push(&mut self, path: String, kind: ConfigErrorKind) {
        self.errors.push(ConfigError { path, kind });
    }

    fn allow(&mut self, t: &Table, prefix: &str, keys: &[&str]) {
        for k in t.keys() {
            if !keys.contains(&k.as_str()) {
                self.push(join(prefix, k), ConfigErrorKind::UnknownKey);
            }
        }
    }

    fn table<'a>(&mut self, t: &'a Table, key: &str, required: bool) -> Option<&'a Table> {
        match t.get(key) {
            Some(Toml::Table(x)) => Some(x),
            Some(_) => {
                self.push(key.into(), ConfigErrorKind::WrongType("table"));
                None
            }
            None => {
                if required {
                    self.push(key.into(), ConfigErrorKind::Missing);
                }
                None
            }
        }
    }

    fn num(&mut self, t: Option<&Table>, prefix: &str, key: &str, default: Option<f64>) -> Option<f64> {
        let path = join(prefix, key);
        match t.and_then(|t| t.get(key)) {
            Some(Toml::Float(x)) => Some(*x),
            Some(Toml::Integer(i)) => Some(*i as f64),
            Some(Toml::String(s)) => match parse_angle(s) {
                Some(v) => Some(v),
                None => {
                    self.push(path, ConfigErrorKind::WrongType("number or pi fraction"));
                    None
                }
            },
            Some(_) => {
                self.push(path, ConfigErrorKind::WrongType("number"));
                None
            }
            None => {
                if default.is_none() {
                    self.push(path, ConfigErrorKind::Missing);
                }
                default
            }
        }
    }

    fn positive(&mut self, t: Option<&Table>, prefix: &str, key: &str, default: Option<f64>) -> Option<f64> {
        let v = self.num(t, prefix, key, default)?;
        if !(v > 0.0) || !v.is_finite() {
            self.push(join(prefix, key), ConfigErrorKind::OutOfRange(format!("must be > 0, got {v}")));
            return None;
        }
        Some(v)
    }

    fn non_negative(&mut self, t: Option<&Table>, prefix: &str, key: &str, default: f64) -> Option<f64> {
        let v = self.num(t, prefix, key, Some(default))?;
        if !(v >= 0.0) || !v.is_finite() {
            self.push(join(prefix, key), ConfigErrorKind::OutOfRange(format!("must be >= 0, got {v}")));
            return None;
        }
        Some(v)
    }

    fn count(&mut self, t: Option<&Table>, prefix: &str, key: &str, default: Option<i64>, min: i64) -> Option<usize> {
        let path = join(prefix, key);
        let v = match t.and_then(|t| t.get(key)) {
            Some(Toml::Integer(i)) => *i,
            Some(_) => {
                self.push(path, ConfigErrorKind::WrongType("integer"));
                return None;
            }
            None => match default {
                Some(d) => d,
                None => {
                    self.push(path, ConfigErrorKind::Missing);
                    return None;
                }
            },
        };
        if v < min {
            self.push(path, ConfigErrorKind::OutOfRange(format!("must be >= {min}, got {v}")));
            return None;
        }
        Some(v as usize)
    }

    fn string<'a>(&mut self, t: Option<&'a Table>, prefix: &str, key: &str, required: bool) -> Option<&'a str> {
        match t.and_then(|t| t.get(key)) {
            Some(Toml::String(s)) => Some(s),
            Some(_) => {
                self.push(join(prefix, key), ConfigErrorKind::WrongType("string"));
                None
            }
            None => {
                if required {
                    self.push(join(prefix, key), ConfigErrorKind::Missing);
                }
                None
            }
        }
    }

    fn boolean(&mut self, t: Option<&Table>, prefix: &str, key: &str) -> bool {
        match t.and_then(|t| t.get(key)) {
            Some(Toml::Boolean(b)) => *b,
            Some(_) => {
                self.push(join(prefix, key), ConfigErrorKind::WrongType("boolean"));
                false
            }
            None => false,
        }
    }

    fn point(&mut self, t: Option<&Table>, prefix: &str, key: &str) -> Option<Vector2<f64>> {
        let path = join(prefix, key);
        match t.and_then(|t| t.get(key)) {
            Some(Toml::Array(a)) if a.len() == 2 => {
                let f = |v: &Toml| v.as_float().or_else(|| v.as_integer().map(|i| i as f64));
                match (f(&a[0]), f(&a[1])) {
                    (Some(x), Some(y)) => Some(Vector2::new(x, y)),
                    _ => {
                        self.push(path, ConfigErrorKind::WrongType("[x, y]"));
                        None
                    }
                }
            }
            Some(_) => {
                self.push(path, ConfigErrorKind::WrongType("[x, y]"));
                None
            }
            None => {
                self.push(path, ConfigErrorKind::Missing);
                None
            }
        }
    }

    fn rectangle(&mut self, t: Option<&Table>, prefix: &str) -> Option<Rectangle> {
        if let Some(t) = t {
            self.allow(t, prefix, &["center", "width", "height", "panels"]);
        }
        let center = self.point(t, prefix, "center");
        let width = self.positive(t, prefix, "width", None);
        let height = self.positive(t, prefix, "height", None);
        let panels = self.count(t, prefix, "panels", Some(48), 8);
        Some(Rectangle { center: center?, width: width?, height: height?, panels: panels? })
    }

    fn geometry(&mut self, t: Option<&Table>) -> Option<(ScallopGeometry, f64)> {
        let d = ScallopGeometry::default();
        if let Some(t) = t {
            self.allow(t, "geometry", &["semi_major", "semi_minor", "hinge_offset", "panel_count", "rest_opening"]);
        }
        let a = self.positive(t, "geometry", "semi_major", Some(d.semi_major));
        let b = self.positive(t, "geometry", "semi_minor", Some(d.semi_minor));
        let off = self.positive(t, "geometry", "hinge_offset", Some(d.hinge_offset));
        let n = self.count(t, "geometry", "panel_count", Some(d.panel_count as i64), 8);
        let rest = self.positive(t, "geometry", "rest_opening", Some(FRAC_PI_2));
        let g = ScallopGeometry { semi_major: a?, semi_minor: b?, hinge_offset: off?, panel_count: n?, alpha: rest? };
        let rest = rest?;
        if rest - STROKE_LIMIT <= 0.0 || rest + STROKE_LIMIT >= PI {
            self.push(
                "geometry.rest_opening".into(),
                ConfigErrorKind::OutOfRange(format!("rest opening +- pi/3 must stay inside (0, pi), got {rest}")),
            );
            return None;
        }
        for alpha in [rest - STROKE_LIMIT, rest, rest + STROKE_LIMIT] {
            if let Err(e) = g.with_alpha(alpha).validate() {
                self.push("geometry".into(), ConfigErrorKind::OutOfRange(e.to_string()));
                return None;
            }
        }
        Some((g, rest))
    }

    fn waveform(&mut self, t: Option<&Table>, base_dir: &Path) -> Option<Waveform> {
        const P: &str = "stroke";
        let kind = self.string(t, P, "waveform", true)?;
        let allowed: &[&str] = match kind {
            "cosine" => &["waveform", "amplitude", "frequency", "phase", "offset"],
            "damped" => &["waveform", "amplitude", "decay", "frequency"],
            "winding" => &["waveform", "rate"],
            "warped-cosine" => &["waveform", "amplitude", "frequency", "warp_scale", "warp_frequency"],
            "csv" => &["waveform", "path", "circle"],
            other => {
                self.push(
                    "stroke.waveform".into(),
                    ConfigErrorKind::Invalid(format!(
                        "unknown waveform `{other}` (cosine, damped, winding, warped-cosine, csv)"
                    )),
                );
                return None;
            }
        };
        if let Some(t) = t {
            self.allow(t, P, allowed);
        }
        Some(match kind {
            "cosine" => {
                let amplitude = self.num(t, P, "amplitude", None);
                let frequency = self.positive(t, P, "frequency", Some(1.0));
                let phase = self.num(t, P, "phase", Some(0.0));
                let offset = self.num(t, P, "offset", Some(0.0));
                Waveform::Cosine { amplitude: amplitude?, frequency: frequency?, phase: phase?, offset: offset? }
            }
            "damped" => {
                let amplitude = self.num(t, P, "amplitude", None);
                let decay = self.non_negative(t, P, "decay", 1.0);
                let frequency = self.positive(t, P, "frequency", Some(1.0));
                Waveform::Damped { amplitude: amplitude?, decay: decay?, frequency: frequency? }
            }
            "winding" => {
                let rate = self.num(t, P, "rate", Some(1.0))?;
                if rate == 0.0 || !rate.is_finite() {
                    self.push("stroke.rate".into(), ConfigErrorKind::OutOfRange("must be nonzero".into()));
                    return None;
                }
                Waveform::Winding { rate }
            }
            "warped-cosine" => {
                let amplitude = self.num(t, P, "amplitude", None);
                let frequency = self.positive(t, P, "frequency", Some(1.0));
                let warp_scale = self.positive(t, P, "warp_scale", None);
                let warp_frequency = self.positive(t, P, "warp_frequency", Some(1.0));
                Waveform::WarpedCosine {
                    amplitude: amplitude?,
                    frequency: frequency?,
                    warp_scale: warp_scale?,
                    warp_frequency: warp_frequency?,
                }
            }
            _ => {
                let rel = self.string(t, P, "path", true)?;
                let circle = self.boolean(t, P, "circle");
                let path = base_dir.join(rel);
                if !path.is_file() {
                    self.push("stroke.path".into(), ConfigErrorKind::Invalid(format!("file {} not found", path.display())));
                    return None;
                }
                Waveform::Csv { path, circle }
            }
        })
    }
}

/// Parses a scenario, resolving relative file references against the working directory.
pub fn parse_config(text: &str) -> std::result::Result<Scenario, ConfigErrors> {
    parse_config_in(text, Path::new("."))
}

/// Parses a scenario whose relative file references are resolved against `base_dir`.
pub fn parse_config_in(text: &str, base_dir: &Path) -> std::result::Result<Scenario, ConfigErrors> {
    let root: Table = text.parse::<Table>().map_err(|e| {
        ConfigErrors(vec![ConfigError { path: String::new(), kind: ConfigErrorKind::Invalid(e.message().to_string()) }])
    })?;
    let mut w = Walker { errors: Vec::new() };
    let model_kind = w.string(Some(&root), "", "model", true).map(str::to_string);
    let mut top = vec!["name", "model", "step", "horizon", "stroke", "initial", "output"];
    match model_kind.as_deref() {
        Some("lowre") => top.extend(["geometry", "fluid", "wall"]),
        Some("highre-free") => top.extend(["geometry", "fluid", "table_nodes"]),
        Some("highre-obstacle") => top.extend(["geometry", "fluid", "obstacle"]),
        Some("synthetic") => top.push("holonomy"),
        Some(other) => w.push(
            "model".into(),
            ConfigErrorKind::Invalid(format!("unknown model `{other}` (lowre, highre-free, highre-obstacle, synthetic)")),
        ),
        None => {}
    }
    if model_kind.is_some() {
        w.allow(&root, "", &top);
    }

    let name = w.string(Some(&root), "", "name", false).unwrap_or("scenario").to_string();
    let step = w.positive(Some(&root), "", "step", None);
    let horizon = w.positive(Some(&root), "", "horizon", None);
    let stroke_t = w.table(&root, "stroke", true);
    let stroke = stroke_t.and_then(|t| w.waveform(Some(t), base_dir));
    if let (Some(s), Some(h)) = (step, horizon) {
        if s > h {
            w.push("step".into(), ConfigErrorKind::OutOfRange(format!("step {s} exceeds horizon {h}")));
        }
    }

    let initial_t = w.table(&root, "initial", false);
    if let Some(t) = initial_t {
        w.allow(t, "initial", &["theta", "x", "y"]);
    }
    let theta = w.num(initial_t, "initial", "theta", Some(0.0));
    let x0 = w.num(initial_t, "initial", "x", Some(0.0));
    let y0 = w.num(initial_t, "initial", "y", Some(0.0));

    let out_t = w.table(&root, "output", false);
    if let Some(t) = out_t {
        w.allow(t, "output", &["dir", "stem", "strengths"]);
    }
    let dir = w.string(out_t, "output", "dir", false).map(|d| base_dir.join(d)).unwrap_or_else(|| PathBuf::from("out"));
    let stem = w.string(out_t, "output", "stem", false).unwrap_or(&name).to_string();
    let strengths = w.boolean(out_t, "output", "strengths");
    if strengths && model_kind.as_deref() != Some("highre-obstacle") {
        w.push("output.strengths".into(), ConfigErrorKind::Invalid("only available for highre-obstacle".into()));
    }

    let scallop = matches!(model_kind.as_deref(), Some("lowre" | "highre-free" | "highre-obstacle"));
    let geometry = if scallop {
        let t = w.table(&root, "geometry", false);
        w.geometry(t)
    } else {
        None
    };
    let fluid_t = if scallop { w.table(&root, "fluid", false) } else { None };

    let model = match model_kind.as_deref() {
        Some("lowre") => {
            if let Some(t) = fluid_t {
                w.allow(t, "fluid", &["mu", "drag_ratio"]);
            }
            let mu = w.positive(fluid_t, "fluid", "mu", Some(1.0));
            let drag_ratio = w.num(fluid_t, "fluid", "drag_ratio", Some(crate::lowre::DEFAULT_DRAG_RATIO));
            if let Some(r) = drag_ratio {
                if !(r >= 1.0) {
                    w.push("fluid.drag_ratio".into(), ConfigErrorKind::OutOfRange(format!("must be >= 1, got {r}")));
                }
            }
            let wall_t = w.table(&root, "wall", false);
            let wall = wall_t.and_then(|t| w.rectangle(Some(t), "wall"));
            match (geometry, mu, drag_ratio) {
                (Some((g, rest)), Some(mu), Some(dr)) if dr >= 1.0 => {
                    Some(Model::LowRe { geometry: g, rest, mu, drag_ratio: dr, wall })
                }
                _ => None,
            }
        }
        Some("highre-free") | Some("highre-obstacle") => {
            if let Some(t) = fluid_t {
                w.allow(t, "fluid", &["rho0", "rho_f"]);
            }
            let rho0 = w.non_negative(fluid_t, "fluid", "rho0", 1.0);
            let rho_f = w.non_negative(fluid_t, "fluid", "rho_f", 1.0);
            if rho0 == Some(0.0) && rho_f == Some(0.0) {
                w.push("fluid".into(), ConfigErrorKind::OutOfRange("rho0 and rho_f cannot both vanish".into()));
            }
            if model_kind.as_deref() == Some("highre-free") {
                let nodes = match root.get("table_nodes") {
                    Some(_) => w.count(Some(&root), "", "table_nodes", None, 4),
                    None => None,
                };
                match (geometry, rho0, rho_f) {
                    (Some((g, rest)), Some(r0), Some(rf)) => {
                        Some(Model::HighReFree { geometry: g, rest, rho0: r0, rho_f: rf, table_nodes: nodes })
                    }
                    _ => None,
                }
            } else {
                let obs_t = w.table(&root, "obstacle", true);
                let obstacle = obs_t.and_then(|t| w.rectangle(Some(t), "obstacle"));
                match (geometry, rho0, rho_f, obstacle) {
                    (Some((g, rest)), Some(r0), Some(rf), Some(o)) => {
                        Some(Model::HighReObstacle { geometry: g, rest, rho0: r0, rho_f: rf, obstacle: o })
                    }
                    _ => None,
                }
            }
        }
        Some("synthetic") => {
            let t = w.table(&root, "holonomy", false);
            if let Some(t) = t {
                w.allow(t, "holonomy", &["w", "c", "a", "b"]);
            }
            let f = (
                w.num(t, "holonomy", "w", Some(0.0)),
                w.num(t, "holonomy", "c", Some(0.5)),
                w.num(t, "holonomy", "a", Some(0.3)),
                w.num(t, "holonomy", "b", Some(0.2)),
            );
            match f {
                (Some(w), Some(c), Some(a), Some(b)) => Some(Model::Synthetic(HolonomyField { w, c, a, b })),
                _ => None,
            }
        }
        _ => None,
    };

    if scallop {
        match &stroke {
            Some(Waveform::Winding { .. }) => w.push(
                "stroke.waveform".into(),
                ConfigErrorKind::Invalid("winding strokes need the synthetic model".into()),
            ),
            Some(wf) => {
                if let Some(m) = wf.max_abs() {
                    if m > STROKE_LIMIT + 1e-12 {
                        w.push(
                            "stroke.amplitude".into(),
                            ConfigErrorKind::OutOfRange(format!("stroke reaches {m}, limit is pi/3")),
                        );
                    }
                }
            }
            None => {}
        }
    }

    if !w.errors.is_empty() {
        return Err(ConfigErrors(w.errors));
    }
    Ok(Scenario {
        name,
        model: model.expect("model built when no errors"),
        stroke: stroke.expect("stroke built when no errors"),
        step: step.unwrap(),
        horizon: horizon.unwrap(),
        initial: Pose::new(theta.unwrap(), x0.unwrap(), y0.unwrap()),
        output: OutputSpec { dir, stem, strengths },
    })
}

/// Reads and parses a scenario file.
pub fn load_config(path: &Path) -> std::result::Result<Scenario, ConfigErrors> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        ConfigErrors(vec![ConfigError { path: String::new(), kind: ConfigErrorKind::Invalid(format!("{}: {e}", path.display())) }])
    })?;
    parse_config_in(&text, path.parent().unwrap_or(Path::new(".")))
}

const BUILTINS: &[(&str, &str)] = &[
    (
        "scallop_free_lowre",
        r#"name = "scallop_free_lowre"
model = "lowre"
step = 1e-3
horizon = 6.283185307179586

[stroke]
waveform = "cosine"
amplitude = "pi/3"
"#,
    ),
    (
        "scallop_free_highre",
        r#"name = "scallop_free_highre"
model = "highre-free"
step = 1e-2
horizon = 6.283185307179586

[geometry]
panel_count = 64

[stroke]
waveform = "cosine"
amplitude = "pi/3"
"#,
    ),
    (
        "scallop_obstacle",
        r#"name = "scallop_obstacle"
model = "highre-obstacle"
step = 0.04
horizon = 50.26548245743669

[geometry]
panel_count = 32

[obstacle]
center = [-3.3, 1.2]
width = 1.0
height = 4.0
panels = 48

[initial]
theta = "pi/2"

[stroke]
waveform = "cosine"
amplitude = "pi/3"
"#,
    ),
    (
        "damped_stroke",
        r#"name = "damped_stroke"
model = "lowre"
step = 1e-2
horizon = 40.0

[stroke]
waveform = "damped"
amplitude = 1.0
decay = 0.2
frequency = 2.0
"#,
    ),
    (
        "winding_stroke",
        r#"name = "winding_stroke"
model = "synthetic"
step = 1e-3
horizon = 62.83185307179586

[holonomy]
w = 0.4
c = 0.5
a = 0.3
b = 0.2

[stroke]
waveform = "winding"
rate = 1.0
"#,
    ),
    (
        "reparam_demo",
        r#"name = "reparam_demo"
model = "lowre"
step = 1e-3
horizon = 12.0

[stroke]
waveform = "warped-cosine"
amplitude = "pi/3"
frequency = 1.0
warp_scale = 4.0
warp_frequency = 0.7
"#,
    ),
];

pub fn builtin_names() -> Vec<&'static str> {
    BUILTINS.iter().map(|(n, _)| *n).collect()
}

/// Source text of a builtin scenario.
pub fn builtin_source(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn builtin(name: &str) -> Option<Scenario> {
    builtin_source(name).map(|s| parse_config(s).expect("builtin scenarios parse"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    CollisionStop,
}

impl RunStatus {
    /// Process exit code: 0 on completion, 3 on a collision stop.
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Completed => 0,
            RunStatus::CollisionStop => 3,
        }
    }
}

/// Everything a run produces before it is written to disk.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub status: RunStatus,
    pub trajectory_csv: String,
    pub verdict: Option<Verdict>,
    pub summary: Value,
    /// Per-frame panel strengths, when requested.
    pub strengths_csv: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub summary: Value,
    pub files: Vec<PathBuf>,
}

fn pose_json(p: &Pose) -> Value {
    json!([p.theta, p.r.x, p.r.y])
}

fn per_stroke(poses: &dyn Fn(f64) -> Pose, end: f64, period: Option<f64>) -> Vec<Value> {
    let Some(period) = period else { return Vec::new() };
    let n = ((end + 1e-9) / period).floor() as usize;
    (0..n)
        .map(|k| {
            let a = poses(k as f64 * period);
            let b = poses((k + 1) as f64 * period);
            json!([b.theta - a.theta, b.r.x - a.r.x, b.r.y - a.r.y])
        })
        .collect()
}

fn shape_verdict(times: &[f64], s: &[f64], circle: bool) -> Result<Verdict> {
    let lp = lift_samples(times, s, circle, s[0])?;
    Ok(verdict(&lp, &VerdictOptions::default()))
}

fn first_order_summary(
    sc: &Scenario,
    field: &dyn SwimmerField,
    path: &dyn ShapePath,
    tr: &Trajectory,
) -> Result<(Verdict, Value)> {
    let times: Vec<f64> = tr.samples.iter().map(|s| s.t).collect();
    let shapes: Vec<f64> = tr.samples.iter().map(|s| s.s[0]).collect();
    let k = field.bound_k();
    let v = shape_verdict(&times, &shapes, sc.stroke.is_circle())?.with_witness(k, |x| field.shape_norm(&[x]));
    let contract = check_field_contract(field, 32, |rng| {
        let q = Pose::new(rng.gen_range(-PI..PI), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let t = rng.gen_range(0.0..path.horizon());
        (q, path.sample(t).s)
    });
    let contract = match contract {
        Ok(c) => json!({
            "probes": c.probes,
            "linearity_residual": c.linearity_residual,
            "bound_ratio": c.bound_ratio,
            "passed": c.passed,
        }),
        Err(SwimError::Proximity { .. }) => Value::Null,
        Err(e) => return Err(e),
    };
    let d = tr.net_displacement();
    let summary = json!({
        "name": sc.name,
        "model": sc.model.kind(),
        "stroke": sc.stroke.to_string(),
        "status": "completed",
        "step": tr.step,
        "steps": tr.samples.len() - 1,
        "horizon": sc.horizon,
        "initial_pose": pose_json(&sc.initial),
        "final_pose": pose_json(&tr.final_pose()),
        "net_displacement": [d.x, d.y, d.z],
        "net_displacement_norm": d.norm(),
        "per_stroke_displacement": per_stroke(&|t| tr.pose_at(t), sc.horizon, sc.stroke.period()),
        "diameter": tr.diameter(),
        "bound_k": if k.is_finite() { json!(k) } else { Value::Null },
        "growth_bound": if k.is_finite() { json!(growth_bound(field, path, 4000)) } else { Value::Null },
        "verdict": verdict_json(&v),
        "contract": contract,
    });
    Ok((v, summary))
}

fn verdict_json(v: &Verdict) -> Value {
    json!({
        "kind": v.kind.to_string(),
        "lift_length": v.lift_length,
        "interval": [v.interval.0, v.interval.1],
        "tail_growth_rate": v.tail_growth_rate,
        "witness_bound": v.witness,
    })
}

fn rich_summary(sc: &Scenario, tr: &RichTrajectory) -> Result<(Verdict, Value)> {
    let times: Vec<f64> = tr.samples.iter().map(|s| s.t).collect();
    let shapes: Vec<f64> = tr.samples.iter().map(|s| s.s).collect();
    let v = shape_verdict(&times, &shapes, false)?;
    let first = tr.samples[0].pose;
    let last = tr.samples[tr.samples.len() - 1];
    let pose_at = |t: f64| {
        let i = tr.samples.partition_point(|s| s.t < t - 1e-9).min(tr.samples.len() - 1);
        tr.samples[i].pose
    };
    let end = last.t;
    let period = sc.stroke.period();
    let strokes = per_stroke(&pose_at, end, period);
    let speeds: Vec<f64> = match period {
        Some(p) => {
            let n = ((end + 1e-9) / p).floor() as usize;
            (0..n)
                .map(|k| {
                    let win: Vec<f64> = tr
                        .samples
                        .iter()
                        .filter(|s| s.t >= k as f64 * p - 1e-9 && s.t <= (k + 1) as f64 * p + 1e-9)
                        .map(|s| s.velocity.y.hypot(s.velocity.z))
                        .collect();
                    win.iter().sum::<f64>() / win.len() as f64
                })
                .collect()
        }
        None => Vec::new(),
    };
    let d = last.pose.to_vector() - first.to_vector();
    let summary = json!({
        "name": sc.name,
        "model": sc.model.kind(),
        "stroke": sc.stroke.to_string(),
        "status": if tr.collided { "collision-stop" } else { "completed" },
        "step": tr.step,
        "steps": tr.samples.len() - 1,
        "horizon": sc.horizon,
        "end_time": end,
        "initial_pose": pose_json(&first),
        "final_pose": pose_json(&last.pose),
        "net_displacement": [d.x, d.y, d.z],
        "net_displacement_norm": d.norm(),
        "per_stroke_displacement": strokes,
        "stroke_mean_speed": speeds,
        "verdict": verdict_json(&v),
    });
    Ok((v, summary))
}

/// Builds the first-order field of a scenario, if it has one.
pub fn first_order_field(model: &Model) -> Result<Option<Box<dyn SwimmerField>>> {
    Ok(match model {
        Model::LowRe { geometry, rest, mu, drag_ratio, wall } => {
            let f = scallop_field(geometry, *rest, *mu, *drag_ratio)?;
            let f = match wall {
                Some(r) => f.with_wall(r.boundary()?, 0.05 * geometry.semi_minor)?,
                None => f,
            };
            Some(Box::new(f))
        }
        Model::HighReFree { geometry, rest, rho0, rho_f, table_nodes } => {
            let m = HighReModel { geom: *geometry, rest: *rest, rho0: *rho0, rho_f: *rho_f };
            match table_nodes {
                Some(n) => Some(Box::new(tabulated_highre(m, *n)?)),
                None => Some(Box::new(HighReFreeField::new(m)?)),
            }
        }
        Model::Synthetic(f) => Some(Box::new(*f)),
        Model::HighReObstacle { .. } => None,
    })
}

/// Runs a scenario in memory.
pub fn simulate(sc: &Scenario) -> Result<Simulation> {
    let path = sc.stroke.build(sc.horizon)?;
    if let Model::HighReObstacle { geometry, rest, rho0, rho_f, obstacle } = &sc.model {
        let model = HighReModel { geom: *geometry, rest: *rest, rho0: *rho0, rho_f: *rho_f };
        let om = ObstacleModel::new(model, Some(obstacle.boundary()?));
        let shape = |t: f64| {
            let smp = path.sample(t);
            (smp.s[0], smp.rate[0], path.accel(t)[0])
        };
        let tr = om.integrate(&shape, sc.initial, sc.horizon, sc.step)?;
        let (v, summary) = rich_summary(sc, &tr)?;
        let strengths_csv = if sc.output.strengths {
            let mut out = String::new();
            for (i, s) in tr.samples.iter().enumerate() {
                let block = om.strengths_csv(s.s, &s.pose)?;
                let mut lines = block.lines();
                let header = lines.next().unwrap_or_default();
                if i == 0 {
                    out.push_str(&format!("frame,t,{header}\n"));
                }
                for l in lines {
                    out.push_str(&format!("{i},{},{l}\n", s.t));
                }
            }
            Some(out)
        } else {
            None
        };
        return Ok(Simulation {
            status: if tr.collided { RunStatus::CollisionStop } else { RunStatus::Completed },
            trajectory_csv: tr.to_csv(),
            verdict: Some(v),
            summary,
            strengths_csv,
        });
    }
    let field = first_order_field(&sc.model)?.expect("first-order model");
    let tr = integrate(field.as_ref(), path.as_ref(), sc.initial, sc.step)?;
    let (v, summary) = first_order_summary(sc, field.as_ref(), path.as_ref(), &tr)?;
    Ok(Simulation { status: RunStatus::Completed, trajectory_csv: tr.to_csv(), verdict: Some(v), summary, strengths_csv: None })
}

/// Output directory after applying the environment override.
pub fn output_dir(sc: &Scenario) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => sc.output.dir.clone(),
    }
}

/// Runs a scenario and writes `<stem>.csv`, `<stem>.verdict.txt` and `<stem>.summary.json`.
pub fn run(sc: &Scenario) -> Result<RunOutcome> {
    let sim = simulate(sc)?;
    let dir = output_dir(sc);
    let io = |e: std::io::Error| SwimError::InvalidArgument(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(&dir).map_err(io)?;
    let stem = &sc.output.stem;
    let mut files = Vec::new();
    let mut write = |name: String, body: &str| -> Result<()> {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| SwimError::InvalidArgument(format!("{}: {e}", p.display())))?;
        files.push(p);
        Ok(())
    };
    write(format!("{stem}.csv"), &sim.trajectory_csv)?;
    if let Some(v) = &sim.verdict {
        write(format!("{stem}.verdict.txt"), &v.report())?;
    }
    let mut summary = serde_json::to_string_pretty(&sim.summary).expect("json values serialise");
    summary.push('\n');
    write(format!("{stem}.summary.json"), &summary)?;
    if let Some(s) = &sim.strengths_csv {
        write(format!("{stem}.strengths.csv"), s)?;
    }
    Ok(RunOutcome { status: sim.status, summary: sim.summary, files })
}

/// Runs independent scenarios concurrently; results keep the input order.
pub fn run_batch(scenarios: &[Scenario]) -> Vec<Result<RunOutcome>> {
    scenarios.par_iter().map(run).collect()
}

/// Whether the verdict of a simulation concluded boundedness.
pub fn is_bounded(sim: &Simulation) -> bool {
    sim.verdict.as_ref().is_some_and(|v| v.kind == VerdictKind::FiniteLiftLength)
}
