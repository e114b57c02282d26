//! Panelised body boundaries and the two-ellipse scallop.
//!
//! Every closed loop is stored counter-clockwise; panel normals point into the
//! solid. Shape modes are rigid velocity fields attached to each loop (the
//! arms of the scallop are rigid), so both boundary data and area integrals
//! of the deformation velocity are exact for the polygonal body.

use crate::error::{Result, SwimError};
use crate::se2::{cross, perp, BodyTwist, Pose};
use nalgebra::Vector2;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::ops::Range;

/// Clearance kept between each arm and the hinge point, in units of the semi-major axis.
pub const HINGE_GAP_FACTOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub start: Vector2<f64>,
    pub end: Vector2<f64>,
    pub mid: Vector2<f64>,
    /// Unit normal pointing into the solid.
    pub normal: Vector2<f64>,
    pub length: f64,
    pub loop_index: usize,
}

impl Panel {
    fn new(start: Vector2<f64>, end: Vector2<f64>, loop_index: usize) -> Self {
        let d = end - start;
        let length = d.norm();
        let tangent = d / length;
        Panel { start, end, mid: 0.5 * (start + end), normal: perp(tangent), length, loop_index }
    }

    pub fn tangent(&self) -> Vector2<f64> {
        (self.end - self.start) / self.length
    }
}

/// Area moments of a polygon: area, first moment and polar second moment about the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaMoments {
    pub area: f64,
    pub first: Vector2<f64>,
    pub polar: f64,
}

impl AreaMoments {
    pub fn of_polygon(pts: &[Vector2<f64>]) -> Self {
        let n = pts.len();
        let (mut area, mut first, mut polar) = (0.0, Vector2::zeros(), 0.0);
        for i in 0..n {
            let p = pts[i];
            let q = pts[(i + 1) % n];
            let c = cross(p, q);
            area += 0.5 * c;
            first += c / 6.0 * (p + q);
            polar += c / 12.0 * (p.norm_squared() + p.dot(&q) + q.norm_squared());
        }
        AreaMoments { area, first, polar }
    }

    pub fn centroid(&self) -> Vector2<f64> {
        self.first / self.area
    }

    /// Linear momentum of the rigid field `t` over the region at unit density.
    pub fn momentum(&self, t: &BodyTwist) -> Vector2<f64> {
        t.omega * perp(self.first) + self.area * t.v
    }

    /// Angular momentum about the origin of the rigid field `t` at unit density.
    pub fn angular_momentum(&self, t: &BodyTwist) -> f64 {
        t.omega * self.polar + cross(self.first, t.v)
    }
}

/// Panelised closed curves plus per-loop rigid velocity fields for each shape mode.
#[derive(Debug, Clone)]
pub struct BodyBoundary {
    pub panels: Vec<Panel>,
    pub loops: Vec<Range<usize>>,
    pub polygons: Vec<Vec<Vector2<f64>>>,
    /// `mode_motions[k][l]`: velocity field of loop `l` per unit rate of shape coordinate `k`.
    pub mode_motions: Vec<Vec<BodyTwist>>,
    /// `mode_velocities[k][p]`: boundary velocity at the midpoint of panel `p` for mode `k`.
    pub mode_velocities: Vec<Vec<Vector2<f64>>>,
}

impl BodyBoundary {
    /// Builds a boundary from counter-clockwise polygons, with no shape modes.
    pub fn from_polygons(polygons: Vec<Vec<Vector2<f64>>>) -> Result<Self> {
        let mut panels = Vec::new();
        let mut loops = Vec::new();
        for (li, poly) in polygons.iter().enumerate() {
            if poly.len() < 3 {
                return Err(SwimError::InvalidGeometry(format!("loop {li} has fewer than 3 vertices")));
            }
            let m = AreaMoments::of_polygon(poly);
            if m.area <= 0.0 {
                return Err(SwimError::InvalidGeometry(format!(
                    "loop {li} has non-positive signed area {:.3e}; expected counter-clockwise order",
                    m.area
                )));
            }
            let first = panels.len();
            for i in 0..poly.len() {
                panels.push(Panel::new(poly[i], poly[(i + 1) % poly.len()], li));
            }
            loops.push(first..panels.len());
        }
        Ok(BodyBoundary { panels, loops, polygons, mode_motions: Vec::new(), mode_velocities: Vec::new() })
    }

    /// Attaches a shape mode given as one rigid field per loop.
    pub fn with_mode(mut self, motions: Vec<BodyTwist>) -> Result<Self> {
        if motions.len() != self.loops.len() {
            return Err(SwimError::InvalidArgument(format!(
                "mode has {} loop motions for {} loops",
                motions.len(),
                self.loops.len()
            )));
        }
        let vel = self.panels.iter().map(|p| motions[p.loop_index].point_velocity(p.mid)).collect();
        self.mode_motions.push(motions);
        self.mode_velocities.push(vel);
        Ok(self)
    }

    pub fn mode_count(&self) -> usize {
        self.mode_motions.len()
    }

    pub fn loop_moments(&self) -> Vec<AreaMoments> {
        self.polygons.iter().map(|p| AreaMoments::of_polygon(p)).collect()
    }

    /// Total area moments (all loops).
    pub fn moments(&self) -> AreaMoments {
        self.loop_moments().into_iter().fold(
            AreaMoments { area: 0.0, first: Vector2::zeros(), polar: 0.0 },
            |acc, m| AreaMoments { area: acc.area + m.area, first: acc.first + m.first, polar: acc.polar + m.polar },
        )
    }

    pub fn perimeter(&self) -> f64 {
        self.panels.iter().map(|p| p.length).sum()
    }

    /// Normal component of mode `k` at each panel midpoint.
    pub fn mode_data(&self, k: usize) -> Vec<f64> {
        self.panels.iter().zip(&self.mode_velocities[k]).map(|(p, w)| w.dot(&p.normal)).collect()
    }

    /// Net flux `sum(data * length)` of panel data over each loop.
    pub fn loop_fluxes(&self, data: &[f64]) -> Vec<f64> {
        self.loops
            .iter()
            .map(|r| r.clone().map(|i| data[i] * self.panels[i].length).sum())
            .collect()
    }

    /// Applies a rigid placement to the whole boundary, including mode fields.
    pub fn transformed(&self, q: &Pose) -> BodyBoundary {
        let rot = q.rotation();
        let polygons: Vec<Vec<Vector2<f64>>> =
            self.polygons.iter().map(|poly| poly.iter().map(|p| q.apply(*p)).collect()).collect();
        let panels = self
            .panels
            .iter()
            .map(|p| Panel {
                start: q.apply(p.start),
                end: q.apply(p.end),
                mid: q.apply(p.mid),
                normal: rot * p.normal,
                length: p.length,
                loop_index: p.loop_index,
            })
            .collect();
        let mode_motions = self
            .mode_motions
            .iter()
            .map(|m| {
                m.iter()
                    .map(|t| BodyTwist { omega: t.omega, v: rot * t.v - t.omega * perp(q.r) })
                    .collect()
            })
            .collect();
        let mode_velocities =
            self.mode_velocities.iter().map(|m| m.iter().map(|w| rot * w).collect()).collect();
        BodyBoundary { panels, loops: self.loops.clone(), polygons, mode_motions, mode_velocities }
    }

    /// Concatenates two boundaries. Modes of `self` are kept; `other` gets zero fields.
    pub fn merged_with(&self, other: &BodyBoundary) -> BodyBoundary {
        let offset = self.panels.len();
        let loop_offset = self.loops.len();
        let mut out = self.clone();
        out.panels.extend(other.panels.iter().map(|p| Panel { loop_index: p.loop_index + loop_offset, ..*p }));
        out.loops.extend(other.loops.iter().map(|r| r.start + offset..r.end + offset));
        out.polygons.extend(other.polygons.iter().cloned());
        for (motions, vels) in out.mode_motions.iter_mut().zip(out.mode_velocities.iter_mut()) {
            motions.extend(std::iter::repeat(BodyTwist::zero()).take(other.loops.len()));
            vels.extend(std::iter::repeat(Vector2::zeros()).take(other.panels.len()));
        }
        out
    }

    /// Smallest distance between any two distinct loops.
    pub fn min_loop_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.polygons.len() {
            for j in i + 1..self.polygons.len() {
                best = best.min(polygon_distance(&self.polygons[i], &self.polygons[j]));
            }
        }
        best
    }

    /// Mesh as CSV with header `x0,y0,x1,y1,nx,ny`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x0,y0,x1,y1,nx,ny\n");
        for p in &self.panels {
            let _ = writeln!(s, "{},{},{},{},{},{}", p.start.x, p.start.y, p.end.x, p.end.y, p.normal.x, p.normal.y);
        }
        s
    }
}

/// Per-panel normal velocity `(omega perp(x) + v) . n` of a rigid twist.
pub fn rigid_boundary_data(b: &BodyBoundary, t: &BodyTwist) -> Vec<f64> {
    b.panels.iter().map(|p| t.point_velocity(p.mid).dot(&p.normal)).collect()
}

/// Linear and angular momentum carried by one shape mode at unit rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropulsionResidual {
    pub linear: Vector2<f64>,
    pub angular: f64,
}

/// Deformation momenta of every shape mode (uniform density, exact polygon quadrature).
///
/// Both residuals vanish when the body frame satisfies the self-propulsion constraints.
pub fn check_self_propulsion(b: &BodyBoundary, density: f64) -> Vec<PropulsionResidual> {
    let moments = b.loop_moments();
    b.mode_motions
        .iter()
        .map(|mode| {
            let mut linear = Vector2::zeros();
            let mut angular = 0.0;
            for (m, t) in moments.iter().zip(mode) {
                linear += density * m.momentum(t);
                angular += density * m.angular_momentum(t);
            }
            PropulsionResidual { linear, angular }
        })
        .collect()
}

/// Counter-clockwise polygon inscribed in an axis-aligned ellipse.
pub fn ellipse_polygon(center: Vector2<f64>, a: f64, b: f64, angle: f64, n: usize) -> Vec<Vector2<f64>> {
    let (s, c) = angle.sin_cos();
    (0..n)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            let (x, y) = (a * t.cos(), b * t.sin());
            center + Vector2::new(c * x - s * y, s * x + c * y)
        })
        .collect()
}

/// Counter-clockwise rectangle with panels of near-uniform length.
pub fn rectangle_polygon(center: Vector2<f64>, width: f64, height: f64, panels: usize) -> Vec<Vector2<f64>> {
    let per = 2.0 * (width + height);
    let nw = ((panels as f64 * width / per).round() as usize).max(1);
    let nh = ((panels as f64 * height / per).round() as usize).max(1);
    let (hw, hh) = (0.5 * width, 0.5 * height);
    let corners = [
        Vector2::new(-hw, -hh),
        Vector2::new(hw, -hh),
        Vector2::new(hw, hh),
        Vector2::new(-hw, hh),
    ];
    let counts = [nw, nh, nw, nh];
    let mut pts = Vec::new();
    for side in 0..4 {
        let (p, q) = (corners[side], corners[(side + 1) % 4]);
        for k in 0..counts[side] {
            let t = k as f64 / counts[side] as f64;
            pts.push(center + p + t * (q - p));
        }
    }
    pts
}

fn segment_point_distance(p: Vector2<f64>, a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    let d = b - a;
    let t = ((p - a).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
    (p - (a + t * d)).norm()
}

fn segments_intersect(a: Vector2<f64>, b: Vector2<f64>, c: Vector2<f64>, d: Vector2<f64>) -> bool {
    let o1 = cross(b - a, c - a);
    let o2 = cross(b - a, d - a);
    let o3 = cross(d - c, a - c);
    let o4 = cross(d - c, b - c);
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

/// Distance from a point to a closed polygon's boundary.
pub fn point_polygon_distance(p: Vector2<f64>, poly: &[Vector2<f64>]) -> f64 {
    (0..poly.len())
        .map(|i| segment_point_distance(p, poly[i], poly[(i + 1) % poly.len()]))
        .fold(f64::INFINITY, f64::min)
}

/// Even-odd point-in-polygon test.
pub fn point_in_polygon(p: Vector2<f64>, poly: &[Vector2<f64>]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a.y > p.y) != (b.y > p.y) && p.x < a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y) {
            inside = !inside;
        }
    }
    inside
}

/// Boundary-to-boundary distance between two polygons; zero when they cross or nest.
pub fn polygon_distance(p: &[Vector2<f64>], q: &[Vector2<f64>]) -> f64 {
    let (np, nq) = (p.len(), q.len());
    let mut best = f64::INFINITY;
    for i in 0..np {
        let (a, b) = (p[i], p[(i + 1) % np]);
        for j in 0..nq {
            let (c, d) = (q[j], q[(j + 1) % nq]);
            if segments_intersect(a, b, c, d) {
                return 0.0;
            }
            best = best
                .min(segment_point_distance(a, c, d))
                .min(segment_point_distance(c, a, b));
        }
    }
    if point_in_polygon(p[0], q) || point_in_polygon(q[0], p) {
        return 0.0;
    }
    best
}

/// Two rigid elliptic arms joined by a hinge.
///
/// `alpha` is the full opening angle between the arm axes. The body frame has
/// its origin at the centre of mass with the symmetry axis along +x; the hinge
/// sits on the negative x axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScallopGeometry {
    pub semi_major: f64,
    pub semi_minor: f64,
    /// Distance from the hinge to each ellipse centre.
    pub hinge_offset: f64,
    /// Panels per arm.
    pub panel_count: usize,
    pub alpha: f64,
}

impl Default for ScallopGeometry {
    fn default() -> Self {
        ScallopGeometry { semi_major: 1.0, semi_minor: 0.15, hinge_offset: 1.5, panel_count: 64, alpha: PI / 2.0 }
    }
}

/// Placement of one arm of the scallop in the body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmPlacement {
    pub center: Vector2<f64>,
    /// Direction angle of the arm axis (pointing away from the hinge).
    pub angle: f64,
    /// Velocity field of the arm per unit opening rate.
    pub mode: BodyTwist,
}

impl ScallopGeometry {
    pub fn with_alpha(&self, alpha: f64) -> Self {
        ScallopGeometry { alpha, ..*self }
    }

    pub fn hinge_gap(&self) -> f64 {
        HINGE_GAP_FACTOR * self.semi_major
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = (self.semi_major, self.semi_minor);
        if !(a > b && b > 0.0) {
            return Err(SwimError::InvalidGeometry(format!("need a > b > 0, got a = {a}, b = {b}")));
        }
        if self.panel_count < 8 {
            return Err(SwimError::InvalidGeometry(format!("panel_count {} < 8", self.panel_count)));
        }
        if !(self.alpha > 0.0 && self.alpha < PI) {
            return Err(SwimError::InvalidGeometry(format!("opening {} outside (0, pi)", self.alpha)));
        }
        if self.hinge_offset < a + self.hinge_gap() {
            return Err(SwimError::InvalidGeometry(format!(
                "hinge offset {} must leave a gap of {:.1e} between arm tip and hinge",
                self.hinge_offset,
                self.hinge_gap()
            )));
        }
        Ok(())
    }

    fn arm_polygons(&self) -> (Vec<Vector2<f64>>, Vec<Vector2<f64>>) {
        let half = 0.5 * self.alpha;
        let u = Vector2::new(half.cos(), half.sin());
        let upper = ellipse_polygon(self.hinge_offset * u, self.semi_major, self.semi_minor, half, self.panel_count);
        // Lower arm is the exact mirror image; reversing keeps it counter-clockwise.
        let mut lower: Vec<Vector2<f64>> = upper.iter().map(|p| Vector2::new(p.x, -p.y)).collect();
        lower.reverse();
        (upper, lower)
    }

    /// Centre of mass of the hinge-frame body (hinge at the origin).
    fn hinge_frame_centroid(&self) -> Vector2<f64> {
        let (u, l) = self.arm_polygons();
        let (mu, ml) = (AreaMoments::of_polygon(&u), AreaMoments::of_polygon(&l));
        (mu.first + ml.first) / (mu.area + ml.area)
    }

    /// Hinge position in the centre-of-mass frame.
    pub fn hinge(&self) -> Vector2<f64> {
        -self.hinge_frame_centroid()
    }

    /// Raw opening mode: each arm turns about the hinge at rate +-1/2.
    fn raw_mode(&self, hinge: Vector2<f64>) -> [BodyTwist; 2] {
        let arm = |w: f64| BodyTwist { omega: w, v: -w * perp(hinge) };
        [arm(0.5), arm(-0.5)]
    }

    /// Arm placements in the centre-of-mass frame with the momentum-free opening mode.
    pub fn arms(&self) -> [ArmPlacement; 2] {
        let hinge = self.hinge();
        let (upper, lower) = self.arm_polygons();
        let polys = [
            upper.iter().map(|p| p + hinge).collect::<Vec<_>>(),
            lower.iter().map(|p| p + hinge).collect::<Vec<_>>(),
        ];
        let mode = project_momentum_free(&polys, &self.raw_mode(hinge));
        let half = 0.5 * self.alpha;
        [
            ArmPlacement {
                center: hinge + self.hinge_offset * Vector2::new(half.cos(), half.sin()),
                angle: half,
                mode: mode[0],
            },
            ArmPlacement {
                center: hinge + self.hinge_offset * Vector2::new(half.cos(), -half.sin()),
                angle: -half,
                mode: mode[1],
            },
        ]
    }
}

/// Removes the rigid motion carrying the same momenta as `raw`, so the
/// remaining per-loop fields have zero linear and angular momentum.
pub fn project_momentum_free(polys: &[Vec<Vector2<f64>>], raw: &[BodyTwist]) -> Vec<BodyTwist> {
    let moments: Vec<AreaMoments> = polys.iter().map(|p| AreaMoments::of_polygon(p)).collect();
    let total = moments.iter().fold(AreaMoments { area: 0.0, first: Vector2::zeros(), polar: 0.0 }, |a, m| {
        AreaMoments { area: a.area + m.area, first: a.first + m.first, polar: a.polar + m.polar }
    });
    let mut p = Vector2::zeros();
    let mut l = 0.0;
    for (m, t) in moments.iter().zip(raw) {
        p += m.momentum(t);
        l += m.angular_momentum(t);
    }
    // Solve for the rigid twist (w, v) of the whole body with momenta (l, p):
    //   area v + w perp(first) = p,  polar w + first x v = l.
    let (a, s) = (total.area, total.first);
    let m = nalgebra::Matrix3::new(total.polar, -s.y, s.x, -s.y, a, 0.0, s.x, 0.0, a);
    let rhs = nalgebra::Vector3::new(l, p.x, p.y);
    let sol = m.lu().solve(&rhs).unwrap_or_else(nalgebra::Vector3::zeros);
    let corr = BodyTwist::new(sol[0], sol[1], sol[2]);
    raw.iter()
        .map(|t| BodyTwist { omega: t.omega - corr.omega, v: t.v - corr.v })
        .collect()
}

/// Panelises the scallop at its current opening with the opening-rate mode attached.
pub fn build_scallop(geom: &ScallopGeometry) -> Result<BodyBoundary> {
    geom.validate()?;
    let hinge = geom.hinge();
    let (upper, lower) = geom.arm_polygons();
    let polys: Vec<Vec<Vector2<f64>>> =
        vec![upper.iter().map(|p| p + hinge).collect(), lower.iter().map(|p| p + hinge).collect()];
    let gap = polygon_distance(&polys[0], &polys[1]);
    if gap < geom.hinge_gap() {
        return Err(SwimError::ArmsOverlap { opening: geom.alpha, gap, min_gap: geom.hinge_gap() });
    }
    let mode = project_momentum_free(&polys, &geom.raw_mode(hinge));
    BodyBoundary::from_polygons(polys)?.with_mode(mode)
}

/// Circle of radius `a` centred at the origin (used by the analytic checks).
pub fn circle_boundary(a: f64, panels: usize) -> Result<BodyBoundary> {
    BodyBoundary::from_polygons(vec![ellipse_polygon(Vector2::zeros(), a, a, 0.0, panels)])
}
