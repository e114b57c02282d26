//! Low-Reynolds swimmers via resistive-force theory.
//!
//! Each slender link contributes the local drag density
//! `mu (c_t t t^T + c_n n n^T)` against the rigid and shape-mode velocity
//! fields. The assembled resistance matrix is symmetric positive definite and
//! both it and the coupling scale linearly with the viscosity, so the
//! resulting connection `-M^-1 N` does not depend on it.

use crate::engine::SwimmerField;
use crate::error::{Result, SwimError};
use crate::geometry::{point_polygon_distance, BodyBoundary, ScallopGeometry};
use crate::se2::{perp, world_map, BodyTwist, Pose};
use nalgebra::{DMatrix, Matrix2, Matrix3, SymmetricEigen, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;

/// Default ratio `c_n / c_t` for slender filaments.
pub const DEFAULT_DRAG_RATIO: f64 = 2.0;
/// Wall-proximity gain in the obstacle correction.
pub const WALL_GAIN: f64 = 0.5;
/// Range of the wall correction, in link lengths; beyond it the drag is the free-space drag.
pub const WALL_RANGE: f64 = 10.0;

/// Link placement in the body frame and its derivatives with respect to the shape.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkPlacement {
    pub start: Vector2<f64>,
    pub angle: f64,
    pub d_start: Vec<Vector2<f64>>,
    pub d_angle: Vec<f64>,
}

impl LinkPlacement {
    pub fn tangent(&self) -> Vector2<f64> {
        Vector2::new(self.angle.cos(), self.angle.sin())
    }
}

pub type Attachment = Arc<dyn Fn(&[f64]) -> Result<LinkPlacement> + Send + Sync>;

#[derive(Clone)]
pub struct LinkSpec {
    pub length: f64,
    pub c_t: f64,
    pub c_n: f64,
    pub attachment: Attachment,
}

impl std::fmt::Debug for LinkSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinkSpec").field("length", &self.length).field("c_t", &self.c_t).field("c_n", &self.c_n).finish()
    }
}

impl LinkSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.c_t > 0.0 && self.c_t <= self.c_n) {
            return Err(SwimError::InvalidGeometry(format!(
                "link needs L > 0 and 0 < c_t <= c_n, got L = {}, c_t = {}, c_n = {}",
                self.length, self.c_t, self.c_n
            )));
        }
        Ok(())
    }
}

/// Resistance matrix and shape coupling, `M q* + N s' = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrandMatrices {
    pub mr: Matrix3<f64>,
    pub n: DMatrix<f64>,
}

impl GrandMatrices {
    pub fn zeros(m: usize) -> Self {
        GrandMatrices { mr: Matrix3::zeros(), n: DMatrix::zeros(3, m) }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.mr).eigenvalues.min()
    }

    pub fn asymmetry(&self) -> f64 {
        (self.mr - self.mr.transpose()).norm()
    }

    /// Body twist `-M^-1 N rate`.
    pub fn connection(&self, rate: &[f64]) -> Result<BodyTwist> {
        let f = &self.n * DMatrix::from_column_slice(rate.len(), 1, rate);
        let rhs = Vector3::new(f[0], f[1], f[2]);
        let chol = self.mr.cholesky().ok_or(SwimError::SingularAssembly {
            min_eig: self.min_eigenvalue(),
            threshold: 0.0,
        })?;
        Ok(BodyTwist::from_vector(&(-chol.solve(&rhs))))
    }

    /// Errors when the smallest eigenvalue falls below `1e-12 trace`.
    pub fn check_definite(&self) -> Result<()> {
        let threshold = 1e-12 * self.mr.trace();
        let min_eig = self.min_eigenvalue();
        if min_eig < threshold {
            return Err(SwimError::SingularAssembly { min_eig, threshold });
        }
        Ok(())
    }
}

/// Affine velocity field along a link, `c0 + u c1` for arclength `u`.
#[derive(Debug, Clone, Copy)]
struct Affine {
    c0: Vector2<f64>,
    c1: Vector2<f64>,
}

impl Affine {
    fn at(&self, u: f64) -> Vector2<f64> {
        self.c0 + u * self.c1
    }
}

fn link_fields(p: &LinkPlacement) -> (Vec<Affine>, Vec<Affine>) {
    let t = p.tangent();
    let rigid = vec![
        Affine { c0: perp(p.start), c1: perp(t) },
        Affine { c0: Vector2::new(1.0, 0.0), c1: Vector2::zeros() },
        Affine { c0: Vector2::new(0.0, 1.0), c1: Vector2::zeros() },
    ];
    let modes = p
        .d_start
        .iter()
        .zip(&p.d_angle)
        .map(|(ds, da)| Affine { c0: *ds, c1: *da * perp(t) })
        .collect();
    (rigid, modes)
}

fn drag_tensor(t: Vector2<f64>, c_t: f64, c_n: f64) -> Matrix2<f64> {
    let n = perp(t);
    c_t * t * t.transpose() + c_n * n * n.transpose()
}

/// `int_0^L a(u)^T K b(u) du` for affine fields, in closed form.
fn pair(a: &Affine, k: &Matrix2<f64>, b: &Affine, l: f64) -> f64 {
    let kb0 = k * b.c0;
    let kb1 = k * b.c1;
    a.c0.dot(&kb0) * l + (a.c0.dot(&kb1) + a.c1.dot(&kb0)) * l * l / 2.0 + a.c1.dot(&kb1) * l.powi(3) / 3.0
}

/// Closed-form contribution of one link to `(M, N)`.
pub fn link_resistance(link: &LinkSpec, placement: &LinkPlacement, mu: f64) -> GrandMatrices {
    let (rigid, modes) = link_fields(placement);
    let k = mu * drag_tensor(placement.tangent(), link.c_t, link.c_n);
    let mut g = GrandMatrices::zeros(modes.len());
    for i in 0..3 {
        for j in 0..3 {
            g.mr[(i, j)] = pair(&rigid[i], &k, &rigid[j], link.length);
        }
        for (j, m) in modes.iter().enumerate() {
            g.n[(i, j)] = pair(&rigid[i], &k, m, link.length);
        }
    }
    g
}

const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

/// Smooth cutoff, 1 at zero and flat to all orders at 1.
fn cutoff(x: f64) -> f64 {
    if x >= 1.0 {
        0.0
    } else {
        (-x * x / (1.0 - x * x)).exp()
    }
}

/// Normal-drag amplification `1 + kappa L / gap` faded out beyond [`WALL_RANGE`] link lengths.
pub fn wall_factor(gap: f64, length: f64) -> f64 {
    1.0 + WALL_GAIN * length / gap * cutoff(gap / (WALL_RANGE * length))
}

/// Link contribution with the wall correction, by composite Gauss quadrature.
fn link_resistance_near_wall(
    link: &LinkSpec,
    placement: &LinkPlacement,
    mu: f64,
    q: &Pose,
    wall: &[Vec<Vector2<f64>>],
) -> Result<(GrandMatrices, f64)> {
    let (rigid, modes) = link_fields(placement);
    let t = placement.tangent();
    let segments = 16;
    let h = link.length / segments as f64;
    let mut g = GrandMatrices::zeros(modes.len());
    let mut min_gap = f64::INFINITY;
    for seg in 0..segments {
        for &(x, w) in &GAUSS4 {
            let u = (seg as f64 + 0.5 + 0.5 * x) * h;
            let world = q.apply(placement.start + u * t);
            let gap = wall.iter().map(|p| point_polygon_distance(world, p)).fold(f64::INFINITY, f64::min);
            min_gap = min_gap.min(gap);
            let k = mu * drag_tensor(t, link.c_t, link.c_n * wall_factor(gap, link.length));
            let wt = 0.5 * w * h;
            for i in 0..3 {
                let ki = k * rigid[i].at(u);
                for j in 0..3 {
                    g.mr[(i, j)] += wt * rigid[j].at(u).dot(&ki);
                }
                for (j, m) in modes.iter().enumerate() {
                    g.n[(i, j)] += wt * m.at(u).dot(&ki);
                }
            }
        }
    }
    Ok((g, min_gap))
}

/// Sum of link contributions at shape `s`.
pub fn grand_resistance(s: &[f64], links: &[LinkSpec], mu: f64) -> Result<GrandMatrices> {
    let mut g = GrandMatrices::zeros(s.len());
    for link in links {
        let p = (link.attachment)(s)?;
        let c = link_resistance(link, &p, mu);
        g.mr += c.mr;
        g.n += c.n;
    }
    g.check_definite()?;
    Ok(g)
}

/// Resistance with the pose-dependent wall correction. Returns the matrices and the smallest gap.
pub fn grand_resistance_near_wall(
    s: &[f64],
    q: &Pose,
    links: &[LinkSpec],
    mu: f64,
    wall: &BodyBoundary,
) -> Result<(GrandMatrices, f64)> {
    let mut g = GrandMatrices::zeros(s.len());
    let mut gap = f64::INFINITY;
    for link in links {
        let p = (link.attachment)(s)?;
        let (c, lg) = link_resistance_near_wall(link, &p, mu, q, &wall.polygons)?;
        g.mr += c.mr;
        g.n += c.n;
        gap = gap.min(lg);
    }
    g.check_definite()?;
    Ok((g, gap))
}

/// Admissible box for each shape coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ShapeBox {
    pub fn check(&self, s: &[f64]) -> Result<()> {
        for ((v, lo), hi) in s.iter().zip(&self.lo).zip(&self.hi) {
            if *v < lo - 1e-9 || *v > hi + 1e-9 {
                return Err(SwimError::ShapeOutOfRange { value: *v, lo: *lo, hi: *hi });
            }
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| rng.gen_range(*l..=*h)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Wall {
    pub boundary: BodyBoundary,
    pub min_gap: f64,
}

/// `q' = -R(q) M(s[,q])^-1 N(s[,q]) s'` for a set of links.
#[derive(Debug, Clone)]
pub struct LowReField {
    pub links: Vec<LinkSpec>,
    pub mu: f64,
    pub range: ShapeBox,
    /// Shape norm is `|norm_offset + s|`.
    pub norm_offset: Vec<f64>,
    pub wall: Option<Wall>,
    bound_k: f64,
}

impl LowReField {
    pub fn new(links: Vec<LinkSpec>, mu: f64, range: ShapeBox, norm_offset: Vec<f64>) -> Result<Self> {
        for l in &links {
            l.validate()?;
        }
        if !(mu > 0.0) {
            return Err(SwimError::InvalidArgument(format!("viscosity must be positive, got {mu}")));
        }
        let mut f = LowReField { links, mu, range, norm_offset, wall: None, bound_k: f64::INFINITY };
        f.bound_k = f.estimate_bound(None)?;
        Ok(f)
    }

    /// Adds a fixed wall; `min_gap` is the proximity limit.
    pub fn with_wall(mut self, boundary: BodyBoundary, min_gap: f64) -> Result<Self> {
        self.wall = Some(Wall { boundary, min_gap });
        let k_free = self.bound_k;
        let near = self.estimate_bound(Some(64))?;
        self.bound_k = k_free.max(near);
        Ok(self)
    }

    pub fn matrices(&self, q: &Pose, s: &[f64]) -> Result<GrandMatrices> {
        self.range.check(s)?;
        match &self.wall {
            None => grand_resistance(s, &self.links, self.mu),
            Some(w) => {
                let (g, gap) = grand_resistance_near_wall(s, q, &self.links, self.mu, &w.boundary)?;
                if gap < w.min_gap {
                    return Err(SwimError::Proximity { gap, limit: w.min_gap });
                }
                Ok(g)
            }
        }
    }

    pub fn body_velocity(&self, q: &Pose, s: &[f64], rate: &[f64]) -> Result<BodyTwist> {
        self.matrices(q, s)?.connection(rate)
    }

    /// Seeded sampling of `|F(q,s)| / |s|` with a 25% margin. With a wall,
    /// poses are drawn around it at admissible gaps.
    fn estimate_bound(&self, wall_poses: Option<usize>) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut worst: f64 = 0.0;
        let shapes = 200;
        for i in 0..shapes {
            let s = if i < 2 {
                if i == 0 { self.range.lo.clone() } else { self.range.hi.clone() }
            } else {
                self.range.sample(&mut rng)
            };
            let poses: Vec<Pose> = match (wall_poses, &self.wall) {
                (Some(n), Some(w)) => (0..n / 8 + 1)
                    .filter_map(|_| {
                        let c = w.boundary.moments().centroid();
                        let ang = rng.gen_range(0.0..2.0 * PI);
                        let dist = rng.gen_range(0.0..6.0);
                        Some(Pose::new(rng.gen_range(-PI..PI), c.x + dist * ang.cos(), c.y + dist * ang.sin()))
                    })
                    .collect(),
                _ => vec![Pose::identity()],
            };
            let norm = self.shape_norm(&s);
            for q in poses {
                let g = match self.matrices(&q, &s) {
                    Ok(g) => g,
                    Err(SwimError::Proximity { .. }) => continue,
                    Err(e) => return Err(e),
                };
                // Operator norm of -M^-1 N via its columns (m is small).
                let chol = g.mr.cholesky().ok_or(SwimError::SingularAssembly { min_eig: g.min_eigenvalue(), threshold: 0.0 })?;
                let a = DMatrix::from_fn(3, s.len(), |r, c| {
                    let col = Vector3::new(g.n[(0, c)], g.n[(1, c)], g.n[(2, c)]);
                    chol.solve(&col)[r]
                });
                let op = a.singular_values().max();
                worst = worst.max(op / norm);
            }
        }
        Ok(1.25 * worst)
    }
}

impl SwimmerField for LowReField {
    fn shape_dim(&self) -> usize {
        self.range.lo.len()
    }
    fn velocity(&self, q: &Pose, s: &[f64], rate: &[f64]) -> Result<Vector3<f64>> {
        Ok(world_map(q, &self.body_velocity(q, s, rate)?))
    }
    fn bound_k(&self) -> f64 {
        self.bound_k
    }
    fn shape_norm(&self, s: &[f64]) -> f64 {
        s.iter().zip(&self.norm_offset).map(|(x, o)| (x + o).powi(2)).sum::<f64>().sqrt()
    }
}

/// Largest stroke excursion about the rest opening.
pub const STROKE_LIMIT: f64 = PI / 3.0;

/// The scallop as two slender links along the ellipse major axes.
///
/// The shape coordinate is the offset of the opening from `rest`; link
/// placements and their rates come from the same centre-of-mass frame and
/// momentum-free opening mode as the panelised body.
pub fn scallop_links(geom: &ScallopGeometry, rest: f64, drag_ratio: f64) -> Vec<LinkSpec> {
    (0..2)
        .map(|arm| {
            let g = *geom;
            let attachment: Attachment = Arc::new(move |s: &[f64]| {
                let a = g.with_alpha(rest + s[0]).arms()[arm];
                let t = Vector2::new(a.angle.cos(), a.angle.sin());
                let start = a.center - g.semi_major * t;
                Ok(LinkPlacement {
                    start,
                    angle: a.angle,
                    d_start: vec![a.mode.point_velocity(start)],
                    d_angle: vec![a.mode.omega],
                })
            });
            LinkSpec { length: 2.0 * geom.semi_major, c_t: 1.0, c_n: drag_ratio, attachment }
        })
        .collect()
}

pub fn scallop_field(geom: &ScallopGeometry, rest: f64, mu: f64, drag_ratio: f64) -> Result<LowReField> {
    geom.with_alpha(rest).validate()?;
    LowReField::new(
        scallop_links(geom, rest, drag_ratio),
        mu,
        ShapeBox { lo: vec![-STROKE_LIMIT], hi: vec![STROKE_LIMIT] },
        vec![rest],
    )
}

/// Three-link swimmer: a central link on the x axis with two hinged outer links.
/// Shape coordinates are the two joint deflections.
pub fn three_link_links(length: f64, drag_ratio: f64) -> Vec<LinkSpec> {
    let half = 0.5 * length;
    let centre: Attachment = Arc::new(move |_s: &[f64]| {
        Ok(LinkPlacement { start: Vector2::new(-half, 0.0), angle: 0.0, d_start: vec![Vector2::zeros(); 2], d_angle: vec![0.0; 2] })
    });
    let right: Attachment = Arc::new(move |s: &[f64]| {
        Ok(LinkPlacement { start: Vector2::new(half, 0.0), angle: s[1], d_start: vec![Vector2::zeros(); 2], d_angle: vec![0.0, 1.0] })
    });
    let left: Attachment = Arc::new(move |s: &[f64]| {
        Ok(LinkPlacement { start: Vector2::new(-half, 0.0), angle: PI + s[0], d_start: vec![Vector2::zeros(); 2], d_angle: vec![1.0, 0.0] })
    });
    [centre, right, left]
        .into_iter()
        .map(|attachment| LinkSpec { length, c_t: 1.0, c_n: drag_ratio, attachment })
        .collect()
}

pub fn three_link_field(length: f64, mu: f64) -> Result<LowReField> {
    let lim = PI / 2.0;
    LowReField::new(
        three_link_links(length, DEFAULT_DRAG_RATIO),
        mu,
        ShapeBox { lo: vec![-lim, -lim], hi: vec![lim, lim] },
        vec![PI, PI],
    )
}
