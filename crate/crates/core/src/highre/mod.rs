//! Potential-flow swimmers: Kirchhoff decomposition on a source-panel
//! discretisation, added-mass and coupling matrices, the first-order
//! free-space reduction and second-order dynamics beside a fixed obstacle.

pub mod obstacle;
pub mod panel;

use crate::engine::SwimmerField;
use crate::error::{Result, SwimError};
use crate::geometry::{build_scallop, check_self_propulsion, BodyBoundary, ScallopGeometry};
use crate::lowre::{GrandMatrices, ShapeBox, STROKE_LIMIT};
use crate::se2::{perp, world_map, BodyTwist, Pose};
use nalgebra::{DMatrix, Matrix3, Vector2, Vector3};
use rayon::prelude::*;

pub use obstacle::{ObstacleModel, RichDerivative, RichSample, RichState, RichTrajectory};
pub use panel::{solve_neumann, PanelSolution, PanelSystem};

/// Elementary potentials for the three rigid modes and every shape mode.
#[derive(Debug, Clone)]
pub struct KirchhoffBasis {
    pub rigid: Vec<PanelSolution>,
    pub shape: Vec<PanelSolution>,
    pub rigid_data: Vec<Vec<f64>>,
    pub shape_data: Vec<Vec<f64>>,
    pub lengths: Vec<f64>,
}

impl KirchhoffBasis {
    /// Solves the basis for `body` (with its shape modes) and an optional fixed
    /// obstacle; the rotation mode turns about `reference`.
    pub fn solve(body: &BodyBoundary, obstacle: Option<&BodyBoundary>, reference: Vector2<f64>) -> Result<Self> {
        let domain = match obstacle {
            Some(o) => body.merged_with(o),
            None => body.clone(),
        };
        let nb = body.panels.len();
        let total = domain.panels.len();
        let rigid_data: Vec<Vec<f64>> = (0..3)
            .map(|k| {
                (0..total)
                    .map(|i| {
                        if i >= nb {
                            return 0.0;
                        }
                        let p = &domain.panels[i];
                        let w = match k {
                            0 => perp(p.mid - reference),
                            1 => Vector2::new(1.0, 0.0),
                            _ => Vector2::new(0.0, 1.0),
                        };
                        w.dot(&p.normal)
                    })
                    .collect()
            })
            .collect();
        let shape_data: Vec<Vec<f64>> = (0..domain.mode_count()).map(|k| domain.mode_data(k)).collect();
        let sys = PanelSystem::new(&domain)?;
        let rigid = rigid_data.iter().map(|d| sys.solve(d)).collect::<Result<Vec<_>>>()?;
        let shape = shape_data.iter().map(|d| sys.solve(d)).collect::<Result<Vec<_>>>()?;
        Ok(KirchhoffBasis { rigid, shape, rigid_data, shape_data, lengths: domain.panels.iter().map(|p| p.length).collect() })
    }

    /// `rho int phi_a dphi_b/dn` over the boundary.
    fn pairing(&self, phi: &PanelSolution, data: &[f64], rho: f64) -> f64 {
        rho * phi.potential_at_panels.iter().zip(data).zip(&self.lengths).map(|((p, d), l)| p * d * l).sum::<f64>()
    }
}

/// Fluid added-mass matrix after symmetrisation, with the relative asymmetry before it.
#[derive(Debug, Clone, PartialEq)]
pub struct AddedMass {
    pub matrix: Matrix3<f64>,
    pub asymmetry: f64,
}

pub fn added_mass(basis: &KirchhoffBasis, rho_f: f64) -> AddedMass {
    let raw = Matrix3::from_fn(|i, j| basis.pairing(&basis.rigid[i], &basis.rigid_data[j], rho_f));
    let scale = raw.norm();
    let asymmetry = if scale > 0.0 { (raw - raw.transpose()).norm() / scale } else { 0.0 };
    AddedMass { matrix: 0.5 * (raw + raw.transpose()), asymmetry }
}

/// Coupling between rigid and shape modes, averaged over both boundary pairings.
pub fn coupling_highre(basis: &KirchhoffBasis, rho_f: f64) -> DMatrix<f64> {
    DMatrix::from_fn(3, basis.shape.len(), |i, k| {
        0.5 * (basis.pairing(&basis.rigid[i], &basis.shape_data[k], rho_f)
            + basis.pairing(&basis.shape[k], &basis.rigid_data[i], rho_f))
    })
}

/// Fluid kinetic-energy matrix of the shape modes.
pub fn shape_added_mass(basis: &KirchhoffBasis, rho_f: f64) -> DMatrix<f64> {
    let m = basis.shape.len();
    let raw = DMatrix::from_fn(m, m, |k, l| basis.pairing(&basis.shape[k], &basis.shape_data[l], rho_f));
    (&raw + raw.transpose()) * 0.5
}

/// Mass and polar moment of inertia about `reference` at uniform density.
pub fn body_inertia(body: &BodyBoundary, rho0: f64, reference: Vector2<f64>) -> (f64, f64) {
    let m = body.moments();
    let polar = m.polar - 2.0 * reference.dot(&m.first) + m.area * reference.norm_squared();
    (rho0 * m.area, rho0 * polar)
}

/// Body-frame description of a potential-flow scallop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighReModel {
    pub geom: ScallopGeometry,
    /// Opening about which the stroke offset is measured.
    pub rest: f64,
    pub rho0: f64,
    pub rho_f: f64,
}

impl HighReModel {
    pub fn body(&self, s: f64) -> Result<BodyBoundary> {
        build_scallop(&self.geom.with_alpha(self.rest + s))
    }

    pub fn basis(&self, s: f64) -> Result<KirchhoffBasis> {
        KirchhoffBasis::solve(&self.body(s)?, None, Vector2::zeros())
    }

    /// Total mass matrix `diag(I, m, m) + M_f` and coupling `N` in the body frame.
    pub fn grand_matrices(&self, s: f64) -> Result<GrandMatrices> {
        Ok(self.assemble(s)?.0)
    }

    /// Grand matrices together with the fluid mass asymmetry before symmetrisation.
    pub fn assemble(&self, s: f64) -> Result<(GrandMatrices, f64)> {
        let body = self.body(s)?;
        let basis = KirchhoffBasis::solve(&body, None, Vector2::zeros())?;
        let fluid = added_mass(&basis, self.rho_f);
        let (mass, inertia) = body_inertia(&body, self.rho0, Vector2::zeros());
        let mr = Matrix3::from_diagonal(&Vector3::new(inertia, mass, mass)) + fluid.matrix;
        let mut n = coupling_highre(&basis, self.rho_f);
        for (k, r) in check_self_propulsion(&body, self.rho0).iter().enumerate() {
            n[(0, k)] += r.angular;
            n[(1, k)] += r.linear.x;
            n[(2, k)] += r.linear.y;
        }
        Ok((GrandMatrices { mr, n }, fluid.asymmetry))
    }
}

fn full_mass_from(body: &BodyBoundary, basis: &KirchhoffBasis, rho0: f64, rho_f: f64) -> Matrix3<f64> {
    let (m, inertia) = body_inertia(body, rho0, Vector2::zeros());
    Matrix3::from_diagonal(&Vector3::new(inertia, m, m)) + added_mass(basis, rho_f).matrix
}

/// `diag(I*, m Id) + M_f` for the scallop at opening `geom.alpha`.
pub fn full_mass(geom: &ScallopGeometry, rho0: f64, rho_f: f64) -> Result<Matrix3<f64>> {
    let body = build_scallop(geom)?;
    let basis = KirchhoffBasis::solve(&body, None, Vector2::zeros())?;
    Ok(full_mass_from(&body, &basis, rho0, rho_f))
}

fn sample_bound(range: (f64, f64), samples: usize, norm: impl Fn(f64) -> f64 + Sync, conn: impl Fn(f64) -> Result<Vector3<f64>> + Sync) -> Result<f64> {
    let worst = (0..=samples)
        .into_par_iter()
        .map(|i| {
            let s = range.0 + (range.1 - range.0) * i as f64 / samples as f64;
            Ok(conn(s)?.norm() / norm(s))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(1.25 * worst)
}

/// First-order free-space field `q' = -R(q) M(s)^-1 N(s) s'`, solved afresh at every call.
#[derive(Debug, Clone)]
pub struct HighReFreeField {
    pub model: HighReModel,
    pub range: ShapeBox,
    bound_k: f64,
}

impl HighReFreeField {
    pub fn new(model: HighReModel) -> Result<Self> {
        let range = ShapeBox { lo: vec![-STROKE_LIMIT], hi: vec![STROKE_LIMIT] };
        let bound_k = sample_bound((-STROKE_LIMIT, STROKE_LIMIT), 24, |s| (model.rest + s).abs(), |s| {
            Ok(model.grand_matrices(s)?.connection(&[1.0])?.to_vector())
        })?;
        Ok(HighReFreeField { model, range, bound_k })
    }

    pub fn body_velocity(&self, s: f64, rate: f64) -> Result<BodyTwist> {
        self.range.check(&[s])?;
        self.model.grand_matrices(s)?.connection(&[rate])
    }
}

impl SwimmerField for HighReFreeField {
    fn shape_dim(&self) -> usize {
        1
    }
    fn velocity(&self, q: &Pose, s: &[f64], rate: &[f64]) -> Result<Vector3<f64>> {
        Ok(world_map(q, &self.body_velocity(s[0], rate[0])?))
    }
    fn bound_k(&self) -> f64 {
        self.bound_k
    }
    fn shape_norm(&self, s: &[f64]) -> f64 {
        (self.model.rest + s[0]).abs()
    }
}

/// Chebyshev interpolant of a one-coordinate body-frame connection `s -> F(s)`.
///
/// Reads only after construction; the free-space fields depend on the pose
/// through the rotation alone, so tabulating the body-frame map is exact up
/// to the interpolation error.
#[derive(Debug, Clone)]
pub struct TabulatedField {
    lo: f64,
    hi: f64,
    coeffs: Vec<Vector3<f64>>,
    norm_offset: f64,
    bound_k: f64,
}

impl TabulatedField {
    pub fn build(
        lo: f64,
        hi: f64,
        nodes: usize,
        norm_offset: f64,
        conn: impl Fn(f64) -> Result<Vector3<f64>> + Sync,
    ) -> Result<Self> {
        if !(hi > lo) || nodes < 2 {
            return Err(SwimError::InvalidArgument("table needs hi > lo and at least two nodes".into()));
        }
        let n = nodes;
        let xs: Vec<f64> = (0..n).map(|j| (std::f64::consts::PI * (j as f64 + 0.5) / n as f64).cos()).collect();
        let vals = xs
            .par_iter()
            .map(|x| conn(0.5 * (hi + lo) + 0.5 * (hi - lo) * x))
            .collect::<Result<Vec<_>>>()?;
        let coeffs = (0..n)
            .map(|k| {
                let mut c = Vector3::zeros();
                for (j, v) in vals.iter().enumerate() {
                    c += v * (std::f64::consts::PI * k as f64 * (j as f64 + 0.5) / n as f64).cos();
                }
                c * (2.0 / n as f64)
            })
            .collect();
        let mut t = TabulatedField { lo, hi, coeffs, norm_offset, bound_k: 0.0 };
        let worst = (0..=400)
            .map(|i| {
                let s = lo + (hi - lo) * i as f64 / 400.0;
                t.connection(s).norm() / (norm_offset + s).abs()
            })
            .fold(0.0, f64::max);
        t.bound_k = 1.25 * worst;
        Ok(t)
    }

    /// Body twist per unit shape rate.
    pub fn connection(&self, s: f64) -> Vector3<f64> {
        let x = (2.0 * s - self.lo - self.hi) / (self.hi - self.lo);
        let (mut b1, mut b2) = (Vector3::zeros(), Vector3::zeros());
        for c in self.coeffs.iter().skip(1).rev() {
            let b0 = c + 2.0 * x * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        0.5 * self.coeffs[0] + x * b1 - b2
    }
}

impl SwimmerField for TabulatedField {
    fn shape_dim(&self) -> usize {
        1
    }
    fn velocity(&self, q: &Pose, s: &[f64], rate: &[f64]) -> Result<Vector3<f64>> {
        if s[0] < self.lo - 1e-9 || s[0] > self.hi + 1e-9 {
            return Err(SwimError::ShapeOutOfRange { value: s[0], lo: self.lo, hi: self.hi });
        }
        Ok(world_map(q, &BodyTwist::from_vector(&(self.connection(s[0]) * rate[0]))))
    }
    fn bound_k(&self) -> f64 {
        self.bound_k
    }
    fn shape_norm(&self, s: &[f64]) -> f64 {
        (self.norm_offset + s[0]).abs()
    }
}

/// Tabulates the potential-flow scallop over the full stroke range.
pub fn tabulated_highre(model: HighReModel, nodes: usize) -> Result<TabulatedField> {
    TabulatedField::build(-STROKE_LIMIT, STROKE_LIMIT, nodes, model.rest, |s| {
        Ok(model.grand_matrices(s)?.connection(&[1.0])?.to_vector())
    })
}

/// Tabulates any one-coordinate low-Re field over its range.
pub fn tabulated_lowre(field: &crate::lowre::LowReField, nodes: usize) -> Result<TabulatedField> {
    let (lo, hi) = (field.range.lo[0], field.range.hi[0]);
    TabulatedField::build(lo, hi, nodes, field.norm_offset[0], |s| {
        Ok(field.body_velocity(&Pose::identity(), &[s], &[1.0])?.to_vector())
    })
}
