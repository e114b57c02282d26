//! Constant-strength source panels for the exterior Neumann problem in 2D.
//!
//! Collocation at panel midpoints. The normal data follows the body
//! convention (normals into the solid); the fluid lies on the opposite side.

use crate::error::{Result, SwimError};
use crate::geometry::{BodyBoundary, Panel};
use nalgebra::{DMatrix, DVector, Vector2};
use std::f64::consts::PI;

const INV_2PI: f64 = 0.5 / PI;

/// Largest acceptable condition estimate for the collocation matrix.
pub const MAX_CONDITION: f64 = 1e12;

/// Velocity induced at `x` by a unit-density source on `panel`, and the potential there.
/// `on_panel` selects the fluid-side limit on the panel itself.
fn panel_influence(panel: &Panel, x: Vector2<f64>, on_panel: bool) -> (Vector2<f64>, f64) {
    let t = panel.tangent();
    let n_in = panel.normal;
    let l = panel.length;
    let d = x - panel.start;
    let xi = d.dot(&t);
    let eta = if on_panel { 0.0 } else { d.dot(&n_in) };
    let (u_xi, u_eta) = if on_panel {
        // Fluid side is eta < 0.
        (INV_2PI * 0.5 * (xi * xi / ((xi - l) * (xi - l))).ln(), -0.5)
    } else {
        let r1 = xi * xi + eta * eta;
        let r2 = (xi - l) * (xi - l) + eta * eta;
        (INV_2PI * 0.5 * (r1 / r2).ln(), INV_2PI * (eta * l).atan2(xi * (xi - l) + eta * eta))
    };
    let potential = INV_2PI * (antiderivative(xi, eta) - antiderivative(xi - l, eta));
    (u_xi * t + u_eta * n_in, potential)
}

/// `F(u) = u ln(u^2 + eta^2) / 2 - u + eta atan(u / eta)`, so that `F' = ln sqrt(u^2 + eta^2)`.
fn antiderivative(u: f64, eta: f64) -> f64 {
    let log_term = if u == 0.0 { 0.0 } else { 0.5 * u * (u * u + eta * eta).ln() };
    let atan_term = if eta == 0.0 { 0.0 } else { eta * (u / eta).atan() };
    log_term - u + atan_term
}

/// Panel strengths and the boundary values of the potential.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelSolution {
    pub strengths: Vec<f64>,
    pub potential_at_panels: Vec<f64>,
}

/// Factored collocation system for one boundary configuration.
pub struct PanelSystem {
    pub boundary: BodyBoundary,
    /// Fluid-side normal derivative at midpoint `i` per unit strength on panel `j`.
    normal_influence: DMatrix<f64>,
    potential_influence: DMatrix<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    pub condition_estimate: f64,
}

impl PanelSystem {
    pub fn new(boundary: &BodyBoundary) -> Result<Self> {
        let n = boundary.panels.len();
        let mut a = DMatrix::zeros(n, n);
        let mut phi = DMatrix::zeros(n, n);
        for (i, pi) in boundary.panels.iter().enumerate() {
            let n_out = -pi.normal;
            for (j, pj) in boundary.panels.iter().enumerate() {
                let (v, p) = panel_influence(pj, pi.mid, i == j);
                a[(i, j)] = n_out.dot(&v);
                phi[(i, j)] = p;
            }
        }
        let lu = a.clone().lu();
        let diag = lu.u().diagonal().map(f64::abs);
        let (dmax, dmin) = (diag.max(), diag.min());
        let condition_estimate = if dmin > 0.0 { dmax / dmin } else { f64::INFINITY };
        if !(condition_estimate <= MAX_CONDITION) {
            return Err(SwimError::IllConditioned { estimate: condition_estimate });
        }
        Ok(PanelSystem {
            boundary: boundary.clone(),
            normal_influence: a,
            potential_influence: phi,
            lu,
            condition_estimate,
        })
    }

    /// Solves `d phi / dn = data` (inward normals) on every panel.
    pub fn solve(&self, data: &[f64]) -> Result<PanelSolution> {
        for (li, flux) in self.boundary.loop_fluxes(data).into_iter().enumerate() {
            let scale: f64 = self.boundary.loops[li].clone().map(|i| self.boundary.panels[i].length).sum();
            if flux.abs() > 1e-8 * scale.max(1.0) {
                return Err(SwimError::IncompatibleFlux { loop_index: li, flux });
            }
        }
        let rhs = DVector::from_iterator(data.len(), data.iter().map(|d| -d));
        let sigma = self.lu.solve(&rhs).ok_or(SwimError::IllConditioned { estimate: f64::INFINITY })?;
        let pot = &self.potential_influence * &sigma;
        Ok(PanelSolution { strengths: sigma.iter().copied().collect(), potential_at_panels: pot.iter().copied().collect() })
    }

    /// Relative collocation residual of a solution against its data.
    pub fn collocation_residual(&self, sol: &PanelSolution, data: &[f64]) -> f64 {
        let sigma = DVector::from_column_slice(&sol.strengths);
        let dn = &self.normal_influence * sigma;
        let num: f64 = dn.iter().zip(data).map(|(a, d)| (a + d).powi(2)).sum::<f64>().sqrt();
        let den: f64 = data.iter().map(|d| d * d).sum::<f64>().sqrt().max(1e-300);
        num / den
    }

    /// Fluid velocity at an exterior point.
    pub fn velocity_at(&self, sol: &PanelSolution, x: Vector2<f64>) -> Vector2<f64> {
        self.boundary
            .panels
            .iter()
            .zip(&sol.strengths)
            .map(|(p, s)| *s * panel_influence(p, x, false).0)
            .sum()
    }

    /// Fluid-side velocity at the midpoint of panel `i`.
    pub fn surface_velocity(&self, sol: &PanelSolution, i: usize) -> Vector2<f64> {
        let x = self.boundary.panels[i].mid;
        self.boundary
            .panels
            .iter()
            .enumerate()
            .zip(&sol.strengths)
            .map(|((j, p), s)| *s * panel_influence(p, x, i == j).0)
            .sum()
    }

    /// Relative L2 mismatch over the whole boundary between the fluid-side
    /// normal velocity and a prescribed normal velocity field, most of which
    /// collocation does not enforce. `exact` maps (point, inward normal) to data.
    /// Each panel is integrated with a 32-point midpoint rule.
    pub fn off_collocation_residual(&self, sol: &PanelSolution, exact: impl Fn(Vector2<f64>, Vector2<f64>) -> f64) -> f64 {
        let fracs: Vec<f64> = (0..32).map(|k| (k as f64 + 0.5) / 32.0).collect();
        self.residual_at(sol, exact, &fracs)
    }

    fn residual_at(&self, sol: &PanelSolution, exact: impl Fn(Vector2<f64>, Vector2<f64>) -> f64, fracs: &[f64]) -> f64 {
        let mut acc = 0.0;
        let mut norm = 0.0;
        for pi in &self.boundary.panels {
            for &frac in fracs {
                let x = pi.start + frac * (pi.end - pi.start);
                let v: Vector2<f64> = self
                    .boundary
                    .panels
                    .iter()
                    .zip(&sol.strengths)
                    .map(|(pj, s)| {
                        let same = std::ptr::eq(pj, pi);
                        let vel = if same {
                            let t = pj.tangent();
                            let xi = (x - pj.start).dot(&t);
                            let l = pj.length;
                            INV_2PI * 0.5 * (xi * xi / ((xi - l) * (xi - l))).ln() * t - 0.5 * pj.normal
                        } else {
                            panel_influence(pj, x, false).0
                        };
                        *s * vel
                    })
                    .sum();
                let target = exact(x, pi.normal);
                acc += pi.length / fracs.len() as f64 * (v.dot(&pi.normal) - target).powi(2);
                norm += pi.length / fracs.len() as f64 * target * target;
            }
        }
        (acc / norm.max(1e-300)).sqrt()
    }
}

/// One-shot solve of the exterior Neumann problem.
pub fn solve_neumann(b: &BodyBoundary, data: &[f64]) -> Result<PanelSolution> {
    PanelSystem::new(b)?.solve(data)
}
