//! Browser bindings for the demo page: scallop outlines, quick simulations and
//! lift verdicts.

use swimkit::cover::{lift_samples, verdict, VerdictOptions};
use swimkit::geometry::{build_scallop, ScallopGeometry};
use swimkit::scenario::{builtin_source, parse_config, Model};
use wasm_bindgen::prelude::*;

/// Arm polygons of the scallop at rest opening plus `stroke`, flattened as
/// `[n0, x, y, x, y, ..., n1, x, y, ...]` with `n` the vertex count of each loop.
#[wasm_bindgen]
pub fn scallop_outline(stroke: f64, panels: usize) -> Result<Vec<f64>, JsError> {
    let rest = ScallopGeometry::default();
    let geom = ScallopGeometry { panel_count: panels, ..rest.with_alpha(rest.alpha + stroke) };
    let body = build_scallop(&geom).map_err(|e| JsError::new(&e.to_string()))?;
    let mut out = Vec::new();
    for poly in &body.polygons {
        out.push(poly.len() as f64);
        for p in poly {
            out.extend([p.x, p.y]);
        }
    }
    Ok(out)
}

/// Source text of a builtin scenario, for prefilling the editor.
#[wasm_bindgen]
pub fn scenario_source(name: &str) -> Option<String> {
    builtin_source(name).map(str::to_string)
}

/// Run a TOML scenario and return `{"csv": ..., "summary": ...}` as JSON.
/// Obstacle runs are refused; they take minutes even natively.
#[wasm_bindgen]
pub fn simulate(config: &str) -> Result<String, JsError> {
    let sc = parse_config(config).map_err(|e| JsError::new(&e.to_string()))?;
    if matches!(sc.model, Model::HighReObstacle { .. }) {
        return Err(JsError::new("obstacle runs are CLI only"));
    }
    let sim = swimkit::scenario::simulate(&sc).map_err(|e| JsError::new(&e.to_string()))?;
    let out = serde_json::json!({ "csv": sim.trajectory_csv, "summary": sim.summary });
    Ok(out.to_string())
}

/// Lift a sampled shape series and return the verdict report.
#[wasm_bindgen]
pub fn lift_verdict(times: &[f64], values: &[f64], circle: bool) -> Result<String, JsError> {
    let base = *values.first().ok_or_else(|| JsError::new("no samples"))?;
    let lp = lift_samples(times, values, circle, base).map_err(|e| JsError::new(&e.to_string()))?;
    Ok(verdict(&lp, &VerdictOptions::default()).report())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outline_has_two_loops() {
        let flat = scallop_outline(0.3, 40).map_err(|_| ()).unwrap();
        let n0 = flat[0] as usize;
        assert_eq!(n0, 40);
        assert_eq!(flat[1 + 2 * n0] as usize, 40);
        assert_eq!(flat.len(), 2 + 4 * 40);
    }

    #[test]
    fn simulate_returns_csv_and_summary() {
        let out = simulate(scenario_source("damped_stroke").unwrap().as_str()).map_err(|_| ()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(v["csv"].as_str().unwrap().starts_with("t,alpha,theta,x,y\n"));
        assert_eq!(v["summary"]["name"], "damped_stroke");
    }

    #[test]
    fn verdict_report_for_periodic_series() {
        let t: Vec<f64> = (0..500).map(|i| i as f64 * 0.05).collect();
        let s: Vec<f64> = t.iter().map(|x| x.sin()).collect();
        assert!(lift_verdict(&t, &s, false).map_err(|_| ()).unwrap().starts_with("verdict: FiniteLiftLength"));
    }
}
