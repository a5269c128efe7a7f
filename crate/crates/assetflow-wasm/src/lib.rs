//! wasm-bindgen bindings for the browser demo.
//!
//! Three operations back the demo page: time-domain simulation, a
//! bifurcation scan, and a stability report. Inputs are plain numbers,
//! outputs JSON strings or ready-to-inject SVG documents, so no JS
//! framework or glue types are needed.

use assetflow::analysis::oscillation_stats;
use assetflow::bifurcation::{hopf_threshold_eigen, scan, ParamPath, ScanOpts};
use assetflow::equilibrium::calibrate_shares;
use assetflow::output::{bifurcation_svg, trajectory_svg, TrajectoryPlot};
use assetflow::scenario::load_scenario;
use assetflow::simulate::{integrate, SimulateOpts};
use assetflow::stability::assemble_jacobian;
use assetflow::{FlowMode, ModelSpec, State};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn oil_spec(q1_china: f64, mode: FlowMode) -> Result<(ModelSpec, Vec<f64>), String> {
    let sc = load_scenario("oil_nigeria_libya", 0).map_err(|e| e.to_string())?;
    let path = ParamPath::parse("groups.china.q1").map_err(|e| e.to_string())?;
    let spec = path
        .apply(&sc.spec, q1_china)
        .map_err(|e| e.to_string())?
        .with_flow_mode(mode);
    Ok((spec, sc.initial_prices))
}

fn sim_opts() -> SimulateOpts {
    SimulateOpts {
        // Browser-interactive tolerances: looser than the CLI defaults but
        // far below visual resolution.
        rel_tol: 1e-7,
        abs_tol: 1e-9,
        sample_dt: 0.25,
        max_steps: 5_000_000,
        h_max: None,
    }
}

#[derive(Serialize)]
struct SimulationSummary {
    amplitude: Vec<f64>,
    period: Vec<Option<f64>>,
    converged: Vec<bool>,
    final_prices: Vec<f64>,
    final_wealth: Vec<f64>,
}

/// Simulate the bundled oil scenario at the given momentum coefficient and
/// return the price plot as an SVG document.
#[wasm_bindgen]
pub fn simulate_prices_svg(q1_china: f64, t_end: f64, closed_flow: bool) -> Result<String, JsError> {
    let mode = if closed_flow {
        FlowMode::ClosedFlow
    } else {
        FlowMode::FixedEndowment
    };
    let (spec, prices) = oil_spec(q1_china, mode).map_err(to_js)?;
    let initial = State::with_prices(&spec, &prices);
    let traj = integrate(&spec, &initial, t_end.clamp(10.0, 5000.0), sim_opts())
        .map_err(|e| to_js(e.to_string()))?;
    trajectory_svg(&traj, &spec, TrajectoryPlot::Prices).map_err(|e| to_js(e.to_string()))
}

/// Same simulation, wealth-fraction view.
#[wasm_bindgen]
pub fn simulate_wealth_svg(q1_china: f64, t_end: f64, closed_flow: bool) -> Result<String, JsError> {
    let mode = if closed_flow {
        FlowMode::ClosedFlow
    } else {
        FlowMode::FixedEndowment
    };
    let (spec, prices) = oil_spec(q1_china, mode).map_err(to_js)?;
    let initial = State::with_prices(&spec, &prices);
    let traj = integrate(&spec, &initial, t_end.clamp(10.0, 5000.0), sim_opts())
        .map_err(|e| to_js(e.to_string()))?;
    trajectory_svg(&traj, &spec, TrajectoryPlot::Wealth).map_err(|e| to_js(e.to_string()))
}

/// Oscillation statistics of a simulation as JSON.
#[wasm_bindgen]
pub fn simulate_summary_json(q1_china: f64, t_end: f64, closed_flow: bool) -> Result<String, JsError> {
    let mode = if closed_flow {
        FlowMode::ClosedFlow
    } else {
        FlowMode::FixedEndowment
    };
    let (spec, prices) = oil_spec(q1_china, mode).map_err(to_js)?;
    let initial = State::with_prices(&spec, &prices);
    let traj = integrate(&spec, &initial, t_end.clamp(10.0, 5000.0), sim_opts())
        .map_err(|e| to_js(e.to_string()))?;
    let m = spec.n_assets();
    let mut summary = SimulationSummary {
        amplitude: Vec::with_capacity(m),
        period: Vec::with_capacity(m),
        converged: Vec::with_capacity(m),
        final_prices: traj.states.last().unwrap().prices().to_vec(),
        final_wealth: traj.wealth.last().unwrap().clone(),
    };
    for i in 0..m {
        let st = oscillation_stats(&traj, i, 0.5).map_err(|e| to_js(e.to_string()))?;
        summary.amplitude.push(st.amplitude);
        summary.period.push(st.period);
        summary.converged.push(st.converged);
    }
    Ok(serde_json::to_string(&summary).expect("serializable"))
}

/// Scan q1 of the momentum group and return the bifurcation diagram as an
/// SVG document (eigenvalue threshold marked when it exists).
#[wasm_bindgen]
pub fn bifurcation_scan_svg(lo: f64, hi: f64, points: usize, t_end: f64) -> Result<String, JsError> {
    let (spec, prices) = oil_spec(0.3, FlowMode::FixedEndowment).map_err(to_js)?;
    let path = ParamPath::parse("groups.china.q1").map_err(|e| to_js(e.to_string()))?;
    let opts = ScanOpts {
        initial_prices: Some(prices),
        t_end: t_end.clamp(100.0, 4000.0),
        transient_fraction: 0.5,
        sim: sim_opts(),
    };
    let mut diagram = scan(&spec, &path, lo, hi, points.clamp(2, 101), &opts)
        .map_err(|e| to_js(e.to_string()))?;
    diagram.threshold_eigen = hopf_threshold_eigen(&spec, &path, lo, hi, 1e-4)
        .ok()
        .map(|t| t.param);
    bifurcation_svg(&diagram, &spec).map_err(|e| to_js(e.to_string()))
}

#[derive(Serialize)]
struct StabilityReport {
    eigenvalues: Vec<[f64; 2]>,
    max_real_part: f64,
    classification: String,
    n: usize,
}

/// Eigenvalue spectrum and classification at the recalibrated fundamental
/// equilibrium, as JSON.
#[wasm_bindgen]
pub fn stability_json(q1_china: f64) -> Result<String, JsError> {
    let (spec, _) = oil_spec(q1_china, FlowMode::FixedEndowment).map_err(to_js)?;
    let spec = calibrate_shares(&spec).map_err(|e| to_js(e.to_string()))?;
    let report =
        assemble_jacobian(&spec, &State::fundamental(&spec)).map_err(|e| to_js(e.to_string()))?;
    let out = StabilityReport {
        eigenvalues: report.eigenvalues.iter().map(|e| [e.re, e.im]).collect(),
        max_real_part: report.max_real_part,
        classification: report.classification.to_string(),
        n: report.matrix.nrows(),
    };
    Ok(serde_json::to_string(&out).expect("serializable"))
}

fn to_js(msg: impl Into<String>) -> JsError {
    JsError::new(&msg.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stability_report_is_valid_json() {
        let json = stability_json(0.3).unwrap();
        assert!(json.contains("\"classification\":\"stable\""), "{json}");
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed["n"], 10);
    }

    #[test]
    fn simulation_svg_renders() {
        let svg = simulate_prices_svg(0.3, 200.0, false).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("</svg>"));
    }

    #[test]
    fn summary_reports_oscillation_above_threshold() {
        let json = simulate_summary_json(0.5, 1500.0, false).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed["converged"][0], false);
    }
}
