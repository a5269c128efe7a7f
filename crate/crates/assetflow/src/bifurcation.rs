//! Parameter scans, the amplitude-vs-parameter bifurcation diagram, and
//! two independent Hopf-threshold locators (eigenvalue crossing vs
//! oscillation onset).

use crate::analysis::{oscillation_stats, AMPLITUDE_FLOOR_FRACTION};
use crate::equilibrium::calibrate_shares;
use crate::error::{Error, Result};
use crate::model::{FlowMode, ModelSpec, State};
use crate::simulate::{integrate, SimulateOpts};
use crate::stability::assemble_jacobian;
use rayon::prelude::*;

/// A parameter location of the form `groups.<name|index>.<field>[sel]`
/// where field is one of q1, q2, c1, c2 and sel is an asset index or `*`
/// (default: all assets).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPath {
    pub group: String,
    pub field: ParamField,
    /// None means every asset.
    pub asset: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamField {
    TrendMagnitude,
    ValueMagnitude,
    TrendTimescale,
    ValueTimescale,
}

impl ParamField {
    fn name(self) -> &'static str {
        match self {
            ParamField::TrendMagnitude => "q1",
            ParamField::ValueMagnitude => "q2",
            ParamField::TrendTimescale => "c1",
            ParamField::ValueTimescale => "c2",
        }
    }
}

impl std::fmt::Display for ParamPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "groups.{}.{}", self.group, self.field.name())?;
        match self.asset {
            Some(i) => write!(f, "[{i}]"),
            None => write!(f, "[*]"),
        }
    }
}

impl ParamPath {
    pub fn parse(path: &str) -> Result<ParamPath> {
        let err = |reason: &str| Error::InvalidParamPath {
            path: path.to_string(),
            reason: reason.to_string(),
        };
        let parts: Vec<&str> = path.split('.').collect();
        if parts.len() != 3 || parts[0] != "groups" {
            return Err(err("expected groups.<name>.<field>[sel]"));
        }
        let group = parts[1].to_string();
        let (field_str, asset) = match parts[2].find('[') {
            Some(open) => {
                let close = parts[2]
                    .find(']')
                    .ok_or_else(|| err("unterminated [index]"))?;
                let sel = &parts[2][open + 1..close];
                let asset = if sel == "*" {
                    None
                } else {
                    Some(
                        sel.parse::<usize>()
                            .map_err(|_| err("asset selector must be an index or *"))?,
                    )
                };
                (&parts[2][..open], asset)
            }
            None => (parts[2], None),
        };
        let field = match field_str {
            "q1" => ParamField::TrendMagnitude,
            "q2" => ParamField::ValueMagnitude,
            "c1" => ParamField::TrendTimescale,
            "c2" => ParamField::ValueTimescale,
            other => {
                return Err(err(&format!(
                    "unknown field `{other}` (expected q1, q2, c1 or c2)"
                )))
            }
        };
        Ok(ParamPath {
            group,
            field,
            asset,
        })
    }

    fn group_index(&self, spec: &ModelSpec) -> Result<usize> {
        if let Some(j) = spec.group_index(&self.group) {
            return Ok(j);
        }
        if let Ok(j) = self.group.parse::<usize>() {
            if j < spec.n_groups() {
                return Ok(j);
            }
        }
        Err(Error::InvalidParamPath {
            path: self.to_string(),
            reason: format!("no group named `{}`", self.group),
        })
    }

    /// Return a copy of the spec with the parameter set to `value`.
    pub fn apply(&self, spec: &ModelSpec, value: f64) -> Result<ModelSpec> {
        let j = self.group_index(spec)?;
        let m = spec.n_assets();
        if let Some(i) = self.asset {
            if i >= m {
                return Err(Error::InvalidParamPath {
                    path: self.to_string(),
                    reason: format!("asset index {i} out of range (m = {m})"),
                });
            }
        }
        let mut out = spec.clone();
        let g = &mut out.groups[j];
        let target = match self.field {
            ParamField::TrendMagnitude => &mut g.trend_magnitude,
            ParamField::ValueMagnitude => &mut g.value_magnitude,
            ParamField::TrendTimescale => &mut g.trend_timescale,
            ParamField::ValueTimescale => &mut g.value_timescale,
        };
        match self.asset {
            Some(i) => target[i] = value,
            None => target.iter_mut().for_each(|v| *v = value),
        }
        out.validate()?;
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct ScanOpts {
    /// Initial prices for the per-point integration; None perturbs the
    /// fundamentals (+2.5% on the first asset, +0.625% on the rest).
    pub initial_prices: Option<Vec<f64>>,
    pub t_end: f64,
    pub transient_fraction: f64,
    pub sim: SimulateOpts,
}

impl Default for ScanOpts {
    fn default() -> Self {
        ScanOpts {
            initial_prices: None,
            t_end: 2000.0,
            transient_fraction: 0.5,
            sim: SimulateOpts::default(),
        }
    }
}

fn default_initial_prices(spec: &ModelSpec) -> Vec<f64> {
    spec.assets
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let bump = if i == 0 { 1.025 } else { 1.00625 };
            a.fundamental_price * bump
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ScanSample {
    pub param_value: f64,
    /// Max Re of the Jacobian spectrum at the recalibrated fundamental
    /// equilibrium.
    pub max_re_lambda: f64,
    /// Oscillation amplitude per asset from the post-transient window.
    pub amplitude: Vec<f64>,
    /// Detected period per asset (days), when at least two cycles fit.
    pub period: Vec<Option<f64>>,
    /// Populated when the point could not be evaluated; the scan continues.
    pub failed: Option<String>,
}

#[derive(Debug, Clone)]
pub struct BifurcationDiagram {
    pub parameter_path: String,
    pub samples: Vec<ScanSample>,
    pub threshold_eigen: Option<f64>,
    pub threshold_amplitude: Option<f64>,
    /// The scan's initial prices (the diagram is sensitive to them near
    /// onset).
    pub initial_prices: Vec<f64>,
}

/// Max Re of the spectrum at the recalibrated fundamental equilibrium plus
/// the imaginary part of the dominant eigenvalue.
pub fn equilibrium_max_re(spec: &ModelSpec, path: &ParamPath, value: f64) -> Result<(f64, f64)> {
    let mutated = path.apply(spec, value)?;
    let calibrated = calibrate_shares(&mutated.with_flow_mode(FlowMode::FixedEndowment))?;
    let report = assemble_jacobian(&calibrated, &State::fundamental(&calibrated))?;
    let dominant = report.eigenvalues[0];
    Ok((dominant.re, dominant.im))
}

fn evaluate_point(
    spec: &ModelSpec,
    path: &ParamPath,
    value: f64,
    initial_prices: &[f64],
    opts: &ScanOpts,
) -> Result<ScanSample> {
    let mutated = path.apply(spec, value)?;
    let fixed = calibrate_shares(&mutated.with_flow_mode(FlowMode::FixedEndowment))?;
    let report = assemble_jacobian(&fixed, &State::fundamental(&fixed))?;
    let initial = State::with_prices(&fixed, initial_prices);
    let traj = integrate(&fixed, &initial, opts.t_end, opts.sim)?;
    let m = fixed.n_assets();
    let mut amplitude = Vec::with_capacity(m);
    let mut period = Vec::with_capacity(m);
    for i in 0..m {
        let st = oscillation_stats(&traj, i, opts.transient_fraction)?;
        amplitude.push(st.amplitude);
        period.push(st.period);
    }
    Ok(ScanSample {
        param_value: value,
        max_re_lambda: report.max_real_part,
        amplitude,
        period,
        failed: None,
    })
}

/// Scan `n_points` uniform parameter values over [lo, hi]. Each point
/// recalibrates the shares, classifies the fundamental equilibrium, and
/// integrates from the perturbed initial condition in fixed-endowment
/// mode. Points are independent and evaluated concurrently; failures mark
/// single samples without aborting the scan.
pub fn scan(
    spec: &ModelSpec,
    path: &ParamPath,
    lo: f64,
    hi: f64,
    n_points: usize,
    opts: &ScanOpts,
) -> Result<BifurcationDiagram> {
    if !(lo < hi) || n_points < 2 {
        return Err(Error::validation(
            "scan range",
            "need lo < hi and at least two points",
        ));
    }
    let initial_prices = opts
        .initial_prices
        .clone()
        .unwrap_or_else(|| default_initial_prices(spec));
    let values: Vec<f64> = (0..n_points)
        .map(|k| lo + (hi - lo) * k as f64 / (n_points - 1) as f64)
        .collect();
    let samples: Vec<ScanSample> = values
        .par_iter()
        .map(|&v| {
            evaluate_point(spec, path, v, &initial_prices, opts).unwrap_or_else(|e| ScanSample {
                param_value: v,
                max_re_lambda: f64::NAN,
                amplitude: vec![f64::NAN; spec.n_assets()],
                period: vec![None; spec.n_assets()],
                failed: Some(e.to_string()),
            })
        })
        .collect();
    Ok(BifurcationDiagram {
        parameter_path: path.to_string(),
        samples,
        threshold_eigen: None,
        threshold_amplitude: None,
        initial_prices,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct HopfThreshold {
    pub param: f64,
    /// |Im| of the dominant eigenvalue pair at the crossing.
    pub crossing_im: f64,
}

/// Locate the Hopf threshold by bisecting the sign of max Re(lambda) at
/// the recalibrated fundamental equilibrium. Errors if the bracket carries
/// no sign change or the crossing pair is real (a fold, not a Hopf).
pub fn hopf_threshold_eigen(
    spec: &ModelSpec,
    path: &ParamPath,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<HopfThreshold> {
    let (re_lo, _) = equilibrium_max_re(spec, path, lo)?;
    let (re_hi, _) = equilibrium_max_re(spec, path, hi)?;
    if !(re_lo < 0.0 && re_hi > 0.0) {
        return Err(Error::NoSignChange { lo, hi });
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        let (re, _) = equilibrium_max_re(spec, path, mid)?;
        if re < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let crossing = 0.5 * (a + b);
    let (_, im) = equilibrium_max_re(spec, path, b)?;
    if im.abs() <= tol {
        return Err(Error::FoldNotHopf { im: im.abs() });
    }
    Ok(HopfThreshold {
        param: crossing,
        crossing_im: im.abs(),
    })
}

/// Locate the oscillation onset by bisecting the predicate "post-transient
/// amplitude exceeds the floor after a long integration". Shares the
/// integrator with `scan` but never touches the Jacobian code path.
pub fn hopf_threshold_amplitude(
    spec: &ModelSpec,
    path: &ParamPath,
    lo: f64,
    hi: f64,
    tol: f64,
    opts: &ScanOpts,
) -> Result<f64> {
    let initial_prices = opts
        .initial_prices
        .clone()
        .unwrap_or_else(|| default_initial_prices(spec));
    let oscillating = |value: f64| -> Result<bool> {
        let mutated = path.apply(spec, value)?;
        let fixed = calibrate_shares(&mutated.with_flow_mode(FlowMode::FixedEndowment))?;
        let initial = State::with_prices(&fixed, &initial_prices);
        let traj = integrate(&fixed, &initial, opts.t_end, opts.sim)?;
        for i in 0..fixed.n_assets() {
            let st = oscillation_stats(&traj, i, opts.transient_fraction)?;
            if st.amplitude > AMPLITUDE_FLOOR_FRACTION * fixed.assets[i].fundamental_price {
                return Ok(true);
            }
        }
        Ok(false)
    };
    if !oscillating(hi)? {
        return Err(Error::NoOnset { lo, hi });
    }
    if oscillating(lo)? {
        // Onset at or below the bracket start.
        return Ok(lo);
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if oscillating(mid)? {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(0.5 * (a + b))
}
