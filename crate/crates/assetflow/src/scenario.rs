//! Scenario files: a human-editable TOML schema that resolves to a
//! `ModelSpec`, initial conditions, and run options.
//!
//! Unknown keys are rejected. Per-asset fields accept either a scalar
//! (broadcast over assets) or an array of length m. Defaults:
//!
//! * `mode`            closed-flow
//! * `q1`, `q2`        0.0
//! * rate coefficients 0.0
//! * `trend_weights`   identity (own-asset weight 1, cross 0)
//! * `value_weights`   zeros
//! * `initial.prices`  the fundamental prices
//! * sentiments        0.0
//! * `run`             t_end 1000, sample_dt 0.1, transient_fraction 0.5,
//!   rel_tol 1e-8, abs_tol 1e-10

use crate::error::{Error, Result};
use crate::model::{AssetSpec, FlowMode, GroupSpec, ModelSpec, RateForm, RateSpec, State};
use crate::simulate::SimulateOpts;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Table-1 oil market: Nigeria/Libya assets, USA value investors, China
/// momentum traders.
pub const OIL_SCENARIO_NAME: &str = "oil_nigeria_libya";
/// Synthetic 10-asset, 20-group gas market (seeded generator).
pub const GAS_SCENARIO_NAME: &str = "gas_market";

const OIL_SCENARIO_TOML: &str = include_str!("../scenarios/oil_nigeria_libya.toml");

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum PerAsset {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl PerAsset {
    fn resolve(&self, m: usize, key: &str) -> Result<Vec<f64>> {
        match self {
            PerAsset::Scalar(v) => Ok(vec![*v; m]),
            PerAsset::Vector(v) => {
                if v.len() != m {
                    return Err(Error::validation(
                        key,
                        format!("expected {m} per-asset entries, got {}", v.len()),
                    ));
                }
                Ok(v.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum Weights {
    /// Scalar s resolves to s on the diagonal, 0 elsewhere.
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

impl Weights {
    fn resolve(&self, m: usize, key: &str) -> Result<Vec<Vec<f64>>> {
        match self {
            Weights::Scalar(s) => Ok((0..m)
                .map(|i| (0..m).map(|l| if i == l { *s } else { 0.0 }).collect())
                .collect()),
            Weights::Matrix(w) => {
                if w.len() != m || w.iter().any(|r| r.len() != m) {
                    return Err(Error::validation(key, format!("expected an {m} x {m} matrix")));
                }
                Ok(w.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AssetEntry {
    name: String,
    fundamental_price: f64,
    adjustment_timescale: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RatesEntry {
    form: RateForm,
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline_buy: Option<PerAsset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trend_amplitude: Option<PerAsset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trend_weights: Option<Weights>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value_weights: Option<Weights>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value_baseline: Option<PerAsset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value_slope: Option<PerAsset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline_sell: Option<PerAsset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sell_trend_amplitude: Option<PerAsset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sell_value_slope: Option<PerAsset>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupEntry {
    name: String,
    cash: f64,
    shares: PerAsset,
    #[serde(skip_serializing_if = "Option::is_none")]
    q1: Option<PerAsset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q2: Option<PerAsset>,
    c1: PerAsset,
    c2: PerAsset,
    rates: RatesEntry,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct InitialEntry {
    #[serde(skip_serializing_if = "Option::is_none")]
    prices: Option<PerAsset>,
    /// zeta1[asset][group]
    #[serde(skip_serializing_if = "Option::is_none")]
    zeta1: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    zeta2: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunEntry {
    #[serde(skip_serializing_if = "Option::is_none")]
    t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sample_dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    transient_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rel_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    abs_tol: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScanEntry {
    parameter: String,
    lo: f64,
    hi: f64,
    points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_end: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioToml {
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<FlowMode>,
    assets: Vec<AssetEntry>,
    groups: Vec<GroupEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial: Option<InitialEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    run: Option<RunEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scan: Option<ScanEntry>,
}

/// Run options resolved from the `[run]` block.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub t_end: f64,
    pub transient_fraction: f64,
    pub sim: SimulateOpts,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            t_end: 1000.0,
            transient_fraction: 0.5,
            sim: SimulateOpts::default(),
        }
    }
}

/// A scan request carried by the scenario file.
#[derive(Debug, Clone)]
pub struct ScanRequest {
    pub parameter: String,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub t_end: f64,
}

/// A parsed, validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub spec: ModelSpec,
    pub initial_prices: Vec<f64>,
    pub initial_zeta1: Vec<Vec<f64>>,
    pub initial_zeta2: Vec<Vec<f64>>,
    pub run: RunOptions,
    pub scan: Option<ScanRequest>,
}

impl Scenario {
    /// Initial state in the spec's flow mode (endowments from the spec).
    pub fn initial_state(&self) -> State {
        let mut st = State::with_prices(&self.spec, &self.initial_prices);
        for i in 0..self.spec.n_assets() {
            for j in 0..self.spec.n_groups() {
                *st.zeta1_mut(i, j) = self.initial_zeta1[i][j];
                *st.zeta2_mut(i, j) = self.initial_zeta2[i][j];
            }
        }
        st
    }

    /// Validation plus a numerical sanity pass: when the spec is already
    /// calibrated, the fundamental equilibrium must be a genuine fixed
    /// point (residual below 1e-10).
    pub fn self_check(&self) -> Result<()> {
        self.spec.validate()?;
        let calibrated = crate::equilibrium::calibrate_shares(&self.spec)?;
        let already_calibrated = calibrated
            .groups
            .iter()
            .zip(&self.spec.groups)
            .all(|(a, b)| {
                a.shares
                    .iter()
                    .zip(&b.shares)
                    .all(|(x, y)| (x - y).abs() <= 1e-9 * y.abs().max(1.0))
            });
        if already_calibrated {
            let eq = crate::equilibrium::fundamental_equilibrium(&self.spec);
            if eq.residual_norm >= 1e-10 {
                return Err(Error::validation(
                    "self-check",
                    format!(
                        "calibrated scenario has fundamental residual {:.3e} >= 1e-10",
                        eq.residual_norm
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Serialize the fully resolved scenario (defaults applied, vectors
    /// expanded) back to TOML.
    pub fn to_toml(&self) -> String {
        let doc = ScenarioToml {
            name: Some(self.name.clone()),
            mode: Some(self.spec.flow_mode),
            assets: self
                .spec
                .assets
                .iter()
                .map(|a| AssetEntry {
                    name: a.name.clone(),
                    fundamental_price: a.fundamental_price,
                    adjustment_timescale: a.adjustment_timescale,
                })
                .collect(),
            groups: self
                .spec
                .groups
                .iter()
                .map(|g| GroupEntry {
                    name: g.name.clone(),
                    cash: g.cash,
                    shares: PerAsset::Vector(g.shares.clone()),
                    q1: Some(PerAsset::Vector(g.trend_magnitude.clone())),
                    q2: Some(PerAsset::Vector(g.value_magnitude.clone())),
                    c1: PerAsset::Vector(g.trend_timescale.clone()),
                    c2: PerAsset::Vector(g.value_timescale.clone()),
                    rates: RatesEntry {
                        form: g.rates.form,
                        baseline_buy: Some(PerAsset::Vector(g.rates.baseline_buy.clone())),
                        trend_amplitude: Some(PerAsset::Vector(g.rates.trend_amplitude.clone())),
                        trend_weights: Some(Weights::Matrix(g.rates.trend_weights.clone())),
                        value_weights: Some(Weights::Matrix(g.rates.value_weights.clone())),
                        value_baseline: Some(PerAsset::Vector(g.rates.value_baseline.clone())),
                        value_slope: Some(PerAsset::Vector(g.rates.value_slope.clone())),
                        baseline_sell: Some(PerAsset::Vector(g.rates.baseline_sell.clone())),
                        sell_trend_amplitude: Some(PerAsset::Vector(
                            g.rates.sell_trend_amplitude.clone(),
                        )),
                        sell_value_slope: Some(PerAsset::Vector(g.rates.sell_value_slope.clone())),
                    },
                })
                .collect(),
            initial: Some(InitialEntry {
                prices: Some(PerAsset::Vector(self.initial_prices.clone())),
                zeta1: Some(self.initial_zeta1.clone()),
                zeta2: Some(self.initial_zeta2.clone()),
            }),
            run: Some(RunEntry {
                t_end: Some(self.run.t_end),
                sample_dt: Some(self.run.sim.sample_dt),
                transient_fraction: Some(self.run.transient_fraction),
                rel_tol: Some(self.run.sim.rel_tol),
                abs_tol: Some(self.run.sim.abs_tol),
            }),
            scan: self.scan.as_ref().map(|s| ScanEntry {
                parameter: s.parameter.clone(),
                lo: s.lo,
                hi: s.hi,
                points: s.points,
                t_end: Some(s.t_end),
            }),
        };
        toml::to_string_pretty(&doc).expect("scenario serialization cannot fail")
    }
}

fn resolve(doc: ScenarioToml, origin: &str) -> Result<Scenario> {
    let m = doc.assets.len();
    let assets: Vec<AssetSpec> = doc
        .assets
        .iter()
        .map(|a| AssetSpec {
            name: a.name.clone(),
            fundamental_price: a.fundamental_price,
            adjustment_timescale: a.adjustment_timescale,
        })
        .collect();
    let mut groups = Vec::with_capacity(doc.groups.len());
    for g in &doc.groups {
        let key = |f: &str| format!("groups.{}.{f}", g.name);
        let r = &g.rates;
        let rates = RateSpec {
            form: r.form,
            baseline_buy: opt(&r.baseline_buy, m, &key("rates.baseline_buy"))?,
            trend_amplitude: opt(&r.trend_amplitude, m, &key("rates.trend_amplitude"))?,
            trend_weights: match &r.trend_weights {
                Some(w) => w.resolve(m, &key("rates.trend_weights"))?,
                None => Weights::Scalar(1.0).resolve(m, "")?,
            },
            value_weights: match &r.value_weights {
                Some(w) => w.resolve(m, &key("rates.value_weights"))?,
                None => vec![vec![0.0; m]; m],
            },
            value_baseline: opt(&r.value_baseline, m, &key("rates.value_baseline"))?,
            value_slope: opt(&r.value_slope, m, &key("rates.value_slope"))?,
            baseline_sell: opt(&r.baseline_sell, m, &key("rates.baseline_sell"))?,
            sell_trend_amplitude: opt(&r.sell_trend_amplitude, m, &key("rates.sell_trend_amplitude"))?,
            sell_value_slope: opt(&r.sell_value_slope, m, &key("rates.sell_value_slope"))?,
        };
        groups.push(GroupSpec {
            name: g.name.clone(),
            cash: g.cash,
            shares: g.shares.resolve(m, &key("shares"))?,
            trend_magnitude: opt(&g.q1, m, &key("q1"))?,
            value_magnitude: opt(&g.q2, m, &key("q2"))?,
            trend_timescale: g.c1.resolve(m, &key("c1"))?,
            value_timescale: g.c2.resolve(m, &key("c2"))?,
            rates,
        });
    }
    let spec = ModelSpec {
        assets,
        groups,
        flow_mode: doc.mode.unwrap_or(FlowMode::ClosedFlow),
    };
    spec.validate()?;

    let initial = doc.initial.unwrap_or_default();
    let initial_prices = match &initial.prices {
        Some(p) => {
            let v = p.resolve(m, "initial.prices")?;
            if v.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::validation("initial.prices", "must be > 0"));
            }
            v
        }
        None => spec.assets.iter().map(|a| a.fundamental_price).collect(),
    };
    let n = spec.n_groups();
    let zeta = |z: &Option<Vec<Vec<f64>>>, key: &str| -> Result<Vec<Vec<f64>>> {
        match z {
            None => Ok(vec![vec![0.0; n]; m]),
            Some(rows) => {
                if rows.len() != m || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::validation(
                        key,
                        format!("expected {m} rows of {n} per-group entries"),
                    ));
                }
                Ok(rows.clone())
            }
        }
    };
    let initial_zeta1 = zeta(&initial.zeta1, "initial.zeta1")?;
    let initial_zeta2 = zeta(&initial.zeta2, "initial.zeta2")?;

    let mut run = RunOptions::default();
    if let Some(r) = &doc.run {
        if let Some(v) = r.t_end {
            if !(v > 0.0) {
                return Err(Error::validation("run.t_end", "must be > 0"));
            }
            run.t_end = v;
        }
        if let Some(v) = r.sample_dt {
            if !(v > 0.0) {
                return Err(Error::validation("run.sample_dt", "must be > 0"));
            }
            run.sim.sample_dt = v;
        }
        if let Some(v) = r.transient_fraction {
            if !(0.0..=0.9).contains(&v) {
                return Err(Error::validation("run.transient_fraction", "must lie in [0, 0.9]"));
            }
            run.transient_fraction = v;
        }
        if let Some(v) = r.rel_tol {
            run.sim.rel_tol = v;
        }
        if let Some(v) = r.abs_tol {
            run.sim.abs_tol = v;
        }
    }
    let scan = match doc.scan {
        None => None,
        Some(s) => {
            crate::bifurcation::ParamPath::parse(&s.parameter)?;
            if !(s.lo < s.hi) || s.points < 2 {
                return Err(Error::validation("scan", "need lo < hi and points >= 2"));
            }
            Some(ScanRequest {
                parameter: s.parameter,
                lo: s.lo,
                hi: s.hi,
                points: s.points,
                t_end: s.t_end.unwrap_or(2000.0),
            })
        }
    };
    Ok(Scenario {
        name: doc.name.unwrap_or_else(|| origin.to_string()),
        spec,
        initial_prices,
        initial_zeta1,
        initial_zeta2,
        run,
        scan,
    })
}

fn opt(field: &Option<PerAsset>, m: usize, key: &str) -> Result<Vec<f64>> {
    match field {
        Some(p) => p.resolve(m, key),
        None => Ok(vec![0.0; m]),
    }
}

/// Parse scenario TOML text.
pub fn parse_scenario(text: &str, origin: &str) -> Result<Scenario> {
    let doc: ScenarioToml = toml::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    resolve(doc, origin)
}

/// Load a scenario from a file path or a bundled name
/// (`oil_nigeria_libya`, `gas_market`). The gas market is generated from
/// `seed`.
pub fn load_scenario(path_or_name: &str, seed: u64) -> Result<Scenario> {
    match path_or_name {
        OIL_SCENARIO_NAME => parse_scenario(OIL_SCENARIO_TOML, OIL_SCENARIO_NAME),
        GAS_SCENARIO_NAME => Ok(gas_market(seed)),
        path => {
            let text = std::fs::read_to_string(Path::new(path))
                .map_err(|e| Error::io(format!("reading scenario `{path}`"), e))?;
            parse_scenario(&text, path)
        }
    }
}

/// Synthetic gas market: 10 assets, 20 groups (half value investors, half
/// momentum traders), generated deterministically from a seed.
///
/// Parameter ranges: Pa in [3, 9], tau in [0.5, 2], cash in [5e6, 25e6],
/// value groups q2 in [0.2, 0.5] with c1 in [0.05, 0.15] and c2 in
/// [0.1, 0.35]; momentum groups q1 = 0.3 with c1 in [0.1, 0.3] and own
/// trend weight in [4, 12] (cross weights a quarter of that, split over
/// the other assets). Baselines k0 = 0.2, b = 0.15, d = 0.2 throughout;
/// shares start near cash-value parity with +-50% jitter and are
/// calibrated per asset.
pub fn gas_market(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = 10usize;
    let n = 20usize;
    let assets: Vec<AssetSpec> = (0..m)
        .map(|i| AssetSpec {
            name: format!("gas{:02}", i + 1),
            fundamental_price: rng.gen_range(3.0..9.0),
            adjustment_timescale: rng.gen_range(0.5..2.0),
        })
        .collect();
    let mut groups = Vec::with_capacity(n);
    for j in 0..n {
        let momentum = j >= n / 2;
        let cash = rng.gen_range(5.0e6..25.0e6);
        let shares: Vec<f64> = (0..m)
            .map(|i| cash / assets[i].fundamental_price / m as f64 * rng.gen_range(0.5..1.5))
            .collect();
        let mut rates = RateSpec::zeros(
            if momentum {
                RateForm::TrendTanh
            } else {
                RateForm::ValueLinear
            },
            m,
        );
        rates.baseline_sell = vec![0.2; m];
        let (q1, q2, c1, c2);
        if momentum {
            rates.baseline_buy = vec![0.2; m];
            rates.trend_amplitude = vec![0.15; m];
            rates.sell_trend_amplitude = vec![0.15; m];
            let own = rng.gen_range(4.0..12.0);
            let cross = 0.25 * own / (m as f64 - 1.0);
            rates.trend_weights = (0..m)
                .map(|i| {
                    (0..m)
                        .map(|l| if i == l { own } else { cross })
                        .collect()
                })
                .collect();
            q1 = vec![0.3; m];
            q2 = vec![0.0; m];
            c1 = vec![rng.gen_range(0.1..0.3); m];
            c2 = vec![0.15; m];
        } else {
            rates.value_baseline = vec![0.2; m];
            rates.value_slope = vec![0.2; m];
            rates.sell_value_slope = vec![0.2; m];
            q1 = vec![0.0; m];
            q2 = vec![rng.gen_range(0.2..0.5); m];
            c1 = vec![rng.gen_range(0.05..0.15); m];
            c2 = vec![rng.gen_range(0.1..0.35); m];
        }
        groups.push(GroupSpec {
            name: format!(
                "{}{:02}",
                if momentum { "momentum" } else { "value" },
                j % (n / 2) + 1
            ),
            cash,
            shares,
            trend_magnitude: q1,
            value_magnitude: q2,
            trend_timescale: c1,
            value_timescale: c2,
            rates,
        });
    }
    let spec = ModelSpec {
        assets,
        groups,
        flow_mode: FlowMode::ClosedFlow,
    };
    let spec = crate::equilibrium::calibrate_shares(&spec).expect("gas market calibrates");
    let initial_prices: Vec<f64> = spec
        .assets
        .iter()
        .map(|a| a.fundamental_price * rng.gen_range(0.98..1.02))
        .collect();
    let (m, n) = (spec.n_assets(), spec.n_groups());
    Scenario {
        name: GAS_SCENARIO_NAME.to_string(),
        spec,
        initial_prices,
        initial_zeta1: vec![vec![0.0; n]; m],
        initial_zeta2: vec![vec![0.0; n]; m],
        run: RunOptions {
            t_end: 1000.0,
            transient_fraction: 0.5,
            sim: SimulateOpts {
                sample_dt: 0.25,
                ..Default::default()
            },
        },
        scan: None,
    }
}
