//! Model parameterization: assets, investor groups, and transition-rate
//! specifications.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// One tradable asset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssetSpec {
    pub name: String,
    /// Fundamental value `Pa` (currency per unit, > 0).
    pub fundamental_price: f64,
    /// Price adjustment timescale `tau` (time, > 0).
    pub adjustment_timescale: f64,
}

/// Functional form of a group's transition rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateForm {
    /// Buy = a + b*tanh(sum of weighted sentiments); sell mirrors with the
    /// own asset's sentiments only.
    TrendTanh,
    /// Buy = c + d*zeta2_own; sell = a~ - d~*zeta2_own.
    ValueLinear,
    /// Baseline plus both modulations.
    Composite,
}

/// Transition-rate coefficients for one group. All per-asset vectors have
/// length m; weight matrices are m x m (row = rated asset, column = the
/// asset whose sentiment enters the argument).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateSpec {
    pub form: RateForm,
    /// Baseline buy rate a (probability/time).
    pub baseline_buy: Vec<f64>,
    /// Trend modulation amplitude b.
    pub trend_amplitude: Vec<f64>,
    /// Trend sentiment weights alpha[i][l] inside the tanh argument.
    pub trend_weights: Vec<Vec<f64>>,
    /// Value sentiment weights beta[i][l] inside the tanh argument.
    pub value_weights: Vec<Vec<f64>>,
    /// Baseline for the value-linear buy rate c.
    pub value_baseline: Vec<f64>,
    /// Linear value modulation slope d.
    pub value_slope: Vec<f64>,
    /// Baseline sell rate a~.
    pub baseline_sell: Vec<f64>,
    /// Sell-side trend modulation amplitude b~.
    pub sell_trend_amplitude: Vec<f64>,
    /// Sell-side linear value slope d~.
    pub sell_value_slope: Vec<f64>,
}

impl RateSpec {
    /// All-zero coefficients for m assets (rates identically equal to the
    /// baselines).
    pub fn zeros(form: RateForm, m: usize) -> Self {
        RateSpec {
            form,
            baseline_buy: vec![0.0; m],
            trend_amplitude: vec![0.0; m],
            trend_weights: vec![vec![0.0; m]; m],
            value_weights: vec![vec![0.0; m]; m],
            value_baseline: vec![0.0; m],
            value_slope: vec![0.0; m],
            baseline_sell: vec![0.0; m],
            sell_trend_amplitude: vec![0.0; m],
            sell_value_slope: vec![0.0; m],
        }
    }
}

/// One investor group: endowment plus sentiment and rate parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupSpec {
    pub name: String,
    /// Cash endowment M (>= 0).
    pub cash: f64,
    /// Share endowment N[i] per asset (>= 0).
    pub shares: Vec<f64>,
    /// Trend sentiment magnitude q1[i] (>= 0).
    pub trend_magnitude: Vec<f64>,
    /// Value sentiment magnitude q2[i] (>= 0).
    pub value_magnitude: Vec<f64>,
    /// Trend sentiment decay rate c1[i] (1/time, > 0).
    pub trend_timescale: Vec<f64>,
    /// Value sentiment decay rate c2[i] (1/time, > 0).
    pub value_timescale: Vec<f64>,
    pub rates: RateSpec,
}

/// Whether cash and shares are fixed parameters or evolve through trades.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowMode {
    /// M and N are constants of the model (matches the linear stability
    /// analysis).
    FixedEndowment,
    /// M and N evolve via the trading flows; totals are conserved.
    ClosedFlow,
}

/// Full model parameterization: m assets traded by n investor groups.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSpec {
    pub assets: Vec<AssetSpec>,
    pub groups: Vec<GroupSpec>,
    pub flow_mode: FlowMode,
}

fn valid_name(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl ModelSpec {
    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    /// Number of state variables: m + 2mn, plus n + mn in closed-flow mode.
    pub fn state_dim(&self) -> usize {
        let (m, n) = (self.n_assets(), self.n_groups());
        let base = m + 2 * m * n;
        match self.flow_mode {
            FlowMode::FixedEndowment => base,
            FlowMode::ClosedFlow => base + n + m * n,
        }
    }

    pub fn asset_index(&self, name: &str) -> Option<usize> {
        self.assets.iter().position(|a| a.name == name)
    }

    pub fn group_index(&self, name: &str) -> Option<usize> {
        self.groups.iter().position(|g| g.name == name)
    }

    pub fn with_flow_mode(mut self, mode: FlowMode) -> Self {
        self.flow_mode = mode;
        self
    }

    /// Check every structural invariant; returns the first violation.
    pub fn validate(&self) -> Result<()> {
        let m = self.n_assets();
        if m == 0 {
            return Err(Error::validation("assets", "need at least one asset"));
        }
        if self.groups.is_empty() {
            return Err(Error::validation("groups", "need at least one group"));
        }
        for (i, a) in self.assets.iter().enumerate() {
            let key = |f: &str| format!("assets[{i}].{f}");
            if !valid_name(&a.name) {
                return Err(Error::validation(
                    key("name"),
                    "names must be non-empty and use only [A-Za-z0-9_-]",
                ));
            }
            if !(a.fundamental_price > 0.0) {
                return Err(Error::validation(key("fundamental_price"), "must be > 0"));
            }
            if !(a.adjustment_timescale > 0.0) {
                return Err(Error::validation(key("adjustment_timescale"), "must be > 0"));
            }
        }
        for i in 0..m {
            for k in i + 1..m {
                if self.assets[i].name == self.assets[k].name {
                    return Err(Error::validation(
                        format!("assets[{k}].name"),
                        "duplicate asset name",
                    ));
                }
            }
        }
        for (j, g) in self.groups.iter().enumerate() {
            let key = |f: &str| format!("groups[{j}].{f}");
            if !valid_name(&g.name) {
                return Err(Error::validation(
                    key("name"),
                    "names must be non-empty and use only [A-Za-z0-9_-]",
                ));
            }
            if !(g.cash >= 0.0) {
                return Err(Error::validation(key("cash"), "must be >= 0"));
            }
            let vecs: [(&str, &Vec<f64>); 5] = [
                ("shares", &g.shares),
                ("trend_magnitude", &g.trend_magnitude),
                ("value_magnitude", &g.value_magnitude),
                ("trend_timescale", &g.trend_timescale),
                ("value_timescale", &g.value_timescale),
            ];
            for (name, v) in vecs {
                if v.len() != m {
                    return Err(Error::validation(
                        key(name),
                        format!("expected {m} per-asset entries, got {}", v.len()),
                    ));
                }
            }
            if g.shares.iter().any(|&x| !(x >= 0.0)) {
                return Err(Error::validation(key("shares"), "must be >= 0"));
            }
            if g.trend_magnitude.iter().any(|&x| !(x >= 0.0)) {
                return Err(Error::validation(key("trend_magnitude"), "q1 must be >= 0"));
            }
            if g.value_magnitude.iter().any(|&x| !(x >= 0.0)) {
                return Err(Error::validation(key("value_magnitude"), "q2 must be >= 0"));
            }
            if g.trend_timescale.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::validation(key("trend_timescale"), "c1 must be > 0"));
            }
            if g.value_timescale.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::validation(key("value_timescale"), "c2 must be > 0"));
            }
            let r = &g.rates;
            let rate_vecs: [(&str, &Vec<f64>); 7] = [
                ("rates.baseline_buy", &r.baseline_buy),
                ("rates.trend_amplitude", &r.trend_amplitude),
                ("rates.value_baseline", &r.value_baseline),
                ("rates.value_slope", &r.value_slope),
                ("rates.baseline_sell", &r.baseline_sell),
                ("rates.sell_trend_amplitude", &r.sell_trend_amplitude),
                ("rates.sell_value_slope", &r.sell_value_slope),
            ];
            for (name, v) in rate_vecs {
                if v.len() != m {
                    return Err(Error::validation(
                        key(name),
                        format!("expected {m} per-asset entries, got {}", v.len()),
                    ));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::validation(key(name), "entries must be finite"));
                }
            }
            for (name, w) in [
                ("rates.trend_weights", &r.trend_weights),
                ("rates.value_weights", &r.value_weights),
            ] {
                if w.len() != m || w.iter().any(|row| row.len() != m) {
                    return Err(Error::validation(
                        key(name),
                        format!("expected an {m} x {m} weight matrix"),
                    ));
                }
                if w.iter().flatten().any(|x| !x.is_finite()) {
                    return Err(Error::validation(key(name), "entries must be finite"));
                }
            }
        }
        for j in 0..self.groups.len() {
            for k in j + 1..self.groups.len() {
                if self.groups[j].name == self.groups[k].name {
                    return Err(Error::validation(
                        format!("groups[{k}].name"),
                        "duplicate group name",
                    ));
                }
            }
        }
        Ok(())
    }
}
