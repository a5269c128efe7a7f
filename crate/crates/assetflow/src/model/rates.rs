//! Transition-rate evaluation.
//!
//! Buy rates may read every asset's sentiment of the owning group; sell
//! rates read only the sold asset's sentiments. Raw rates are clamped to
//! [0, 1] and the buy side is rescaled so the per-group total stays <= 1.

use super::spec::{GroupSpec, RateForm, RateSpec};

/// Evaluated buy/sell rates of one group, one entry per asset.
#[derive(Debug, Clone)]
pub struct GroupRates {
    pub buy: Vec<f64>,
    pub sell: Vec<f64>,
}

/// Analytic partial derivatives of one group's rates with respect to that
/// group's own sentiments (rates never depend on other groups' sentiments).
#[derive(Debug, Clone)]
pub struct GroupRatePartials {
    /// d buy[i] / d zeta1[l], m x m.
    pub dbuy_dz1: Vec<Vec<f64>>,
    /// d buy[i] / d zeta2[l], m x m.
    pub dbuy_dz2: Vec<Vec<f64>>,
    /// d sell[i] / d zeta1[i] (own asset only).
    pub dsell_dz1: Vec<f64>,
    /// d sell[i] / d zeta2[i] (own asset only).
    pub dsell_dz2: Vec<f64>,
    /// True when a clamp or the budget boundary is exactly active at the
    /// evaluation point; partials then use the interior one-sided value.
    pub nondifferentiable: bool,
}

fn uses_trend(form: RateForm) -> bool {
    matches!(form, RateForm::TrendTanh | RateForm::Composite)
}

fn uses_value(form: RateForm) -> bool {
    matches!(form, RateForm::ValueLinear | RateForm::Composite)
}

/// Raw (pre-clamp) buy rate of asset i plus its tanh argument.
fn raw_buy(r: &RateSpec, i: usize, z1: &[f64], z2: &[f64]) -> (f64, f64) {
    let base = match r.form {
        RateForm::TrendTanh | RateForm::Composite => r.baseline_buy[i],
        RateForm::ValueLinear => r.value_baseline[i],
    };
    let mut v = base;
    let mut u = 0.0;
    if uses_trend(r.form) {
        for l in 0..z1.len() {
            u += r.trend_weights[i][l] * z1[l] + r.value_weights[i][l] * z2[l];
        }
        v += r.trend_amplitude[i] * u.tanh();
    }
    if uses_value(r.form) {
        v += r.value_slope[i] * z2[i];
    }
    (v, u)
}

/// Raw (pre-clamp) sell rate of asset i plus its tanh argument. Only the
/// own asset's sentiments enter.
fn raw_sell(r: &RateSpec, i: usize, z1_own: f64, z2_own: f64) -> (f64, f64) {
    let mut v = r.baseline_sell[i];
    let mut u = 0.0;
    if uses_trend(r.form) {
        u = r.trend_weights[i][i] * z1_own + r.value_weights[i][i] * z2_own;
        v -= r.sell_trend_amplitude[i] * u.tanh();
    }
    if uses_value(r.form) {
        v -= r.sell_value_slope[i] * z2_own;
    }
    (v, u)
}

fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

fn on_boundary(v: f64) -> bool {
    v == 0.0 || v == 1.0
}

/// Evaluate one group's buy and sell rates given its sentiments toward all
/// assets (slices of length m).
pub fn eval_group_rates(group: &GroupSpec, z1: &[f64], z2: &[f64]) -> GroupRates {
    let r = &group.rates;
    let m = z1.len();
    let mut buy: Vec<f64> = (0..m).map(|i| clamp01(raw_buy(r, i, z1, z2).0)).collect();
    let sell: Vec<f64> = (0..m)
        .map(|i| clamp01(raw_sell(r, i, z1[i], z2[i]).0))
        .collect();
    let total: f64 = buy.iter().sum();
    if total > 1.0 {
        for b in &mut buy {
            *b /= total;
        }
    }
    GroupRates { buy, sell }
}

/// Rates together with their analytic sentiment partials, for the Jacobian.
pub fn eval_group_rates_with_partials(
    group: &GroupSpec,
    z1: &[f64],
    z2: &[f64],
) -> (GroupRates, GroupRatePartials) {
    let r = &group.rates;
    let m = z1.len();
    let mut nondiff = false;

    let mut buy_clamped = vec![0.0; m];
    let mut dbuy_dz1 = vec![vec![0.0; m]; m];
    let mut dbuy_dz2 = vec![vec![0.0; m]; m];
    for i in 0..m {
        let (raw, u) = raw_buy(r, i, z1, z2);
        buy_clamped[i] = clamp01(raw);
        if on_boundary(raw) {
            nondiff = true;
        }
        // Interior (one-sided at an exactly active clamp) derivative; zero
        // strictly outside the clamp region.
        if (0.0..=1.0).contains(&raw) {
            let sech2 = 1.0 - u.tanh() * u.tanh();
            for l in 0..m {
                if uses_trend(r.form) {
                    dbuy_dz1[i][l] = r.trend_amplitude[i] * sech2 * r.trend_weights[i][l];
                    dbuy_dz2[i][l] = r.trend_amplitude[i] * sech2 * r.value_weights[i][l];
                }
                if uses_value(r.form) && l == i {
                    dbuy_dz2[i][l] += r.value_slope[i];
                }
            }
        }
    }

    let mut sell = vec![0.0; m];
    let mut dsell_dz1 = vec![0.0; m];
    let mut dsell_dz2 = vec![0.0; m];
    for i in 0..m {
        let (raw, u) = raw_sell(r, i, z1[i], z2[i]);
        sell[i] = clamp01(raw);
        if on_boundary(raw) {
            nondiff = true;
        }
        if (0.0..=1.0).contains(&raw) {
            let sech2 = 1.0 - u.tanh() * u.tanh();
            if uses_trend(r.form) {
                dsell_dz1[i] = -r.sell_trend_amplitude[i] * sech2 * r.trend_weights[i][i];
                dsell_dz2[i] = -r.sell_trend_amplitude[i] * sech2 * r.value_weights[i][i];
            }
            if uses_value(r.form) {
                dsell_dz2[i] -= r.sell_value_slope[i];
            }
        }
    }

    // Budget constraint: if the clamped buys sum past 1, rescale
    // proportionally; the quotient rule couples every buy partial to the
    // whole row sums.
    let total: f64 = buy_clamped.iter().sum();
    if total == 1.0 {
        nondiff = true;
    }
    let buy = if total > 1.0 {
        let col_sums_z1: Vec<f64> = (0..m)
            .map(|l| (0..m).map(|i| dbuy_dz1[i][l]).sum())
            .collect();
        let col_sums_z2: Vec<f64> = (0..m)
            .map(|l| (0..m).map(|i| dbuy_dz2[i][l]).sum())
            .collect();
        let mut scaled = vec![0.0; m];
        let mut d1 = vec![vec![0.0; m]; m];
        let mut d2 = vec![vec![0.0; m]; m];
        for i in 0..m {
            scaled[i] = buy_clamped[i] / total;
            for l in 0..m {
                d1[i][l] = (dbuy_dz1[i][l] * total - buy_clamped[i] * col_sums_z1[l])
                    / (total * total);
                d2[i][l] = (dbuy_dz2[i][l] * total - buy_clamped[i] * col_sums_z2[l])
                    / (total * total);
            }
        }
        dbuy_dz1 = d1;
        dbuy_dz2 = d2;
        scaled
    } else {
        buy_clamped
    };

    (
        GroupRates { buy, sell },
        GroupRatePartials {
            dbuy_dz1,
            dbuy_dz2,
            dsell_dz1,
            dsell_dz2,
            nondifferentiable: nondiff,
        },
    )
}
