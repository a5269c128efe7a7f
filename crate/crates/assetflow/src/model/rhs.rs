//! Right-hand side of the coupled price/sentiment ODE system and the
//! wealth functional.

use super::rates::eval_group_rates;
use super::spec::{FlowMode, ModelSpec};
use super::state::State;
use crate::error::{Error, Result};

/// Trend sentiment drift: c1*q1*v - c1*zeta1, with v the relative price
/// velocity (1/P) dP/dt.
pub fn trend_sentiment_rhs(zeta1: f64, rel_price_velocity: f64, c1: f64, q1: f64) -> f64 {
    c1 * q1 * rel_price_velocity - c1 * zeta1
}

/// Value sentiment drift: c2*q2*(1 - P/Pa) - c2*zeta2.
pub fn value_sentiment_rhs(zeta2: f64, price: f64, fundamental: f64, c2: f64, q2: f64) -> Result<f64> {
    if !(fundamental > 0.0) {
        return Err(Error::validation("fundamental_price", "must be > 0"));
    }
    Ok(c2 * q2 * (1.0 - price / fundamental) - c2 * zeta2)
}

/// Final (clamped, budget-rescaled) buy rate of `group_j` for `asset_i` at
/// the given state.
pub fn buy_rate(spec: &ModelSpec, group_j: usize, asset_i: usize, state: &State) -> f64 {
    let (z1, z2) = state.group_sentiments(group_j);
    eval_group_rates(&spec.groups[group_j], &z1, &z2).buy[asset_i]
}

/// Final sell rate of `group_j` for `asset_i`; reads only that asset's
/// sentiments.
pub fn sell_rate(spec: &ModelSpec, group_j: usize, asset_i: usize, state: &State) -> f64 {
    let (z1, z2) = state.group_sentiments(group_j);
    eval_group_rates(&spec.groups[group_j], &z1, &z2).sell[asset_i]
}

/// Cash inflow S_i and stock outflow T_i for asset i given per-group rates.
fn flows(
    spec: &ModelSpec,
    state: &State,
    asset_i: usize,
    group_rates: &[super::rates::GroupRates],
) -> (f64, f64) {
    let mut s = 0.0;
    let mut t = 0.0;
    let p = state.price(asset_i);
    for j in 0..spec.n_groups() {
        s += group_rates[j].buy[asset_i] * state.cash(spec, j);
        t += group_rates[j].sell[asset_i] * state.shares(spec, asset_i, j) * p;
    }
    (s, t)
}

fn degenerate_guard(spec: &ModelSpec, state: &State, asset_i: usize, t_flow: f64) -> Result<()> {
    // Scale-free guard: compare against the full mark-to-market stock.
    let p = state.price(asset_i);
    let stock: f64 = (0..spec.n_groups())
        .map(|j| state.shares(spec, asset_i, j) * p)
        .sum();
    if t_flow <= 1e-12 * stock {
        return Err(Error::DegenerateMarket {
            asset: asset_i,
            time: None,
        });
    }
    Ok(())
}

/// Price drift of one asset: (P/tau)(S/T - 1).
pub fn price_rhs(spec: &ModelSpec, state: &State, asset_i: usize) -> Result<f64> {
    let group_rates: Vec<_> = (0..spec.n_groups())
        .map(|j| {
            let (z1, z2) = state.group_sentiments(j);
            eval_group_rates(&spec.groups[j], &z1, &z2)
        })
        .collect();
    let (s, t) = flows(spec, state, asset_i, &group_rates);
    degenerate_guard(spec, state, asset_i, t)?;
    let p = state.price(asset_i);
    Ok(p / spec.assets[asset_i].adjustment_timescale * (s / t - 1.0))
}

/// Full system drift, written into `out` (same layout as the state).
///
/// Price drifts are evaluated first; the resulting relative velocities
/// (1/P) dP/dt are then substituted into the trend sentiment equations, so
/// the system stays explicit. Closed-flow mode appends the cash and share
/// flows.
pub fn system_rhs_into(spec: &ModelSpec, state: &State, out: &mut [f64]) -> Result<()> {
    let (m, n) = (spec.n_assets(), spec.n_groups());
    debug_assert_eq!(out.len(), state.dim());

    let group_rates: Vec<_> = (0..n)
        .map(|j| {
            let (z1, z2) = state.group_sentiments(j);
            eval_group_rates(&spec.groups[j], &z1, &z2)
        })
        .collect();

    let mut rel_velocity = vec![0.0; m];
    for i in 0..m {
        let (s, t) = flows(spec, state, i, &group_rates);
        degenerate_guard(spec, state, i, t)?;
        let tau = spec.assets[i].adjustment_timescale;
        rel_velocity[i] = (s / t - 1.0) / tau;
        out[state.idx_price(i)] = state.price(i) * rel_velocity[i];
    }

    for i in 0..m {
        let pa = spec.assets[i].fundamental_price;
        let p = state.price(i);
        for j in 0..n {
            let g = &spec.groups[j];
            out[state.idx_zeta1(i, j)] = trend_sentiment_rhs(
                state.zeta1(i, j),
                rel_velocity[i],
                g.trend_timescale[i],
                g.trend_magnitude[i],
            );
            out[state.idx_zeta2(i, j)] =
                value_sentiment_rhs(state.zeta2(i, j), p, pa, g.value_timescale[i], g.value_magnitude[i])?;
        }
    }

    if state.mode() == FlowMode::ClosedFlow {
        // Trades execute at the matched volume min(S, T): the short side
        // fills completely, the long side pro-rata. This conserves the
        // total shares of every asset and total cash exactly, and it
        // coincides with the unmatched per-group flows whenever S = T.
        for j in 0..n {
            out[state.idx_cash(j)] = 0.0;
        }
        for i in 0..m {
            let (s, t) = flows(spec, state, i, &group_rates);
            let buy_fill = (t / s).min(1.0);
            let sell_fill = (s / t).min(1.0);
            let p = state.price(i);
            for j in 0..n {
                let bought = group_rates[j].buy[i] * state.cash(spec, j) * buy_fill;
                let sold = group_rates[j].sell[i] * state.shares(spec, i, j) * p * sell_fill;
                out[state.idx_shares(i, j)] = (bought - sold) / p;
                out[state.idx_cash(j)] += sold - bought;
            }
        }
    }
    Ok(())
}

/// Full system drift as a fresh vector.
pub fn system_rhs(spec: &ModelSpec, state: &State) -> Result<Vec<f64>> {
    let mut out = vec![0.0; state.dim()];
    system_rhs_into(spec, state, &mut out)?;
    Ok(out)
}

/// Wealth share of every group: (M_j + sum_i N_j^i P^i) / total.
pub fn wealth_fractions(spec: &ModelSpec, state: &State) -> Result<Vec<f64>> {
    let (m, n) = (spec.n_assets(), spec.n_groups());
    let mut w = vec![0.0; n];
    for j in 0..n {
        let stock: f64 = (0..m).map(|i| state.shares(spec, i, j) * state.price(i)).sum();
        w[j] = state.cash(spec, j) + stock;
    }
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::validation("wealth", "total wealth must be > 0"));
    }
    for x in &mut w {
        *x /= total;
    }
    Ok(w)
}
