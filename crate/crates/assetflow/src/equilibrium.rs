//! Fundamental equilibrium, the share calibration condition, and a damped
//! Newton solver for general price equilibria with sentiments eliminated.

use crate::error::{Error, Result};
use crate::model::{eval_group_rates, system_rhs, FlowMode, GroupRates, ModelSpec, State};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumKind {
    Fundamental,
    NonFundamental,
}

#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    /// Equilibrium state with stationary sentiments (fixed-endowment shape).
    pub state: State,
    /// Max-norm of the full system drift at `state` in fixed-endowment mode.
    pub residual_norm: f64,
    pub kind: EquilibriumKind,
    /// Per-asset imbalance sum_j k_j M_j - sum_j k~_j N_j P.
    pub per_asset_residuals: Vec<f64>,
    /// Newton iterations used (0 when the start already satisfied the
    /// tolerance).
    pub iterations: usize,
}

/// Rates of every group at zero sentiments.
pub fn baseline_rates(spec: &ModelSpec) -> Vec<GroupRates> {
    let m = spec.n_assets();
    let zeros = vec![0.0; m];
    spec.groups
        .iter()
        .map(|g| eval_group_rates(g, &zeros, &zeros))
        .collect()
}

/// State at the given prices with the stationary sentiment substitution
/// zeta1 = 0, zeta2 = q2 (1 - P/Pa).
pub fn stationary_state(spec: &ModelSpec, prices: &[f64]) -> State {
    let fixed = spec.clone().with_flow_mode(FlowMode::FixedEndowment);
    let mut st = State::with_prices(&fixed, prices);
    for i in 0..spec.n_assets() {
        let pa = spec.assets[i].fundamental_price;
        for j in 0..spec.n_groups() {
            let q2 = spec.groups[j].value_magnitude[i];
            *st.zeta2_mut(i, j) = q2 * (1.0 - prices[i] / pa);
        }
    }
    st
}

/// Per-asset residuals R_i = sum_j k_j M_j - sum_j k~_j N_j P_i with the
/// sentiments eliminated, plus the sell-side turnover T_i used for scaling.
pub fn equilibrium_residuals(spec: &ModelSpec, prices: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let st = stationary_state(spec, prices);
    let m = spec.n_assets();
    let rates: Vec<GroupRates> = (0..spec.n_groups())
        .map(|j| {
            let (z1, z2) = st.group_sentiments(j);
            eval_group_rates(&spec.groups[j], &z1, &z2)
        })
        .collect();
    let mut r = vec![0.0; m];
    let mut t = vec![0.0; m];
    for i in 0..m {
        let mut s_i = 0.0;
        let mut t_i = 0.0;
        for (j, g) in spec.groups.iter().enumerate() {
            s_i += rates[j].buy[i] * g.cash;
            t_i += rates[j].sell[i] * g.shares[i] * prices[i];
        }
        r[i] = s_i - t_i;
        t[i] = t_i;
    }
    (r, t)
}

fn result_at_prices(spec: &ModelSpec, prices: &[f64], iterations: usize) -> EquilibriumResult {
    let fixed = spec.clone().with_flow_mode(FlowMode::FixedEndowment);
    let state = stationary_state(&fixed, prices);
    let rhs = system_rhs(&fixed, &state).unwrap_or_else(|_| vec![f64::INFINITY; state.dim()]);
    let residual_norm = rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let (per_asset_residuals, _) = equilibrium_residuals(&fixed, prices);
    let rel_dev = prices
        .iter()
        .zip(&spec.assets)
        .map(|(p, a)| ((p - a.fundamental_price) / a.fundamental_price).abs())
        .fold(0.0f64, f64::max);
    EquilibriumResult {
        state,
        residual_norm,
        kind: if rel_dev <= 1e-8 {
            EquilibriumKind::Fundamental
        } else {
            EquilibriumKind::NonFundamental
        },
        per_asset_residuals,
        iterations,
    }
}

/// The fundamental point P = Pa with zero sentiments. Always constructible;
/// the residuals report how far the spec is from calibration.
pub fn fundamental_equilibrium(spec: &ModelSpec) -> EquilibriumResult {
    let prices: Vec<f64> = spec.assets.iter().map(|a| a.fundamental_price).collect();
    result_at_prices(spec, &prices, 0)
}

/// Rescale every group's holding of each asset by a common per-asset factor
/// so that sum_j k_j(0,0) M_j = sum_j k~_j(0,0) N_j Pa holds exactly. Group
/// proportions are preserved; calibrating twice is a no-op.
pub fn calibrate_shares(spec: &ModelSpec) -> Result<ModelSpec> {
    let rates = baseline_rates(spec);
    let mut out = spec.clone();
    for i in 0..spec.n_assets() {
        let pa = spec.assets[i].fundamental_price;
        let demand: f64 = spec
            .groups
            .iter()
            .enumerate()
            .map(|(j, g)| rates[j].buy[i] * g.cash)
            .sum();
        let supply: f64 = spec
            .groups
            .iter()
            .enumerate()
            .map(|(j, g)| rates[j].sell[i] * g.shares[i] * pa)
            .sum();
        if supply <= 0.0 {
            return Err(Error::CalibrationImpossible { asset: i });
        }
        let factor = demand / supply;
        for g in &mut out.groups {
            g.shares[i] *= factor;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub max_iters: usize,
    /// Converged when max_i |R_i| / T_i falls below this.
    pub tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            max_iters: 100,
            tol: 1e-10,
        }
    }
}

fn scaled_norm(residuals: &[f64], turnover: &[f64]) -> f64 {
    residuals
        .iter()
        .zip(turnover)
        .map(|(r, t)| (r / t.max(f64::MIN_POSITIVE)).abs())
        .fold(0.0, f64::max)
}

/// Damped Newton iteration on the m price residuals with sentiments
/// eliminated. The Newton matrix is a central finite-difference Jacobian of
/// the residuals (h = 1e-6 P); steps are halved while an iterate would
/// cross zero or the residual norm would grow, down to a floor of 2^-20.
pub fn solve_equilibrium(
    spec: &ModelSpec,
    initial_prices: &[f64],
    opts: NewtonOptions,
) -> Result<EquilibriumResult> {
    let m = spec.n_assets();
    assert_eq!(initial_prices.len(), m);
    if initial_prices.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::validation("initial_prices", "must be > 0"));
    }
    let mut prices = initial_prices.to_vec();
    let (mut res, turnover) = equilibrium_residuals(spec, &prices);
    let mut norm = scaled_norm(&res, &turnover);

    for iter in 0..opts.max_iters {
        if norm < opts.tol {
            return Ok(result_at_prices(spec, &prices, iter));
        }
        // Finite-difference Jacobian of the residuals.
        let mut jac = DMatrix::zeros(m, m);
        for k in 0..m {
            let h = 1e-6 * prices[k];
            let mut up = prices.clone();
            up[k] += h;
            let mut dn = prices.clone();
            dn[k] -= h;
            let (ru, _) = equilibrium_residuals(spec, &up);
            let (rd, _) = equilibrium_residuals(spec, &dn);
            for i in 0..m {
                jac[(i, k)] = (ru[i] - rd[i]) / (2.0 * h);
            }
        }
        let rhs = DVector::from_iterator(m, res.iter().map(|r| -r));
        let step = jac
            .lu()
            .solve(&rhs)
            .ok_or(Error::NoConvergence {
                what: "singular Newton matrix in equilibrium solve",
                iters: iter,
            })?;

        let mut lambda = 1.0f64;
        let floor = 2.0_f64.powi(-20);
        loop {
            let trial: Vec<f64> = prices
                .iter()
                .zip(step.iter())
                .map(|(p, s)| p + lambda * s)
                .collect();
            let positive = trial.iter().all(|&p| p > 0.0);
            if positive {
                let (r_t, t_t) = equilibrium_residuals(spec, &trial);
                let n_t = scaled_norm(&r_t, &t_t);
                if n_t <= norm || lambda <= floor {
                    prices = trial;
                    res = r_t;
                    norm = n_t;
                    break;
                }
            } else if lambda <= floor {
                return Err(Error::NonPositivePrice);
            }
            lambda *= 0.5;
        }
    }
    if norm < opts.tol {
        return Ok(result_at_prices(spec, &prices, opts.max_iters));
    }
    Err(Error::NoConvergence {
        what: "equilibrium Newton iteration",
        iters: opts.max_iters,
    })
}

/// Run the Newton solve from several starting points and keep the distinct
/// solutions (prices differing by more than 1e-6 relative).
pub fn solve_equilibrium_multistart(
    spec: &ModelSpec,
    starts: &[Vec<f64>],
    opts: NewtonOptions,
) -> Vec<EquilibriumResult> {
    use rayon::prelude::*;
    let mut found: Vec<EquilibriumResult> = starts
        .par_iter()
        .filter_map(|s| solve_equilibrium(spec, s, opts).ok())
        .collect();
    let mut kept: Vec<EquilibriumResult> = Vec::new();
    found.sort_by(|a, b| a.state.price(0).total_cmp(&b.state.price(0)));
    for cand in found {
        let dup = kept.iter().any(|k| {
            k.state
                .prices()
                .iter()
                .zip(cand.state.prices())
                .all(|(a, b)| (a - b).abs() <= 1e-6 * a.abs().max(1.0))
        });
        if !dup {
            kept.push(cand);
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::test_fixtures::oil_like_spec;
    use crate::model::{AssetSpec, GroupSpec, RateForm, RateSpec};
    use approx::assert_relative_eq;

    #[test]
    fn oil_spec_calibrates_to_total_cash_over_pa() {
        let spec = calibrate_shares(&oil_like_spec()).unwrap();
        for i in 0..2 {
            let total: f64 = spec.groups.iter().map(|g| g.shares[i]).sum();
            assert_relative_eq!(total, 35.5e6 / 80.0, max_relative = 1e-12);
        }
        let eq = fundamental_equilibrium(&spec);
        assert!(eq.residual_norm < 1e-10, "residual {}", eq.residual_norm);
        assert_eq!(eq.kind, EquilibriumKind::Fundamental);
    }

    #[test]
    fn calibration_is_idempotent_and_preserves_ratios() {
        let spec = oil_like_spec();
        let once = calibrate_shares(&spec).unwrap();
        let twice = calibrate_shares(&once).unwrap();
        for i in 0..2 {
            assert_relative_eq!(
                once.groups[0].shares[i],
                twice.groups[0].shares[i],
                max_relative = 1e-14
            );
            let before = spec.groups[0].shares[i] / spec.groups[1].shares[i];
            let after = once.groups[0].shares[i] / once.groups[1].shares[i];
            assert_relative_eq!(before, after, max_relative = 1e-14);
        }
    }

    #[test]
    fn halving_sell_baseline_doubles_share_totals() {
        let spec = oil_like_spec();
        let calibrated = calibrate_shares(&spec).unwrap();
        let mut halved = spec.clone();
        for g in &mut halved.groups {
            for b in &mut g.rates.baseline_sell {
                *b *= 0.5;
            }
        }
        let recal = calibrate_shares(&halved).unwrap();
        for i in 0..2 {
            let t0: f64 = calibrated.groups.iter().map(|g| g.shares[i]).sum();
            let t1: f64 = recal.groups.iter().map(|g| g.shares[i]).sum();
            assert_relative_eq!(t1, 2.0 * t0, max_relative = 1e-12);
        }
    }

    #[test]
    fn doubled_cash_residual_equals_baseline_demand() {
        let spec = calibrate_shares(&oil_like_spec()).unwrap();
        let mut doubled = spec.clone();
        for g in &mut doubled.groups {
            g.cash *= 2.0;
        }
        let eq = fundamental_equilibrium(&doubled);
        // residual per asset = sum_j k(0,0) M_j(original) = 0.2 * 35.5e6
        for r in &eq.per_asset_residuals {
            assert_relative_eq!(*r, 0.2 * 35.5e6, max_relative = 1e-12);
        }
    }

    #[test]
    fn newton_from_fundamental_converges_immediately() {
        let spec = calibrate_shares(&oil_like_spec()).unwrap();
        let eq = solve_equilibrium(&spec, &[80.0, 80.0], NewtonOptions::default()).unwrap();
        assert!(eq.iterations <= 1);
        assert_eq!(eq.kind, EquilibriumKind::Fundamental);
    }

    #[test]
    fn newton_from_20_percent_above_finds_fundamental() {
        let spec = calibrate_shares(&oil_like_spec()).unwrap();
        let eq = solve_equilibrium(&spec, &[96.0, 96.0], NewtonOptions::default()).unwrap();
        for p in eq.state.prices() {
            assert_relative_eq!(*p, 80.0, max_relative = 1e-8);
        }
        assert_eq!(eq.kind, EquilibriumKind::Fundamental);
    }

    fn single_asset_linear_spec(q2: f64, d: f64) -> crate::model::ModelSpec {
        let mut rates = RateSpec::zeros(RateForm::ValueLinear, 1);
        rates.value_baseline = vec![0.25];
        rates.value_slope = vec![d];
        rates.baseline_sell = vec![0.2];
        rates.sell_value_slope = vec![d];
        crate::model::ModelSpec {
            assets: vec![AssetSpec {
                name: "a".into(),
                fundamental_price: 50.0,
                adjustment_timescale: 1.0,
            }],
            groups: vec![GroupSpec {
                name: "g".into(),
                cash: 1.0e6,
                shares: vec![1.0e4],
                trend_magnitude: vec![0.0],
                value_magnitude: vec![q2],
                trend_timescale: vec![0.1],
                value_timescale: vec![0.2],
                rates,
            }],
            flow_mode: crate::model::FlowMode::FixedEndowment,
        }
    }

    /// Brute-force oracle: scan P over (0, 10 Pa] on a fine grid, then
    /// bisect each sign change of the residual.
    fn bisection_roots(spec: &crate::model::ModelSpec) -> Vec<f64> {
        let pa = spec.assets[0].fundamental_price;
        let n = 1_000_000usize;
        let lo = 1e-6 * pa;
        let hi = 10.0 * pa;
        let f = |p: f64| equilibrium_residuals(spec, &[p]).0[0];
        let mut roots = Vec::new();
        let mut prev_p = lo;
        let mut prev_r = f(lo);
        for k in 1..=n {
            let p = lo + (hi - lo) * (k as f64) / (n as f64);
            let r = f(p);
            if prev_r == 0.0 {
                roots.push(prev_p);
            } else if prev_r.signum() != r.signum() {
                let (mut a, mut b) = (prev_p, p);
                let mut fa = prev_r;
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    let fm = f(mid);
                    if fa.signum() == fm.signum() {
                        a = mid;
                        fa = fm;
                    } else {
                        b = mid;
                    }
                }
                roots.push(0.5 * (a + b));
            }
            prev_p = p;
            prev_r = r;
        }
        roots
    }

    #[test]
    fn newton_matches_bisection_oracle_on_small_instance() {
        let spec = single_asset_linear_spec(0.4, 0.2);
        let roots = bisection_roots(&spec);
        assert!(!roots.is_empty());
        let eq = solve_equilibrium(&spec, &[60.0], NewtonOptions::default()).unwrap();
        let p = eq.state.price(0);
        let nearest = roots
            .iter()
            .cloned()
            .min_by(|a, b| (a - p).abs().total_cmp(&(b - p).abs()))
            .unwrap();
        assert_relative_eq!(p, nearest, max_relative = 1e-8);
    }
}
