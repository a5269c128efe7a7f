//! Analytic block Jacobian of the price/sentiment system, eigenvalue
//! classification, the reduced per-(asset, group) 3x3 block, and the
//! Routh-Hurwitz / diagonal-dominance sufficient conditions.
//!
//! The Jacobian is derived for fixed-endowment mode, where cash and shares
//! are constants. Block layout over the state (P, zeta1, zeta2):
//!
//! ```text
//!   [ A  B ]   A: m x m      price wrt price
//!   [ C  D ]   B: m x 2mn    price wrt sentiments
//!              C: 2mn x m    sentiments wrt price
//!              D: 2mn x 2mn  sentiments wrt sentiments
//! ```

use crate::error::{Error, Result};
use crate::linalg::eigenvalues;
use crate::model::{
    eval_group_rates_with_partials, FlowMode, GroupRatePartials, ModelSpec, State,
};
use nalgebra::{Complex, DMatrix, Matrix3};

/// Stability classification tolerance on Re(lambda).
pub const MARGINAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Stable,
    Marginal,
    Unstable,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Classification::Stable => "stable",
            Classification::Marginal => "marginal",
            Classification::Unstable => "unstable",
        };
        f.write_str(s)
    }
}

pub fn classify(max_real_part: f64) -> Classification {
    if max_real_part < -MARGINAL_TOL {
        Classification::Stable
    } else if max_real_part.abs() <= MARGINAL_TOL {
        Classification::Marginal
    } else {
        Classification::Unstable
    }
}

/// Index ranges of the Jacobian blocks within the state vector.
#[derive(Debug, Clone)]
pub struct BlockLayout {
    pub n_assets: usize,
    pub n_groups: usize,
    pub prices: std::ops::Range<usize>,
    pub zeta1: std::ops::Range<usize>,
    pub zeta2: std::ops::Range<usize>,
}

impl BlockLayout {
    fn new(m: usize, n: usize) -> Self {
        BlockLayout {
            n_assets: m,
            n_groups: n,
            prices: 0..m,
            zeta1: m..m + m * n,
            zeta2: m + m * n..m + 2 * m * n,
        }
    }

    pub fn idx_zeta1(&self, asset: usize, group: usize) -> usize {
        self.zeta1.start + asset * self.n_groups + group
    }

    pub fn idx_zeta2(&self, asset: usize, group: usize) -> usize {
        self.zeta2.start + asset * self.n_groups + group
    }
}

#[derive(Debug, Clone)]
pub struct JacobianReport {
    pub matrix: DMatrix<f64>,
    pub layout: BlockLayout,
    /// Sorted by descending real part.
    pub eigenvalues: Vec<Complex<f64>>,
    pub max_real_part: f64,
    pub classification: Classification,
    /// A clamp or budget boundary was exactly active; entries there use the
    /// interior one-sided derivative.
    pub nondifferentiable: bool,
}

struct RateContext {
    partials: Vec<GroupRatePartials>,
    /// Cash inflow per asset.
    s: Vec<f64>,
    /// Stock outflow per asset.
    t: Vec<f64>,
    nondiff: bool,
}

fn rate_context(spec: &ModelSpec, state: &State) -> RateContext {
    let (m, n) = (spec.n_assets(), spec.n_groups());
    let mut rates = Vec::with_capacity(n);
    let mut partials = Vec::with_capacity(n);
    let mut nondiff = false;
    for j in 0..n {
        let (z1, z2) = state.group_sentiments(j);
        let (r, p) = eval_group_rates_with_partials(&spec.groups[j], &z1, &z2);
        nondiff |= p.nondifferentiable;
        rates.push(r);
        partials.push(p);
    }
    let mut s = vec![0.0; m];
    let mut t = vec![0.0; m];
    for i in 0..m {
        for j in 0..n {
            s[i] += rates[j].buy[i] * spec.groups[j].cash;
            t[i] += rates[j].sell[i] * spec.groups[j].shares[i] * state.price(i);
        }
    }
    RateContext {
        partials,
        s,
        t,
        nondiff,
    }
}

/// dF_i / d zeta{1|2}_(asset l, group k), from the quotient rule on
/// F_i = (P_i / tau_i)(S_i / T_i - 1).
fn price_sentiment_partial(
    spec: &ModelSpec,
    state: &State,
    ctx: &RateContext,
    asset_i: usize,
    sent_asset_l: usize,
    group_k: usize,
    wrt_zeta1: bool,
) -> f64 {
    let p_i = state.price(asset_i);
    let tau = spec.assets[asset_i].adjustment_timescale;
    let g = &spec.groups[group_k];
    let parts = &ctx.partials[group_k];
    let dbuy = if wrt_zeta1 {
        parts.dbuy_dz1[asset_i][sent_asset_l]
    } else {
        parts.dbuy_dz2[asset_i][sent_asset_l]
    };
    let ds = g.cash * dbuy;
    // Sell rates read only the sold asset's sentiments.
    let dt = if sent_asset_l == asset_i {
        let dsell = if wrt_zeta1 {
            parts.dsell_dz1[asset_i]
        } else {
            parts.dsell_dz2[asset_i]
        };
        g.shares[asset_i] * p_i * dsell
    } else {
        0.0
    };
    let (s_i, t_i) = (ctx.s[asset_i], ctx.t[asset_i]);
    p_i / tau * (t_i * ds - s_i * dt) / (t_i * t_i)
}

/// Assemble the analytic Jacobian at `state` and classify it through the
/// eigenvalue spectrum. Requires fixed-endowment mode.
pub fn assemble_jacobian(spec: &ModelSpec, state: &State) -> Result<JacobianReport> {
    if spec.flow_mode != FlowMode::FixedEndowment || state.mode() != FlowMode::FixedEndowment {
        return Err(Error::UnsupportedMode {
            required: "fixed-endowment",
        });
    }
    let (m, n) = (spec.n_assets(), spec.n_groups());
    let dim = m + 2 * m * n;
    let layout = BlockLayout::new(m, n);
    let ctx = rate_context(spec, state);
    for i in 0..m {
        if ctx.t[i] <= 0.0 {
            return Err(Error::DegenerateMarket {
                asset: i,
                time: None,
            });
        }
    }
    let mut jac = DMatrix::zeros(dim, dim);

    // A block: rates carry no direct price dependence, so
    // F_i = (S_i / That_i - P_i) / tau_i and dF_i/dP_i = -1/tau_i exactly.
    for i in 0..m {
        jac[(i, i)] = -1.0 / spec.assets[i].adjustment_timescale;
    }

    // B block: price rows against every sentiment column.
    for i in 0..m {
        for l in 0..m {
            for k in 0..n {
                jac[(i, layout.idx_zeta1(l, k))] =
                    price_sentiment_partial(spec, state, &ctx, i, l, k, true);
                jac[(i, layout.idx_zeta2(l, k))] =
                    price_sentiment_partial(spec, state, &ctx, i, l, k, false);
            }
        }
    }

    // C and D blocks.
    for i in 0..m {
        let p_i = state.price(i);
        let tau = spec.assets[i].adjustment_timescale;
        let f_i = p_i / tau * (ctx.s[i] / ctx.t[i] - 1.0);
        let pa = spec.assets[i].fundamental_price;
        for j in 0..n {
            let g = &spec.groups[j];
            let (c1, q1) = (g.trend_timescale[i], g.trend_magnitude[i]);
            let (c2, q2) = (g.value_timescale[i], g.value_magnitude[i]);
            let row1 = layout.idx_zeta1(i, j);
            let row2 = layout.idx_zeta2(i, j);

            // C: d(zeta1 drift)/dP_i carries both the dF/dP term and the
            // -F/P^2 term (the latter vanishes at equilibrium).
            jac[(row1, i)] = c1 * q1 * (-1.0 / (tau * p_i) - f_i / (p_i * p_i));
            jac[(row2, i)] = -c2 * q2 / pa;

            // D: zeta1 rows couple to every sentiment through dF_i, plus
            // the own decay; zeta2 rows are pure decay.
            for l in 0..m {
                for k in 0..n {
                    let col1 = layout.idx_zeta1(l, k);
                    let col2 = layout.idx_zeta2(l, k);
                    let df1 = price_sentiment_partial(spec, state, &ctx, i, l, k, true);
                    let df2 = price_sentiment_partial(spec, state, &ctx, i, l, k, false);
                    jac[(row1, col1)] += c1 * q1 / p_i * df1;
                    jac[(row1, col2)] += c1 * q1 / p_i * df2;
                }
            }
            jac[(row1, row1)] += -c1;
            jac[(row2, row2)] += -c2;
        }
    }

    let eigs = eigenvalues(&jac)?;
    let max_real_part = eigs.first().map(|e| e.re).unwrap_or(f64::NEG_INFINITY);
    Ok(JacobianReport {
        matrix: jac,
        layout,
        max_real_part,
        classification: classify(max_real_part),
        eigenvalues: eigs,
        nondifferentiable: ctx.nondiff,
    })
}

/// The reduced 3x3 block for one (asset, group) pair at the fundamental
/// equilibrium, over the variables (P_i, zeta1_ij, zeta2_ij):
///
/// ```text
///   [ -1/tau  b1     b2    ]   b1 = dF_i/dzeta1_ij,  b2 = dF_i/dzeta2_ij
///   [ c1      -c1_ij 0     ]   c1 = -c1_ij q1_ij / (tau Pa)
///   [ c2      0      -c2_ij]   c2 = -c2_ij q2_ij / Pa
/// ```
pub fn reduced_block(spec: &ModelSpec, asset_i: usize, group_j: usize) -> Result<Matrix3<f64>> {
    let fixed = spec.clone().with_flow_mode(FlowMode::FixedEndowment);
    let state = State::fundamental(&fixed);
    let ctx = rate_context(&fixed, &state);
    if ctx.t[asset_i] <= 0.0 {
        return Err(Error::DegenerateMarket {
            asset: asset_i,
            time: None,
        });
    }
    let g = &fixed.groups[group_j];
    let tau = fixed.assets[asset_i].adjustment_timescale;
    let pa = fixed.assets[asset_i].fundamental_price;
    let (c1, q1) = (g.trend_timescale[asset_i], g.trend_magnitude[asset_i]);
    let (c2, q2) = (g.value_timescale[asset_i], g.value_magnitude[asset_i]);
    let b1 = price_sentiment_partial(&fixed, &state, &ctx, asset_i, asset_i, group_j, true);
    let b2 = price_sentiment_partial(&fixed, &state, &ctx, asset_i, asset_i, group_j, false);
    Ok(Matrix3::new(
        -1.0 / tau,
        b1,
        b2,
        -c1 * q1 / (tau * pa),
        -c1,
        0.0,
        -c2 * q2 / pa,
        0.0,
        -c2,
    ))
}

/// Routh-Hurwitz report for the cubic characteristic polynomial of a
/// reduced 3x3 block.
#[derive(Debug, Clone)]
pub struct RouthHurwitzReport {
    pub alpha2: f64,
    pub alpha1: f64,
    pub alpha0: f64,
    pub condition_a2: bool,
    pub condition_a0: bool,
    /// alpha1 * alpha2 > alpha0.
    pub condition_product: bool,
    pub stable: bool,
}

/// Evaluate the three Routh-Hurwitz inequalities for a block of the
/// reduced form. Coefficients are read off the named entries:
/// alpha2 = 1/tau + c1 + c2, alpha1 and alpha0 carry the -b1 c1 and
/// -b2 c2 coupling terms.
pub fn routh_hurwitz_cubic(block: &Matrix3<f64>) -> RouthHurwitzReport {
    let tau_inv = -block[(0, 0)];
    let b1 = block[(0, 1)];
    let b2 = block[(0, 2)];
    let c1_coupling = block[(1, 0)];
    let c2_coupling = block[(2, 0)];
    let c1 = -block[(1, 1)];
    let c2 = -block[(2, 2)];

    let alpha2 = tau_inv + c1 + c2;
    let alpha1 = tau_inv * (c1 + c2) + c1 * c2 - b1 * c1_coupling - b2 * c2_coupling;
    let alpha0 = tau_inv * c1 * c2 - b1 * c1_coupling * c2 - b2 * c2_coupling * c1;

    let condition_a2 = alpha2 > 0.0;
    let condition_a0 = alpha0 > 0.0;
    let condition_product = alpha1 * alpha2 > alpha0;
    RouthHurwitzReport {
        alpha2,
        alpha1,
        alpha0,
        condition_a2,
        condition_a0,
        condition_product,
        stable: condition_a2 && condition_a0 && condition_product,
    }
}

/// Diagonal-dominance sufficient condition for an all-value-investor market
/// (every q1 = 0): sum_j |b_j c_j| / c2_j < 1/tau_i.
#[derive(Debug, Clone)]
pub struct Theorem1Report {
    pub holds: bool,
    /// 1/tau_i minus the coupling sum (positive when the condition holds).
    pub margin: f64,
    pub coupling_sum: f64,
    /// Price sensitivity to each group's value sentiment.
    pub b: Vec<f64>,
    /// Value-sentiment sensitivity to price, per group.
    pub c: Vec<f64>,
}

pub fn theorem1_condition(spec: &ModelSpec, asset_i: usize) -> Result<Theorem1Report> {
    for (j, g) in spec.groups.iter().enumerate() {
        if g.trend_magnitude.iter().any(|&q| q != 0.0) {
            return Err(Error::HypothesisViolated(format!(
                "group {j} has nonzero trend magnitude q1 (no-trend-following hypothesis)"
            )));
        }
    }
    let fixed = spec.clone().with_flow_mode(FlowMode::FixedEndowment);
    let state = State::fundamental(&fixed);
    let ctx = rate_context(&fixed, &state);
    if ctx.t[asset_i] <= 0.0 {
        return Err(Error::DegenerateMarket {
            asset: asset_i,
            time: None,
        });
    }
    let pa = fixed.assets[asset_i].fundamental_price;
    let tau = fixed.assets[asset_i].adjustment_timescale;
    let n = fixed.n_groups();
    let mut b = vec![0.0; n];
    let mut c = vec![0.0; n];
    let mut coupling_sum = 0.0;
    for j in 0..n {
        let g = &fixed.groups[j];
        // b_j = (Pa / (tau T)) [ M_j dk/dz2 - N_j Pa dk~/dz2 ], at zero
        // sentiments where S = T under calibration.
        let dk = ctx.partials[j].dbuy_dz2[asset_i][asset_i];
        let dksell = ctx.partials[j].dsell_dz2[asset_i];
        b[j] = pa / (tau * ctx.t[asset_i]) * (g.cash * dk - g.shares[asset_i] * pa * dksell);
        c[j] = -g.value_timescale[asset_i] * g.value_magnitude[asset_i] / pa;
        coupling_sum += (b[j] * c[j]).abs() / g.value_timescale[asset_i];
    }
    let margin = 1.0 / tau - coupling_sum;
    Ok(Theorem1Report {
        holds: margin > 0.0,
        margin,
        coupling_sum,
        b,
        c,
    })
}

/// The (n+1) x (n+1) price/value-sentiment subsystem matrix for one asset
/// under the all-value hypothesis: [[-1/tau, b^T], [c, diag(-c2_j)]].
pub fn theorem1_subsystem(spec: &ModelSpec, asset_i: usize) -> Result<DMatrix<f64>> {
    let report = theorem1_condition(spec, asset_i)?;
    let n = spec.n_groups();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m[(0, 0)] = -1.0 / spec.assets[asset_i].adjustment_timescale;
    for j in 0..n {
        m[(0, j + 1)] = report.b[j];
        m[(j + 1, 0)] = report.c[j];
        m[(j + 1, j + 1)] = -spec.groups[j].value_timescale[asset_i];
    }
    Ok(m)
}
