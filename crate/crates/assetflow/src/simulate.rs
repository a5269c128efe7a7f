//! Time-domain integration of the market ODE system.
//!
//! Prices are integrated in log space: the price equation is multiplicative
//! in P, so d(ln P)/dt = (1/tau)(S/T - 1) keeps every recorded price
//! positive without clipping and feeds the trend sentiment drive directly.

use crate::error::Result;
use crate::model::{system_rhs_into, wealth_fractions, ModelSpec, State};
use crate::ode::{integrate_dense, OdeOpts, OdeStats};

#[derive(Debug, Clone, Copy)]
pub struct SimulateOpts {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Output sampling interval in days.
    pub sample_dt: f64,
    pub max_steps: usize,
    /// Step cap; None derives one from the model's fastest timescale.
    pub h_max: Option<f64>,
}

impl Default for SimulateOpts {
    fn default() -> Self {
        SimulateOpts {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            sample_dt: 0.1,
            max_steps: 50_000_000,
            h_max: None,
        }
    }
}

/// Fastest characteristic time of the model. Capping the step here keeps
/// the explicit method contractive on converged stretches, so equilibria
/// stay pinned instead of wandering inside the per-step error band.
fn characteristic_step(spec: &ModelSpec) -> f64 {
    let mut h = f64::INFINITY;
    for a in &spec.assets {
        h = h.min(a.adjustment_timescale);
    }
    for g in &spec.groups {
        for i in 0..spec.n_assets() {
            h = h.min(1.0 / g.trend_timescale[i]);
            h = h.min(1.0 / g.value_timescale[i]);
        }
    }
    h
}

/// A sampled solution: states and derived wealth fractions on a uniform
/// time grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// One row of n wealth fractions (summing to 1) per sample.
    pub wealth: Vec<Vec<f64>>,
    pub stats: OdeStats,
    /// Fundamental prices, carried along for amplitude floors.
    pub fundamentals: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Price series of one asset.
    pub fn prices(&self, asset_i: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.price(asset_i)).collect()
    }

    /// Wealth series of one group.
    pub fn wealth_series(&self, group_j: usize) -> Vec<f64> {
        self.wealth.iter().map(|w| w[group_j]).collect()
    }

    /// Index of the first sample at or after the transient cutoff.
    pub fn post_transient_start(&self, transient_fraction: f64) -> usize {
        let t_end = *self.times.last().unwrap_or(&0.0);
        let cutoff = transient_fraction * t_end;
        self.times.partition_point(|&t| t < cutoff)
    }
}

/// Map a model state to integrator coordinates (ln P, sentiments, flows).
fn to_log(state: &State) -> Vec<f64> {
    let mut y = state.as_slice().to_vec();
    for i in 0..state.n_assets() {
        y[i] = y[i].ln();
    }
    y
}

fn from_log(spec: &ModelSpec, y: &[f64]) -> State {
    let mut data = y.to_vec();
    for d in data.iter_mut().take(spec.n_assets()) {
        *d = d.exp();
    }
    State::from_flat(spec, data)
}

/// Integrate the system from `initial` to `t_end` (days), sampling every
/// `opts.sample_dt`.
pub fn integrate(
    spec: &ModelSpec,
    initial: &State,
    t_end: f64,
    opts: SimulateOpts,
) -> Result<Trajectory> {
    let m = spec.n_assets();
    let y0 = to_log(initial);
    let mut scratch_state = initial.clone();
    let mut scratch_rhs = vec![0.0; initial.dim()];

    let mut times = Vec::new();
    let mut states: Vec<State> = Vec::new();
    let mut wealth = Vec::new();

    let stats = integrate_dense(
        |_t, y, dy| {
            // y -> state (exp prices), evaluate, then convert the price
            // rows back to logarithmic derivatives.
            let data = scratch_state.as_mut_slice();
            data.copy_from_slice(y);
            for i in 0..m {
                data[i] = data[i].exp();
            }
            system_rhs_into(spec, &scratch_state, &mut scratch_rhs)?;
            dy.copy_from_slice(&scratch_rhs);
            for i in 0..m {
                dy[i] /= scratch_state.price(i);
            }
            Ok(())
        },
        &y0,
        t_end,
        opts.sample_dt,
        OdeOpts {
            rel_tol: opts.rel_tol,
            abs_tol: opts.abs_tol,
            max_steps: opts.max_steps,
            h_max: opts.h_max.unwrap_or_else(|| characteristic_step(spec)),
        },
        |t, y| {
            let st = from_log(spec, y);
            let w = wealth_fractions(spec, &st)?;
            times.push(t);
            wealth.push(w);
            states.push(st);
            Ok(())
        },
    )?;

    Ok(Trajectory {
        times,
        states,
        wealth,
        stats,
        fundamentals: spec.assets.iter().map(|a| a.fundamental_price).collect(),
    })
}
