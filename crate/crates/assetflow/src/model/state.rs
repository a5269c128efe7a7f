//! Flat state vector with a fixed layout.
//!
//! Layout: prices (m), then zeta1 in asset-major/group-minor order (m*n),
//! then zeta2 (m*n). Closed-flow mode appends cash (n) and shares (m*n,
//! asset-major).

use super::spec::{FlowMode, ModelSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    m: usize,
    n: usize,
    mode: FlowMode,
    data: Vec<f64>,
}

impl State {
    /// State at the fundamental point: P = Pa, all sentiments zero, and (in
    /// closed-flow mode) the spec's endowments.
    pub fn fundamental(spec: &ModelSpec) -> State {
        let prices: Vec<f64> = spec.assets.iter().map(|a| a.fundamental_price).collect();
        State::with_prices(spec, &prices)
    }

    /// State with the given prices, zero sentiments, and spec endowments.
    pub fn with_prices(spec: &ModelSpec, prices: &[f64]) -> State {
        let (m, n) = (spec.n_assets(), spec.n_groups());
        assert_eq!(prices.len(), m, "expected {m} prices");
        assert!(prices.iter().all(|&p| p > 0.0), "prices must be > 0");
        let mut data = vec![0.0; spec.state_dim()];
        data[..m].copy_from_slice(prices);
        let mut st = State {
            m,
            n,
            mode: spec.flow_mode,
            data,
        };
        if spec.flow_mode == FlowMode::ClosedFlow {
            for (j, g) in spec.groups.iter().enumerate() {
                *st.cash_mut(j) = g.cash;
                for i in 0..m {
                    *st.shares_mut(i, j) = g.shares[i];
                }
            }
        }
        st
    }

    pub fn from_flat(spec: &ModelSpec, data: Vec<f64>) -> State {
        assert_eq!(data.len(), spec.state_dim());
        State {
            m: spec.n_assets(),
            n: spec.n_groups(),
            mode: spec.flow_mode,
            data,
        }
    }

    pub fn n_assets(&self) -> usize {
        self.m
    }

    pub fn n_groups(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> FlowMode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    // Index helpers. zeta indices are asset-major, group-minor.
    pub fn idx_price(&self, i: usize) -> usize {
        i
    }

    pub fn idx_zeta1(&self, i: usize, j: usize) -> usize {
        self.m + i * self.n + j
    }

    pub fn idx_zeta2(&self, i: usize, j: usize) -> usize {
        self.m + self.m * self.n + i * self.n + j
    }

    pub fn idx_cash(&self, j: usize) -> usize {
        debug_assert_eq!(self.mode, FlowMode::ClosedFlow);
        self.m + 2 * self.m * self.n + j
    }

    pub fn idx_shares(&self, i: usize, j: usize) -> usize {
        debug_assert_eq!(self.mode, FlowMode::ClosedFlow);
        self.m + 2 * self.m * self.n + self.n + i * self.n + j
    }

    pub fn price(&self, i: usize) -> f64 {
        self.data[self.idx_price(i)]
    }

    pub fn prices(&self) -> &[f64] {
        &self.data[..self.m]
    }

    pub fn zeta1(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx_zeta1(i, j)]
    }

    pub fn zeta2(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx_zeta2(i, j)]
    }

    pub fn price_mut(&mut self, i: usize) -> &mut f64 {
        let k = self.idx_price(i);
        &mut self.data[k]
    }

    pub fn zeta1_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let k = self.idx_zeta1(i, j);
        &mut self.data[k]
    }

    pub fn zeta2_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let k = self.idx_zeta2(i, j);
        &mut self.data[k]
    }

    fn cash_mut(&mut self, j: usize) -> &mut f64 {
        let k = self.idx_cash(j);
        &mut self.data[k]
    }

    fn shares_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let k = self.idx_shares(i, j);
        &mut self.data[k]
    }

    /// Group j's cash: from the state in closed-flow mode, from the spec
    /// otherwise.
    pub fn cash(&self, spec: &ModelSpec, j: usize) -> f64 {
        match self.mode {
            FlowMode::ClosedFlow => self.data[self.idx_cash(j)],
            FlowMode::FixedEndowment => spec.groups[j].cash,
        }
    }

    /// Group j's holding of asset i.
    pub fn shares(&self, spec: &ModelSpec, i: usize, j: usize) -> f64 {
        match self.mode {
            FlowMode::ClosedFlow => self.data[self.idx_shares(i, j)],
            FlowMode::FixedEndowment => spec.groups[j].shares[i],
        }
    }

    /// Group j's sentiments toward every asset: (zeta1, zeta2) of length m.
    pub fn group_sentiments(&self, j: usize) -> (Vec<f64>, Vec<f64>) {
        let z1 = (0..self.m).map(|i| self.zeta1(i, j)).collect();
        let z2 = (0..self.m).map(|i| self.zeta2(i, j)).collect();
        (z1, z2)
    }
}
