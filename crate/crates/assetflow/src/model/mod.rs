//! Core asset-flow market model: parameterization, state layout,
//! transition rates, and the ODE right-hand side.

pub mod rates;
pub mod rhs;
pub mod spec;
pub mod state;

pub use rates::{eval_group_rates, eval_group_rates_with_partials, GroupRatePartials, GroupRates};
pub use rhs::{
    buy_rate, price_rhs, sell_rate, system_rhs, system_rhs_into, trend_sentiment_rhs,
    value_sentiment_rhs, wealth_fractions,
};
pub use spec::{AssetSpec, FlowMode, GroupSpec, ModelSpec, RateForm, RateSpec};
pub use state::State;
