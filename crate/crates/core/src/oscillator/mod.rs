//! Turning a betting strategy that succeeds on a sequence into a bounded
//! martingale whose value swings between 2 and 3 along it, so that the
//! slopes of its cdf keep oscillating.

mod phase;
mod savings;
mod strategy;

pub use phase::{
    build_oscillator, cdf_slope_bounds, count_crossings, trace_path, OscState, Oscillator,
    PathTrace, Phase, PhaseTable,
};
pub use savings::{has_savings_property, max_drop, savings_transform, Savings, SavingsState};
pub use strategy::{
    strategy_by_name, BettingStrategy, Constant, DoubleOnBit, Pattern, StrategyMartingale,
};
