//! Exact benchmarks for the simplified coordination models.

mod regime_map;
mod single;
mod two_period;

pub use regime_map::{regime_map, RegimeRow};
pub use single::{
    artanh, choice_probs, exact_expected_profit_sp, optimal_alpha_given_q, optimal_q_given_alpha,
    relative_metrics, RegimeLabel, RelativeMetrics, SinglePeriodInstance,
};
pub use two_period::{
    adaptive_ordering_check, best_alpha_for_plan, best_plan_given_willingness, ordering_threshold,
    safe_ratio, smoothing_monotonicity_check, two_period_enumerated, two_period_expected_profit,
    two_period_optimum, two_period_profit_given_probs, OrderingReport, SmoothingReport,
    TwoPeriodInstance, TwoPeriodOptimum, ORDER_PLANS,
};
