//! Off-policy value estimators, confidence lower bounds and analysis helpers.

pub mod analysis;
pub mod bounds;
pub mod estimators;
pub mod tdist;

pub use analysis::{optimism_bound, overestimation_bias, regret_report, GridPoint, RegretReport};
pub use bounds::{
    empirical_w_max, empirical_w_max_logged, lower_bound, lower_bound_bernstein, lower_bound_hoeffding,
    lower_bound_ttest, paired_t_from_logged, paired_t_from_terms, paired_t_statistic, BoundMethod, BoundResult,
    PairedT,
};
pub use estimators::{
    dr, dr_from_tables, importance_weights, ips, ips_from_logged, prediction_table, snips, snips_from_logged, variance,
    EstimateTerms,
};
pub use tdist::{t_cdf, t_quantile};
