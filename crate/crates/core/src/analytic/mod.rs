//! Closed-form quantities: the tilt equation, cycle rate tables, moment
//! formulas and the overlap exponent landscape.

mod moments;
mod overlap;
mod q;
mod rates;

pub use moments::{
    bar_mu, bar_mu_by_code, event_probabilities, kl_divergence, log_first_moment,
    log_first_moment_exact, log_normalizer, nu_sq, threshold_info, ThresholdInfo,
};
pub use overlap::{
    bar_nu, bar_nu_with, g_stationary_points, overlap_entropy, overlap_exponents, overlap_solve,
    OverlapMeasure, OverlapPoint,
};
pub use q::{q_residual, solve_q};
pub use rates::{
    cycle_series_sum, delta_closed_form, delta_via_trace, lambda_for, second_moment_limit,
    transfer_matrices, RateEntry, RateTable, SignPattern,
};
