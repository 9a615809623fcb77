//! Continuous-time learning flows.
//!
//! Value flows are evaluated in closed form through matrix exponentials.
//! Flows that are bilinear in representation and weights are integrated with a
//! fixed-step classical Runge-Kutta scheme.

mod ensemble;
mod linear;
mod sampling;
mod trajectory;
mod value;

pub use ensemble::{
    ensemble_flow, ensemble_flow_tasks, head_assignment, joint_flow, rk4, EnsembleState, DEFAULT_STEP, DIVERGENCE_NORM,
};
pub use linear::{build_multi_task_operator, linear_limit_flow, matrix_exponential, LinearFlowSpec, MultiTaskMode};
pub use sampling::{block_orthogonal_weights, sample_cumulants, sample_weights, stream_rng, task_seed};
pub use trajectory::Trajectory;
pub use value::{
    mc_value_flow, nstep_operator, nstep_value_flow, td_lambda_operator, td_lambda_value_flow, td_operator,
    td_value_flow,
};

use crate::error::{config, Result};

pub(crate) fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(config("at least one time point is required"));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(config("times must be finite and nonnegative"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(config("times must be strictly increasing"));
    }
    Ok(())
}

/// `n` evenly spaced times covering `[0, t_max]`, endpoints included.
pub fn linspace(t_max: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![t_max];
    }
    (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect()
}
