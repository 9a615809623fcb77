use nalgebra::{DMatrix, DVector};

use super::{check_times, matrix_exponential, Trajectory};
use crate::error::{config, Error, Result};
use crate::mdp::{exact_value, MarkovChain};

/// `-(I - γP)`, the TD flow operator.
pub fn td_operator(chain: &MarkovChain) -> DMatrix<f64> {
    let n = chain.n_states();
    chain.transition() * chain.gamma() - DMatrix::identity(n, n)
}

/// `-(I - (γP)^n)`.
pub fn nstep_operator(chain: &MarkovChain, n: usize) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(config("n-step returns need n >= 1"));
    }
    let x = chain.n_states();
    let gp = chain.transition() * chain.gamma();
    let power = gp.pow((n - 1) as u32) * &gp;
    Ok(power - DMatrix::identity(x, x))
}

/// `(1-λ)γP(I - λγP)⁻¹ - I`, the λ-return operator summed in closed form.
pub fn td_lambda_operator(chain: &MarkovChain, lambda: f64) -> Result<DMatrix<f64>> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(config(format!("lambda {lambda} outside [0, 1)")));
    }
    let n = chain.n_states();
    let id = DMatrix::<f64>::identity(n, n);
    let gp = chain.transition() * chain.gamma();
    // (I - λγP) is invertible since λγ < 1; P commutes with its resolvent
    let inv = (&id - &gp * lambda).lu().solve(&id).ok_or_else(|| Error::Numerical {
        context: "λ-return resolvent".into(),
        residual: f64::INFINITY,
    })?;
    Ok(gp * inv * (1.0 - lambda) - id)
}

fn check_v0(chain: &MarkovChain, v0: &DVector<f64>) -> Result<()> {
    if v0.len() != chain.n_states() {
        return Err(config(format!(
            "initial value has length {}, chain has {} states",
            v0.len(),
            chain.n_states()
        )));
    }
    Ok(())
}

fn affine_flow(
    name: &str,
    chain: &MarkovChain,
    op: &DMatrix<f64>,
    v0: &DVector<f64>,
    times: &[f64],
) -> Result<Trajectory> {
    check_v0(chain, v0)?;
    check_times(times)?;
    let fixed = exact_value(chain)?;
    let offset = v0 - &fixed;
    let states = times
        .iter()
        .map(|&t| {
            let v = if t == 0.0 {
                v0.clone()
            } else {
                &fixed + matrix_exponential(op, t)? * &offset
            };
            Ok(DMatrix::from_column_slice(v.len(), 1, v.as_slice()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory::new(name, times.to_vec(), states).with_meta("gamma", chain.gamma()))
}

/// `V_t = exp(-t(I - γP))(V_0 - V^π) + V^π`.
pub fn td_value_flow(chain: &MarkovChain, v0: &DVector<f64>, times: &[f64]) -> Result<Trajectory> {
    affine_flow("td", chain, &td_operator(chain), v0, times)
}

/// `V_t = e^{-t}(V_0 - V^π) + V^π`.
pub fn mc_value_flow(chain: &MarkovChain, v0: &DVector<f64>, times: &[f64]) -> Result<Trajectory> {
    check_v0(chain, v0)?;
    check_times(times)?;
    let fixed = exact_value(chain)?;
    let offset = v0 - &fixed;
    let states = times
        .iter()
        .map(|&t| {
            let v = if t == 0.0 {
                v0.clone()
            } else {
                &fixed + &offset * (-t).exp()
            };
            DMatrix::from_column_slice(v.len(), 1, v.as_slice())
        })
        .collect();
    Ok(Trajectory::new("mc", times.to_vec(), states).with_meta("gamma", chain.gamma()))
}

/// `V_t = exp(-t(I - (γP)^n))(V_0 - V^π) + V^π`.
pub fn nstep_value_flow(chain: &MarkovChain, n: usize, v0: &DVector<f64>, times: &[f64]) -> Result<Trajectory> {
    let op = nstep_operator(chain, n)?;
    Ok(affine_flow("nstep", chain, &op, v0, times)?.with_meta("n", n))
}

/// TD(λ) flow with the λ-return operator in closed form.
pub fn td_lambda_value_flow(chain: &MarkovChain, lambda: f64, v0: &DVector<f64>, times: &[f64]) -> Result<Trajectory> {
    let op = td_lambda_operator(chain, lambda)?;
    Ok(affine_flow("tdlambda", chain, &op, v0, times)?.with_meta("lambda", lambda))
}
