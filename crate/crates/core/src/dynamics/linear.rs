use log::warn;
use nalgebra::DMatrix;

use super::{check_times, Trajectory};
use crate::error::{config, Error, Result};
use crate::linalg::{require_finite, require_square};
use crate::mdp::MarkovChain;

/// `exp(tA)` by scaling and squaring with a Padé approximant.
pub fn matrix_exponential(a: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    require_square(a, "operator")?;
    require_finite(a, "operator")?;
    if !t.is_finite() {
        return Err(Error::Domain(format!("time {t} is not finite")));
    }
    let e = (a * t).exp();
    if e.iter().all(|x| x.is_finite()) {
        Ok(e)
    } else {
        Err(Error::Numerical {
            context: format!("matrix exponential overflow at ||tA|| = {:e}", (a * t).norm()),
            residual: f64::INFINITY,
        })
    }
}

/// Affine flow `∂Φ = AΦ + B` from `Φ_0`.
#[derive(Clone, Debug)]
pub struct LinearFlowSpec {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    phi0: DMatrix<f64>,
    limit: DMatrix<f64>,
    pub warnings: Vec<String>,
}

impl LinearFlowSpec {
    /// Validates shapes, solves for the fixed point `-A⁻¹B` and warns when
    /// some eigenvalue of `A` has a nonnegative real part.
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, phi0: DMatrix<f64>) -> Result<Self> {
        let n = require_square(&a, "operator A")?;
        if b.nrows() != n || phi0.shape() != b.shape() {
            return Err(config(format!(
                "shapes do not match: A is {n}x{n}, B is {}x{}, Φ0 is {}x{}",
                b.nrows(),
                b.ncols(),
                phi0.nrows(),
                phi0.ncols()
            )));
        }
        require_finite(&b, "forcing B")?;
        require_finite(&phi0, "initial condition")?;
        let lu = a.clone().lu();
        let limit = lu
            .solve(&(-&b))
            .filter(|x| x.iter().all(|v| v.is_finite()))
            .ok_or_else(|| config("operator A is singular"))?;
        let max_re = a
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut warnings = Vec::new();
        if max_re >= 0.0 {
            let msg = format!("operator has an eigenvalue with real part {max_re:e} >= 0; the flow is not contracting");
            warn!("{msg}");
            warnings.push(msg);
        }
        Ok(LinearFlowSpec {
            a,
            b,
            phi0,
            limit,
            warnings,
        })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn phi0(&self) -> &DMatrix<f64> {
        &self.phi0
    }

    /// `Φ_∞ = -A⁻¹B`.
    pub fn limit(&self) -> &DMatrix<f64> {
        &self.limit
    }
}

/// `Φ_t = exp(tA)Φ_0 + (I - exp(tA))Φ_∞`, evaluated as `Φ_∞ + exp(tA)(Φ_0 - Φ_∞)`.
pub fn linear_limit_flow(spec: &LinearFlowSpec, times: &[f64]) -> Result<Trajectory> {
    check_times(times)?;
    let offset = &spec.phi0 - &spec.limit;
    let states = times
        .iter()
        .map(|&t| {
            if t == 0.0 {
                Ok(spec.phi0.clone())
            } else {
                Ok(&spec.limit + matrix_exponential(&spec.a, t)? * &offset)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory::new("limit", times.to_vec(), states))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MultiTaskMode {
    /// Shared discount, one transition matrix per task.
    Policies,
    /// Shared transition matrix, one discount per task.
    Discounts,
}

/// Operator of the many-head limit for a set of auxiliary tasks.
///
/// `Policies` gives `-(I - γP̄)` with `P̄` the mean transition matrix,
/// `Discounts` gives `-(I - γ̄P)` with `γ̄` the mean discount.
pub fn build_multi_task_operator(chains: &[MarkovChain], mode: MultiTaskMode) -> Result<DMatrix<f64>> {
    let first = chains.first().ok_or_else(|| config("at least one task is required"))?;
    let n = first.n_states();
    if chains.iter().any(|c| c.n_states() != n) {
        return Err(config("tasks have different state counts"));
    }
    let l = chains.len() as f64;
    let id = DMatrix::<f64>::identity(n, n);
    match mode {
        MultiTaskMode::Policies => {
            if chains.iter().any(|c| c.gamma() != first.gamma()) {
                return Err(config("policy tasks must share one discount"));
            }
            let mean = chains.iter().fold(DMatrix::zeros(n, n), |acc, c| acc + c.transition()) / l;
            Ok(-(id - mean * first.gamma()))
        }
        MultiTaskMode::Discounts => {
            if chains
                .iter()
                .any(|c| (c.transition() - first.transition()).amax() > 1e-12)
            {
                return Err(config("discount tasks must share one transition matrix"));
            }
            let gamma = chains.iter().map(|c| c.gamma()).sum::<f64>() / l;
            Ok(-(id - first.transition() * gamma))
        }
    }
}
