use nalgebra::{DMatrix, DVector};

use super::{check_times, Trajectory};
use crate::error::{config, Error, Result};
use crate::mdp::MarkovChain;

/// Default RK4 step in flow-time units.
pub const DEFAULT_STEP: f64 = 1e-3;

/// Frobenius norm above which an integration is declared divergent.
pub const DIVERGENCE_NORM: f64 = 1e12;

/// Shared representation with `M` linear heads.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleState {
    /// `Φ`, `|X| x K`.
    pub phi: DMatrix<f64>,
    /// Head weights `w^m` as the columns of a `K x M` matrix.
    pub weights: DMatrix<f64>,
    /// Per-head rewards `r^m` as the columns of an `|X| x M` matrix.
    pub cumulants: Option<DMatrix<f64>>,
}

impl EnsembleState {
    pub fn new(phi: DMatrix<f64>, weights: DMatrix<f64>, cumulants: Option<DMatrix<f64>>) -> Result<Self> {
        if weights.ncols() == 0 {
            return Err(config("an ensemble needs at least one head"));
        }
        if weights.nrows() != phi.ncols() {
            return Err(config(format!(
                "weights have {} rows, representation has {} features",
                weights.nrows(),
                phi.ncols()
            )));
        }
        if let Some(r) = &cumulants {
            if r.shape() != (phi.nrows(), weights.ncols()) {
                return Err(config(format!(
                    "cumulants are {}x{}, expected {}x{}",
                    r.nrows(),
                    r.ncols(),
                    phi.nrows(),
                    weights.ncols()
                )));
            }
        }
        Ok(EnsembleState {
            phi,
            weights,
            cumulants,
        })
    }

    pub fn n_heads(&self) -> usize {
        self.weights.ncols()
    }
}

fn axpy(y: &[DMatrix<f64>], h: f64, k: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    y.iter().zip(k).map(|(a, b)| a + b * h).collect()
}

/// Classical fixed-step RK4 for an autonomous system on a list of matrices.
///
/// Starts from `y0` at `t = 0` and records the state at each requested time.
/// Every interval between recorded times is split into equal steps no longer
/// than `step`, so each requested time is hit exactly.
pub fn rk4<F>(rhs: F, y0: Vec<DMatrix<f64>>, times: &[f64], step: f64) -> Result<Vec<Vec<DMatrix<f64>>>>
where
    F: Fn(&[DMatrix<f64>]) -> Vec<DMatrix<f64>>,
{
    check_times(times)?;
    if !(step > 0.0 && step.is_finite()) {
        return Err(config(format!("step {step} must be positive")));
    }
    let mut y = y0;
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        let span = target - t;
        let n = (span / step - 1e-9).ceil().max(0.0) as usize;
        if n > 0 {
            let h = span / n as f64;
            for i in 0..n {
                let k1 = rhs(&y);
                let k2 = rhs(&axpy(&y, h / 2.0, &k1));
                let k3 = rhs(&axpy(&y, h / 2.0, &k2));
                let k4 = rhs(&axpy(&y, h, &k3));
                for (j, yj) in y.iter_mut().enumerate() {
                    *yj += (&k1[j] + &k2[j] * 2.0 + &k3[j] * 2.0 + &k4[j]) * (h / 6.0);
                }
                let norm = y.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt();
                if norm.is_nan() || norm > DIVERGENCE_NORM {
                    return Err(Error::Divergence {
                        time: t + h * (i + 1) as f64,
                        norm,
                    });
                }
            }
        }
        t = target;
        out.push(y.clone());
    }
    Ok(out)
}

fn check_rates(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha >= 0.0 && beta >= 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(config(format!(
            "learning rates must be nonnegative (α = {alpha}, β = {beta})"
        )));
    }
    Ok(())
}

/// Semi-gradient flow of a single linear value head `V = Φw`.
///
/// `∂Φ = α δ wᵀ`, `∂w = β Φᵀ δ` with `δ = R + γPΦw - Φw`.
pub fn joint_flow(
    chain: &MarkovChain,
    phi0: &DMatrix<f64>,
    w0: &DVector<f64>,
    alpha: f64,
    beta: f64,
    times: &[f64],
    step: f64,
) -> Result<Trajectory> {
    check_rates(alpha, beta)?;
    if phi0.nrows() != chain.n_states() || w0.len() != phi0.ncols() {
        return Err(config(format!(
            "Φ0 is {}x{} and w0 has length {} for a chain with {} states",
            phi0.nrows(),
            phi0.ncols(),
            w0.len(),
            chain.n_states()
        )));
    }
    let gp = chain.transition() * chain.gamma();
    let r = DMatrix::from_column_slice(chain.n_states(), 1, chain.reward().as_slice());
    let rhs = |y: &[DMatrix<f64>]| {
        let (phi, w) = (&y[0], &y[1]);
        let v = phi * w;
        let delta = &r + &gp * &v - v;
        vec![&delta * w.transpose() * alpha, phi.transpose() * &delta * beta]
    };
    let w0 = DMatrix::from_column_slice(w0.len(), 1, w0.as_slice());
    let path = rk4(rhs, vec![phi0.clone(), w0], times, step)?;
    let (states, weights): (Vec<_>, Vec<_>) = path.into_iter().map(|mut y| (y.remove(0), y.remove(0))).unzip();
    let mut tr = Trajectory::new("joint", times.to_vec(), states)
        .with_meta("alpha", alpha)
        .with_meta("beta", beta)
        .with_meta("gamma", chain.gamma())
        .with_meta("step", step);
    tr.weights = Some(weights);
    Ok(tr)
}

/// Task index of each of `m` heads split into `l` contiguous groups.
///
/// Head `m` (1-based) goes to task `⌈mL/M⌉`; returned indices are 0-based.
pub fn head_assignment(m: usize, l: usize) -> Result<Vec<usize>> {
    if l == 0 || !m.is_multiple_of(l) {
        return Err(config(format!("{m} heads cannot be split evenly across {l} tasks")));
    }
    Ok((0..m).map(|h| h * l / m).collect())
}

/// Ensemble flow on a single chain; see [`ensemble_flow_tasks`].
pub fn ensemble_flow(
    chain: &MarkovChain,
    state0: &EnsembleState,
    alpha: f64,
    beta: f64,
    times: &[f64],
    step: f64,
) -> Result<Trajectory> {
    let heads = vec![0; state0.n_heads()];
    ensemble_flow_tasks(std::slice::from_ref(chain), &heads, state0, alpha, beta, times, step)
}

/// RK4 integration of the `M`-head flow where head `m` predicts task `head_task[m]`.
///
/// `∂Φ = α Σ_m δ_m (w^m)ᵀ` and `∂w^m = β Φᵀ δ_m` with
/// `δ_m = r^m + γ_i P_i Φ w^m - Φ w^m`, `i = head_task[m]`. The reward `r^m`
/// is the head's cumulant when present and the task reward otherwise. With
/// `β = 0` the weights are frozen and the right-hand side is evaluated through
/// the per-task Gram matrices `Σ_m w^m (w^m)ᵀ`, which is exact and independent
/// of `M` in cost.
pub fn ensemble_flow_tasks(
    tasks: &[MarkovChain],
    head_task: &[usize],
    state0: &EnsembleState,
    alpha: f64,
    beta: f64,
    times: &[f64],
    step: f64,
) -> Result<Trajectory> {
    check_rates(alpha, beta)?;
    let n = state0.phi.nrows();
    let m = state0.n_heads();
    if tasks.is_empty() || tasks.iter().any(|c| c.n_states() != n) {
        return Err(config(
            "tasks must be non-empty and match the representation's state count",
        ));
    }
    if head_task.len() != m || head_task.iter().any(|&i| i >= tasks.len()) {
        return Err(config("every head needs a valid task index"));
    }
    let groups: Vec<Vec<usize>> = (0..tasks.len())
        .map(|i| (0..m).filter(|&h| head_task[h] == i).collect())
        .collect();
    let ops: Vec<DMatrix<f64>> = tasks
        .iter()
        .map(|c| c.transition() * c.gamma() - DMatrix::identity(n, n))
        .collect();
    let rewards: Vec<DMatrix<f64>> = groups
        .iter()
        .enumerate()
        .map(|(i, g)| match &state0.cumulants {
            Some(r) => r.select_columns(g),
            None => DMatrix::from_fn(n, g.len(), |x, _| tasks[i].reward()[x]),
        })
        .collect();

    let (states, weights) = if beta == 0.0 {
        let mut forcing = DMatrix::zeros(n, state0.phi.ncols());
        let mut grams = Vec::new();
        for (i, g) in groups.iter().enumerate() {
            if g.is_empty() {
                continue;
            }
            let w = state0.weights.select_columns(g);
            forcing += &rewards[i] * w.transpose();
            grams.push((i, &w * w.transpose()));
        }
        let rhs = |y: &[DMatrix<f64>]| {
            let phi = &y[0];
            let mut d = forcing.clone();
            for (i, gram) in &grams {
                d += &ops[*i] * phi * gram;
            }
            vec![d * alpha]
        };
        let path = rk4(rhs, vec![state0.phi.clone()], times, step)?;
        (path.into_iter().map(|mut y| y.remove(0)).collect::<Vec<_>>(), None)
    } else {
        let rhs = |y: &[DMatrix<f64>]| {
            let (phi, w) = (&y[0], &y[1]);
            let mut dphi = DMatrix::zeros(phi.nrows(), phi.ncols());
            let mut dw = DMatrix::zeros(w.nrows(), w.ncols());
            for (i, g) in groups.iter().enumerate() {
                if g.is_empty() {
                    continue;
                }
                let wi = w.select_columns(g);
                let delta = &rewards[i] + &ops[i] * phi * &wi;
                dphi += &delta * wi.transpose();
                let dwi = phi.transpose() * &delta * beta;
                for (j, &h) in g.iter().enumerate() {
                    dw.set_column(h, &dwi.column(j));
                }
            }
            vec![dphi * alpha, dw]
        };
        let path = rk4(rhs, vec![state0.phi.clone(), state0.weights.clone()], times, step)?;
        let (s, w): (Vec<_>, Vec<_>) = path.into_iter().map(|mut y| (y.remove(0), y.remove(0))).unzip();
        (s, Some(w))
    };
    let flow = if state0.cumulants.is_some() { "rc" } else { "ensemble" };
    let mut tr = Trajectory::new(flow, times.to_vec(), states)
        .with_meta("alpha", alpha)
        .with_meta("beta", beta)
        .with_meta("heads", m)
        .with_meta("features", state0.phi.ncols())
        .with_meta("tasks", tasks.len())
        .with_meta("step", step);
    if tasks.iter().all(|c| c.gamma() == tasks[0].gamma()) {
        tr = tr.with_meta("gamma", tasks[0].gamma());
    }
    tr.weights = weights;
    Ok(tr)
}
