use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{gaussian_matrix, matrix_csv, ReportBundle};
use crate::dynamics::{stream_rng, task_seed};
use crate::error::{config, Result};
use crate::experiments::limit_checks::uniform_chain;
use crate::spectral::{orthonormalize, resolvent, rsbf, Subspace};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BayesConfig {
    pub k: usize,
    pub gamma: f64,
    pub n_states: usize,
    pub n_random_subspaces: usize,
    pub mc_samples: usize,
    /// Allowed Monte Carlo deviation in standard errors.
    pub mc_sigmas: f64,
    pub seed: u64,
}

impl Default for BayesConfig {
    fn default() -> Self {
        BayesConfig {
            k: 4,
            gamma: 0.9,
            n_states: 30,
            n_random_subspaces: 1000,
            mc_samples: 100_000,
            mc_sigmas: 3.0,
            seed: 0,
        }
    }
}

fn captured(psi: &DMatrix<f64>, s: &Subspace) -> f64 {
    let proj = s.basis().transpose() * psi;
    proj.norm_squared()
}

/// RSBFs maximise `Tr(ΨᵀΠ_SΨ)` over `K`-dimensional subspaces.
pub fn run_bayes_optimality(cfg: &BayesConfig) -> Result<ReportBundle> {
    if cfg.n_random_subspaces == 0 || cfg.mc_samples < 2 {
        return Err(config("need at least one random subspace and two Monte Carlo samples"));
    }
    let n = cfg.n_states;
    let chain = uniform_chain(n, cfg.gamma)?;
    let p = chain.transition();
    let sigma = DMatrix::identity(n, n);
    let psi = resolvent(p, cfg.gamma)?;
    let s = rsbf(p, cfg.gamma, cfg.k, &sigma)?;
    let best = captured(&psi, &s);
    let total = psi.norm_squared();

    let random: Vec<f64> = (0..cfg.n_random_subspaces)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(task_seed(cfg.seed, i as u64), 0);
            orthonormalize(&gaussian_matrix(&mut rng, n, cfg.k, 1.0)).map(|q| captured(&psi, &q))
        })
        .collect::<Result<_>>()?;
    let violations = random.iter().filter(|t| **t > best).count();

    let mut b = ReportBundle::new("bayes-opt", cfg)?;
    let mut table = DMatrix::zeros(random.len(), 1);
    for (i, t) in random.iter().enumerate() {
        table[(i, 0)] = *t;
    }
    b.add_table("random_traces", matrix_csv(&["trace".into()], &table, Some("draw")));
    b.add_table(
        "rsbf_trace",
        format!(
            "rsbf_trace,total_trace,best_random\n{best:e},{total:e},{:e}\n",
            random.iter().copied().fold(f64::MIN, f64::max)
        ),
    );
    b.check_at_most("rsbf_trace_violations", violations as f64, 0.0, "random_traces")?;

    // E‖Π_⊥Ψr‖² for r ~ N(0, I) equals Tr(ΨᵀΨ) - Tr(ΨᵀΠ_SΨ)
    let exact = total - best;
    let complement = DMatrix::<f64>::identity(n, n) - s.projector();
    let residual_op = &complement * &psi;
    let chunks = 16usize;
    let per = cfg.mc_samples.div_ceil(chunks);
    let partial: Vec<(f64, f64, usize)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(task_seed(cfg.seed, 10_000_000 + c as u64), 1);
            let count = per.min(cfg.mc_samples.saturating_sub(c * per));
            let (mut sum, mut sq) = (0.0, 0.0);
            for _ in 0..count {
                let r = nalgebra::DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
                let e = (&residual_op * r).norm_squared();
                sum += e;
                sq += e * e;
            }
            (sum, sq, count)
        })
        .collect();
    let count: usize = partial.iter().map(|x| x.2).sum();
    let mean = partial.iter().map(|x| x.0).sum::<f64>() / count as f64;
    let var =
        (partial.iter().map(|x| x.1).sum::<f64>() / count as f64 - mean * mean) * count as f64 / (count - 1) as f64;
    let se = (var / count as f64).sqrt();
    b.add_table(
        "monte_carlo",
        format!("estimate,exact,standard_error,samples\n{mean:e},{exact:e},{se:e},{count}\n"),
    );
    b.check_below(
        "monte_carlo_identity",
        (mean - exact).abs(),
        cfg.mc_sigmas * se,
        "monte_carlo",
    )?;

    // the full space captures everything
    let full = rsbf(p, cfg.gamma, n, &sigma)?;
    let leftover = (total - captured(&psi, &full)).abs();
    b.add_table("full_space", format!("projection_error\n{leftover:e}\n"));
    b.check_below("full_space_error", leftover, 1e-10 * total, "full_space")?;
    Ok(b)
}
