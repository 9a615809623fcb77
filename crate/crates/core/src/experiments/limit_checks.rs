use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::{gaussian_matrix, matrix_csv, ReportBundle};
use crate::dynamics::{
    ensemble_flow, joint_flow, linear_limit_flow, linspace, sample_cumulants, sample_weights, stream_rng, task_seed,
    td_operator, EnsembleState, LinearFlowSpec,
};
use crate::error::{config, Result};
use crate::mdp::{build_chain_mdp, induce, MarkovChain, Policy};
use crate::spectral::{ebf, grassmann_distance, orthonormalize, resolvent};
use crate::svg::{emit_svg, SvgKind};

const PHI_STREAM: u64 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitChecksConfig {
    /// Head counts compared against the infinite-head limit, ascending.
    pub m_list: Vec<usize>,
    pub seeds: usize,
    pub k: usize,
    pub n_states: usize,
    pub gamma: f64,
    pub t_max: f64,
    pub n_times: usize,
    pub step: f64,
    /// Largest allowed trajectory gap at the largest head count.
    pub gap_tolerance: f64,
    pub cov_seeds: usize,
    pub cov_heads: usize,
    pub cov_tolerance: f64,
    pub weight_heads: usize,
    pub weight_k: usize,
    pub weight_seeds: usize,
    pub weight_tolerance: f64,
    pub ks_seeds: usize,
    pub ks_level: f64,
    /// Time at which the random-cumulant displacement is compared with the EBFs.
    pub rc_time: f64,
    pub rc_tolerance: f64,
    pub seed: u64,
}

impl Default for LimitChecksConfig {
    fn default() -> Self {
        LimitChecksConfig {
            m_list: vec![100, 10_000],
            seeds: 20,
            k: 4,
            n_states: 30,
            gamma: 0.9,
            t_max: 5.0,
            n_times: 51,
            step: 1e-3,
            gap_tolerance: 0.02,
            cov_seeds: 2000,
            cov_heads: 100,
            cov_tolerance: 0.1,
            weight_heads: 100_000,
            weight_k: 10,
            weight_seeds: 20,
            weight_tolerance: 0.05,
            ks_seeds: 200,
            ks_level: 0.01,
            rc_time: 300.0,
            rc_tolerance: 5e-2,
            seed: 0,
        }
    }
}

/// Uniform random walk on the slip chain.
pub(crate) fn uniform_chain(n: usize, gamma: f64) -> Result<MarkovChain> {
    let mdp = build_chain_mdp(n, 0.01, 2.0, 1.0)?;
    induce(&mdp, &Policy::uniform(n, 2), gamma)
}

/// Gaussian `Φ_0` scaled to unit Frobenius norm.
pub(crate) fn unit_phi0(seed: u64, n: usize, k: usize) -> DMatrix<f64> {
    let mut rng = stream_rng(seed, PHI_STREAM);
    let phi = gaussian_matrix(&mut rng, n, k, 1.0);
    let norm = phi.norm();
    phi / norm
}

/// Frobenius gap between finite-`M` ensemble trajectories and the limit flow.
fn trajectory_gaps(cfg: &LimitChecksConfig, chain: &MarkovChain) -> Result<Vec<Vec<f64>>> {
    let zero = chain.with_reward(DVector::zeros(cfg.n_states))?;
    let times = linspace(cfg.t_max, cfg.n_times);
    (0..cfg.seeds)
        .into_par_iter()
        .map(|s| {
            let ts = task_seed(cfg.seed, s as u64);
            let phi0 = unit_phi0(ts, cfg.n_states, cfg.k);
            let spec = LinearFlowSpec::new(td_operator(&zero), DMatrix::zeros(cfg.n_states, cfg.k), phi0.clone())?;
            let limit = linear_limit_flow(&spec, &times)?;
            cfg.m_list
                .iter()
                .map(|&m| {
                    let w = sample_weights(m, cfg.k, 1.0 / m as f64, ts)?;
                    let state = EnsembleState::new(phi0.clone(), w, None)?;
                    ensemble_flow(&zero, &state, 1.0, 0.0, &times, cfg.step)?.max_gap(&limit)
                })
                .collect()
        })
        .collect()
}

fn relative_frobenius(estimate: &DMatrix<f64>, truth: &DMatrix<f64>) -> f64 {
    (estimate - truth).norm() / truth.norm()
}

/// Infinite-head limit checks for ensembles, random cumulants and head weights.
pub fn run_limit_checks(cfg: &LimitChecksConfig) -> Result<ReportBundle> {
    if cfg.m_list.is_empty() || cfg.m_list.contains(&0) || cfg.seeds == 0 || cfg.k == 0 {
        return Err(config("m_list, seeds and k must be non-empty and positive"));
    }
    let chain = uniform_chain(cfg.n_states, cfg.gamma)?;
    let n = cfg.n_states;
    let mut b = ReportBundle::new("limit-checks", cfg)?;

    // finite-M ensembles against exp(tA)Φ_0
    let gaps = trajectory_gaps(cfg, &chain)?;
    let gap_m = DMatrix::from_fn(cfg.seeds, cfg.m_list.len(), |s, j| gaps[s][j]);
    let cols: Vec<String> = cfg.m_list.iter().map(|m| format!("M{m}")).collect();
    b.add_table("ensemble_gaps", matrix_csv(&cols, &gap_m, Some("seed")));
    let last = cfg.m_list.len() - 1;
    let worst = gap_m.column(last).max();
    b.check_below("ensemble_gap_largest_m", worst, cfg.gap_tolerance, "ensemble_gaps")?;
    if cfg.m_list.len() > 1 {
        let decreasing = (0..cfg.seeds).filter(|&s| gap_m[(s, last)] < gap_m[(s, 0)]).count();
        b.check_at_least(
            "ensemble_gap_decreases",
            decreasing as f64,
            cfg.seeds as f64,
            "ensemble_gaps",
        )?;
    }

    // one head reduces to the joint flow
    let phi0 = unit_phi0(cfg.seed, n, cfg.k);
    let w0 = sample_weights(1, cfg.k, 1.0, cfg.seed)?;
    let times = linspace(cfg.t_max, cfg.n_times);
    let joint = joint_flow(&chain, &phi0, &w0.column(0).clone_owned(), 1.0, 0.5, &times, cfg.step)?;
    let single = ensemble_flow(
        &chain,
        &EnsembleState::new(phi0.clone(), w0, None)?,
        1.0,
        0.5,
        &times,
        cfg.step,
    )?;
    let reduction = joint.max_gap(&single)?;
    b.add_table("single_head_reduction", format!("max_gap\n{reduction:e}\n"));
    b.check_below("single_head_reduction", reduction, 1e-12, "single_head_reduction")?;

    // covariance of Φ_∞ = ΨZ and of Z = Σ r^m (w^m)ᵀ
    let psi = resolvent(chain.transition(), cfg.gamma)?;
    let sigma = DMatrix::<f64>::identity(n, n);
    let sums = (0..cfg.cov_seeds)
        .into_par_iter()
        .map(|s| {
            let ts = task_seed(cfg.seed, 1_000_000 + s as u64);
            let r = sample_cumulants(cfg.cov_heads, &sigma, ts)?;
            let w = sample_weights(cfg.cov_heads, cfg.k, 1.0 / cfg.cov_heads as f64, ts)?;
            let z = r * w.transpose();
            let phi = &psi * &z;
            Ok((0..cfg.k)
                .map(|c| {
                    (
                        z.column(c) * z.column(c).transpose(),
                        phi.column(c) * phi.column(c).transpose(),
                    )
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let target_phi = &psi * &sigma * psi.transpose();
    let mut cov_rows = DMatrix::zeros(cfg.k, 2);
    for c in 0..cfg.k {
        let mut cz = DMatrix::zeros(n, n);
        let mut cp = DMatrix::zeros(n, n);
        for s in &sums {
            cz += &s[c].0;
            cp += &s[c].1;
        }
        let count = cfg.cov_seeds as f64;
        cov_rows[(c, 0)] = relative_frobenius(&(cp / count), &target_phi);
        cov_rows[(c, 1)] = relative_frobenius(&(cz / count), &sigma);
    }
    b.add_table(
        "covariance",
        matrix_csv(
            &["phi_limit_rel_err".into(), "reward_matrix_rel_err".into()],
            &cov_rows,
            Some("column"),
        ),
    );
    b.check_below(
        "phi_limit_covariance",
        cov_rows.column(0).max(),
        cfg.cov_tolerance,
        "covariance",
    )?;

    // Σ_m w^m (w^m)ᵀ → I and Σ_m w^m ~ N(0, I)
    let variance = 1.0 / cfg.weight_heads as f64;
    let seeds = cfg.weight_seeds.max(cfg.ks_seeds);
    let stats = (0..seeds)
        .into_par_iter()
        .map(|s| {
            let w = sample_weights(
                cfg.weight_heads,
                cfg.weight_k,
                variance,
                task_seed(cfg.seed, 2_000_000 + s as u64),
            )?;
            let gram = &w * w.transpose();
            let frob = (gram - DMatrix::<f64>::identity(cfg.weight_k, cfg.weight_k)).norm();
            Ok((frob, w.column_sum().norm()))
        })
        .collect::<Result<Vec<_>>>()?;
    let frob: Vec<f64> = stats.iter().take(cfg.weight_seeds).map(|x| x.0).collect();
    b.add_table(
        "weight_gram",
        matrix_csv(
            &["frobenius_error".into()],
            &DMatrix::from_column_slice(frob.len(), 1, &frob),
            Some("seed"),
        ),
    );
    let within = frob.iter().filter(|f| **f <= cfg.weight_tolerance).count();
    b.check_at_least(
        "weight_gram_identity",
        within as f64,
        cfg.weight_seeds as f64,
        "weight_gram",
    )?;

    let mut norms: Vec<f64> = stats.iter().take(cfg.ks_seeds).map(|x| x.1).collect();
    norms.sort_by(f64::total_cmp);
    let chi = ChiSquared::new(cfg.weight_k as f64).map_err(|e| config(e.to_string()))?;
    let count = norms.len() as f64;
    let mut ks_rows = DMatrix::zeros(norms.len(), 2);
    let mut d = 0.0f64;
    for (i, x) in norms.iter().enumerate() {
        let f = chi.cdf(x * x);
        ks_rows[(i, 0)] = *x;
        ks_rows[(i, 1)] = f;
        d = d.max((i + 1) as f64 / count - f).max(f - i as f64 / count);
    }
    let critical = (-(cfg.ks_level / 2.0).ln() / 2.0).sqrt() / count.sqrt();
    b.add_table(
        "weight_sum_ks",
        matrix_csv(&["norm".into(), "chi_cdf".into()], &ks_rows, Some("rank")),
    );
    b.check_below("weight_sum_chi_ks", d, critical, "weight_sum_ks")?;

    // random-cumulant displacement aligns with the EBFs
    let r = sample_cumulants(cfg.cov_heads, &sigma, cfg.seed)?;
    let w = sample_weights(cfg.cov_heads, cfg.k, 1.0 / cfg.cov_heads as f64, cfg.seed)?;
    let phi_inf = &psi * (r * w.transpose());
    let offset = &phi0 - &phi_inf;
    let spec = LinearFlowSpec::new(td_operator(&chain), DMatrix::zeros(n, cfg.k), offset)?;
    let rc_times = linspace(cfg.rc_time, 31);
    let disp = linear_limit_flow(&spec, &rc_times)?;
    let target = ebf(chain.transition(), cfg.k)?;
    let mut rc = DMatrix::zeros(rc_times.len(), 2);
    for (i, (t, s)) in rc_times.iter().zip(&disp.states).enumerate() {
        rc[(i, 0)] = *t;
        rc[(i, 1)] = grassmann_distance(&orthonormalize(s)?, &target)?.distance;
    }
    b.add_table(
        "rc_displacement_distance",
        matrix_csv(&["t".into(), "distance".into()], &rc, None),
    );
    b.add_figure(
        "rc_displacement_distance",
        emit_svg(&rc, SvgKind::Line, "RC displacement vs EBFs")?,
    );
    b.check_below(
        "rc_displacement_ebf",
        rc[(rc_times.len() - 1, 1)],
        cfg.rc_tolerance,
        "rc_displacement_distance",
    )?;
    Ok(b)
}
