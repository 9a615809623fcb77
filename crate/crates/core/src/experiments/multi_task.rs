use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::limit_checks::unit_phi0;
use super::{matrix_csv, ReportBundle};
use crate::dynamics::{
    block_orthogonal_weights, build_multi_task_operator, ensemble_flow_tasks, head_assignment, linear_limit_flow,
    linspace, sample_weights, EnsembleState, LinearFlowSpec, MultiTaskMode,
};
use crate::error::{config, Result};
use crate::mdp::{build_chain_mdp, induce, MarkovChain, Mdp, Policy};
use crate::spectral::{ebf, grassmann_distance, orthonormalize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Policies,
    Discounts,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiTaskConfig {
    pub mode: Mode,
    pub l: usize,
    pub m: usize,
    pub k: usize,
    pub n_states: usize,
    pub gamma: f64,
    /// Discount range spanned by the tasks in `discounts` mode.
    pub gamma_min: f64,
    pub gamma_max: f64,
    /// Left-action probability of the first policy; the others mirror it so that the mean policy is uniform.
    pub left_prob: f64,
    pub t_max: f64,
    pub n_times: usize,
    pub step: f64,
    pub gap_tolerance: f64,
    /// Time at which the limiting displacement is compared with EBFs.
    pub t_ebf: f64,
    pub ebf_tolerance: f64,
    pub ebf_separation: f64,
    /// Horizon and step of the block-orthogonal initialisation run.
    pub block_t_max: f64,
    pub block_step: f64,
    pub seed: u64,
}

impl Default for MultiTaskConfig {
    fn default() -> Self {
        MultiTaskConfig {
            mode: Mode::Policies,
            l: 2,
            m: 10_000,
            k: 4,
            n_states: 30,
            gamma: 0.9,
            gamma_min: 0.5,
            gamma_max: 0.9,
            left_prob: 0.8,
            t_max: 5.0,
            n_times: 51,
            step: 1e-3,
            gap_tolerance: 0.05,
            t_ebf: 300.0,
            ebf_tolerance: 0.05,
            ebf_separation: 0.1,
            block_t_max: 300.0,
            block_step: 5e-2,
            seed: 0,
        }
    }
}

/// `l` stationary policies on the slip chain whose mean is the uniform policy.
///
/// Policy `i` goes left with probability interpolated linearly from
/// `left_prob` down to `1 - left_prob`; a single policy is uniform.
pub fn constructed_policies(mdp: &Mdp, l: usize, left_prob: f64) -> Result<Vec<Policy>> {
    if l == 0 || !(0.0..=1.0).contains(&left_prob) {
        return Err(config("need L >= 1 and a probability for left_prob"));
    }
    (0..l)
        .map(|i| {
            let left = if l == 1 {
                0.5
            } else {
                left_prob + (1.0 - 2.0 * left_prob) * i as f64 / (l - 1) as f64
            };
            Policy::new(DMatrix::from_fn(mdp.n_states(), 2, |_, a| {
                if a == 0 {
                    left
                } else {
                    1.0 - left
                }
            }))
        })
        .collect()
}

fn tasks(cfg: &MultiTaskConfig) -> Result<Vec<MarkovChain>> {
    let mdp = build_chain_mdp(cfg.n_states, 0.01, 2.0, 1.0)?;
    match cfg.mode {
        Mode::Policies => constructed_policies(&mdp, cfg.l, cfg.left_prob)?
            .iter()
            .map(|pi| induce(&mdp, pi, cfg.gamma))
            .collect(),
        Mode::Discounts => {
            let uniform = Policy::uniform(cfg.n_states, 2);
            (0..cfg.l)
                .map(|i| {
                    let g = if cfg.l == 1 {
                        cfg.gamma
                    } else {
                        cfg.gamma_min + (cfg.gamma_max - cfg.gamma_min) * i as f64 / (cfg.l - 1) as f64
                    };
                    induce(&mdp, &uniform, g)
                })
                .collect()
        }
    }
}

/// Heads split across several policies or discounts against the averaged-operator limit.
pub fn run_multi_task(cfg: &MultiTaskConfig) -> Result<ReportBundle> {
    if cfg.l == 0 || !cfg.m.is_multiple_of(cfg.l) {
        return Err(config(format!("M = {} must be divisible by L = {}", cfg.m, cfg.l)));
    }
    if cfg.k == 0 || cfg.k > cfg.n_states {
        return Err(config("K must be between 1 and the number of states"));
    }
    let n = cfg.n_states;
    let zero = DVector::zeros(n);
    let chains: Vec<MarkovChain> = tasks(cfg)?
        .into_iter()
        .map(|c| c.with_reward(zero.clone()))
        .collect::<Result<_>>()?;
    let mode = match cfg.mode {
        Mode::Policies => MultiTaskMode::Policies,
        Mode::Discounts => MultiTaskMode::Discounts,
    };
    let a = build_multi_task_operator(&chains, mode)?;
    let heads = head_assignment(cfg.m, cfg.l)?;
    let phi0 = unit_phi0(cfg.seed, n, cfg.k);
    let times = linspace(cfg.t_max, cfg.n_times);

    let spec = LinearFlowSpec::new(a.clone(), DMatrix::zeros(n, cfg.k), phi0.clone())?;
    let limit = linear_limit_flow(&spec, &times)?;
    let w = sample_weights(cfg.m, cfg.k, 1.0 / cfg.m as f64, cfg.seed)?;
    let finite = ensemble_flow_tasks(
        &chains,
        &heads,
        &EnsembleState::new(phi0.clone(), w, None)?,
        1.0,
        0.0,
        &times,
        cfg.step,
    )?;
    let mut gaps = DMatrix::zeros(times.len(), 2);
    for (i, t) in times.iter().enumerate() {
        gaps[(i, 0)] = *t;
        gaps[(i, 1)] = (&finite.states[i] - &limit.states[i]).norm();
    }
    let mut b = ReportBundle::new("multi-task", cfg)?;
    b.add_table("trajectory_gap", matrix_csv(&["t".into(), "gap".into()], &gaps, None));
    b.check_below(
        "averaged_operator_gap",
        gaps.column(1).max(),
        cfg.gap_tolerance,
        "trajectory_gap",
    )?;

    // limiting subspace of the averaged operator
    let id = DMatrix::<f64>::identity(n, n);
    let mean_gamma = chains.iter().map(|c| c.gamma()).sum::<f64>() / cfg.l as f64;
    let p_bar = match cfg.mode {
        Mode::Policies => (&a + &id) / cfg.gamma,
        Mode::Discounts => chains[0].transition().clone(),
    };
    let late = linear_limit_flow(&spec, &[cfg.t_ebf])?;
    let late_span = orthonormalize(late.last())?;
    let d_bar = grassmann_distance(&late_span, &ebf(&p_bar, cfg.k)?)?.distance;
    let d_first = grassmann_distance(&late_span, &ebf(chains[0].transition(), cfg.k)?)?.distance;
    b.add_table(
        "limit_ebf_distance",
        format!(
            "t,mean_gamma,to_mean_operator,to_first_task\n{:e},{mean_gamma:e},{d_bar:e},{d_first:e}\n",
            cfg.t_ebf
        ),
    );
    b.check_below("limit_matches_mean_ebf", d_bar, cfg.ebf_tolerance, "limit_ebf_distance")?;
    if cfg.mode == Mode::Policies && cfg.l > 1 {
        b.check_above(
            "limit_differs_from_first_task",
            d_first,
            cfg.ebf_separation,
            "limit_ebf_distance",
        )?;
    }

    // block-orthogonal heads: each feature block follows its own task
    if cfg.k.is_multiple_of(cfg.l) {
        let block = cfg.k / cfg.l;
        let wb = block_orthogonal_weights(cfg.m, cfg.k, cfg.l, 1.0 / cfg.m as f64, cfg.seed)?;
        let state = EnsembleState::new(phi0.clone(), wb, None)?;
        let run = ensemble_flow_tasks(&chains, &heads, &state, 1.0, 0.0, &[cfg.block_t_max], cfg.block_step)?;
        let mut table = String::from("block,to_own_task,to_mean_operator\n");
        for (i, chain) in chains.iter().enumerate() {
            let cols = run.last().columns(i * block, block).clone_owned();
            let span = orthonormalize(&cols)?;
            let own = grassmann_distance(&span, &ebf(chain.transition(), block)?)?.distance;
            let mean = grassmann_distance(&span, &ebf(&p_bar, block)?)?.distance;
            table.push_str(&format!("{i},{own:e},{mean:e}\n"));
        }
        b.add_table("block_decomposition", table);
    }
    Ok(b)
}
