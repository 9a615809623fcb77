use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{gaussian_matrix, matrix_csv, ReportBundle};
use crate::dynamics::stream_rng;
use crate::error::{config, Result};
use crate::mdp::{build_chain_mdp, induce, policy_iteration, Policy};
use crate::spectral::{ebf_with_diagnostics, orthonormalize, rsbf, vector_subspace_angle, Subspace, DEFAULT_GAP_TOL};
use crate::svg::{emit_svg, SvgKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainTransferConfig {
    pub k: usize,
    pub gamma: f64,
    pub j_max: usize,
    pub with_value_feature: bool,
    pub n_states: usize,
    pub slip: f64,
    pub left_reward: f64,
    pub right_reward: f64,
    /// Initial deterministic action for policy iteration (0 = left, 1 = right).
    pub init_action: usize,
    pub seed: u64,
}

impl Default for ChainTransferConfig {
    fn default() -> Self {
        ChainTransferConfig {
            k: 4,
            gamma: 0.9,
            j_max: 100,
            with_value_feature: true,
            n_states: 30,
            slip: 0.01,
            left_reward: 2.0,
            right_reward: 1.0,
            init_action: 1,
            seed: 0,
        }
    }
}

fn angle_matrix(features: &[Subspace], values: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    let j = values.len();
    let mut m = DMatrix::zeros(j, j);
    for (a, s) in features.iter().enumerate() {
        for (b, v) in values.iter().enumerate() {
            m[(a, b)] = vector_subspace_angle(v, s)?;
        }
    }
    Ok(m)
}

fn mean_off_diagonal(m: &DMatrix<f64>) -> f64 {
    let j = m.nrows();
    if j < 2 {
        return 0.0;
    }
    let total: f64 = (0..j)
        .flat_map(|a| (0..j).map(move |b| (a, b)))
        .filter(|(a, b)| a != b)
        .map(|(a, b)| m[(a, b)])
        .sum();
    total / (j * (j - 1)) as f64
}

fn max_diagonal(m: &DMatrix<f64>) -> f64 {
    m.diagonal().iter().copied().fold(0.0, f64::max)
}

/// Transfer of EBF, RSBF and random features along the value-improvement path.
pub fn run_chain_transfer(cfg: &ChainTransferConfig) -> Result<ReportBundle> {
    if cfg.k == 0 || cfg.k > cfg.n_states {
        return Err(config(format!("K = {} outside 1..={}", cfg.k, cfg.n_states)));
    }
    let mdp = build_chain_mdp(cfg.n_states, cfg.slip, cfg.left_reward, cfg.right_reward)?;
    let init = Policy::deterministic(&vec![cfg.init_action; cfg.n_states], mdp.n_actions())?;
    let trace = policy_iteration(&mdp, cfg.gamma, cfg.j_max, &init)?;
    let n = cfg.n_states;
    let sigma = DMatrix::identity(n, n);

    let mut ebfs = Vec::new();
    let mut rsbfs = Vec::new();
    let mut randoms = Vec::new();
    // near-deterministic drifts make P badly non-normal, so EBF notes are recorded rather than logged
    let mut diagnostics = String::from("policy,note\n");
    for (j, pi) in trace.policies.iter().enumerate() {
        let chain = induce(&mdp, pi, cfg.gamma)?;
        let (e, notes) = ebf_with_diagnostics(chain.transition(), cfg.k, DEFAULT_GAP_TOL)?;
        for note in notes {
            diagnostics.push_str(&format!("{j},\"{}\"\n", note.replace('"', "'")));
        }
        ebfs.push(e);
        rsbfs.push(rsbf(chain.transition(), cfg.gamma, cfg.k, &sigma)?);
        let mut rng = stream_rng(cfg.seed, j as u64);
        randoms.push(orthonormalize(&gaussian_matrix(&mut rng, n, cfg.k, 1.0))?);
    }

    let mut b = ReportBundle::new("chain-transfer", cfg)?;
    b.add_table("ebf_diagnostics", diagnostics);
    let jn = trace.values.len();
    let value_cols: Vec<String> = (0..jn).map(|j| format!("V{j}")).collect();
    let values = DMatrix::from_columns(&trace.values);
    b.add_table("values", matrix_csv(&value_cols, &values, Some("state")));
    let actions = DMatrix::from_fn(n, jn, |x, j| {
        trace.policies[j].actions().map_or(f64::NAN, |a| a[x] as f64)
    });
    b.add_table("policies", matrix_csv(&value_cols, &actions, Some("state")));

    let cols: Vec<String> = (0..jn).map(|j| format!("v{j}")).collect();
    let mut means = Vec::new();
    for (name, feats) in [("ebf", &ebfs), ("rsbf", &rsbfs), ("random", &randoms)] {
        let m = angle_matrix(feats, &trace.values)?;
        b.add_table(&format!("{name}_angles"), matrix_csv(&cols, &m, Some("features")));
        b.add_figure(
            &format!("{name}_angles"),
            emit_svg(&m, SvgKind::Heatmap, &format!("{name} angles"))?,
        );
        let mut row = vec![mean_off_diagonal(&m), f64::NAN];
        if cfg.with_value_feature {
            let plus: Vec<Subspace> = feats
                .iter()
                .zip(&trace.values)
                .map(|(s, v)| s.extend(v))
                .collect::<Result<_>>()?;
            let mv = angle_matrix(&plus, &trace.values)?;
            let table = format!("{name}_plus_value_angles");
            b.add_table(&table, matrix_csv(&cols, &mv, Some("features")));
            b.add_figure(
                &table,
                emit_svg(&mv, SvgKind::Heatmap, &format!("{name} + value angles"))?,
            );
            row[1] = mean_off_diagonal(&mv);
            b.check_below(&format!("{name}_plus_value_diagonal"), max_diagonal(&mv), 1e-8, &table)?;
        }
        means.push(row);
    }
    let mut summary = String::from("features,mean_offdiag,mean_offdiag_plus_value\n");
    for (name, row) in ["ebf", "rsbf", "random"].iter().zip(&means) {
        summary.push_str(&format!("{name},{:e},{:e}\n", row[0], row[1]));
    }
    b.add_table("summary", summary);
    b.check_below("rsbf_beats_random", means[1][0], means[2][0], "rsbf_angles")?;
    Ok(b)
}
