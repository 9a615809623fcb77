use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{gaussian_matrix, matrix_csv, ReportBundle};
use crate::dynamics::{ensemble_flow, sample_weights, stream_rng, EnsembleState, Trajectory};
use crate::error::{config, Result};
use crate::gridworld::build_four_rooms;
use crate::mdp::{induce, MarkovChain};
use crate::spectral::{eigen_decompose, grassmann_distance, orthonormalize, DEFAULT_GAP_TOL};
use crate::svg::{emit_svg, SvgKind};

const PHI_STREAM: u64 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaMode {
    /// Head weights follow their own flow with rate `beta`.
    Trained,
    /// Head weights stay at their initial values.
    Fixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourRoomsConfig {
    pub k: usize,
    pub m: usize,
    pub t_max: f64,
    pub step: f64,
    pub beta_mode: BetaMode,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Spacing of recorded time points.
    pub record_every: f64,
    /// Times at which feature 0 is drawn on the map.
    pub snapshots: Vec<f64>,
    /// Heads in the fixed-weight convergence check.
    pub check_m: usize,
    pub seed: u64,
}

impl Default for FourRoomsConfig {
    fn default() -> Self {
        FourRoomsConfig {
            k: 10,
            m: 20,
            t_max: 100.0,
            step: 0.01,
            beta_mode: BetaMode::Trained,
            alpha: 1.0,
            beta: 1.0,
            gamma: 0.9,
            record_every: 2.0,
            snapshots: vec![0.0, 2.0, 4.0, 10.0, 20.0, 50.0, 100.0],
            check_m: 200,
            seed: 0,
        }
    }
}

fn record_times(cfg: &FourRoomsConfig) -> Vec<f64> {
    let n = (cfg.t_max / cfg.record_every).round().max(1.0) as usize;
    let mut times: Vec<f64> = (0..=n).map(|i| cfg.t_max * i as f64 / n as f64).collect();
    for &s in &cfg.snapshots {
        if s <= cfg.t_max && !times.iter().any(|t| (t - s).abs() < 1e-12) {
            times.push(s);
        }
    }
    times.sort_by(f64::total_cmp);
    times
}

fn run_heads(
    chain: &MarkovChain,
    phi0: &DMatrix<f64>,
    m: usize,
    beta: f64,
    cfg: &FourRoomsConfig,
    times: &[f64],
) -> Result<Trajectory> {
    let w = sample_weights(m, cfg.k, 1.0 / m as f64, cfg.seed)?;
    let state = EnsembleState::new(phi0.clone(), w, None)?;
    ensemble_flow(chain, &state, cfg.alpha, beta, times, cfg.step)
}

/// Relative change of the eigen-projections `UᵀΦ` between the first and last time.
fn projection_change(u: &DMatrix<f64>, tr: &Trajectory) -> f64 {
    let first = u.transpose() * &tr.states[0];
    let last = u.transpose() * tr.last();
    (last - &first).norm() / first.norm()
}

/// Feature evolution of a zero-reward ensemble on the four-rooms random walk.
pub fn run_four_rooms_features(cfg: &FourRoomsConfig) -> Result<ReportBundle> {
    let (mdp, pi) = build_four_rooms();
    let n = mdp.n_states();
    if cfg.k == 0 || cfg.k > n || cfg.m == 0 || cfg.check_m == 0 {
        return Err(config(format!("need 1 <= K <= {n} and at least one head")));
    }
    if !(cfg.t_max > 0.0 && cfg.record_every > 0.0) {
        return Err(config("t_max and record_every must be positive"));
    }
    let chain = induce(&mdp, &pi, cfg.gamma)?;
    let p = chain.transition();
    let dec = eigen_decompose(p, DEFAULT_GAP_TOL)?;
    let u = dec.right_vectors.map(|z| z.re);

    let mut rng = stream_rng(cfg.seed, PHI_STREAM);
    let phi0 = gaussian_matrix(&mut rng, n, cfg.k, 1.0 / (n as f64).sqrt());
    let times = record_times(cfg);
    let beta = match cfg.beta_mode {
        BetaMode::Trained => cfg.beta,
        BetaMode::Fixed => 0.0,
    };
    let main = run_heads(&chain, &phi0, cfg.m, beta, cfg, &times)?;

    let mut b = ReportBundle::new("four-rooms", cfg)?;
    let eig_table = DMatrix::from_fn(n, 2, |i, j| {
        if j == 0 {
            dec.eigenvalues[i].re
        } else {
            dec.eigenvalues[i].im
        }
    });
    b.add_table(
        "eigenvalues",
        matrix_csv(&["re".into(), "im".into()], &eig_table, Some("i")),
    );

    let feature0 = DMatrix::from_fn(times.len(), n, |t, x| main.states[t][(x, 0)]);
    let mut cols = vec!["t".to_string()];
    cols.extend((0..n).map(|x| format!("v_{x}")));
    let mut with_t = feature0.clone().insert_column(0, 0.0);
    for (i, t) in times.iter().enumerate() {
        with_t[(i, 0)] = *t;
    }
    b.add_table("feature0", matrix_csv(&cols, &with_t, None));

    let mut proj = String::from("t,feature,eigen_index,dot\n");
    for (t, phi) in times.iter().zip(&main.states) {
        let d = u.transpose() * phi;
        for j in 0..cfg.k {
            for i in 0..n {
                proj.push_str(&format!("{t:e},{j},{},{:e}\n", i + 1, d[(i, j)]));
            }
        }
    }
    b.add_table("projections", proj);
    let curves = DMatrix::from_fn(times.len(), n + 1, |ti, c| {
        if c == 0 {
            times[ti]
        } else {
            u.column(c - 1).dot(&main.states[ti].column(0))
        }
    });
    b.add_figure(
        "projections_feature0",
        emit_svg(&curves, SvgKind::Line, "feature 0 on eigenvectors")?,
    );

    for &s in &cfg.snapshots {
        if let Some(i) = times.iter().position(|t| (t - s).abs() < 1e-12) {
            let col = DMatrix::from_column_slice(n, 1, main.states[i].column(0).as_slice());
            b.add_figure(
                &format!("feature0_t{s}"),
                emit_svg(&col, SvgKind::Gridworld, &format!("feature 0 at t = {s}"))?,
            );
        }
    }
    for idx in [5, n] {
        let col = DMatrix::from_column_slice(n, 1, u.column(idx - 1).as_slice());
        b.add_figure(
            &format!("eigenvector_{idx}"),
            emit_svg(&col, SvgKind::Gridworld, &format!("eigenvector {idx}"))?,
        );
    }

    // fixed-weight run with many heads against the EBF subspace
    let fixed = run_heads(&chain, &phi0, cfg.check_m, 0.0, cfg, &times)?;
    let target = crate::spectral::ebf(p, cfg.k)?;
    let mut dist = DMatrix::zeros(times.len(), 2);
    for (i, (t, phi)) in times.iter().zip(&fixed.states).enumerate() {
        dist[(i, 0)] = *t;
        dist[(i, 1)] = grassmann_distance(&orthonormalize(phi)?, &target)?.distance;
    }
    b.add_table(
        "fixed_heads_distance",
        matrix_csv(&["t".into(), "distance".into()], &dist, None),
    );
    b.add_figure(
        "fixed_heads_distance",
        emit_svg(&dist, SvgKind::Line, "distance to EBFs")?,
    );
    b.check_below(
        "fixed_heads_ebf_distance",
        dist[(times.len() - 1, 1)],
        0.1,
        "fixed_heads_distance",
    )?;

    // a single head barely moves the features compared with the ensemble
    let single = run_heads(&chain, &phi0, 1, beta, cfg, &times)?;
    let change_one = projection_change(&u, &single);
    let change_many = projection_change(&u, &main);
    let summary = DMatrix::from_row_slice(2, 2, &[1.0, change_one, cfg.m as f64, change_many]);
    b.add_table(
        "projection_change",
        matrix_csv(&["heads".into(), "relative_change".into()], &summary, None),
    );
    b.check_below(
        "single_head_features_static",
        change_one,
        change_many,
        "projection_change",
    )?;
    Ok(b)
}
