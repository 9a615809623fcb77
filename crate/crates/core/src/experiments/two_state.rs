use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ReportBundle;
use crate::dynamics::{linspace, mc_value_flow, td_value_flow};
use crate::error::Result;
use crate::mdp::{build_two_state_mdp, exact_value, induce};
use crate::spectral::{ebf, vector_subspace_angle};
use crate::svg::{emit_svg, SvgKind};

/// Two-state value dynamics. The transition and reward values are repo conventions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoStateConfig {
    pub stay_prob_a: f64,
    pub stay_prob_b: f64,
    pub rewards: [f64; 2],
    pub gamma: f64,
    pub v0: [f64; 2],
    pub t_max: f64,
    pub n_times: usize,
    pub seed: u64,
}

impl Default for TwoStateConfig {
    fn default() -> Self {
        TwoStateConfig {
            stay_prob_a: 0.9,
            stay_prob_b: 0.1,
            rewards: [1.0, 0.0],
            gamma: 0.9,
            v0: [-2.0, 6.0],
            t_max: 200.0,
            n_times: 401,
            seed: 0,
        }
    }
}

/// TD and MC value trajectories in the two-dimensional value plane.
pub fn run_two_state(cfg: &TwoStateConfig) -> Result<ReportBundle> {
    let (mdp, pi) = build_two_state_mdp(cfg.stay_prob_a, cfg.stay_prob_b, cfg.rewards)?;
    let chain = induce(&mdp, &pi, cfg.gamma)?;
    let vpi = exact_value(&chain)?;
    let v0 = DVector::from_column_slice(&cfg.v0);
    let times = linspace(cfg.t_max, cfg.n_times.max(2));
    let td = td_value_flow(&chain, &v0, &times)?;
    let mc = mc_value_flow(&chain, &v0, &times)?;

    // displacement V_t - V^π evolves as the zero-reward flow started at V_0 - V^π
    let zero = chain.with_reward(DVector::zeros(2))?;
    let td_disp = td_value_flow(&zero, &(&v0 - &vpi), &times)?;
    let u1 = ebf(chain.transition(), 1)?;

    let mut b = ReportBundle::new("two-state", cfg)?;
    b.add_table("td", td.to_csv());
    b.add_table("mc", mc.to_csv());
    b.add_table("td_displacement", td_disp.to_csv());
    for (name, tr) in [("td_plane", &td), ("mc_plane", &mc)] {
        let pts = DMatrix::from_fn(tr.len(), 2, |i, j| tr.states[i][(j, 0)]);
        b.add_figure(name, emit_svg(&pts, SvgKind::Line, name)?);
    }

    let dir = (&v0 - &vpi).normalize();
    let mc_dev = mc
        .states
        .iter()
        .map(|s| {
            let d = s.column(0) - &vpi;
            (&d - &dir * dir.dot(&d)).norm()
        })
        .fold(0.0, f64::max);
    b.check_below("mc_collinearity", mc_dev, 1e-10, "mc")?;

    let last = td_disp.value(td_disp.len() - 1);
    let angle = vector_subspace_angle(&last, &u1)?;
    b.check_below("td_alignment_u1", angle, 1e-2, "td_displacement")?;

    let td_err = (td.value(td.len() - 1) - &vpi).amax();
    let mc_err = (mc.value(mc.len() - 1) - &vpi).amax();
    b.check_below("td_terminal_error", td_err, 1e-6, "td")?;
    b.check_below("mc_terminal_error", mc_err, 1e-6, "mc")?;
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_run_passes() {
        let b = run_two_state(&TwoStateConfig::default()).unwrap();
        assert!(b.all_passed(), "{}", b.summary());
        assert!(b.check("mc_collinearity").unwrap().measured < 1e-12);
    }

    #[test]
    fn short_horizon_fails_alignment() {
        let cfg = TwoStateConfig {
            t_max: 1.0,
            ..Default::default()
        };
        let b = run_two_state(&cfg).unwrap();
        assert!(!b.all_passed());
    }
}
