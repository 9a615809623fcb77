//! Frozen random heads: the shared representation approaches exp(t(γP - I))Φ0 as heads are added.

use nalgebra::{DMatrix, DVector};
use repdyn::dynamics::{
    ensemble_flow, linear_limit_flow, linspace, sample_weights, td_operator, EnsembleState, LinearFlowSpec,
};
use repdyn::mdp::{build_chain_mdp, induce, Policy};

fn main() -> repdyn::Result<()> {
    let mdp = build_chain_mdp(30, 0.01, 2.0, 1.0)?;
    let chain = induce(&mdp, &Policy::uniform(30, 2), 0.9)?.with_reward(DVector::zeros(30))?;
    let phi0 = DMatrix::from_fn(30, 4, |i, j| ((i * 7 + j * 13) as f64).sin());
    let phi0 = &phi0 / phi0.norm();
    let times = linspace(5.0, 51);

    let limit = linear_limit_flow(
        &LinearFlowSpec::new(td_operator(&chain), DMatrix::zeros(30, 4), phi0.clone())?,
        &times,
    )?;
    for m in [1, 10, 100, 1_000, 10_000] {
        let w = sample_weights(m, 4, 1.0 / m as f64, 0)?;
        let tr = ensemble_flow(
            &chain,
            &EnsembleState::new(phi0.clone(), w, None)?,
            1.0,
            0.0,
            &times,
            1e-3,
        )?;
        println!("M = {m:>6}: max gap to the limit flow {:.3e}", tr.max_gap(&limit)?);
    }
    Ok(())
}
