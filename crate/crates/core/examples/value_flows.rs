//! TD, Monte Carlo, n-step and TD(λ) value flows converging to the same fixed point.

use nalgebra::DVector;
use repdyn::dynamics::{linspace, mc_value_flow, nstep_value_flow, td_lambda_value_flow, td_value_flow};
use repdyn::mdp::{build_chain_mdp, exact_value, induce, Policy};

fn main() -> repdyn::Result<()> {
    let mdp = build_chain_mdp(30, 0.01, 2.0, 1.0)?;
    let chain = induce(&mdp, &Policy::uniform(30, 2), 0.9)?;
    let vpi = exact_value(&chain)?;
    let v0 = DVector::zeros(30);
    let times = linspace(100.0, 6);
    let flows = [
        td_value_flow(&chain, &v0, &times)?,
        mc_value_flow(&chain, &v0, &times)?,
        nstep_value_flow(&chain, 3, &v0, &times)?,
        td_lambda_value_flow(&chain, 0.5, &v0, &times)?,
    ];
    println!(
        "{:>6} {:>12} {:>12} {:>12} {:>12}",
        "t", "td", "mc", "3-step", "td(0.5)"
    );
    for (i, t) in times.iter().enumerate() {
        let errs: Vec<String> = flows
            .iter()
            .map(|f| format!("{:12.3e}", (f.value(i) - &vpi).amax()))
            .collect();
        println!("{t:6.1} {}", errs.join(" "));
    }
    Ok(())
}
