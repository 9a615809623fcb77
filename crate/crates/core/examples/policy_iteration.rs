//! Policy iteration on the slip chain, printing the value-improvement path.

use repdyn::mdp::{build_chain_mdp, policy_iteration, Policy};

fn main() -> repdyn::Result<()> {
    let mdp = build_chain_mdp(30, 0.01, 2.0, 1.0)?;
    let init = Policy::deterministic(&[1; 30], 2)?;
    let trace = policy_iteration(&mdp, 0.9, 100, &init)?;
    println!("converged: {} after {} policies", trace.converged, trace.policies.len());
    for (j, (pi, v)) in trace.policies.iter().zip(&trace.values).enumerate() {
        let arrows: String = pi
            .actions()
            .unwrap()
            .iter()
            .map(|&a| if a == 0 { '<' } else { '>' })
            .collect();
        println!("{j:>3} {arrows}  V(0)={:8.4} V(29)={:8.4}", v[0], v[29]);
    }
    Ok(())
}
