//! Eigen-basis and resolvent singular-basis features of a random walk, and how far apart they are.

use nalgebra::DMatrix;
use repdyn::mdp::{build_chain_mdp, induce, Policy};
use repdyn::spectral::{ebf, eigen_decompose, grassmann_distance, rsbf, DEFAULT_GAP_TOL};

fn main() -> repdyn::Result<()> {
    let mdp = build_chain_mdp(30, 0.01, 2.0, 1.0)?;
    let chain = induce(&mdp, &Policy::uniform(30, 2), 0.9)?;
    let p = chain.transition();

    let dec = eigen_decompose(p, DEFAULT_GAP_TOL)?;
    let lead: Vec<String> = dec.eigenvalues.iter().take(6).map(|z| format!("{:.4}", z.re)).collect();
    println!("leading eigenvalues: {}", lead.join(", "));
    println!("real with distinct magnitudes: {}", dec.assumption_ok);

    for k in [1, 2, 4, 8] {
        let e = ebf(p, k)?;
        let r = rsbf(p, 0.9, k, &DMatrix::identity(30, 30))?;
        println!("K = {k}: d(EBF, RSBF) = {:.3e}", grassmann_distance(&e, &r)?.distance);
    }

    // a non-isotropic cumulant covariance tilts the RSBF away from the EBF
    let sigma = DMatrix::from_fn(30, 30, |i, j| if i == j { 1.0 + i as f64 } else { 0.0 });
    let r = rsbf(p, 0.9, 4, &sigma)?;
    println!(
        "K = 4, Σ = diag(1..30): d(EBF, RSBF) = {:.3e}",
        grassmann_distance(&ebf(p, 4)?, &r)?.distance
    );
    Ok(())
}
