//! Random-cumulant auxiliary tasks: the representation settles at ΨΣ r^m (w^m)ᵀ and
//! the transient it sheds lives in the leading eigenvectors.

use nalgebra::DMatrix;
use repdyn::dynamics::{ensemble_flow, linspace, sample_cumulants, sample_weights, EnsembleState};
use repdyn::mdp::{build_chain_mdp, induce, Policy};
use repdyn::spectral::{ebf, grassmann_distance, orthonormalize, resolvent};

fn main() -> repdyn::Result<()> {
    let mdp = build_chain_mdp(30, 0.01, 2.0, 1.0)?;
    let chain = induce(&mdp, &Policy::uniform(30, 2), 0.9)?;
    let (m, k) = (200, 4);
    let w = sample_weights(m, k, 1.0 / m as f64, 1)?;
    let r = sample_cumulants(m, &DMatrix::identity(30, 30), 1)?;
    let phi0 = DMatrix::from_fn(30, k, |i, j| ((i + 3 * j) as f64 * 0.37).cos() / 30f64.sqrt());

    let times = linspace(150.0, 4);
    let tr = ensemble_flow(
        &chain,
        &EnsembleState::new(phi0, w.clone(), Some(r.clone()))?,
        1.0,
        0.0,
        &times,
        1e-2,
    )?;

    // frozen heads: the fixed point solves (I - γP)Φ WWᵀ = R Wᵀ
    let psi = resolvent(chain.transition(), 0.9)?;
    let gram = &w * w.transpose();
    let fixed = &psi * &r * w.transpose() * gram.try_inverse().expect("Gram matrix is invertible");
    for (t, phi) in times.iter().zip(&tr.states) {
        let gap = (phi - &fixed).norm() / fixed.norm();
        let shed = orthonormalize(&(phi - &fixed))?;
        let d = grassmann_distance(&shed, &ebf(chain.transition(), k)?)?.distance;
        println!("t = {t:5.0}: relative distance to fixed point {gap:.3e}, d(displacement, EBF) {d:.3e}");
    }
    Ok(())
}
