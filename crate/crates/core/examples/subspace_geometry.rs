//! Principal angles, Grassmann distance and the vector-to-subspace angle.

use nalgebra::{DMatrix, DVector};
use repdyn::spectral::{grassmann_distance, orthonormalize, principal_angles, vector_subspace_angle};

fn main() -> repdyn::Result<()> {
    let theta: f64 = 0.4;
    let xy = orthonormalize(&DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]))?;
    let tilted = orthonormalize(&DMatrix::from_column_slice(
        3,
        2,
        &[1.0, 0.0, 0.0, 0.0, theta.cos(), theta.sin()],
    ))?;
    let pa = principal_angles(&xy, &tilted)?;
    println!(
        "principal angles {:?}, distance {:.6} (tilt {theta})",
        pa.angles, pa.distance
    );

    // any basis of the same plane gives the same answer
    let other_basis = orthonormalize(&DMatrix::from_column_slice(3, 2, &[1.0, 1.0, 0.0, 1.0, -1.0, 0.0]))?;
    println!(
        "d(xy, xy in another basis) = {:.1e}",
        grassmann_distance(&xy, &other_basis)?.distance
    );

    let v = DVector::from_vec(vec![1.0, 1.0, 1.0]);
    println!(
        "angle between (1,1,1) and the xy-plane: {:.6}",
        vector_subspace_angle(&v, &xy)?
    );

    let grown = xy.extend(&v)?;
    println!("after adding (1,1,1) the span has dimension {}", grown.dim());
    Ok(())
}
