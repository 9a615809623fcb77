//! Renders the leading eigenvectors of the four-rooms random walk as SVG grids.

use nalgebra::DMatrix;
use repdyn::gridworld::{build_four_rooms, four_rooms_map};
use repdyn::mdp::induce;
use repdyn::spectral::ebf;
use repdyn::svg::gridworld;

fn main() -> repdyn::Result<()> {
    let (mdp, policy) = build_four_rooms();
    let chain = induce(&mdp, &policy, 0.9)?;
    let basis = ebf(chain.transition(), 4)?;
    let map = four_rooms_map();
    let out = std::env::temp_dir().join("repdyn-eigenvectors");
    std::fs::create_dir_all(&out).map_err(|source| repdyn::Error::Io {
        path: out.clone(),
        source,
    })?;
    for j in 0..4 {
        let column = DMatrix::from_column_slice(map.n_states(), 1, basis.basis().column(j).as_slice());
        let svg = gridworld(&column, &map, &format!("eigenvector {}", j + 1))?;
        let path = out.join(format!("eigenvector_{}.svg", j + 1));
        std::fs::write(&path, svg).map_err(|source| repdyn::Error::Io {
            path: path.clone(),
            source,
        })?;
        println!("{}", path.display());
    }
    Ok(())
}
