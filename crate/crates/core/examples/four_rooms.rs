//! Four-rooms representation learning; writes heatmaps and eigen-projection curves.
//!
//! `cargo run --release --example four_rooms -- out/four-rooms`

use repdyn::experiments::{run_four_rooms_features, FourRoomsConfig};

fn main() -> repdyn::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "out/four-rooms".into());
    let bundle = run_four_rooms_features(&FourRoomsConfig::default())?;
    print!("{}", bundle.summary());
    bundle.write(std::path::Path::new(&out))?;
    println!(
        "figures: {}",
        bundle.figures.keys().cloned().collect::<Vec<_>>().join(", ")
    );
    Ok(())
}
