//! The two-state illustration: MC moves straight to V^π, TD along the slow eigenvector.

use repdyn::experiments::{run_two_state, TwoStateConfig};

fn main() -> repdyn::Result<()> {
    let bundle = run_two_state(&TwoStateConfig::default())?;
    print!("{}", bundle.summary());
    let out = std::env::temp_dir().join("repdyn-two-state");
    bundle.write(&out)?;
    println!("bundle in {}", out.display());
    Ok(())
}
