//! RSBFs capture more resolvent energy than any random subspace of the same size.

use repdyn::experiments::{run_bayes_optimality, BayesConfig};

fn main() -> repdyn::Result<()> {
    let bundle = run_bayes_optimality(&BayesConfig::default())?;
    print!("{}", bundle.summary());
    Ok(())
}
