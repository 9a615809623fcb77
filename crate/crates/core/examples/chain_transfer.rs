//! How well EBF, RSBF and random features predict every value on the policy-iteration path.

use repdyn::experiments::{run_chain_transfer, ChainTransferConfig};

fn main() -> repdyn::Result<()> {
    let bundle = run_chain_transfer(&ChainTransferConfig::default())?;
    print!("{}", bundle.tables["summary"]);
    print!("{}", bundle.summary());
    Ok(())
}
