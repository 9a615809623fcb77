//! Heads split across two drifting policies behave like heads on their average.

use repdyn::experiments::{apply_overrides, run_multi_task, MultiTaskConfig};

fn main() -> repdyn::Result<()> {
    let policies = run_multi_task(&MultiTaskConfig::default())?;
    print!("{}", policies.summary());
    print!("{}", policies.tables["block_decomposition"]);

    let discounts = apply_overrides(&MultiTaskConfig::default(), &[("mode".into(), "discounts".into())])?;
    let bundle = run_multi_task(&discounts)?;
    print!("{}", bundle.summary());
    Ok(())
}
