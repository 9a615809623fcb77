//! Finite-head convergence, limiting covariance and head-weight statistics.

use repdyn::experiments::{apply_overrides, run_limit_checks, LimitChecksConfig};

fn main() -> repdyn::Result<()> {
    // fewer seeds than the default keeps this quick
    let cfg = apply_overrides(
        &LimitChecksConfig::default(),
        &[
            ("seeds".into(), "5".into()),
            ("cov_seeds".into(), "500".into()),
            ("cov_tolerance".into(), "0.2".into()),
        ],
    )?;
    let bundle = run_limit_checks(&cfg)?;
    print!("{}", bundle.summary());
    Ok(())
}
