//! Scripted experiments that produce [`ReportBundle`]s.
//!
//! Every experiment takes a serializable config whose defaults reproduce the
//! corresponding figure or check. Overrides are applied by key through
//! [`apply_overrides`], which rejects unknown keys.

mod bayes;
mod bundle;
mod chain_transfer;
mod four_rooms;
mod limit_checks;
mod multi_task;
mod two_state;

pub use bayes::{run_bayes_optimality, BayesConfig};
pub use bundle::{matrix_csv, Check, ReportBundle};
pub use chain_transfer::{run_chain_transfer, ChainTransferConfig};
pub use four_rooms::{run_four_rooms_features, BetaMode, FourRoomsConfig};
pub use limit_checks::{run_limit_checks, LimitChecksConfig};
pub use multi_task::{constructed_policies, run_multi_task, Mode as MultiTaskKind, MultiTaskConfig};
pub use two_state::{run_two_state, TwoStateConfig};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{config, Result};

/// Applies `key=value` overrides to a config.
///
/// Values are parsed as JSON where possible (so `1e-3`, `true` and `[1, 2]`
/// work) and as plain strings otherwise. Integer fields accept integral
/// floats such as `1e4`. Unknown keys are rejected.
pub fn apply_overrides<C>(cfg: &C, overrides: &[(String, String)]) -> Result<C>
where
    C: Serialize + DeserializeOwned,
{
    let mut doc = serde_json::to_value(cfg)?;
    let map = doc
        .as_object_mut()
        .ok_or_else(|| config("config is not a key/value record"))?;
    for (key, raw) in overrides {
        let current = map
            .get(key)
            .ok_or_else(|| {
                let known: Vec<&str> = map.keys().map(String::as_str).collect();
                config(format!("unknown override key {key:?} (known: {})", known.join(", ")))
            })?
            .clone();
        map.insert(key.clone(), parse_value(raw, &current)?);
    }
    serde_json::from_value(doc).map_err(|e| config(format!("invalid override: {e}")))
}

fn parse_value(raw: &str, current: &Value) -> Result<Value> {
    let parsed: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok(match (current, &parsed) {
        (Value::Number(n), Value::Number(p)) if n.is_u64() || n.is_i64() => match p.as_f64() {
            Some(f) if f.fract() == 0.0 && f.abs() < 9.0e15 => {
                if f >= 0.0 {
                    Value::from(f as u64)
                } else {
                    Value::from(f as i64)
                }
            }
            _ => return Err(config(format!("expected an integer, got {raw}"))),
        },
        (Value::Array(items), Value::Array(new)) => {
            let template = items.first().cloned().unwrap_or(Value::Null);
            Value::Array(
                new.iter()
                    .map(|v| parse_value(&v.to_string(), &template))
                    .collect::<Result<Vec<_>>>()?,
            )
        }
        _ => parsed,
    })
}

/// Parses `key=value` strings.
pub fn parse_overrides(items: &[String]) -> Result<Vec<(String, String)>> {
    items
        .iter()
        .map(|s| {
            s.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .filter(|(k, _)| !k.is_empty())
                .ok_or_else(|| config(format!("override {s:?} is not of the form key=value")))
        })
        .collect()
}

pub(crate) fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, sd: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| sd * rng.sample::<f64, _>(StandardNormal))
}
