use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{config, Result};

/// Time-stamped states of a flow.
///
/// Value flows store `|X| x 1` states. Representation flows store `Φ_t` and,
/// when weights evolve alongside, the weight matrices in `weights`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DMatrix<f64>>,
    pub weights: Option<Vec<DMatrix<f64>>>,
    pub meta: BTreeMap<String, String>,
}

impl Trajectory {
    pub(crate) fn new(flow: &str, times: Vec<f64>, states: Vec<DMatrix<f64>>) -> Self {
        let mut meta = BTreeMap::new();
        meta.insert("flow".to_string(), flow.to_string());
        Trajectory {
            times,
            states,
            weights: None,
            meta,
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &DMatrix<f64> {
        self.states.last().expect("trajectory is non-empty")
    }

    /// State `i` as a vector; only meaningful for value flows.
    pub fn value(&self, i: usize) -> DVector<f64> {
        self.states[i].column(0).clone_owned()
    }

    /// Largest Frobenius distance to `other` over shared time points.
    pub fn max_gap(&self, other: &Trajectory) -> Result<f64> {
        if self.times != other.times {
            return Err(config("trajectories are sampled at different times"));
        }
        Ok(self
            .states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    fn header(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k}={v}");
        }
        out
    }

    /// `t, v_0, ..., v_{n-1}`; one row per time point.
    pub fn to_wide_csv(&self) -> Result<String> {
        let n = self.states.first().map_or(0, |s| s.nrows());
        if self.states.iter().any(|s| s.ncols() != 1) {
            return Err(config("wide CSV needs single-column states"));
        }
        let mut out = self.header();
        out.push('t');
        for i in 0..n {
            let _ = write!(out, ",v_{i}");
        }
        out.push('\n');
        for (t, s) in self.times.iter().zip(&self.states) {
            let _ = write!(out, "{t:e}");
            for x in s.iter() {
                let _ = write!(out, ",{x:e}");
            }
            out.push('\n');
        }
        Ok(out)
    }

    /// `t, row, col, value`; one row per matrix entry per time point.
    pub fn to_long_csv(&self) -> String {
        long_csv(&self.header(), &self.times, &self.states)
    }

    /// Weight trajectory in long format, if weights were recorded.
    pub fn weights_long_csv(&self) -> Option<String> {
        self.weights.as_ref().map(|w| long_csv(&self.header(), &self.times, w))
    }

    /// Wide format for value flows, long format otherwise.
    pub fn to_csv(&self) -> String {
        self.to_wide_csv().unwrap_or_else(|_| self.to_long_csv())
    }
}

fn long_csv(header: &str, times: &[f64], states: &[DMatrix<f64>]) -> String {
    let mut out = header.to_string();
    out.push_str("t,row,col,value\n");
    for (t, s) in times.iter().zip(states) {
        for c in 0..s.ncols() {
            for r in 0..s.nrows() {
                let _ = writeln!(out, "{t:e},{r},{c},{:e}", s[(r, c)]);
            }
        }
    }
    out
}
