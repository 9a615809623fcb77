use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{config, Error, Result};

/// One pass/fail assertion with its measured value and threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    /// `"<"`, `"<="`, `">"` or `">="`: how `measured` is compared to `threshold`.
    pub comparison: String,
    pub threshold: f64,
    /// Table holding the data behind the check.
    pub table: String,
}

/// Output of one experiment run.
#[derive(Clone, Debug, Default)]
pub struct ReportBundle {
    pub name: String,
    pub config: Value,
    pub tables: BTreeMap<String, String>,
    pub figures: BTreeMap<String, String>,
    pub checks: Vec<Check>,
}

impl ReportBundle {
    pub fn new<C: Serialize>(name: &str, cfg: &C) -> Result<Self> {
        Ok(ReportBundle {
            name: name.to_string(),
            config: serde_json::to_value(cfg)?,
            ..Default::default()
        })
    }

    pub fn add_table(&mut self, name: &str, csv: String) {
        self.tables.insert(name.to_string(), csv);
    }

    pub fn add_figure(&mut self, name: &str, svg: String) {
        self.figures.insert(name.to_string(), svg);
    }

    fn push_check(&mut self, name: &str, measured: f64, comparison: &str, threshold: f64, table: &str) -> Result<bool> {
        if !self.tables.contains_key(table) {
            return Err(config(format!("check {name:?} refers to missing table {table:?}")));
        }
        let passed = match comparison {
            "<" => measured < threshold,
            "<=" => measured <= threshold,
            ">" => measured > threshold,
            ">=" => measured >= threshold,
            other => return Err(config(format!("unknown comparison {other:?}"))),
        };
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            measured,
            comparison: comparison.to_string(),
            threshold,
            table: table.to_string(),
        });
        Ok(passed)
    }

    /// Records `measured < threshold`.
    pub fn check_below(&mut self, name: &str, measured: f64, threshold: f64, table: &str) -> Result<bool> {
        self.push_check(name, measured, "<", threshold, table)
    }

    /// Records `measured <= threshold`.
    pub fn check_at_most(&mut self, name: &str, measured: f64, threshold: f64, table: &str) -> Result<bool> {
        self.push_check(name, measured, "<=", threshold, table)
    }

    /// Records `measured >= threshold`.
    pub fn check_at_least(&mut self, name: &str, measured: f64, threshold: f64, table: &str) -> Result<bool> {
        self.push_check(name, measured, ">=", threshold, table)
    }

    /// Records `measured > threshold`.
    pub fn check_above(&mut self, name: &str, measured: f64, threshold: f64, table: &str) -> Result<bool> {
        self.push_check(name, measured, ">", threshold, table)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Writes `config.json`, `tables/*.csv`, `figures/*.svg` and `checks.json` under `dir`.
    ///
    /// Each file is written to a temporary sibling and renamed into place.
    pub fn write(&self, dir: &Path) -> Result<()> {
        create_dir(dir)?;
        create_dir(&dir.join("tables"))?;
        create_dir(&dir.join("figures"))?;
        let mut cfg = serde_json::to_string_pretty(&serde_json::json!({
            "experiment": self.name,
            "config": self.config,
        }))?;
        cfg.push('\n');
        write_atomic(&dir.join("config.json"), &cfg)?;
        for (name, body) in &self.tables {
            write_atomic(&dir.join("tables").join(format!("{name}.csv")), body)?;
        }
        for (name, body) in &self.figures {
            write_atomic(&dir.join("figures").join(format!("{name}.svg")), body)?;
        }
        let mut checks = serde_json::to_string_pretty(&self.checks)?;
        checks.push('\n');
        write_atomic(&dir.join("checks.json"), &checks)
    }

    /// One line per check, for terminals and logs.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(
                out,
                "[{}] {}: {:.6e} {} {:.6e}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.measured,
                c.comparison,
                c.threshold
            );
        }
        out
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_atomic(path: &Path, body: &str) -> Result<()> {
    let mut tmp = PathBuf::from(path);
    let file_name = path
        .file_name()
        .map(|n| format!(".{}.tmp", n.to_string_lossy()))
        .unwrap_or_else(|| ".tmp".into());
    tmp.set_file_name(file_name);
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    fs::write(&tmp, body).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

/// Matrix as CSV with the given column names and an optional leading label column.
pub fn matrix_csv(columns: &[String], m: &DMatrix<f64>, row_label: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(label) = row_label {
        out.push_str(label);
        out.push(',');
    }
    out.push_str(&columns.join(","));
    out.push('\n');
    for (i, row) in m.row_iter().enumerate() {
        if row_label.is_some() {
            let _ = write!(out, "{i},");
        }
        let cells: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
