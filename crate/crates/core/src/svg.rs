//! Minimal self-contained SVG rendering of result tables.
//!
//! CSV tables are the source of truth; these figures are presentation only.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gridworld::{four_rooms_map, GridMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SvgKind {
    /// Matrix rendered cell by cell, row 0 at the top.
    Heatmap,
    /// Column 0 is the x coordinate, every further column is one series.
    Line,
    /// A length-105 vector drawn on the shipped four-rooms map.
    Gridworld,
}

const CELL: f64 = 24.0;
const VERSION: &str = concat!("<!-- repdyn ", env!("CARGO_PKG_VERSION"), " -->");

// viridis anchors
const PALETTE: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

const SERIES: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn color(x: f64) -> String {
    let x = x.clamp(0.0, 1.0) * (PALETTE.len() - 1) as f64;
    let i = (x.floor() as usize).min(PALETTE.len() - 2);
    let f = x - i as f64;
    let (a, b) = (PALETTE[i], PALETTE[i + 1]);
    let mix = |u: f64, v: f64| (u + f * (v - u)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            let v = m[(r, c)];
            if !v.is_finite() {
                return Err(Error::Render(format!("non-finite value {v} at cell ({r}, {c})")));
            }
        }
    }
    Ok(())
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn scale(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        0.5
    }
}

fn legend(out: &mut String, y: f64, lo: f64, hi: f64) {
    if hi > lo {
        let _ = writeln!(
            out,
            r#"<text x="4" y="{y}" font-size="11" font-family="monospace">min={lo:.4e} max={hi:.4e}</text>"#
        );
    } else {
        let _ = writeln!(
            out,
            r#"<text x="4" y="{y}" font-size="11" font-family="monospace">degenerate range: all values {lo:.4e}</text>"#
        );
    }
}

fn open(out: &mut String, w: f64, h: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    out.push_str(VERSION);
    out.push('\n');
    let _ = writeln!(out, "<title>{}</title>", escape(title));
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders `data` as a standalone SVG document.
pub fn emit_svg(data: &DMatrix<f64>, kind: SvgKind, title: &str) -> Result<String> {
    check_finite(data)?;
    if data.is_empty() {
        return Err(Error::Render("nothing to draw: empty table".into()));
    }
    match kind {
        SvgKind::Heatmap => heatmap(data, title),
        SvgKind::Line => line(data, title),
        SvgKind::Gridworld => gridworld(data, &four_rooms_map(), title),
    }
}

fn heatmap(data: &DMatrix<f64>, title: &str) -> Result<String> {
    let (lo, hi) = range(data.iter().copied());
    let (w, h) = (data.ncols() as f64 * CELL, data.nrows() as f64 * CELL);
    let mut out = String::new();
    open(&mut out, w.max(260.0), h + 20.0, title);
    for r in 0..data.nrows() {
        for c in 0..data.ncols() {
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="{}"/>"#,
                c as f64 * CELL,
                r as f64 * CELL,
                color(scale(data[(r, c)], lo, hi))
            );
        }
    }
    legend(&mut out, h + 14.0, lo, hi);
    out.push_str("</svg>\n");
    Ok(out)
}

fn line(data: &DMatrix<f64>, title: &str) -> Result<String> {
    if data.ncols() < 2 {
        return Err(Error::Render(
            "line plots need an x column and at least one series".into(),
        ));
    }
    let (w, h, pad) = (480.0, 320.0, 40.0);
    let (xlo, xhi) = range(data.column(0).iter().copied());
    let (ylo, yhi) = range(data.columns(1, data.ncols() - 1).iter().copied());
    let mut out = String::new();
    open(&mut out, w, h + 20.0, title);
    let _ = writeln!(
        out,
        r##"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="#888"/>"##,
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    for s in 1..data.ncols() {
        let points: Vec<String> = (0..data.nrows())
            .map(|i| {
                let x = pad + scale(data[(i, 0)], xlo, xhi) * (w - 2.0 * pad);
                let y = h - pad - scale(data[(i, s)], ylo, yhi) * (h - 2.0 * pad);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.2" points="{}"/>"#,
            SERIES[(s - 1) % SERIES.len()],
            points.join(" ")
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="4" y="{}" font-size="11" font-family="monospace">x: {xlo:.4e} .. {xhi:.4e}</text>"#,
        h + 2.0
    );
    legend(&mut out, h + 16.0, ylo, yhi);
    out.push_str("</svg>\n");
    Ok(out)
}

/// Draws a per-state vector on `map`, cropping a border made only of walls.
pub fn gridworld(data: &DMatrix<f64>, map: &GridMap, title: &str) -> Result<String> {
    check_finite(data)?;
    let values: Vec<f64> = data.iter().copied().collect();
    if values.len() != map.n_states() || (data.nrows() != 1 && data.ncols() != 1) {
        return Err(Error::Render(format!(
            "gridworld plots need a vector of {} values, got {}x{}",
            map.n_states(),
            data.nrows(),
            data.ncols()
        )));
    }
    let wall_row = |r: usize| (0..map.cols()).all(|c| map.state_at(r, c).is_none());
    let wall_col = |c: usize| (0..map.rows()).all(|r| map.state_at(r, c).is_none());
    let r0 = (0..map.rows()).find(|&r| !wall_row(r)).unwrap_or(0);
    let r1 = (0..map.rows()).rev().find(|&r| !wall_row(r)).unwrap_or(map.rows() - 1);
    let c0 = (0..map.cols()).find(|&c| !wall_col(c)).unwrap_or(0);
    let c1 = (0..map.cols()).rev().find(|&c| !wall_col(c)).unwrap_or(map.cols() - 1);
    let (lo, hi) = range(values.iter().copied());
    let (w, h) = ((c1 - c0 + 1) as f64 * CELL, (r1 - r0 + 1) as f64 * CELL);
    let mut out = String::new();
    open(&mut out, w.max(260.0), h + 20.0, title);
    for r in r0..=r1 {
        for c in c0..=c1 {
            let fill = match map.state_at(r, c) {
                Some(s) => color(scale(values[s], lo, hi)),
                None => "#ffffff".to_string(),
            };
            let _ = writeln!(
                out,
                r##"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="#dddddd"/>"##,
                (c - c0) as f64 * CELL,
                (r - r0) as f64 * CELL
            );
        }
    }
    legend(&mut out, h + 14.0, lo, hi);
    out.push_str("</svg>\n");
    Ok(out)
}
