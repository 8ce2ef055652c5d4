//! CSV and SVG export of traced polylines.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::flow::{Polyline, Sample};

pub const CSV_HEADER: &str = "s,u,v,x,y,z,tau_g,k_g,K,H";

/// Formats with 17 significant digits (round-trip exact).
fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_row(s: &Sample) -> String {
    [
        s.s,
        s.point.u,
        s.point.v,
        s.position.x,
        s.position.y,
        s.position.z,
        s.tau_g,
        s.k_g,
        s.curvature.k,
        s.curvature.h,
    ]
    .iter()
    .map(|v| sig17(*v))
    .collect::<Vec<_>>()
    .join(",")
}

/// CSV with a header row and one row per sample.
pub fn polyline_csv(line: &Polyline) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for s in &line.samples {
        out.push_str(&csv_row(s));
        out.push('\n');
    }
    out
}

/// Plane onto which traces are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Projection {
    /// Chart coordinates (u, v).
    #[default]
    Chart,
    /// Space coordinates dropping x, y or z.
    Yz,
    Xz,
    Xy,
}

impl std::str::FromStr for Projection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chart" => Ok(Self::Chart),
            "yz" => Ok(Self::Yz),
            "xz" => Ok(Self::Xz),
            "xy" => Ok(Self::Xy),
            _ => Err(format!("unknown projection '{s}' (chart, xy, xz, yz)")),
        }
    }
}

fn project(s: &Sample, p: Projection) -> [f64; 2] {
    match p {
        Projection::Chart => [s.point.u, s.point.v],
        Projection::Yz => [s.position.y, s.position.z],
        Projection::Xz => [s.position.x, s.position.z],
        Projection::Xy => [s.position.x, s.position.y],
    }
}

/// SVG document with one polyline element per trace, fitted to a square
/// viewport (y axis pointing up).
pub fn polylines_svg(lines: &[Polyline], projection: Projection, size: f64) -> String {
    let pts: Vec<Vec<[f64; 2]>> = lines
        .iter()
        .map(|l| l.samples.iter().map(|s| project(s, projection)).collect())
        .collect();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in pts.iter().flatten() {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    if !lo[0].is_finite() {
        lo = [0.0; 2];
        hi = [1.0; 2];
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
    let margin = 0.05 * size;
    let scale = (size - 2.0 * margin) / span;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
    for (i, line) in pts.iter().enumerate() {
        let coords: Vec<String> = line
            .iter()
            .map(|p| {
                let x = margin + (p[0] - lo[0]) * scale;
                let y = size - margin - (p[1] - lo[1]) * scale;
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let _ = writeln!(
            out,
            r#"  <polyline fill="none" stroke="{}" stroke-width="1" points="{}"/>"#,
            colors[i % colors.len()],
            coords.join(" ")
        );
    }
    out.push_str("</svg>\n");
    out
}
