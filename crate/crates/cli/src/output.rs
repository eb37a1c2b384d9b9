//! Deterministic rendering: scalar formatting per mode, JSON, CSV, SVG.
//!
//! Float values print with 15 significant digits; exact values print as
//! rationals. JSON objects serialize with sorted keys, so identical
//! inputs produce identical bytes.

use num_rational::BigRational;
use serde_json::{Map, Value};

use thermoflux::arith::{Exact, Float, Mode};

use crate::error::{CliError, Result};

/// 15 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.14e}")
}

/// Mode-aware scalar rendering for reports.
pub trait Show: Mode {
    const NAME: &'static str;

    fn show(s: &Self::Scalar) -> String;
}

impl Show for Exact {
    const NAME: &'static str = "exact";

    fn show(s: &BigRational) -> String {
        s.to_string()
    }
}

impl Show for Float {
    const NAME: &'static str = "float";

    fn show(s: &f64) -> String {
        fmt_f64(*s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

impl Format {
    pub fn parse(s: Option<&str>, default: Format) -> Result<Format> {
        match s {
            None => Ok(default),
            Some("json") => Ok(Format::Json),
            Some("csv") => Ok(Format::Csv),
            Some("svg") => Ok(Format::Svg),
            Some(other) => Err(CliError::Malformed(format!(
                "format must be json, csv, or svg, got \"{other}\""
            ))),
        }
    }
}

pub fn json_string(s: impl Into<String>) -> Value {
    Value::String(s.into())
}

pub fn json_object(fields: Vec<(&str, Value)>) -> Value {
    let mut map = Map::new();
    for (k, v) in fields {
        map.insert(k.to_string(), v);
    }
    Value::Object(map)
}

pub fn render_json(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Concave polyline plot of a majorization curve, width `0..=z` against
/// height `0..=1`.
pub fn render_curve_svg(points: &[(f64, f64)], z: f64) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const LEFT: f64 = 60.0;
    const RIGHT: f64 = 600.0;
    const TOP: f64 = 40.0;
    const BOTTOM: f64 = 420.0;
    let x = |w: f64| LEFT + (RIGHT - LEFT) * (w / z);
    let y = |h: f64| BOTTOM - (BOTTOM - TOP) * h;
    let path: Vec<String> = points
        .iter()
        .map(|&(w, h)| format!("{:.2},{:.2}", x(w), y(h)))
        .collect();
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\" \
         width=\"{W}\" height=\"{H}\">\n"
    ));
    svg.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "  <line x1=\"{LEFT}\" y1=\"{BOTTOM}\" x2=\"{RIGHT}\" y2=\"{BOTTOM}\" \
         stroke=\"black\"/>\n"
    ));
    svg.push_str(&format!(
        "  <line x1=\"{LEFT}\" y1=\"{BOTTOM}\" x2=\"{LEFT}\" y2=\"{TOP}\" \
         stroke=\"black\"/>\n"
    ));
    svg.push_str(&format!(
        "  <polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" \
         points=\"{}\"/>\n",
        path.join(" ")
    ));
    for &(w, h) in points {
        svg.push_str(&format!(
            "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#1f77b4\"/>\n",
            x(w),
            y(h)
        ));
    }
    svg.push_str(&format!(
        "  <text x=\"{LEFT}\" y=\"{:.0}\" font-size=\"12\">0</text>\n",
        BOTTOM + 16.0
    ));
    svg.push_str(&format!(
        "  <text x=\"{RIGHT}\" y=\"{:.0}\" font-size=\"12\" text-anchor=\"end\">{}</text>\n",
        BOTTOM + 16.0,
        format_args!("{z:.6}")
    ));
    svg.push_str(&format!(
        "  <text x=\"{:.0}\" y=\"{TOP}\" font-size=\"12\">1</text>\n",
        LEFT - 24.0
    ));
    svg.push_str("</svg>\n");
    svg
}
