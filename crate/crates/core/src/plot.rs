//! SVG renderers for attribution plots plus their JSON sidecars.
//!
//! A [`PlotSpec`] holds everything a plot shows; [`render_svg`] is a pure
//! function of it. Marks carry their data coordinates as `data-*`
//! attributes and each plot area records its axis mapping, so a figure can
//! be checked against its data without rasterizing.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::DependenceData;
use crate::error::{Error, Result};
use crate::lime::LimeExplanation;
use crate::numerics::{derive_seed, quantiles};
use crate::shap::{GlobalImportance, ShapExplanation};

pub const PLOTSPEC_SCHEMA: &str = "plotspec/1";

pub const BLUE: Rgb = Rgb(0x1f, 0x77, 0xe0);
pub const PURPLE: Rgb = Rgb(0x8a, 0x2b, 0xe2);
pub const RED: Rgb = Rgb(0xe0, 0x1f, 0x5f);

/// Largest vertical jitter, as a share of row height.
pub const JITTER_AMPLITUDE: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub fn hex(self) -> String {
        format!("#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }

    fn lerp(self, other: Rgb, t: f64) -> Rgb {
        let mix = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * t).round() as u8;
        Rgb(mix(self.0, other.0), mix(self.1, other.1), mix(self.2, other.2))
    }
}

/// Blue at `lo`, purple at `mid`, red at `hi`, linear in RGB between them.
/// Values outside the range clamp to the end colors.
pub fn diverging_color(v: f64, lo: f64, mid: f64, hi: f64) -> Rgb {
    if v < mid {
        if mid - lo <= 0.0 {
            return BLUE;
        }
        let t = ((mid - v) / (mid - lo)).min(1.0);
        PURPLE.lerp(BLUE, t)
    } else if v > mid {
        if hi - mid <= 0.0 {
            return RED;
        }
        let t = ((v - mid) / (hi - mid)).min(1.0);
        PURPLE.lerp(RED, t)
    } else {
        PURPLE
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorScale {
    pub low: String,
    pub mid: String,
    pub high: String,
    /// What the anchors are taken from.
    pub anchor: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwarmDot {
    pub sample: usize,
    pub phi: f64,
    /// Normalized feature value, drives the color.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum PlotData {
    Beeswarm {
        /// Top row first.
        features: Vec<String>,
        rows: Vec<Vec<SwarmDot>>,
    },
    Bar {
        features: Vec<String>,
        values: Vec<f64>,
    },
    Decision {
        /// Bottom to top, least important first.
        features: Vec<String>,
        base: f64,
        paths: Vec<Vec<f64>>,
    },
    Dependence(DependenceData),
    LimeLocal {
        rules: Vec<String>,
        weights: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub schema: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub width: u32,
    pub height: u32,
    pub color_scale: Option<ColorScale>,
    #[serde(flatten)]
    pub data: PlotData,
}

const WIDTH: u32 = 800;
const ROW_H: f64 = 28.0;
const LEFT: f64 = 180.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 50.0;
const PLOT_W: f64 = 500.0;

fn rows_height(rows: usize) -> u32 {
    (TOP + BOTTOM + ROW_H * rows.max(1) as f64) as u32
}

fn all_finite<'a>(vals: impl IntoIterator<Item = &'a f64>) -> Result<()> {
    if vals.into_iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid("plot data contains non-finite values"))
    }
}

fn scale(anchor: &str) -> Option<ColorScale> {
    Some(ColorScale {
        low: BLUE.hex(),
        mid: PURPLE.hex(),
        high: RED.hex(),
        anchor: anchor.to_string(),
    })
}

/// Summary plot: one row per feature, most important on top.
///
/// `values[s][j]` is the normalized value of feature `j` for sample `s`.
pub fn beeswarm(
    explanations: &[ShapExplanation],
    values: &[Vec<f64>],
    ranking: &[usize],
    names: &[&str],
) -> Result<PlotSpec> {
    if explanations.is_empty() {
        return Err(Error::invalid("beeswarm needs at least one explanation"));
    }
    if values.len() != explanations.len() {
        return Err(Error::LengthMismatch {
            expected: explanations.len(),
            actual: values.len(),
        });
    }
    let mut rows = Vec::with_capacity(ranking.len());
    for &j in ranking {
        let mut row = Vec::with_capacity(explanations.len());
        for (s, (e, v)) in explanations.iter().zip(values).enumerate() {
            let (&phi, &value) = e.phi.get(j).zip(v.get(j)).ok_or(Error::LengthMismatch {
                expected: names.len(),
                actual: e.phi.len().min(v.len()),
            })?;
            all_finite([&phi, &value])?;
            row.push(SwarmDot { sample: s, phi, value });
        }
        rows.push(row);
    }
    Ok(PlotSpec {
        schema: PLOTSPEC_SCHEMA.into(),
        title: "SHAP values per feature".into(),
        x_label: "SHAP value (impact on model output)".into(),
        y_label: "feature".into(),
        width: WIDTH,
        height: rows_height(rows.len()),
        color_scale: scale("per-feature min, median, max of normalized value"),
        data: PlotData::Beeswarm {
            features: ranking.iter().map(|&j| names[j].to_string()).collect(),
            rows,
        },
    })
}

/// Global importance bars, descending.
pub fn bar(importance: &GlobalImportance, names: &[&str]) -> Result<PlotSpec> {
    all_finite(&importance.mean_abs)?;
    Ok(PlotSpec {
        schema: PLOTSPEC_SCHEMA.into(),
        title: "Global feature importance".into(),
        x_label: "mean |SHAP value|".into(),
        y_label: "feature".into(),
        width: WIDTH,
        height: rows_height(importance.ranking.len()),
        color_scale: None,
        data: PlotData::Bar {
            features: importance.ranking.iter().map(|&j| names[j].to_string()).collect(),
            values: importance.ranking.iter().map(|&j| importance.mean_abs[j]).collect(),
        },
    })
}

/// Decision lines from [`crate::shap::decision_path`] output.
pub fn decision(paths: &[Vec<f64>], ranking: &[usize], names: &[&str], base: f64) -> Result<PlotSpec> {
    let d = ranking.len();
    if let Some(p) = paths.iter().find(|p| p.len() != d + 1) {
        return Err(Error::LengthMismatch {
            expected: d + 1,
            actual: p.len(),
        });
    }
    all_finite(paths.iter().flatten().chain([&base]))?;
    if paths.iter().any(|p| p[0] != base) {
        return Err(Error::invalid("decision paths must start at the shared base value"));
    }
    Ok(PlotSpec {
        schema: PLOTSPEC_SCHEMA.into(),
        title: "Decision plot".into(),
        x_label: "model output".into(),
        y_label: "feature".into(),
        width: WIDTH,
        height: rows_height(d + 1),
        color_scale: scale("min final output, base value, max final output"),
        data: PlotData::Decision {
            features: ranking.iter().rev().map(|&j| names[j].to_string()).collect(),
            base,
            paths: paths.to_vec(),
        },
    })
}

pub fn dependence(data: &DependenceData) -> Result<PlotSpec> {
    all_finite(data.points.iter().flat_map(|p| [&p.x, &p.shap, &p.color]))?;
    Ok(PlotSpec {
        schema: PLOTSPEC_SCHEMA.into(),
        title: format!("Dependence of {} colored by {}", data.feature, data.correlate),
        x_label: format!("{} (normalized)", data.feature),
        y_label: format!("SHAP value for {}", data.feature),
        width: WIDTH,
        height: 500,
        color_scale: scale("min, median, max of normalized correlate value"),
        data: PlotData::Dependence(data.clone()),
    })
}

pub fn lime_local(explanation: &LimeExplanation) -> Result<PlotSpec> {
    let weights: Vec<f64> = explanation.entries.iter().map(|e| e.weight).collect();
    all_finite(&weights)?;
    Ok(PlotSpec {
        schema: PLOTSPEC_SCHEMA.into(),
        title: "Local explanation".into(),
        x_label: "surrogate weight".into(),
        y_label: "rule".into(),
        width: WIDTH,
        height: rows_height(weights.len()),
        color_scale: scale("sign of weight"),
        data: PlotData::LimeLocal {
            rules: explanation.entries.iter().map(|e| e.rule.clone()).collect(),
            weights,
        },
    })
}

/// Escapes text for XML content and attribute values.
pub fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Affine data-to-pixel map along one axis.
#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Axis {
    /// Range covering `vals` and zero, padded by 5%.
    fn covering(vals: impl Iterator<Item = f64>, px_lo: f64, px_hi: f64) -> Axis {
        let (mut lo, mut hi) = vals.fold((0.0f64, 0.0f64), |(a, b), v| (a.min(v), b.max(v)));
        if hi - lo <= 0.0 {
            lo -= 1.0;
            hi += 1.0;
        } else {
            let pad = 0.05 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
        Axis { lo, hi, px_lo, px_hi }
    }

    fn px(&self, v: f64) -> f64 {
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }

    fn attrs(&self, name: &str) -> String {
        format!(
            r#"data-{name}-min="{}" data-{name}-max="{}" data-{name}-px-min="{:.2}" data-{name}-px-max="{:.2}""#,
            self.lo, self.hi, self.px_lo, self.px_hi
        )
    }
}

struct Svg {
    out: String,
}

impl Svg {
    fn new(spec: &PlotSpec) -> Svg {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
            w = spec.width,
            h = spec.height
        );
        let _ = writeln!(out, r#"<rect width="{}" height="{}" fill="white"/>"#, spec.width, spec.height);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            spec.width as f64 / 2.0,
            xml_escape(&spec.title)
        );
        Svg { out }
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, style: &str) {
        let _ = writeln!(
            self.out,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" {style}/>"#
        );
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, s: &str) {
        let _ = writeln!(
            self.out,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}">{}</text>"#,
            xml_escape(s)
        );
    }

    fn x_axis(&mut self, axis: &Axis, y: f64, label: &str) {
        self.line(axis.px_lo, y, axis.px_hi, y, r#"stroke="black""#);
        for k in 0..=4 {
            let v = axis.lo + (axis.hi - axis.lo) * k as f64 / 4.0;
            let x = axis.px(v);
            self.line(x, y, x, y + 4.0, r#"stroke="black""#);
            self.text(x, y + 16.0, "middle", &format!("{v:.3}"));
        }
        self.text((axis.px_lo + axis.px_hi) / 2.0, y + 34.0, "middle", label);
    }

    fn open_area(&mut self, class: &str, x: &Axis, y: Option<&Axis>) {
        let y_attrs = y.map(|a| format!(" {}", a.attrs("y"))).unwrap_or_default();
        let _ = writeln!(self.out, r#"<g class="{class}" {}{y_attrs}>"#, x.attrs("x"));
    }

    fn close_area(&mut self) {
        self.out.push_str("</g>\n");
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

fn median(v: &[f64]) -> f64 {
    quantiles(v, &[0.5]).map(|q| q[0]).unwrap_or(0.0)
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

fn jitter(row: usize, sample: usize, n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let u = (derive_seed(row as u64, sample as u64) >> 11) as f64 / (1u64 << 53) as f64;
    (2.0 * u - 1.0) * JITTER_AMPLITUDE * ROW_H
}

fn row_center(k: usize) -> f64 {
    TOP + ROW_H * (k as f64 + 0.5)
}

/// Renders a spec. Identical specs give byte-identical output.
pub fn render_svg(spec: &PlotSpec) -> String {
    let mut svg = Svg::new(spec);
    let plot_bottom = spec.height as f64 - BOTTOM;
    match &spec.data {
        PlotData::Beeswarm { features, rows } => {
            let x = Axis::covering(rows.iter().flatten().map(|d| d.phi), LEFT, LEFT + PLOT_W);
            svg.open_area("plot-area", &x, None);
            svg.line(x.px(0.0), TOP, x.px(0.0), plot_bottom, r##"stroke="#999999""##);
            for (k, (name, row)) in features.iter().zip(rows).enumerate() {
                let cy = row_center(k);
                svg.text(LEFT - 8.0, cy + 4.0, "end", name);
                let values: Vec<f64> = row.iter().map(|d| d.value).collect();
                let (lo, hi) = min_max(&values);
                let mid = median(&values);
                for d in row {
                    let color = diverging_color(d.value, lo, mid, hi).hex();
                    let _ = writeln!(
                        svg.out,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}" data-sample="{}" data-phi="{}" data-value="{}"/>"#,
                        x.px(d.phi),
                        cy + jitter(k, d.sample, row.len()),
                        d.sample,
                        d.phi,
                        d.value
                    );
                }
            }
            svg.close_area();
            svg.x_axis(&x, plot_bottom, &spec.x_label);
        }
        PlotData::Bar { features, values } => {
            let vmax = values.iter().copied().fold(0.0, f64::max);
            let x = Axis {
                lo: 0.0,
                hi: if vmax > 0.0 { vmax } else { 1.0 },
                px_lo: LEFT,
                px_hi: LEFT + PLOT_W,
            };
            svg.open_area("plot-area", &x, None);
            for (k, (name, &v)) in features.iter().zip(values).enumerate() {
                let cy = row_center(k);
                let len = x.px(v) - LEFT;
                svg.text(LEFT - 8.0, cy + 4.0, "end", name);
                let _ = writeln!(
                    svg.out,
                    r##"<rect class="bar" x="{LEFT:.2}" y="{:.2}" width="{len:.2}" height="{:.2}" fill="#e01f5f" data-feature="{}" data-value="{v}"/>"##,
                    cy - ROW_H * 0.35,
                    ROW_H * 0.7,
                    xml_escape(name)
                );
                svg.text(LEFT + len + 6.0, cy + 4.0, "start", &format!("{v:.3}"));
            }
            svg.close_area();
            svg.x_axis(&x, plot_bottom, &spec.x_label);
        }
        PlotData::Decision { features, base, paths } => {
            let x = Axis::covering(paths.iter().flatten().copied().chain([*base]), LEFT, LEFT + PLOT_W);
            let levels = features.len();
            // level k sits k rows above the bottom row
            let level_y = |k: usize| row_center(levels - k);
            svg.open_area("plot-area", &x, None);
            for (k, name) in features.iter().enumerate() {
                svg.text(LEFT - 8.0, level_y(k + 1) + 4.0, "end", name);
            }
            svg.line(x.px(*base), TOP, x.px(*base), plot_bottom, r##"stroke="#999999" stroke-dasharray="4 3" class="base-line""##);
            let finals: Vec<f64> = paths.iter().filter_map(|p| p.last().copied()).collect();
            let (lo, hi) = min_max(&finals);
            for (s, p) in paths.iter().enumerate() {
                let end = *p.last().unwrap_or(base);
                let color = diverging_color(end, lo.min(*base), *base, hi.max(*base)).hex();
                let pts: Vec<String> = p
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| format!("{:.2},{:.2}", x.px(v), level_y(k)))
                    .collect();
                let _ = writeln!(
                    svg.out,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5" data-sample="{s}" data-final="{end}"/>"#,
                    pts.join(" ")
                );
            }
            svg.close_area();
            svg.x_axis(&x, plot_bottom, &spec.x_label);
        }
        PlotData::Dependence(data) => {
            let x = Axis::covering(data.points.iter().map(|p| p.x), LEFT, LEFT + PLOT_W);
            let y = Axis::covering(data.points.iter().map(|p| p.shap), plot_bottom, TOP);
            svg.open_area("plot-area", &x, Some(&y));
            svg.line(LEFT, y.px(0.0), LEFT + PLOT_W, y.px(0.0), r##"stroke="#999999" class="zero-line""##);
            let colors: Vec<f64> = data.points.iter().map(|p| p.color).collect();
            let (lo, hi) = min_max(&colors);
            let mid = median(&colors);
            for (s, p) in data.points.iter().enumerate() {
                let _ = writeln!(
                    svg.out,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}" data-sample="{s}" data-x="{}" data-y="{}" data-color="{}"/>"#,
                    x.px(p.x),
                    y.px(p.shap),
                    diverging_color(p.color, lo, mid, hi).hex(),
                    p.x,
                    p.shap,
                    p.color
                );
            }
            svg.close_area();
            svg.x_axis(&x, plot_bottom, &spec.x_label);
            svg.line(LEFT, TOP, LEFT, plot_bottom, r#"stroke="black""#);
            for k in 0..=4 {
                let v = y.lo + (y.hi - y.lo) * k as f64 / 4.0;
                svg.text(LEFT - 6.0, y.px(v) + 4.0, "end", &format!("{v:.3}"));
            }
            let _ = writeln!(
                svg.out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
                LEFT - 60.0,
                (TOP + plot_bottom) / 2.0,
                LEFT - 60.0,
                (TOP + plot_bottom) / 2.0,
                xml_escape(&spec.y_label)
            );
            // color bar
            let bx = LEFT + PLOT_W + 40.0;
            svg.out.push_str(concat!(
                r#"<defs><linearGradient id="scale" x1="0" y1="1" x2="0" y2="0">"#,
                r##"<stop offset="0" stop-color="#1f77e0"/><stop offset="0.5" stop-color="#8a2be2"/><stop offset="1" stop-color="#e01f5f"/>"##,
                "</linearGradient></defs>\n"
            ));
            let _ = writeln!(
                svg.out,
                r#"<rect class="color-bar" x="{bx:.2}" y="{TOP:.2}" width="14" height="{:.2}" fill="url(#scale)"/>"#,
                plot_bottom - TOP
            );
            let (lo_label, hi_label) = if data.points.is_empty() { (0.0, 0.0) } else { (lo, hi) };
            svg.text(bx + 20.0, TOP + 10.0, "start", &format!("{hi_label:.2}"));
            svg.text(bx + 20.0, plot_bottom, "start", &format!("{lo_label:.2}"));
            let cx = bx + 7.0;
            let cy = (TOP + plot_bottom) / 2.0;
            let _ = writeln!(
                svg.out,
                r#"<text x="{:.2}" y="{cy:.2}" text-anchor="middle" transform="rotate(90 {:.2} {cy:.2})">{}</text>"#,
                cx + 40.0,
                cx + 40.0,
                xml_escape(&data.correlate)
            );
        }
        PlotData::LimeLocal { rules, weights } => {
            let m = weights.iter().fold(0.0f64, |a, w| a.max(w.abs()));
            let m = if m > 0.0 { m * 1.1 } else { 1.0 };
            let x = Axis {
                lo: -m,
                hi: m,
                px_lo: LEFT + 60.0,
                px_hi: LEFT + 60.0 + PLOT_W,
            };
            let zero = x.px(0.0);
            svg.open_area("plot-area", &x, None);
            svg.line(zero, TOP, zero, plot_bottom, r#"stroke="black""#);
            for (k, (rule, &w)) in rules.iter().zip(weights).enumerate() {
                let cy = row_center(k);
                let end = x.px(w);
                let (left, len) = if w >= 0.0 { (zero, end - zero) } else { (end, zero - end) };
                let fill = if w >= 0.0 { RED } else { BLUE }.hex();
                let _ = writeln!(
                    svg.out,
                    r#"<rect class="bar" x="{left:.2}" y="{:.2}" width="{len:.2}" height="{:.2}" fill="{fill}" data-rule="{}" data-weight="{w}"/>"#,
                    cy - ROW_H * 0.35,
                    ROW_H * 0.7,
                    xml_escape(rule)
                );
                svg.text(x.px_lo - 8.0, cy + 4.0, "end", rule);
            }
            svg.close_area();
            svg.x_axis(&x, plot_bottom, &spec.x_label);
        }
    }
    svg.finish()
}

/// Writes `<name>.svg` and `<name>.json` into `dir`.
pub fn write_plot(dir: &Path, name: &str, spec: &PlotSpec) -> Result<[PathBuf; 2]> {
    let svg_path = dir.join(format!("{name}.svg"));
    let json_path = dir.join(format!("{name}.json"));
    fs::write(&svg_path, render_svg(spec)).map_err(|e| Error::io(&svg_path, e))?;
    let mut json = serde_json::to_string_pretty(spec).map_err(|e| Error::Json {
        path: json_path.clone(),
        source: e,
    })?;
    json.push('\n');
    fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))?;
    Ok([svg_path, json_path])
}
