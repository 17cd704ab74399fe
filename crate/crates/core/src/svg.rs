//! SVG 1.1 rendering of two-dimensional layouts.

use std::fmt::Write as _;

use crate::centrality::CentralityVector;
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Hue of the most central nodes; least central ones get hue 0 (red).
pub const VIOLET_HUE: f64 = 270.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SvgLayout {
    pub width: f64,
    pub height: f64,
    pub node_radius: f64,
    pub draw_edges: bool,
}

impl Default for SvgLayout {
    fn default() -> Self {
        SvgLayout {
            width: 800.0,
            height: 800.0,
            node_radius: 4.0,
            draw_edges: true,
        }
    }
}

/// Fraction of the other nodes that are strictly less central, ignoring ties.
pub fn centrality_quantiles(c: &CentralityVector) -> Vec<f64> {
    let mut sorted = c.values.clone();
    sorted.sort_by(f64::total_cmp);
    c.values
        .iter()
        .map(|&v| {
            let below = sorted.partition_point(|&s| s < v);
            let above = sorted.len() - sorted.partition_point(|&s| s <= v);
            if below + above == 0 {
                0.5
            } else {
                below as f64 / (below + above) as f64
            }
        })
        .collect()
}

/// `#rrggbb` for a fully saturated, half-lightness hue in degrees.
pub fn hue_to_hex(hue: f64) -> String {
    let h = hue.rem_euclid(360.0) / 60.0;
    let x = 1.0 - (h % 2.0 - 1.0).abs();
    let (r, g, b) = match h as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    let byte = |v: f64| (v * 255.0).round() as u8;
    format!("#{:02x}{:02x}{:02x}", byte(r), byte(g), byte(b))
}

pub fn quantile_color(q: f64) -> String {
    hue_to_hex(VIOLET_HUE * q.clamp(0.0, 1.0))
}

/// Draws nodes as circles colored by centrality quantile, optionally with
/// edges underneath. Coordinates are fitted into the canvas with a 5% margin,
/// preserving aspect ratio.
pub fn render_svg(emb: &Embedding, g: &Graph, c: &CentralityVector, opts: &SvgLayout) -> Result<String> {
    if emb.dim() != 2 {
        return Err(Error::InvalidParameter(format!(
            "SVG output needs a 2-D embedding, got {}-D; write CSV instead",
            emb.dim()
        )));
    }
    let n = emb.node_count();
    if g.node_count() != n || c.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} coordinates, {} nodes, {} centralities",
            g.node_count(),
            c.len()
        )));
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for i in 0..n {
        for k in 0..2 {
            lo[k] = lo[k].min(emb.row(i)[k]);
            hi[k] = hi[k].max(emb.row(i)[k]);
        }
    }
    let margin_x = 0.05 * opts.width;
    let margin_y = 0.05 * opts.height;
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let avail = (opts.width - 2.0 * margin_x).min(opts.height - 2.0 * margin_y);
    let scale = if span > 0.0 { avail / span } else { 0.0 };
    let mid = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
    let to_canvas = |i: usize| {
        let r = emb.row(i);
        (
            opts.width / 2.0 + (r[0] - mid[0]) * scale,
            // SVG's y axis points down
            opts.height / 2.0 - (r[1] - mid[1]) * scale,
        )
    };

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = opts.width,
        h = opts.height
    );
    let _ = writeln!(out, r##"<rect x="0" y="0" width="{}" height="{}" fill="#ffffff"/>"##, opts.width, opts.height);
    if opts.draw_edges {
        let _ = writeln!(out, r##"<g stroke="#999999" stroke-width="0.5">"##);
        for (i, j) in g.edges() {
            let (x1, y1) = to_canvas(i);
            let (x2, y2) = to_canvas(j);
            let _ = writeln!(out, r#"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}"/>"#);
        }
        let _ = writeln!(out, "</g>");
    }
    let quantiles = centrality_quantiles(c);
    let _ = writeln!(out, "<g>");
    for (i, q) in quantiles.iter().enumerate() {
        let (cx, cy) = to_canvas(i);
        let _ = writeln!(
            out,
            r#"<circle id="n{i}" cx="{cx:.3}" cy="{cy:.3}" r="{}" fill="{}"><title>{}</title></circle>"#,
            opts.node_radius,
            quantile_color(*q),
            escape_xml(g.label(i))
        );
    }
    let _ = writeln!(out, "</g>");
    out.push_str("</svg>\n");
    Ok(out)
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
