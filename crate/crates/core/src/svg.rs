//! Static SVG drawings of one circle-pattern layer.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::lattice::Color;
use crate::miquel::CirclePatternLayer;
use crate::variables::VariableField;

#[derive(Debug, Clone, Default)]
pub struct RenderOptions {
    pub show_points: bool,
    pub show_centers: bool,
    /// Values drawn at the circle center of each site (i, j) on the layer's level.
    pub labels: Option<VariableField>,
}

const WIDTH: f64 = 800.0;
const MARGIN: f64 = 20.0;

struct Frame {
    min: Complex64,
    max_im: f64,
    scale: f64,
}

impl Frame {
    fn x(&self, z: Complex64) -> f64 {
        MARGIN + (z.re - self.min.re) * self.scale
    }

    // SVG's y axis points down
    fn y(&self, z: Complex64) -> f64 {
        MARGIN + (self.max_im - z.im) * self.scale
    }
}

fn label_text(v: Complex64) -> String {
    if v.im.abs() > 1e-6 * v.norm().max(1.0) {
        format!("{:.3}{:+.3}i", v.re, v.im)
    } else {
        format!("{:.3}", v.re)
    }
}

/// Renders circles in key order, then centers, points and labels; output depends only on the input.
pub fn render_layer(layer: &CirclePatternLayer, opts: &RenderOptions) -> String {
    let (mut lo, mut hi) = (Complex64::new(f64::INFINITY, f64::INFINITY), Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for c in layer.circles.values() {
        let (z, r) = (c.center(), c.radius());
        lo = Complex64::new(lo.re.min(z.re - r), lo.im.min(z.im - r));
        hi = Complex64::new(hi.re.max(z.re + r), hi.im.max(z.im + r));
    }
    if layer.circles.is_empty() {
        lo = Complex64::new(0.0, 0.0);
        hi = Complex64::new(1.0, 1.0);
    }
    let span = (hi.re - lo.re).max(hi.im - lo.im).max(1e-12);
    let f = Frame { min: lo, max_im: hi.im, scale: (WIDTH - 2.0 * MARGIN) / span };
    let w = 2.0 * MARGIN + (hi.re - lo.re) * f.scale;
    let h = 2.0 * MARGIN + (hi.im - lo.im) * f.scale;
    let dot = (0.04 * f.scale).clamp(1.5, 6.0);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w:.2}" height="{h:.2}" viewBox="0 0 {w:.2} {h:.2}">"#
    );
    let _ = writeln!(s, r##"<g id="circles" fill="none" stroke="#3060a0" stroke-width="1">"##);
    for (&(i, j), c) in &layer.circles {
        let z = c.center();
        let _ = writeln!(
            s,
            r#"<circle data-site="{i},{j}" cx="{:.4}" cy="{:.4}" r="{:.4}"/>"#,
            f.x(z),
            f.y(z),
            c.radius() * f.scale
        );
    }
    let _ = writeln!(s, "</g>");
    if opts.show_centers {
        let _ = writeln!(s, r##"<g id="centers" fill="#a03030">"##);
        for c in layer.circles.values() {
            let z = c.center();
            let _ = writeln!(s, r#"<rect x="{:.4}" y="{:.4}" width="{d:.2}" height="{d:.2}"/>"#, f.x(z) - dot / 2.0, f.y(z) - dot / 2.0, d = dot);
        }
        let _ = writeln!(s, "</g>");
    }
    if opts.show_points {
        let _ = writeln!(s, r#"<g id="points" stroke="black" stroke-width="1">"#);
        for (&(i, j), &p) in &layer.points {
            let fill = match Color::of([i, j, layer.k]) {
                Color::Black => "black",
                Color::White => "white",
            };
            let _ = writeln!(s, r#"<ellipse cx="{:.4}" cy="{:.4}" rx="{dot:.2}" ry="{dot:.2}" fill="{fill}"/>"#, f.x(p), f.y(p));
        }
        let _ = writeln!(s, "</g>");
    }
    if let Some(field) = &opts.labels {
        let _ = writeln!(s, r#"<g id="labels" font-family="monospace" font-size="10" text-anchor="middle">"#);
        for (z, &v) in field.values.iter().filter(|(z, _)| z[2] == layer.k) {
            if let Some(c) = layer.circles.get(&(z[0], z[1])) {
                let p = c.center();
                let _ = writeln!(s, r#"<text x="{:.4}" y="{:.4}">{}</text>"#, f.x(p), f.y(p), label_text(v));
            }
        }
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    s
}
