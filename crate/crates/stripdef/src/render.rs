//! Deterministic SVG renderer for the Klein disk.
//!
//! Draws the unit circle, the fundamental polygon (geodesics are straight
//! chords in the Klein model), arc lifts colored by kind, horoball
//! boundaries as 64-point sampled closed paths, and the core axis when the
//! surface has one. Coordinates round to six decimals, so identical inputs
//! produce byte-identical files.

use std::fmt::Write as _;

use crate::arc_complex::{lift_family, ArcKind, WeightedArcFamily};
use crate::hyperbolic::Geodesic;
use crate::minkowski::Vec21;
use crate::surface::{core_axis, DecoratedSurface, DomainVertex, SideKind};

pub const HOROBALL_SAMPLES: usize = 64;

#[derive(Debug, Clone)]
pub struct RenderOptions {
    /// Pixel size of the (square) image.
    pub size: f64,
    pub show_horoballs: bool,
    pub show_axis: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            size: 600.0,
            show_horoballs: true,
            show_axis: true,
        }
    }
}

const EDGE_TO_EDGE_COLOR: &str = "#d62728";
const SPIKE_TO_EDGE_COLOR: &str = "#1f77b4";

struct Canvas {
    svg: String,
    center: f64,
    radius: f64,
}

impl Canvas {
    fn new(size: f64) -> Self {
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" \
             viewBox=\"0 0 {size} {size}\">"
        );
        let center = size / 2.0;
        let radius = size / 2.0 - 10.0;
        let mut c = Canvas {
            svg,
            center,
            radius,
        };
        let _ = writeln!(
            c.svg,
            "  <circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"none\" stroke=\"black\" \
             stroke-width=\"1.5\"/>",
            fmt6(center),
            fmt6(center),
            fmt6(radius)
        );
        c
    }

    /// Klein (x, y) to pixel coordinates (y axis flipped).
    fn px(&self, p: (f64, f64)) -> (String, String) {
        (
            fmt6(self.center + self.radius * p.0),
            fmt6(self.center - self.radius * p.1),
        )
    }

    fn line(&mut self, a: (f64, f64), b: (f64, f64), stroke: &str, width: f64, dash: Option<&str>) {
        let (x1, y1) = self.px(a);
        let (x2, y2) = self.px(b);
        let dash = dash
            .map(|d| format!(" stroke-dasharray=\"{d}\""))
            .unwrap_or_default();
        let _ = writeln!(
            self.svg,
            "  <line x1=\"{x1}\" y1=\"{y1}\" x2=\"{x2}\" y2=\"{y2}\" stroke=\"{stroke}\" \
             stroke-width=\"{width}\"{dash}/>"
        );
    }

    fn path(&mut self, pts: &[(f64, f64)], stroke: &str, fill: &str) {
        let mut d = String::new();
        for (i, &p) in pts.iter().enumerate() {
            let (x, y) = self.px(p);
            let _ = write!(d, "{}{x} {y}", if i == 0 { "M" } else { " L" });
        }
        d.push_str(" Z");
        let _ = writeln!(
            self.svg,
            "  <path d=\"{d}\" stroke=\"{stroke}\" stroke-width=\"1\" fill=\"{fill}\" \
             fill-opacity=\"0.25\"/>"
        );
    }

    fn finish(mut self) -> String {
        self.svg.push_str("</svg>\n");
        self.svg
    }
}

fn fmt6(x: f64) -> String {
    // Avoid "-0.000000" so output is stable across sign-of-zero noise.
    let s = format!("{:.6}", x);
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

fn klein(v: Vec21) -> (f64, f64) {
    (v.x / v.z, v.y / v.z)
}

/// Boundary horocycle of the decoration v, sampled at 64 points in the
/// Klein disk (closed path tangent to the unit circle at [v]).
pub fn horoball_points(v: Vec21) -> Vec<(f64, f64)> {
    // Opposite lightlike point u scaled so <u, v> = -2, spacelike
    // m = v x u with <m, m> = 4; then p = a·v + u/2 + c·m satisfies
    // <p, v> = -1 always and <p, p> = -1 for a = (1 + 4c^2)/2.
    let u = Vec21::new(-v.x, -v.y, v.z).scale(1.0 / (v.z * v.z));
    let m = v.mcross(u);
    let mut pts = Vec::with_capacity(HOROBALL_SAMPLES);
    for k in 0..HOROBALL_SAMPLES {
        let phi = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * k as f64 / HOROBALL_SAMPLES as f64;
        if k == 0 {
            pts.push(klein(v)); // tangency point (c -> ±infinity)
            continue;
        }
        let c = (phi / 2.0).tan();
        let p = v.scale((1.0 + 4.0 * c * c) / 2.0) + u.scale(0.5) + m.scale(c);
        pts.push(klein(p));
    }
    pts
}

fn geodesic_chord(g: &Geodesic) -> ((f64, f64), (f64, f64)) {
    (klein(g.vminus), klein(g.vplus))
}

/// Renders a surface (and optionally an arc family) to SVG text.
pub fn render_klein(
    s: &DecoratedSurface,
    family: Option<&WeightedArcFamily>,
    opts: &RenderOptions,
) -> String {
    let mut c = Canvas::new(opts.size);

    // Fundamental polygon sides: plain edges solid, cut sides dashed,
    // closed-boundary sides thick.
    for (i, side) in s.domain.sides.iter().enumerate() {
        let (a, b) = s.domain.side_klein(i);
        match side {
            SideKind::Edge { .. } => c.line(a, b, "black", 1.0, None),
            SideKind::Paired { .. } => c.line(a, b, "black", 1.0, Some("6 4")),
            SideKind::ClosedBoundary => c.line(a, b, "black", 2.5, None),
        }
    }

    if opts.show_axis {
        if let Some(axis) = core_axis(s) {
            let (a, b) = geodesic_chord(&axis);
            c.line(a, b, "#2ca02c", 1.0, Some("2 3"));
        }
    }

    if opts.show_horoballs {
        let mut seen: Vec<Vec21> = Vec::new();
        for v in &s.domain.vertices {
            if let DomainVertex::Ideal { v, .. } = v {
                if seen.iter().any(|w| (*w - *v).max_abs() < 1e-9) {
                    continue;
                }
                seen.push(*v);
                c.path(&horoball_points(*v), "#9467bd", "#9467bd");
            }
        }
    }

    if let Some(fam) = family {
        if let Ok(lifts) = lift_family(s, &fam.arcs) {
            for lift in &lifts {
                let color = match lift.kind {
                    ArcKind::EdgeToEdge => EDGE_TO_EDGE_COLOR,
                    ArcKind::SpikeToEdge => SPIKE_TO_EDGE_COLOR,
                };
                for p in &lift.pieces {
                    c.line(p.a, p.b, color, 1.5, None);
                }
            }
        }
    }

    c.finish()
}
