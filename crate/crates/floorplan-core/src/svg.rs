//! SVG rendering of floorplan documents.
//!
//! One floorplan in, one self-contained SVG string out: walls as heavy
//! lines, openings dashed, the trajectory as a thin polyline, support
//! points as a light scatter. World y points up, SVG y points down, so
//! the vertical axis is flipped. Output is a pure function of the input,
//! byte for byte.

use crate::io::FloorplanFile;

/// Rendered width in pixels; height follows the floorplan's aspect ratio.
const CANVAS_WIDTH: f64 = 800.0;
const MARGIN: f64 = 40.0;
/// Tallest canvas allowed for extreme aspect ratios.
const MAX_HEIGHT: f64 = 4000.0;

struct Mapper {
    scale: f64,
    min_x: f64,
    max_y: f64,
    width: f64,
    height: f64,
}

impl Mapper {
    fn new(file: &FloorplanFile) -> Mapper {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        let mut feed = |p: &[f64; 2]| {
            for a in 0..2 {
                min[a] = min[a].min(p[a]);
                max[a] = max[a].max(p[a]);
            }
        };
        file.vertices.iter().for_each(&mut feed);
        file.trajectory.iter().for_each(&mut feed);
        file.support_points.iter().for_each(&mut feed);
        for o in &file.openings {
            feed(&o[0]);
            feed(&o[1]);
        }
        if min[0] > max[0] {
            // Nothing to draw; keep a unit box so the math stays finite.
            min = [0.0, 0.0];
            max = [1.0, 1.0];
        }
        let span_x = (max[0] - min[0]).max(1e-9);
        let span_y = (max[1] - min[1]).max(1e-9);
        let drawable = CANVAS_WIDTH - 2.0 * MARGIN;
        let scale = drawable / span_x;
        let height = (span_y * scale + 2.0 * MARGIN).min(MAX_HEIGHT);
        let scale = scale.min((height - 2.0 * MARGIN) / span_y);
        Mapper {
            scale,
            min_x: min[0],
            max_y: max[1],
            width: CANVAS_WIDTH,
            height,
        }
    }

    fn x(&self, wx: f64) -> f64 {
        MARGIN + (wx - self.min_x) * self.scale
    }

    fn y(&self, wy: f64) -> f64 {
        MARGIN + (self.max_y - wy) * self.scale
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

/// Renders the floorplan document to an SVG string.
pub fn render_svg(file: &FloorplanFile) -> String {
    let m = Mapper::new(file);
    let mut out = String::with_capacity(4096);
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" \
         viewBox=\"0 0 {} {}\">\n",
        fmt(m.width),
        fmt(m.height),
        fmt(m.width),
        fmt(m.height)
    ));
    out.push_str(&format!(
        "  <rect width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>\n",
        fmt(m.width),
        fmt(m.height)
    ));

    if !file.support_points.is_empty() {
        out.push_str("  <g fill=\"#b9c0c9\">\n");
        for p in &file.support_points {
            out.push_str(&format!(
                "    <circle cx=\"{}\" cy=\"{}\" r=\"1.5\"/>\n",
                fmt(m.x(p[0])),
                fmt(m.y(p[1]))
            ));
        }
        out.push_str("  </g>\n");
    }

    if file.trajectory.len() > 1 {
        let pts: Vec<String> = file
            .trajectory
            .iter()
            .map(|p| format!("{},{}", fmt(m.x(p[0])), fmt(m.y(p[1]))))
            .collect();
        out.push_str(&format!(
            "  <polyline points=\"{}\" fill=\"none\" stroke=\"#2b6cb0\" \
             stroke-width=\"1.5\" stroke-dasharray=\"1,3\"/>\n",
            pts.join(" ")
        ));
    }

    if !file.openings.is_empty() {
        out.push_str(
            "  <g stroke=\"#c05621\" stroke-width=\"3\" stroke-dasharray=\"6,4\" \
             stroke-linecap=\"round\">\n",
        );
        for o in &file.openings {
            out.push_str(&format!(
                "    <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>\n",
                fmt(m.x(o[0][0])),
                fmt(m.y(o[0][1])),
                fmt(m.x(o[1][0])),
                fmt(m.y(o[1][1]))
            ));
        }
        out.push_str("  </g>\n");
    }

    out.push_str("  <g stroke=\"#1a202c\" stroke-width=\"4\" stroke-linecap=\"round\">\n");
    for w in &file.walls {
        let a = file.vertices[w[0]];
        let b = file.vertices[w[1]];
        out.push_str(&format!(
            "    <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>\n",
            fmt(m.x(a[0])),
            fmt(m.y(a[1])),
            fmt(m.x(b[0])),
            fmt(m.y(b[1]))
        ));
    }
    out.push_str("  </g>\n");
    out.push_str("</svg>\n");
    out
}
