//! SVG renders: one cell per panel in a grid, boundaries sampled at 32
//! points per edge, stitched edge pairs drawn in matching colors with tag
//! labels at the edge midpoints.

use crate::AppError;
use patternlm_core::codec::assign_stitch_tags;
use patternlm_core::io::read_pattern;
use patternlm_core::pattern::{evaluate_edge, Panel, SewingPattern};
use patternlm_core::Point2;
use std::fmt::Write as _;
use std::path::Path;

const SAMPLES_PER_EDGE: usize = 32;
const PAD: f64 = 6.0;

fn edge_points(panel: &Panel, edge: usize) -> Vec<Point2> {
    (0..=SAMPLES_PER_EDGE)
        .map(|i| {
            evaluate_edge(panel, edge, i as f64 / SAMPLES_PER_EDGE as f64)
                .unwrap_or(Point2::ORIGIN)
        })
        .collect()
}

fn tag_color(tag: usize) -> String {
    // well-spaced hues, readable on white
    let hue = (tag * 67) % 360;
    format!("hsl({hue}, 70%, 40%)")
}

pub fn svg_for(pattern: &SewingPattern) -> String {
    let tags = assign_stitch_tags(pattern, usize::MAX).unwrap_or_default();

    // per-panel sampled outlines and bounding boxes
    let mut outlines: Vec<Vec<Vec<Point2>>> = Vec::new();
    let mut boxes = Vec::new();
    for panel in &pattern.panels {
        let edges: Vec<Vec<Point2>> = (0..panel.edges.len())
            .map(|e| edge_points(panel, e))
            .collect();
        let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for p in edges.iter().flatten() {
            x0 = x0.min(p.x);
            y0 = y0.min(p.y);
            x1 = x1.max(p.x);
            y1 = y1.max(p.y);
        }
        if edges.is_empty() {
            (x0, y0, x1, y1) = (0.0, 0.0, 1.0, 1.0);
        }
        outlines.push(edges);
        boxes.push((x0, y0, x1, y1));
    }

    let cell_w = boxes.iter().map(|b| b.2 - b.0).fold(1.0, f64::max) + 2.0 * PAD;
    let cell_h = boxes.iter().map(|b| b.3 - b.1).fold(1.0, f64::max) + 2.0 * PAD + 8.0;
    let n = pattern.panels.len().max(1);
    let cols = (n as f64).sqrt().ceil() as usize;
    let rows = n.div_ceil(cols);

    let mut svg = String::new();
    let width = cols as f64 * cell_w;
    let height = rows as f64 * cell_h;
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {width:.1} {height:.1}\" \
         font-family=\"monospace\" font-size=\"4\">"
    );
    let _ = writeln!(svg, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");

    for (pi, panel) in pattern.panels.iter().enumerate() {
        let (bx0, _, _, by1) = boxes[pi];
        let col = pi % cols;
        let row = pi / cols;
        let ox = col as f64 * cell_w + PAD;
        let oy = row as f64 * cell_h + PAD;
        // panel frame is y-up; SVG is y-down
        let tx = |p: &Point2| (ox + p.x - bx0, oy + by1 - p.y);

        for (ei, pts) in outlines[pi].iter().enumerate() {
            let (color, tag) = match tags.get(&(pi, ei)).copied().flatten() {
                Some(t) => (tag_color(t), Some(t)),
                None => ("black".to_string(), None),
            };
            let mut d = String::new();
            for (k, p) in pts.iter().enumerate() {
                let (x, y) = tx(p);
                let _ = write!(d, "{}{x:.2} {y:.2} ", if k == 0 { "M" } else { "L" });
            }
            let _ = writeln!(
                svg,
                "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"0.8\"/>",
                d.trim_end()
            );
            if let Some(t) = tag {
                let (mx, my) = tx(&pts[pts.len() / 2]);
                let _ = writeln!(
                    svg,
                    "<text x=\"{mx:.2}\" y=\"{my:.2}\" fill=\"{color}\">t{t}</text>"
                );
            }
        }
        let (lx, ly) = (ox, oy + (by1 - boxes[pi].1) + 6.0);
        let _ = writeln!(svg, "<text x=\"{lx:.2}\" y=\"{ly:.2}\">{}</text>", panel.name);
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn run(pattern_file: &Path, out: &Path) -> Result<(), AppError> {
    let pattern = read_pattern(pattern_file).map_err(|e| match e {
        patternlm_core::io::IoError::Invalid(_) => AppError::Validation(e.to_string()),
        other => AppError::Runtime(other.into()),
    })?;
    std::fs::write(out, svg_for(&pattern))?;
    println!("wrote {}", out.display());
    Ok(())
}
