//! Sewing-pattern domain types: panels as closed loops of drawing commands,
//! rigid 3D placements, and stitches pairing edges across panels.
//!
//! Structural invariants are checked by [`validate`], which reports every
//! violation instead of failing fast, so readers and generators can surface
//! complete diagnostics.

use crate::geometry::{
    arc_point, circumcircle, cubic_bezier, quad_bezier, GeometryError, Point2, Quaternion,
    ARC_COLLINEAR_TOL,
};
use serde::{Deserialize, Serialize};
use std::fmt;

pub const MAX_PANELS: usize = 64;
pub const MAX_TOTAL_EDGES: usize = 512;
pub const MAX_NAME_LEN: usize = 32;

/// Rigid placement of a panel in 3D: translation in cm plus a unit rotation
/// quaternion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement3 {
    pub translation: [f64; 3],
    pub rotation: Quaternion,
}

impl Placement3 {
    pub fn new(translation: [f64; 3], rotation: Quaternion) -> Result<Self, GeometryError> {
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite {
                x: translation[0],
                y: translation[1],
            });
        }
        Ok(Self {
            translation,
            rotation,
        })
    }

    pub const IDENTITY: Placement3 = Placement3 {
        translation: [0.0, 0.0, 0.0],
        rotation: Quaternion::IDENTITY,
    };
}

/// Shape of one boundary edge. Control coordinates are absolute panel-frame
/// positions, not offsets from the endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EdgeGeometry {
    Line,
    Quad { c1: Point2 },
    Cubic { c1: Point2, c2: Point2 },
    /// Circular arc through a third on-curve point between the endpoints.
    Arc { mid: Point2 },
}

impl EdgeGeometry {
    pub fn kind(&self) -> EdgeKind {
        match self {
            Self::Line => EdgeKind::Line,
            Self::Quad { .. } => EdgeKind::Quad,
            Self::Cubic { .. } => EdgeKind::Cubic,
            Self::Arc { .. } => EdgeKind::Arc,
        }
    }

    /// Geometry with start/end roles swapped (cubic controls swap order).
    pub fn reversed(&self) -> Self {
        match *self {
            Self::Cubic { c1, c2 } => Self::Cubic { c1: c2, c2: c1 },
            other => other,
        }
    }
}

/// Edge type without parameters; used by the codec and dataset statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Line,
    Quad,
    Cubic,
    Arc,
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Line => "line",
            Self::Quad => "quad",
            Self::Cubic => "cubic",
            Self::Arc => "arc",
        };
        f.write_str(s)
    }
}

/// Edge k of a panel runs from vertex k to vertex (k mod n) + 1; the
/// endpoints are implicit, only the shape is stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    #[serde(flatten)]
    pub geometry: EdgeGeometry,
}

impl Edge {
    pub fn line() -> Self {
        Self {
            geometry: EdgeGeometry::Line,
        }
    }

    pub fn quad(c1: Point2) -> Self {
        Self {
            geometry: EdgeGeometry::Quad { c1 },
        }
    }

    pub fn cubic(c1: Point2, c2: Point2) -> Self {
        Self {
            geometry: EdgeGeometry::Cubic { c1, c2 },
        }
    }

    pub fn arc(mid: Point2) -> Self {
        Self {
            geometry: EdgeGeometry::Arc { mid },
        }
    }
}

/// One planar piece of the garment: a closed loop of `n` vertices and `n`
/// edges in its own frame, placed in 3D for draping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub name: String,
    pub vertices: Vec<Point2>,
    pub edges: Vec<Edge>,
    pub translation: [f64; 3],
    pub rotation: Quaternion,
}

impl Panel {
    pub fn new(
        name: impl Into<String>,
        vertices: Vec<Point2>,
        edges: Vec<Edge>,
        placement: Placement3,
    ) -> Self {
        Self {
            name: name.into(),
            vertices,
            edges,
            translation: placement.translation,
            rotation: placement.rotation,
        }
    }

    pub fn placement(&self) -> Placement3 {
        Placement3 {
            translation: self.translation,
            rotation: self.rotation,
        }
    }

    /// Start vertex of edge `k`.
    pub fn edge_start(&self, k: usize) -> Point2 {
        self.vertices[k]
    }

    /// End vertex of edge `k` (wraps back to vertex 0 for the closing edge).
    pub fn edge_end(&self, k: usize) -> Point2 {
        self.vertices[(k + 1) % self.vertices.len()]
    }

    /// Vertical extent of the vertex loop, in cm.
    pub fn height(&self) -> f64 {
        let (min, max) = self
            .vertices
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v.y), hi.max(v.y))
            });
        max - min
    }

    /// Mirror image (x -> -x) with the loop reversed so it still starts at
    /// the origin and keeps its winding.
    pub fn mirrored(&self, name: impl Into<String>) -> Panel {
        let n = self.vertices.len();
        let flip = |p: Point2| Point2 { x: -p.x, y: p.y };
        // Reversed loop: vertex j of the mirror is old vertex (n - j) mod n,
        // and its edge j is old edge (n - 1 - j) traversed backwards.
        let vertices: Vec<Point2> = (0..n)
            .map(|j| flip(self.vertices[(n - j) % n]))
            .collect();
        let edges: Vec<Edge> = (0..n)
            .map(|j| {
                let old = &self.edges[n - 1 - j];
                let geometry = match old.geometry.reversed() {
                    EdgeGeometry::Line => EdgeGeometry::Line,
                    EdgeGeometry::Quad { c1 } => EdgeGeometry::Quad { c1: flip(c1) },
                    EdgeGeometry::Cubic { c1, c2 } => EdgeGeometry::Cubic {
                        c1: flip(c1),
                        c2: flip(c2),
                    },
                    EdgeGeometry::Arc { mid } => EdgeGeometry::Arc { mid: flip(mid) },
                };
                Edge { geometry }
            })
            .collect();
        Panel {
            name: name.into(),
            vertices,
            edges,
            translation: self.translation,
            rotation: self.rotation,
        }
    }
}

/// Reference to one edge: (panel index, edge index), zero-based.
pub type EdgeRef = (usize, usize);

/// An unordered pairing of two edges sewn together. Stored with the smaller
/// reference first so equal stitches compare equal.
///
/// Serialized as `[[panel, edge], [panel, edge]]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Stitch {
    pub first: EdgeRef,
    pub second: EdgeRef,
}

impl Stitch {
    pub fn new(a: EdgeRef, b: EdgeRef) -> Self {
        if a <= b {
            Self { first: a, second: b }
        } else {
            Self { first: b, second: a }
        }
    }
}

impl Serialize for Stitch {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [
            [self.first.0, self.first.1],
            [self.second.0, self.second.1],
        ]
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Stitch {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [[p0, e0], [p1, e1]] = <[[usize; 2]; 2]>::deserialize(d)?;
        Ok(Stitch::new((p0, e0), (p1, e1)))
    }
}

/// A complete sewing pattern: ordered panels plus a stitch set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SewingPattern {
    pub panels: Vec<Panel>,
    pub stitches: Vec<Stitch>,
}

impl SewingPattern {
    pub fn new(panels: Vec<Panel>, stitches: Vec<Stitch>) -> Self {
        Self { panels, stitches }
    }

    pub fn total_edges(&self) -> usize {
        self.panels.iter().map(|p| p.edges.len()).sum()
    }

    /// Stitches in canonical order (normalized pairs, sorted).
    pub fn sorted_stitches(&self) -> Vec<Stitch> {
        let mut s: Vec<Stitch> = self
            .stitches
            .iter()
            .map(|st| Stitch::new(st.first, st.second))
            .collect();
        s.sort();
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PatternError {
    EdgeIndexOutOfRange { panel: usize, edge: usize },
    PanelIndexOutOfRange { panel: usize },
    Geometry(GeometryError),
}

impl fmt::Display for PatternError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EdgeIndexOutOfRange { panel, edge } => {
                write!(f, "edge index {edge} out of range for panel {panel}")
            }
            Self::PanelIndexOutOfRange { panel } => write!(f, "panel index {panel} out of range"),
            Self::Geometry(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for PatternError {}

impl From<GeometryError> for PatternError {
    fn from(e: GeometryError) -> Self {
        Self::Geometry(e)
    }
}

/// Point at parameter `t` on edge `edge_index` of `panel`.
///
/// `t = 0` is the edge's start vertex and `t = 1` its end vertex, exactly for
/// polynomial edges and within 1e-9 cm for arcs.
pub fn evaluate_edge(panel: &Panel, edge_index: usize, t: f64) -> Result<Point2, PatternError> {
    if edge_index >= panel.edges.len() {
        return Err(PatternError::EdgeIndexOutOfRange {
            panel: 0,
            edge: edge_index,
        });
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(GeometryError::ParamOutOfRange { t }.into());
    }
    let start = panel.edge_start(edge_index);
    let end = panel.edge_end(edge_index);
    let p = match panel.edges[edge_index].geometry {
        EdgeGeometry::Line => start.lerp(&end, t),
        EdgeGeometry::Quad { c1 } => quad_bezier(start, c1, end, t),
        EdgeGeometry::Cubic { c1, c2 } => cubic_bezier(start, c1, c2, end, t),
        EdgeGeometry::Arc { mid } => arc_point(start, mid, end, t)?,
    };
    Ok(p)
}

/// One invariant violation found by [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Panel index when the violation is panel-local.
    pub panel: Option<usize>,
    /// Edge index within the panel, when edge-local.
    pub edge: Option<usize>,
    pub message: String,
}

impl Violation {
    fn garment(message: impl Into<String>) -> Self {
        Self {
            panel: None,
            edge: None,
            message: message.into(),
        }
    }

    fn panel(panel: usize, message: impl Into<String>) -> Self {
        Self {
            panel: Some(panel),
            edge: None,
            message: message.into(),
        }
    }

    fn edge(panel: usize, edge: usize, message: impl Into<String>) -> Self {
        Self {
            panel: Some(panel),
            edge: Some(edge),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.panel, self.edge) {
            (Some(p), Some(e)) => write!(f, "panel {p} edge {e}: {}", self.message),
            (Some(p), None) => write!(f, "panel {p}: {}", self.message),
            _ => write!(f, "{}", self.message),
        }
    }
}

fn valid_name(name: &str) -> bool {
    if name.is_empty() || name.len() > MAX_NAME_LEN {
        return false;
    }
    let mut chars = name.chars();
    let first = chars.next().unwrap();
    first.is_ascii_lowercase()
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

/// Checks every structural invariant and returns the full list of
/// violations; an empty report means the pattern is valid.
pub fn validate(pattern: &SewingPattern) -> Vec<Violation> {
    let mut out = Vec::new();

    if pattern.panels.is_empty() {
        out.push(Violation::garment("at least one panel required"));
    }
    if pattern.panels.len() > MAX_PANELS {
        out.push(Violation::garment(format!(
            "{} panels exceed the capacity of {MAX_PANELS}",
            pattern.panels.len()
        )));
    }
    if pattern.total_edges() > MAX_TOTAL_EDGES {
        out.push(Violation::garment(format!(
            "{} edges exceed the capacity of {MAX_TOTAL_EDGES}",
            pattern.total_edges()
        )));
    }

    for (pi, panel) in pattern.panels.iter().enumerate() {
        if !valid_name(&panel.name) {
            out.push(Violation::panel(
                pi,
                format!("name {:?} does not match [a-z][a-z0-9_]* (max {MAX_NAME_LEN})", panel.name),
            ));
        }
        if panel.vertices.len() < 3 {
            out.push(Violation::panel(
                pi,
                format!("{} vertices; at least 3 required", panel.vertices.len()),
            ));
        }
        if panel.edges.len() != panel.vertices.len() {
            out.push(Violation::panel(
                pi,
                format!(
                    "{} edges for {} vertices; the loop must be closed",
                    panel.edges.len(),
                    panel.vertices.len()
                ),
            ));
        }
        if let Some(v0) = panel.vertices.first() {
            if !(v0.x == 0.0 && v0.y == 0.0) {
                out.push(Violation::panel(
                    pi,
                    format!("first vertex {v0} must be exactly (0, 0)"),
                ));
            }
        }
        for (vi, v) in panel.vertices.iter().enumerate() {
            if !v.is_finite() {
                out.push(Violation::panel(pi, format!("vertex {vi} is not finite")));
            }
        }
        if !panel.translation.iter().all(|v| v.is_finite()) {
            out.push(Violation::panel(pi, "translation is not finite"));
        }
        if (panel.rotation.norm() - 1.0).abs() > 1e-6 {
            out.push(Violation::panel(
                pi,
                format!("rotation norm {} deviates from 1", panel.rotation.norm()),
            ));
        }
        if panel.edges.len() == panel.vertices.len() && panel.vertices.len() >= 3 {
            for (ei, edge) in panel.edges.iter().enumerate() {
                let start = panel.edge_start(ei);
                let end = panel.edge_end(ei);
                match edge.geometry {
                    EdgeGeometry::Quad { c1 } => {
                        if !c1.is_finite() {
                            out.push(Violation::edge(pi, ei, "control point is not finite"));
                        }
                    }
                    EdgeGeometry::Cubic { c1, c2 } => {
                        if !c1.is_finite() || !c2.is_finite() {
                            out.push(Violation::edge(pi, ei, "control point is not finite"));
                        }
                    }
                    EdgeGeometry::Arc { mid } => {
                        if !mid.is_finite() {
                            out.push(Violation::edge(pi, ei, "arc point is not finite"));
                        } else if circumcircle(start, mid, end).is_err() {
                            out.push(Violation::edge(
                                pi,
                                ei,
                                format!(
                                    "arc point {mid} is collinear with endpoints {start} and {end} \
                                     within {ARC_COLLINEAR_TOL} cm"
                                ),
                            ));
                        }
                    }
                    EdgeGeometry::Line => {}
                }
            }
        }
    }

    let mut seen: std::collections::HashMap<EdgeRef, usize> = std::collections::HashMap::new();
    for (si, stitch) in pattern.stitches.iter().enumerate() {
        if stitch.first == stitch.second {
            out.push(Violation::garment(format!(
                "stitch {si} joins edge {:?} to itself",
                stitch.first
            )));
        }
        for &(pi, ei) in [&stitch.first, &stitch.second] {
            match pattern.panels.get(pi) {
                None => out.push(Violation::garment(format!(
                    "stitch {si} references missing panel {pi}"
                ))),
                Some(panel) => {
                    if ei >= panel.edges.len() {
                        out.push(Violation::garment(format!(
                            "stitch {si} references missing edge {ei} of panel {pi}"
                        )));
                    }
                }
            }
            if let Some(&other) = seen.get(&(pi, ei)) {
                if other != si {
                    out.push(Violation::garment(format!(
                        "edge ({pi}, {ei}) is referenced by stitches {other} and {si}"
                    )));
                }
            } else {
                seen.insert((pi, ei), si);
            }
        }
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_panel(name: &str) -> Panel {
        let v = |x: f64, y: f64| Point2 { x, y };
        Panel::new(
            name,
            vec![v(0.0, 0.0), v(10.0, 0.0), v(10.0, 10.0), v(0.0, 10.0)],
            vec![Edge::line(), Edge::line(), Edge::line(), Edge::line()],
            Placement3::IDENTITY,
        )
    }

    #[test]
    fn line_midpoint() {
        let p = square_panel("front");
        let mid = evaluate_edge(&p, 0, 0.5).unwrap();
        assert_eq!(mid, Point2 { x: 5.0, y: 0.0 });
    }

    #[test]
    fn evaluate_edge_rejects_bad_inputs() {
        let p = square_panel("front");
        assert!(matches!(
            evaluate_edge(&p, 4, 0.5),
            Err(PatternError::EdgeIndexOutOfRange { .. })
        ));
        assert!(evaluate_edge(&p, 0, 1.5).is_err());
        assert!(evaluate_edge(&p, 0, -0.1).is_err());
    }

    #[test]
    fn loop_closure_visits_all_vertices() {
        let p = square_panel("front");
        for k in 0..4 {
            let s = evaluate_edge(&p, k, 0.0).unwrap();
            let e = evaluate_edge(&p, k, 1.0).unwrap();
            assert_eq!(s, p.vertices[k]);
            assert_eq!(e, p.vertices[(k + 1) % 4]);
        }
    }

    #[test]
    fn validate_accepts_square() {
        let pat = SewingPattern::new(vec![square_panel("front")], vec![]);
        assert!(validate(&pat).is_empty());
    }

    #[test]
    fn validate_flags_offset_first_vertex() {
        let mut p = square_panel("front");
        p.vertices[0] = Point2 { x: 1.0, y: 0.0 };
        let report = validate(&SewingPattern::new(vec![p], vec![]));
        assert_eq!(report.len(), 1);
        assert_eq!(report[0].panel, Some(0));
        assert!(report[0].message.contains("(0, 0)"));
    }

    #[test]
    fn validate_flags_double_stitched_edge() {
        let pat = SewingPattern::new(
            vec![square_panel("front"), square_panel("back")],
            vec![
                Stitch::new((0, 0), (1, 0)),
                Stitch::new((0, 0), (1, 1)),
            ],
        );
        let report = validate(&pat);
        assert_eq!(report.len(), 1);
        assert!(report[0].message.contains("stitches 0 and 1"));
    }

    #[test]
    fn validate_flags_bad_name_and_counts() {
        let mut p = square_panel("Front");
        p.edges.pop();
        let report = validate(&SewingPattern::new(vec![p], vec![]));
        let msgs: Vec<_> = report.iter().map(|v| v.message.clone()).collect();
        assert!(msgs.iter().any(|m| m.contains("does not match")));
        assert!(msgs.iter().any(|m| m.contains("loop must be closed")));
    }

    #[test]
    fn validate_flags_empty_pattern() {
        let report = validate(&SewingPattern::new(vec![], vec![]));
        assert!(report[0].message.contains("at least one panel"));
    }

    #[test]
    fn stitch_normalizes_order() {
        assert_eq!(Stitch::new((1, 3), (0, 2)), Stitch::new((0, 2), (1, 3)));
    }

    #[test]
    fn mirror_is_involutive_and_starts_at_origin() {
        let v = |x: f64, y: f64| Point2 { x, y };
        let panel = Panel::new(
            "sleeve_right",
            vec![v(0.0, 0.0), v(12.0, 0.0), v(12.0, 20.0), v(0.0, 20.0)],
            vec![
                Edge::line(),
                Edge::line(),
                Edge::cubic(v(9.0, 26.0), v(3.0, 23.0)),
                Edge::line(),
            ],
            Placement3::IDENTITY,
        );
        let m = panel.mirrored("sleeve_left");
        assert_eq!(m.vertices[0], Point2 { x: 0.0, y: 0.0 });
        let back = m.mirrored("sleeve_right");
        assert_eq!(back.vertices, panel.vertices);
        assert_eq!(back.edges, panel.edges);
        // mirrored geometry really is x -> -x of the original's point set
        let orig_x: Vec<f64> = panel.vertices.iter().map(|p| p.x).collect();
        let mirr_x: Vec<f64> = m.vertices.iter().map(|p| -p.x).collect();
        let mut a = orig_x.clone();
        let mut b = mirr_x.clone();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a, b);
    }
}
