//! Pattern file reading/writing.
//!
//! Files are UTF-8 JSON with a fixed layout: stable key order (struct field
//! order), stitches sorted canonically, and every float printed with 17
//! significant digits (`{:.16e}`), which round-trips f64 exactly. Writing the
//! same pattern twice yields byte-identical files.

use crate::pattern::{validate, SewingPattern, Violation};
use serde::Serialize;
use std::fmt;
use std::io::Write;
use std::path::Path;

#[derive(Debug)]
pub enum IoError {
    Io(std::io::Error),
    /// Malformed JSON; the inner error carries line and column.
    Parse(serde_json::Error),
    /// Structurally invalid pattern, with the full validation report.
    Invalid(Vec<Violation>),
}

impl fmt::Display for IoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Io(e) => write!(f, "{e}"),
            Self::Parse(e) => write!(f, "parse error: {e}"),
            Self::Invalid(report) => {
                write!(f, "invalid pattern ({} violations):", report.len())?;
                for v in report {
                    write!(f, "\n  {v}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for IoError {}

impl From<std::io::Error> for IoError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}

impl From<serde_json::Error> for IoError {
    fn from(e: serde_json::Error) -> Self {
        Self::Parse(e)
    }
}

/// JSON formatter printing every f64 with 17 significant digits.
struct SigDigits17;

impl serde_json::ser::Formatter for SigDigits17 {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serializes any value with the canonical float formatting used by pattern
/// files and dataset shards.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigits17);
    value
        .serialize(&mut ser)
        .expect("serialization to a Vec cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Canonical file content for a pattern: sorted stitches, fixed float
/// formatting, trailing newline.
pub fn pattern_to_string(pattern: &SewingPattern) -> String {
    let canonical = SewingPattern {
        panels: pattern.panels.clone(),
        stitches: pattern.sorted_stitches(),
    };
    let mut s = to_canonical_json(&canonical);
    s.push('\n');
    s
}

pub fn write_pattern(pattern: &SewingPattern, path: impl AsRef<Path>) -> Result<(), IoError> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(pattern_to_string(pattern).as_bytes())?;
    Ok(())
}

/// Parses and validates a pattern from a JSON string.
pub fn pattern_from_str(text: &str) -> Result<SewingPattern, IoError> {
    let pattern: SewingPattern = serde_json::from_str(text)?;
    let report = validate(&pattern);
    if !report.is_empty() {
        return Err(IoError::Invalid(report));
    }
    Ok(pattern)
}

pub fn read_pattern(path: impl AsRef<Path>) -> Result<SewingPattern, IoError> {
    let text = std::fs::read_to_string(path)?;
    pattern_from_str(&text)
}

/// Compares two patterns field by field at the given coordinate tolerance
/// (in cm). Returns a description of the first mismatch, or `None` when the
/// patterns agree. Names, edge kinds, and stitch sets compare exactly.
pub fn pattern_diff(a: &SewingPattern, b: &SewingPattern, tol: f64) -> Option<String> {
    use crate::pattern::EdgeGeometry;

    if a.panels.len() != b.panels.len() {
        return Some(format!(
            "panel count {} vs {}",
            a.panels.len(),
            b.panels.len()
        ));
    }
    for (pi, (pa, pb)) in a.panels.iter().zip(&b.panels).enumerate() {
        if pa.name != pb.name {
            return Some(format!("panel {pi} name {:?} vs {:?}", pa.name, pb.name));
        }
        if pa.vertices.len() != pb.vertices.len() {
            return Some(format!(
                "panel {pi} vertex count {} vs {}",
                pa.vertices.len(),
                pb.vertices.len()
            ));
        }
        for (vi, (va, vb)) in pa.vertices.iter().zip(&pb.vertices).enumerate() {
            if va.dist(vb) > tol {
                return Some(format!("panel {pi} vertex {vi}: {va} vs {vb}"));
            }
        }
        if pa.edges.len() != pb.edges.len() {
            return Some(format!(
                "panel {pi} edge count {} vs {}",
                pa.edges.len(),
                pb.edges.len()
            ));
        }
        for (ei, (ea, eb)) in pa.edges.iter().zip(&pb.edges).enumerate() {
            let close = match (&ea.geometry, &eb.geometry) {
                (EdgeGeometry::Line, EdgeGeometry::Line) => true,
                (EdgeGeometry::Quad { c1: a1 }, EdgeGeometry::Quad { c1: b1 }) => {
                    a1.dist(b1) <= tol
                }
                (
                    EdgeGeometry::Cubic { c1: a1, c2: a2 },
                    EdgeGeometry::Cubic { c1: b1, c2: b2 },
                ) => a1.dist(b1) <= tol && a2.dist(b2) <= tol,
                (EdgeGeometry::Arc { mid: am }, EdgeGeometry::Arc { mid: bm }) => {
                    am.dist(bm) <= tol
                }
                _ => false,
            };
            if !close {
                return Some(format!(
                    "panel {pi} edge {ei}: {:?} vs {:?}",
                    ea.geometry, eb.geometry
                ));
            }
        }
        for i in 0..3 {
            if (pa.translation[i] - pb.translation[i]).abs() > tol {
                return Some(format!(
                    "panel {pi} translation {:?} vs {:?}",
                    pa.translation, pb.translation
                ));
            }
        }
        if pa.rotation.l2_dist(&pb.rotation) > tol {
            return Some(format!(
                "panel {pi} rotation {:?} vs {:?}",
                pa.rotation, pb.rotation
            ));
        }
    }
    if a.sorted_stitches() != b.sorted_stitches() {
        return Some("stitch sets differ".to_string());
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point2, Quaternion};
    use crate::pattern::{Edge, Panel, Placement3, Stitch};

    fn sample_pattern() -> SewingPattern {
        let v = |x: f64, y: f64| Point2 { x, y };
        let front = Panel::new(
            "front",
            vec![v(0.0, 0.0), v(10.0, 0.0), v(10.5, 20.0), v(0.25, 20.0)],
            vec![
                Edge::line(),
                Edge::quad(v(11.0, 10.0)),
                Edge::arc(v(5.0, 21.5)),
                Edge::cubic(v(0.0, 15.0), v(0.5, 5.0)),
            ],
            Placement3::new([0.0, 100.0, 12.0], Quaternion::IDENTITY).unwrap(),
        );
        let back = front.clone();
        let mut back = back;
        back.name = "back".into();
        SewingPattern::new(
            vec![front, back],
            vec![Stitch::new((1, 0), (0, 0)), Stitch::new((0, 3), (1, 3))],
        )
    }

    #[test]
    fn roundtrip_preserves_structure() {
        let p = sample_pattern();
        let text = pattern_to_string(&p);
        let q = pattern_from_str(&text).unwrap();
        assert!(pattern_diff(&p, &q, 0.0).is_none());
    }

    #[test]
    fn writing_is_deterministic() {
        let p = sample_pattern();
        assert_eq!(pattern_to_string(&p), pattern_to_string(&p));
    }

    #[test]
    fn canonical_files_rewrite_byte_identically() {
        let text = pattern_to_string(&sample_pattern());
        let reread = pattern_from_str(&text).unwrap();
        assert_eq!(pattern_to_string(&reread), text);
    }

    #[test]
    fn floats_print_17_significant_digits() {
        let text = to_canonical_json(&[0.1f64]);
        assert_eq!(text, "[1.0000000000000001e-1]");
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back[0], 0.1);
    }

    #[test]
    fn empty_panels_rejected() {
        let err = pattern_from_str(r#"{"panels":[],"stitches":[]}"#).unwrap_err();
        match err {
            IoError::Invalid(report) => {
                assert!(report[0].message.contains("at least one panel"))
            }
            other => panic!("expected validation failure, got {other}"),
        }
    }

    #[test]
    fn non_unit_quaternion_normalized_on_read() {
        let text = r#"{"panels":[{"name":"front",
            "vertices":[[0.0,0.0],[10.0,0.0],[10.0,10.0]],
            "edges":[{"type":"line"},{"type":"line"},{"type":"line"}],
            "translation":[0.0,0.0,0.0],
            "rotation":[1.0,1.0,0.0,0.0]}],"stitches":[]}"#;
        let p = pattern_from_str(text).unwrap();
        let r = 0.5f64.sqrt();
        assert!((p.panels[0].rotation.w - r).abs() < 1e-12);
        assert!((p.panels[0].rotation.x - r).abs() < 1e-12);
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = pattern_from_str("{\"panels\": [nope]}").unwrap_err();
        match err {
            IoError::Parse(e) => assert!(e.line() >= 1),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn stitches_written_in_canonical_order() {
        let p = sample_pattern();
        let text = pattern_to_string(&p);
        let idx_a = text.find("[[0,0],[1,0]]").expect("first stitch present");
        let idx_b = text.find("[[0,3],[1,3]]").expect("second stitch present");
        assert!(idx_a < idx_b);
    }
}
