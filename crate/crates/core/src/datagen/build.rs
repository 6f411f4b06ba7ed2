//! Closed-form panel constructions for each garment family.
//!
//! Conventions: panel loops wind counterclockwise starting at the origin,
//! hems at local y = 0 and waists/shoulders at y = length, so the vertical
//! vertex extent of a body panel equals `length_cm` exactly. Garments hang
//! from fixed world lines (waist y = 100, shoulder y = 150), which keeps
//! panels untouched by an edit byte-identical.
//!
//! Edge-type coverage across the family set: lines everywhere, quadratic
//! Béziers on waists and round necklines, cubics on armholes and sleeve
//! caps, arcs on flared/godet/dress hems.

use super::params::{DesignParams, Family, Neckline, Sleeve};
use crate::geometry::{Point2, Quaternion};
use crate::pattern::{Edge, Panel, Placement3, SewingPattern, Stitch};

const WAIST_Y: f64 = 100.0;
const SHOULDER_Y: f64 = 150.0;
const FRONT_Z: f64 = 10.0;
const BACK_Z: f64 = -10.0;
const GODET_RING_RADIUS: f64 = 14.0;
const WAISTBAND_HEIGHT: f64 = 6.0;
const SLEEVE_WIDTH: f64 = 18.0;
const SLEEVE_SHORT: f64 = 20.0;
const SLEEVE_LONG: f64 = 45.0;
const HEM_SAG: f64 = 3.0;

fn pt(x: f64, y: f64) -> Point2 {
    Point2 { x, y }
}

fn place(x: f64, y: f64, z: f64, rotation: Quaternion) -> Placement3 {
    Placement3::new([x, y, z], rotation).expect("finite placement")
}

fn back_rotation() -> Quaternion {
    Quaternion::new(0.0, 0.0, 1.0, 0.0).expect("half turn about y")
}

/// Hem slant in cm for asymmetric garments.
fn hem_slant(params: &DesignParams) -> f64 {
    if params.symmetric {
        0.0
    } else {
        (params.length_cm * 0.12).min(6.0)
    }
}

/// Trapezoid skirt panel: hem at the bottom (line or arc), straight sides,
/// quad-curved waist seam.
fn skirt_panel(name: &str, params: &DesignParams, z: f64, rotation: Quaternion) -> Panel {
    let h = params.length_cm;
    let w_waist = params.width_cm;
    let w_hem = params.width_cm * params.flare_ratio;
    let slant = hem_slant(params);
    let inset = (w_hem - w_waist) / 2.0;

    let vertices = vec![
        pt(0.0, 0.0),
        pt(w_hem, slant),
        pt(w_hem - inset, h),
        pt(inset, h),
    ];
    let hem = if params.family == Family::FlaredSkirt {
        Edge::arc(pt(w_hem / 2.0, slant / 2.0 + HEM_SAG))
    } else {
        Edge::line()
    };
    let edges = vec![
        hem,
        Edge::line(),
        Edge::quad(pt(w_hem / 2.0, h - 4.0)),
        Edge::line(),
    ];
    Panel::new(
        name,
        vertices,
        edges,
        place(-w_hem / 2.0, WAIST_Y - h, z, rotation),
    )
}

fn waistband_panel(name: &str, params: &DesignParams, z: f64, rotation: Quaternion) -> Panel {
    let w = params.width_cm;
    Panel::new(
        name,
        vec![
            pt(0.0, 0.0),
            pt(w, 0.0),
            pt(w, WAISTBAND_HEIGHT),
            pt(0.0, WAISTBAND_HEIGHT),
        ],
        vec![Edge::line(), Edge::line(), Edge::line(), Edge::line()],
        place(-w / 2.0, WAIST_Y, z, rotation),
    )
}

fn build_skirt(params: &DesignParams) -> SewingPattern {
    let mut panels = vec![
        skirt_panel("front", params, FRONT_Z, Quaternion::IDENTITY),
        skirt_panel("back", params, BACK_Z, back_rotation()),
    ];
    // side seams: right sides together, left (closing) sides together
    let mut stitches = vec![Stitch::new((0, 1), (1, 1)), Stitch::new((0, 3), (1, 3))];
    if params.waistband {
        panels.push(waistband_panel(
            "waistband_front",
            params,
            FRONT_Z,
            Quaternion::IDENTITY,
        ));
        panels.push(waistband_panel(
            "waistband_back",
            params,
            BACK_Z,
            back_rotation(),
        ));
        stitches.push(Stitch::new((2, 0), (0, 2))); // band bottom to front waist
        stitches.push(Stitch::new((3, 0), (1, 2))); // band bottom to back waist
        stitches.push(Stitch::new((2, 1), (3, 1)));
        stitches.push(Stitch::new((2, 3), (3, 3)));
    }
    SewingPattern::new(panels, stitches)
}

/// Triangular gore with an arc hem; `index` is 1-based for the panel name.
fn gore_panel(params: &DesignParams, index: u32, total: u32) -> Panel {
    let h = params.length_cm;
    let gw = params.width_cm * params.flare_ratio / total as f64;
    let slant = hem_slant(params).min(gw * 0.3);
    let sag = (gw * 0.25).min(HEM_SAG);
    let vertices = vec![pt(0.0, 0.0), pt(gw, slant), pt(gw / 2.0, h)];
    let edges = vec![
        Edge::arc(pt(gw / 2.0, slant / 2.0 + sag)),
        Edge::line(),
        Edge::line(),
    ];
    let theta = std::f64::consts::TAU * f64::from(index - 1) / f64::from(total);
    Panel::new(
        format!("gore_{index}"),
        vertices,
        edges,
        place(
            GODET_RING_RADIUS * theta.sin(),
            WAIST_Y - h,
            GODET_RING_RADIUS * theta.cos(),
            Quaternion::about_y(theta),
        ),
    )
}

fn build_godet(params: &DesignParams) -> SewingPattern {
    let n = params.num_inserts;
    let panels: Vec<Panel> = (1..=n).map(|i| gore_panel(params, i, n)).collect();
    // ring: each gore's right side (edge 1) meets the next gore's left
    // side (edge 2, the closing edge)
    let stitches: Vec<Stitch> = (0..n as usize)
        .map(|i| Stitch::new((i, 1), ((i + 1) % n as usize, 2)))
        .collect();
    SewingPattern::new(panels, stitches)
}

struct BodiceSpec {
    /// Neckline on the front; `None` gives the shallow back neck curve.
    front_neck: Option<Neckline>,
    arc_hem: bool,
}

/// Bodice panel: hem, right side, right armhole (cubic), neckline, left
/// armhole (cubic), closing left side. Returns the panel and its edge count.
fn bodice_panel(
    name: &str,
    params: &DesignParams,
    spec: &BodiceSpec,
    z: f64,
    rotation: Quaternion,
) -> Panel {
    let h = params.length_cm;
    let w = params.width_cm;
    let w_hem = w * params.flare_ratio;
    let offset = (w_hem - w) / 2.0;
    let slant = hem_slant(params);
    let arm_depth = (h * 0.3).min(18.0);
    let shoulder_inset = w * 0.22;

    let right_pit = pt(offset + w, h - arm_depth);
    let right_shoulder = pt(offset + w - shoulder_inset, h);
    let left_shoulder = pt(offset + shoulder_inset, h);
    let left_pit = pt(offset, h - arm_depth);

    let mut vertices = vec![pt(0.0, 0.0), pt(w_hem, slant), right_pit, right_shoulder];
    let mut edges = vec![
        if spec.arc_hem {
            Edge::arc(pt(w_hem / 2.0, slant / 2.0 + HEM_SAG))
        } else {
            Edge::line()
        },
        Edge::line(),
        Edge::cubic(
            pt(offset + w - shoulder_inset * 0.2, h - arm_depth * 0.45),
            pt(offset + w - shoulder_inset * 0.65, h - arm_depth * 0.1),
        ),
    ];
    match spec.front_neck {
        Some(Neckline::V) => {
            vertices.push(pt(offset + w / 2.0, h - 11.0));
            edges.push(Edge::line());
            edges.push(Edge::line());
        }
        Some(Neckline::Round) => {
            edges.push(Edge::quad(pt(offset + w / 2.0, h - 15.0)));
        }
        None => {
            edges.push(Edge::quad(pt(offset + w / 2.0, h - 5.0)));
        }
    }
    vertices.push(left_shoulder);
    vertices.push(left_pit);
    edges.push(Edge::cubic(
        pt(offset + shoulder_inset * 0.65, h - arm_depth * 0.1),
        pt(offset + shoulder_inset * 0.2, h - arm_depth * 0.45),
    ));
    edges.push(Edge::line());

    Panel::new(
        name,
        vertices,
        edges,
        place(-w_hem / 2.0, SHOULDER_Y - h, z, rotation),
    )
}

fn sleeve_length(sleeve: Sleeve) -> f64 {
    match sleeve {
        Sleeve::Short => SLEEVE_SHORT,
        Sleeve::Long => SLEEVE_LONG,
        Sleeve::None => 0.0,
    }
}

/// Right sleeve: rectangle with an asymmetric cubic cap, so its mirror (the
/// left sleeve) is a genuinely different point set.
fn sleeve_right_panel(params: &DesignParams) -> Panel {
    let sl = sleeve_length(params.sleeve);
    let sw = SLEEVE_WIDTH;
    Panel::new(
        "sleeve_right",
        vec![pt(0.0, 0.0), pt(sw, 0.0), pt(sw, sl), pt(0.0, sl)],
        vec![
            Edge::line(),
            Edge::line(),
            Edge::cubic(pt(sw * 0.72, sl + 5.0), pt(sw * 0.25, sl + 6.5)),
            Edge::line(),
        ],
        place(
            params.width_cm / 2.0 + 8.0,
            SHOULDER_Y - sl,
            0.0,
            Quaternion::IDENTITY,
        ),
    )
}

fn build_top(params: &DesignParams) -> SewingPattern {
    let front_spec = BodiceSpec {
        front_neck: Some(params.neckline),
        arc_hem: params.family == Family::Dress,
    };
    let back_spec = BodiceSpec {
        front_neck: None,
        arc_hem: params.family == Family::Dress,
    };
    let front = bodice_panel("front", params, &front_spec, FRONT_Z, Quaternion::IDENTITY);
    let back = bodice_panel("back", params, &back_spec, BACK_Z, back_rotation());
    let front_last = front.edges.len() - 1;
    let front_left_armhole = front.edges.len() - 2;

    let mut panels = vec![front, back];
    let mut stitches = vec![
        Stitch::new((0, 1), (1, 1)),
        Stitch::new((0, front_last), (1, 5)),
    ];

    if params.family.uses_sleeve() && params.sleeve != Sleeve::None {
        let right = sleeve_right_panel(params);
        let mut left = right.mirrored("sleeve_left");
        left.translation[0] = -right.translation[0];
        panels.push(right);
        panels.push(left);
        // caps to the front armholes; the mirrored cap lands at edge 1
        stitches.push(Stitch::new((2, 2), (0, 2)));
        stitches.push(Stitch::new((3, 1), (0, front_left_armhole)));
    }
    SewingPattern::new(panels, stitches)
}

/// Builds the sewing pattern for the given parameters. Output always passes
/// validation and round-trips through the codec.
pub fn build_pattern(params: &DesignParams) -> SewingPattern {
    match params.family {
        Family::StraightSkirt | Family::FlaredSkirt => build_skirt(params),
        Family::GodetSkirt => build_godet(params),
        Family::Tee | Family::Tank | Family::Dress => build_top(params),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::params::sample_params;
    use crate::pattern::validate;
    use crate::rng::derive_seed;

    fn base(family: Family) -> DesignParams {
        DesignParams {
            family,
            length_cm: 60.0,
            width_cm: 45.0,
            flare_ratio: if family.uses_flare() { 1.5 } else { 1.0 },
            num_inserts: if family.is_godet() { 6 } else { 0 },
            waistband: false,
            sleeve: Sleeve::None,
            neckline: Neckline::Round,
            symmetric: true,
        }
    }

    #[test]
    fn straight_skirt_without_waistband() {
        let p = build_pattern(&base(Family::StraightSkirt));
        assert_eq!(p.panels.len(), 2);
        assert_eq!(p.stitches.len(), 2);
        // hem (edge 0) and waist (edge 2) are unstitched
        for s in &p.stitches {
            for r in [s.first, s.second] {
                assert!(r.1 == 1 || r.1 == 3, "unexpected stitched edge {r:?}");
            }
        }
        assert!(validate(&p).is_empty());
    }

    #[test]
    fn waistband_adds_two_panels_and_four_stitches() {
        let mut params = base(Family::StraightSkirt);
        params.waistband = true;
        let p = build_pattern(&params);
        assert_eq!(p.panels.len(), 4);
        assert_eq!(p.stitches.len(), 6);
        assert!(validate(&p).is_empty());
    }

    #[test]
    fn godet_ring_has_insert_count_panels_and_stitches() {
        let mut params = base(Family::GodetSkirt);
        params.num_inserts = 6;
        let p = build_pattern(&params);
        assert_eq!(p.panels.len(), 6);
        assert_eq!(p.stitches.len(), 6);
        assert!(validate(&p).is_empty());
        assert_eq!(p.panels[0].name, "gore_1");
        assert_eq!(p.panels[5].name, "gore_6");
    }

    #[test]
    fn skirt_height_matches_length_exactly() {
        for family in [Family::StraightSkirt, Family::FlaredSkirt, Family::GodetSkirt] {
            let mut params = base(family);
            params.length_cm = 72.5;
            let p = build_pattern(&params);
            assert!((p.panels[0].height() - 72.5).abs() < 1e-6);
        }
    }

    #[test]
    fn hem_width_matches_flare() {
        let mut params = base(Family::FlaredSkirt);
        params.flare_ratio = 2.0;
        let p = build_pattern(&params);
        let hem = p.panels[0].vertices[1].x - p.panels[0].vertices[0].x;
        assert!((hem - params.width_cm * 2.0).abs() < 1e-6);
    }

    #[test]
    fn sleeved_tee_structure() {
        let mut params = base(Family::Tee);
        params.sleeve = Sleeve::Short;
        let p = build_pattern(&params);
        assert_eq!(p.panels.len(), 4);
        assert_eq!(
            p.panels.iter().map(|q| q.name.as_str()).collect::<Vec<_>>(),
            vec!["front", "back", "sleeve_right", "sleeve_left"]
        );
        assert!(validate(&p).is_empty());
    }

    #[test]
    fn v_neck_adds_an_edge() {
        let mut params = base(Family::Tee);
        params.neckline = Neckline::V;
        let v = build_pattern(&params);
        params.neckline = Neckline::Round;
        let r = build_pattern(&params);
        assert_eq!(v.panels[0].edges.len(), r.panels[0].edges.len() + 1);
        // back panel untouched by the neckline choice
        assert_eq!(v.panels[1], r.panels[1]);
    }

    #[test]
    fn symmetric_tops_have_mirrored_sleeves() {
        let mut params = base(Family::Dress);
        params.sleeve = Sleeve::Long;
        params.symmetric = true;
        let p = build_pattern(&params);
        let right = &p.panels[2];
        let left = &p.panels[3];
        let remirrored = left.mirrored("sleeve_right");
        assert_eq!(remirrored.vertices, right.vertices);
        assert_eq!(remirrored.edges, right.edges);
    }

    #[test]
    fn generated_patterns_validate() {
        for i in 0..500u64 {
            let params = sample_params(derive_seed(3, i, "params"));
            let p = build_pattern(&params);
            let report = validate(&p);
            assert!(report.is_empty(), "{params:?} -> {report:?}");
        }
    }
}
