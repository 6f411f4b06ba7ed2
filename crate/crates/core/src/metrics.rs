//! Reconstruction metrics between predicted and ground-truth sewing
//! patterns: per-panel vertex/rotation/translation L2 distances, panel and
//! edge count accuracies, and stitch accuracy.
//!
//! Panels are paired by exact name (duplicates in order of appearance);
//! unequal vertex lists are zero-padded to the longer length before
//! comparison. Stitches compare as unordered pairs of name-qualified edge
//! references, so panel reordering does not break stitch credit.

use crate::geometry::Point2;
use crate::pattern::SewingPattern;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// Mean vertex L2 distance over matched panels, cm.
    pub panel_l2: f64,
    /// 1 when the panel counts agree, else 0 (mean over pairs corpus-wide).
    pub num_panel_acc: f64,
    /// Fraction of matched panels with the correct edge count.
    pub num_edge_acc: f64,
    /// Mean L2 between sign-canonicalized quaternions of matched panels.
    pub rot_l2: f64,
    /// Mean L2 between translations of matched panels, cm.
    pub transl_l2: f64,
    /// Stitch-set overlap: |pred ∩ gt| / max(|pred|, |gt|); 1 if both empty.
    pub stitch_acc: f64,
    /// num_panel_acc * num_edge_acc.
    pub accuracy: f64,
}

impl MetricReport {
    pub fn perfect() -> Self {
        Self {
            panel_l2: 0.0,
            num_panel_acc: 1.0,
            num_edge_acc: 1.0,
            rot_l2: 0.0,
            transl_l2: 0.0,
            stitch_acc: 1.0,
            accuracy: 1.0,
        }
    }
}

/// Pairs panels by exact name equality; duplicate names pair in order of
/// appearance. Returns matched (pred_idx, gt_idx) pairs plus the leftovers.
pub fn match_panels(
    pred: &SewingPattern,
    gt: &SewingPattern,
) -> (Vec<(usize, usize)>, Vec<usize>, Vec<usize>) {
    let mut gt_by_name: HashMap<&str, Vec<usize>> = HashMap::new();
    for (gi, panel) in gt.panels.iter().enumerate() {
        gt_by_name.entry(panel.name.as_str()).or_default().push(gi);
    }
    let mut cursor: HashMap<&str, usize> = HashMap::new();

    let mut pairs = Vec::new();
    let mut unmatched_pred = Vec::new();
    let mut used_gt = vec![false; gt.panels.len()];
    for (pi, panel) in pred.panels.iter().enumerate() {
        let name = panel.name.as_str();
        let pos = cursor.entry(name).or_insert(0);
        match gt_by_name.get(name).and_then(|v| v.get(*pos)) {
            Some(&gi) => {
                pairs.push((pi, gi));
                used_gt[gi] = true;
                *pos += 1;
            }
            None => unmatched_pred.push(pi),
        }
    }
    let unmatched_gt = (0..gt.panels.len()).filter(|&gi| !used_gt[gi]).collect();
    (pairs, unmatched_pred, unmatched_gt)
}

fn padded_vertex_l2(pred: &[Point2], gt: &[Point2]) -> f64 {
    let n = pred.len().max(gt.len());
    if n == 0 {
        return 0.0;
    }
    let zero = Point2::ORIGIN;
    let mut sum = 0.0;
    for i in 0..n {
        let p = pred.get(i).unwrap_or(&zero);
        let g = gt.get(i).unwrap_or(&zero);
        sum += p.dist(g);
    }
    sum / n as f64
}

fn stitch_set(pattern: &SewingPattern) -> BTreeSet<((String, usize), (String, usize))> {
    pattern
        .stitches
        .iter()
        .map(|s| {
            let name = |r: (usize, usize)| {
                let panel = pattern
                    .panels
                    .get(r.0)
                    .map(|p| p.name.clone())
                    .unwrap_or_default();
                (panel, r.1)
            };
            let a = name(s.first);
            let b = name(s.second);
            if a <= b {
                (a, b)
            } else {
                (b, a)
            }
        })
        .collect()
}

/// Compares one predicted pattern against ground truth. Corpus-level values
/// are means of per-pair reports (see [`mean_report`]).
pub fn evaluate(pred: &SewingPattern, gt: &SewingPattern) -> MetricReport {
    let (pairs, _, _) = match_panels(pred, gt);

    let num_panel_acc = if pred.panels.len() == gt.panels.len() {
        1.0
    } else {
        0.0
    };

    let (mut panel_l2, mut rot_l2, mut transl_l2) = (0.0, 0.0, 0.0);
    let mut edge_hits = 0usize;
    for &(pi, gi) in &pairs {
        let p = &pred.panels[pi];
        let g = &gt.panels[gi];
        panel_l2 += padded_vertex_l2(&p.vertices, &g.vertices);
        rot_l2 += p.rotation.l2_dist(&g.rotation);
        transl_l2 += p
            .translation
            .iter()
            .zip(&g.translation)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if p.edges.len() == g.edges.len() {
            edge_hits += 1;
        }
    }
    let matched = pairs.len();
    let num_edge_acc = if matched == 0 {
        0.0
    } else {
        edge_hits as f64 / matched as f64
    };
    if matched > 0 {
        panel_l2 /= matched as f64;
        rot_l2 /= matched as f64;
        transl_l2 /= matched as f64;
    }

    let ps = stitch_set(pred);
    let gs = stitch_set(gt);
    let stitch_acc = if ps.is_empty() && gs.is_empty() {
        1.0
    } else {
        ps.intersection(&gs).count() as f64 / ps.len().max(gs.len()) as f64
    };

    MetricReport {
        panel_l2,
        num_panel_acc,
        num_edge_acc,
        rot_l2,
        transl_l2,
        stitch_acc,
        accuracy: num_panel_acc * num_edge_acc,
    }
}

/// Mean of per-pair reports, aggregated in input order.
pub fn mean_report(reports: &[MetricReport]) -> MetricReport {
    let n = reports.len().max(1) as f64;
    let sum = |f: fn(&MetricReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    let num_panel_acc = sum(|r| r.num_panel_acc);
    let num_edge_acc = sum(|r| r.num_edge_acc);
    MetricReport {
        panel_l2: sum(|r| r.panel_l2),
        num_panel_acc,
        num_edge_acc,
        rot_l2: sum(|r| r.rot_l2),
        transl_l2: sum(|r| r.transl_l2),
        stitch_acc: sum(|r| r.stitch_acc),
        accuracy: sum(|r| r.accuracy),
    }
}
