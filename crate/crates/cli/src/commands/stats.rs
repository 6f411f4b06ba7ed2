use crate::AppError;
use patternlm_core::codec::{encode, expected_token_count};
use patternlm_core::datagen::Dataset;
use patternlm_core::pattern::EdgeKind;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Serialize)]
struct StatsReport {
    records: usize,
    token_length_min: usize,
    token_length_mean: f64,
    token_length_max: usize,
    /// Histogram over 50-token buckets, keyed by the bucket floor.
    token_length_histogram: BTreeMap<usize, usize>,
    family_counts: BTreeMap<String, usize>,
    edge_type_counts: BTreeMap<String, usize>,
}

pub fn run(dataset_dir: &Path) -> Result<(), AppError> {
    let ds = Dataset::load(dataset_dir)?;
    let mut lengths = Vec::with_capacity(ds.text.len());
    let mut edge_counts: BTreeMap<String, usize> = BTreeMap::new();

    for rec in &ds.text {
        let tg = encode(&rec.pattern, &ds.vocab, &ds.stats)
            .map_err(|e| AppError::Validation(e.to_string()))?;
        debug_assert_eq!(tg.len(), expected_token_count(&rec.pattern));
        lengths.push(tg.len());
        for panel in &rec.pattern.panels {
            for e in &panel.edges {
                let kind = match e.geometry.kind() {
                    EdgeKind::Line => "line",
                    EdgeKind::Quad => "quad",
                    EdgeKind::Cubic => "cubic",
                    EdgeKind::Arc => "arc",
                };
                *edge_counts.entry(kind.to_string()).or_insert(0) += 1;
            }
        }
    }
    if lengths.is_empty() {
        return Err(AppError::Usage("dataset has no text records".into()));
    }

    let mut histogram = BTreeMap::new();
    for &l in &lengths {
        *histogram.entry(l / 50 * 50).or_insert(0) += 1;
    }
    let report = StatsReport {
        records: lengths.len(),
        token_length_min: lengths.iter().copied().min().unwrap_or(0),
        token_length_mean: lengths.iter().sum::<usize>() as f64 / lengths.len() as f64,
        token_length_max: lengths.iter().copied().max().unwrap_or(0),
        token_length_histogram: histogram,
        family_counts: ds.manifest.family_counts.clone(),
        edge_type_counts: edge_counts,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
