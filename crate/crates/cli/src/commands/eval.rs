use crate::AppError;
use patternlm_core::io::read_pattern;
use patternlm_core::metrics::{evaluate, mean_report, MetricReport};
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;

#[derive(Serialize)]
struct PairReport {
    file: String,
    #[serde(flatten)]
    report: MetricReport,
}

#[derive(Serialize)]
struct EvalConfig {
    command: &'static str,
    pred_dir: String,
    gt_dir: String,
    pairs: usize,
}

pub fn run(pred_dir: &Path, gt_dir: &Path, out: Option<&Path>) -> Result<(), AppError> {
    let mut names: Vec<String> = std::fs::read_dir(pred_dir)?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "json"))
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(AppError::Usage(format!(
            "no .json pattern files in {}",
            pred_dir.display()
        )));
    }

    let pairs: Vec<PairReport> = names
        .par_iter()
        .map(|name| -> Result<PairReport, String> {
            let pred = read_pattern(pred_dir.join(name)).map_err(|e| format!("{name}: {e}"))?;
            let gt_path = gt_dir.join(name);
            if !gt_path.exists() {
                return Err(format!("{name}: no matching ground-truth file"));
            }
            let gt = read_pattern(gt_path).map_err(|e| format!("{name}: {e}"))?;
            Ok(PairReport {
                file: name.clone(),
                report: evaluate(&pred, &gt),
            })
        })
        .collect::<Result<Vec<_>, String>>()
        .map_err(AppError::Validation)?;

    let mean = mean_report(&pairs.iter().map(|p| p.report.clone()).collect::<Vec<_>>());
    println!("{}", serde_json::to_string_pretty(&mean)?);

    if let Some(out) = out {
        std::fs::create_dir_all(out)?;
        let mut lines = String::new();
        for p in &pairs {
            lines.push_str(&serde_json::to_string(p)?);
            lines.push('\n');
        }
        std::fs::write(out.join("pairs.jsonl"), lines)?;
        std::fs::write(
            out.join("report.json"),
            serde_json::to_string_pretty(&mean)? + "\n",
        )?;
        super::write_run_config(
            out,
            &EvalConfig {
                command: "eval",
                pred_dir: pred_dir.display().to_string(),
                gt_dir: gt_dir.display().to_string(),
                pairs: pairs.len(),
            },
        )?;
    }
    Ok(())
}
