use crate::AppError;
use patternlm_core::pattern::{validate, SewingPattern};
use std::path::Path;

pub fn run(pattern_file: &Path) -> Result<(), AppError> {
    let text = std::fs::read_to_string(pattern_file)?;
    let pattern: SewingPattern = serde_json::from_str(&text)
        .map_err(|e| AppError::Validation(format!("parse error: {e}")))?;
    let report = validate(&pattern);
    let lines: Vec<String> = report.iter().map(|v| v.to_string()).collect();
    println!("{}", serde_json::to_string_pretty(&report).unwrap_or_default());
    if report.is_empty() {
        Ok(())
    } else {
        Err(AppError::Validation(format!(
            "{} violation(s):\n  {}",
            report.len(),
            lines.join("\n  ")
        )))
    }
}
