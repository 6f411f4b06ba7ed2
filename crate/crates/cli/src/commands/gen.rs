use crate::AppError;
use serde::Serialize;
use std::path::Path;

#[derive(Serialize)]
struct GenConfig {
    command: &'static str,
    n: usize,
    seed: u64,
    out: String,
}

pub fn run(n: usize, seed: u64, out: &Path) -> Result<(), AppError> {
    let manifest = patternlm_core::datagen::emit_dataset(n, seed, out).map_err(|e| match e {
        patternlm_core::datagen::DatagenError::TooSmall { n } => {
            AppError::Usage(format!("--n {n} is below the minimum dataset size"))
        }
        other => AppError::Runtime(other.into()),
    })?;
    write_config(n, seed, out)?;
    println!(
        "wrote {} text / {} edit records to {} (splits {}/{}/{})",
        manifest.counts.text,
        manifest.counts.edit,
        out.display(),
        manifest.splits.train.len(),
        manifest.splits.val.len(),
        manifest.splits.test.len()
    );
    Ok(())
}

fn write_config(n: usize, seed: u64, out: &Path) -> Result<(), AppError> {
    super::write_run_config(
        out,
        &GenConfig {
            command: "gen",
            n,
            seed,
            out: out.display().to_string(),
        },
    )
}
