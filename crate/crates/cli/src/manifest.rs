//! Run manifest: every output file with its content hash, plus enough
//! metadata (config echo, seed, versions, wall time) to replay the run.

use crate::config::ExperimentConfig;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Serialize)]
pub struct OutputRecord {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Hash an output file and record it under its name relative to
/// `out_dir`.
pub fn record(out_dir: &Path, file: &Path) -> Result<OutputRecord, String> {
    let data =
        std::fs::read(file).map_err(|e| format!("manifest {}: {}", file.display(), e))?;
    let rel = file
        .strip_prefix(out_dir)
        .unwrap_or(file)
        .to_string_lossy()
        .into_owned();
    Ok(OutputRecord {
        path: rel,
        sha256: format!("{:x}", Sha256::digest(&data)),
        bytes: data.len() as u64,
    })
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    seed: u64,
    versions: Versions,
    wall_time_secs: f64,
    config: &'a ExperimentConfig,
    outputs: &'a [OutputRecord],
}

#[derive(Serialize)]
struct Versions {
    pplab: &'static str,
}

pub fn write_manifest(
    out_dir: &Path,
    config: &ExperimentConfig,
    wall_time_secs: f64,
    outputs: &[OutputRecord],
) -> Result<PathBuf, String> {
    let manifest = Manifest {
        experiment: config.experiment.name(),
        seed: config.seed,
        versions: Versions {
            pplab: env!("CARGO_PKG_VERSION"),
        },
        wall_time_secs,
        config,
        outputs,
    };
    let path = out_dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| format!("manifest: {}", e))?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| format!("manifest {}: {}", path.display(), e))?;
    Ok(path)
}
