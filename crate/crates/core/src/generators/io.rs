//! Pattern artifacts on disk: a coordinate CSV plus a JSON sidecar that
//! records the window, provenance, and simplicity flag. Coordinates are
//! written with Rust's shortest round-trip formatting, so load(store(p))
//! reproduces the coordinates bit for bit.

use super::{PointPattern, Provenance, Window};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

#[derive(Serialize, Deserialize)]
struct Sidecar {
    dim: usize,
    window: Window,
    generator: String,
    seed: u64,
    n_points: usize,
    simple: bool,
}

fn sidecar_path(csv_path: &Path) -> std::path::PathBuf {
    csv_path.with_extension("json")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write `pattern` as `<path>` (CSV, header x1..xd) plus `<path>.json`
/// renamed to the `.json` extension.
pub fn write_pattern(pattern: &PointPattern, csv_path: &Path) -> Result<()> {
    let dim = pattern.dim();
    let mut csv = String::new();
    let header: Vec<String> = (1..=dim).map(|i| format!("x{}", i)).collect();
    csv.push_str(&header.join(","));
    csv.push('\n');
    for point in pattern.points() {
        let row: Vec<String> = point.iter().map(|x| x.to_string()).collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    fs::write(csv_path, csv).map_err(io_err(csv_path))?;

    let sidecar = Sidecar {
        dim,
        window: pattern.window().clone(),
        generator: pattern.provenance().generator.clone(),
        seed: pattern.provenance().seed,
        n_points: pattern.n_points(),
        simple: pattern.simple(),
    };
    let json = serde_json::to_string_pretty(&sidecar)
        .expect("sidecar serialization cannot fail");
    let sc_path = sidecar_path(csv_path);
    fs::write(&sc_path, json).map_err(io_err(&sc_path))?;
    Ok(())
}

/// Load a pattern written by [`write_pattern`], validating dimension,
/// point count, window containment, and (when flagged) simplicity.
pub fn read_pattern(csv_path: &Path) -> Result<PointPattern> {
    let sc_path = sidecar_path(csv_path);
    let sc_text = fs::read_to_string(&sc_path).map_err(io_err(&sc_path))?;
    let sidecar: Sidecar = serde_json::from_str(&sc_text).map_err(|e| Error::Artifact {
        path: sc_path.clone(),
        reason: format!("sidecar is not valid JSON: {}", e),
    })?;
    if sidecar.window.dim() != sidecar.dim {
        return Err(Error::Artifact {
            path: sc_path,
            reason: format!(
                "sidecar dim {} does not match its window dim {}",
                sidecar.dim,
                sidecar.window.dim()
            ),
        });
    }

    let text = fs::read_to_string(csv_path).map_err(io_err(csv_path))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Artifact {
        path: csv_path.to_path_buf(),
        reason: "missing header row".to_string(),
    })?;
    let expected_header: Vec<String> = (1..=sidecar.dim).map(|i| format!("x{}", i)).collect();
    if header != expected_header.join(",") {
        return Err(Error::Artifact {
            path: csv_path.to_path_buf(),
            reason: format!(
                "header '{}' does not match expected '{}'",
                header,
                expected_header.join(",")
            ),
        });
    }

    let mut coords = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != sidecar.dim {
            return Err(Error::Artifact {
                path: csv_path.to_path_buf(),
                reason: format!(
                    "row {} has {} fields, expected {}",
                    lineno + 2,
                    fields.len(),
                    sidecar.dim
                ),
            });
        }
        for f in fields {
            let v: f64 = f.parse().map_err(|_| Error::Artifact {
                path: csv_path.to_path_buf(),
                reason: format!("row {} field '{}' is not a number", lineno + 2, f),
            })?;
            coords.push(v);
        }
    }
    let n = coords.len() / sidecar.dim;
    if n != sidecar.n_points {
        return Err(Error::Artifact {
            path: csv_path.to_path_buf(),
            reason: format!("{} points on disk, sidecar says {}", n, sidecar.n_points),
        });
    }

    let pattern = PointPattern::from_coords(
        sidecar.window,
        coords,
        Provenance {
            generator: sidecar.generator,
            seed: sidecar.seed,
        },
        sidecar.simple,
    )
    .map_err(|e| Error::Artifact {
        path: csv_path.to_path_buf(),
        reason: e.to_string(),
    })?;

    if pattern.simple() {
        let mut keys: Vec<&[f64]> = pattern.points().collect();
        keys.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in keys.windows(2) {
            if w[0] == w[1] {
                return Err(Error::Artifact {
                    path: csv_path.to_path_buf(),
                    reason: format!(
                        "pattern is flagged simple but contains a repeated point {:?}",
                        w[0]
                    ),
                });
            }
        }
    }
    Ok(pattern)
}
