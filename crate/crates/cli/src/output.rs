//! Atomic persistence of run artifacts.

use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::{render_config, ExperimentConfig};
use crate::run::Artifacts;

pub const RESONANCE_CONVENTION: &str =
    "cubes with dist(E, spectrum) <= exp(-sqrt(L)) are classified singular without solving";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `contents` to a sibling temp file, syncs it and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(contents)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

pub fn manifest(config: &ExperimentConfig, artifacts: &Artifacts) -> serde_json::Value {
    let canonical = render_config(config);
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut files = vec![json!({ "name": artifacts.csv_name, "sha256": sha256_hex(artifacts.csv.as_bytes()) })];
    if let Some(m) = &artifacts.matrix {
        files.push(json!({ "name": "matrix.coo", "sha256": sha256_hex(m.as_bytes()) }));
    }
    json!({
        "tool": "anderson-lab",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": config.experiment.kind().name(),
        "config": config,
        "config_text": canonical,
        "input_hash": sha256_hex(canonical.as_bytes()),
        "timestamp": timestamp,
        "gamma_exponent": config.msa.gamma_exponent,
        "energy_interval": {
            "upper": config.msa.e_star,
            "clipping": "the upper end E* is clipped to the largest realized eigenvalue when it exceeds it",
        },
        "resonance_convention": RESONANCE_CONVENTION,
        "notes": artifacts.notes,
        "files": files,
    })
}

/// Creates `dir` and writes the CSV, optional matrix dump, summary and manifest.
pub fn write_artifacts(dir: &Path, config: &ExperimentConfig, artifacts: &Artifacts) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    write_atomic(&dir.join(&artifacts.csv_name), artifacts.csv.as_bytes())?;
    if let Some(m) = &artifacts.matrix {
        write_atomic(&dir.join("matrix.coo"), m.as_bytes())?;
    }
    let mut summary = artifacts.summary.clone();
    for note in &artifacts.notes {
        summary += &format!("note: {note}\n");
    }
    write_atomic(&dir.join("summary.txt"), summary.as_bytes())?;
    let manifest = serde_json::to_string_pretty(&manifest(config, artifacts)).expect("serializable") + "\n";
    write_atomic(&dir.join("manifest.json"), manifest.as_bytes())
}
