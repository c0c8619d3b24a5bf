//! Result files and their manifests.

use crate::config::Setup;
use crate::{CliError, Command};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// One output file, rendered in memory.
#[derive(Clone, Debug)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Serialize)]
pub struct Tolerances {
    pub integrator: f64,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub file: String,
    pub sha256: String,
    pub command: &'static str,
    pub config_sha256: String,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub kgphase_version: &'static str,
    pub cli_version: &'static str,
    pub timestamp: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn manifest_name(file: &str) -> String {
    format!("{file}.manifest.json")
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Numerical(format!("cannot write {}: {e}", path.display()))
}

/// Writes every artifact and a manifest next to it. The config hash covers the raw config bytes.
pub fn write_all(dir: &Path, command: Command, setup: &Setup, raw_config: &[u8], artifacts: &[Artifact]) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let config_sha256 = sha256_hex(raw_config);
    let timestamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let mut written = Vec::new();
    for a in artifacts {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.bytes).map_err(|e| io_error(&path, e))?;
        let manifest = Manifest {
            file: a.name.clone(),
            sha256: sha256_hex(&a.bytes),
            command: command.name(),
            config_sha256: config_sha256.clone(),
            tolerances: Tolerances { integrator: setup.config.tolerance },
            seed: setup.config.seed,
            kgphase_version: kgphase::VERSION,
            cli_version: env!("CARGO_PKG_VERSION"),
            timestamp: timestamp.clone(),
        };
        let mpath = dir.join(manifest_name(&a.name));
        let mut text = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        text.push(b'\n');
        std::fs::write(&mpath, text).map_err(|e| io_error(&mpath, e))?;
        written.push(path);
        written.push(mpath);
    }
    Ok(written)
}

/// CSV with a header row.
pub fn csv_artifact<R: Serialize>(name: &str, rows: &[R]) -> Result<Artifact, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Numerical(format!("{name}: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Numerical(format!("{name}: {e}")))?;
    Ok(Artifact { name: name.into(), bytes })
}

pub fn json_artifact<T: Serialize>(name: &str, value: &T) -> Artifact {
    let mut bytes = serde_json::to_vec_pretty(value).expect("results serialize");
    bytes.push(b'\n');
    Artifact { name: name.into(), bytes }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn csv_quotes_and_round_trips_floats() {
        #[derive(Serialize)]
        struct Row {
            label: &'static str,
            x: f64,
        }
        let a = csv_artifact("t.csv", &[Row { label: "a,b", x: 0.1 }, Row { label: "c", x: 1.0 / 3.0 }]).unwrap();
        let text = String::from_utf8(a.bytes).unwrap();
        assert_eq!(text, "label,x\n\"a,b\",0.1\nc,0.3333333333333333\n");
    }
}
