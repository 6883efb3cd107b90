use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use cascade_core::RNG_ALGORITHM;

use crate::args::Command;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Io(io::Error),
    Invalid(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(msg) => write!(f, "{msg}"),
            Failure::Io(e) => write!(f, "i/o: {e}"),
            Failure::Invalid(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<cascade_core::Error> for Failure {
    fn from(e: cascade_core::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            match e.into_kind() {
                csv::ErrorKind::Io(io) => Failure::Io(io),
                other => Failure::Invalid(format!("{other:?}")),
            }
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

pub type Outcome<T> = std::result::Result<T, Failure>;

/// Provenance written next to every output file.
#[derive(Debug, Serialize)]
pub struct Sidecar<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub rng: &'static str,
    pub config: &'a Command,
    pub config_sha256: String,
    pub outputs: Vec<String>,
    pub summary: Value,
}

pub fn config_hash(seed: u64, cmd: &Command) -> Outcome<String> {
    let canonical = serde_json::to_string(&serde_json::json!({ "seed": seed, "config": cmd }))?;
    let digest = Sha256::digest(canonical.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Sends `bytes` to `out` (or stdout) and, for files, writes the sidecar.
pub fn emit(
    out: Option<&Path>,
    bytes: &[u8],
    seed: u64,
    cmd: &Command,
    extra_outputs: Vec<String>,
    summary: Value,
) -> Outcome<()> {
    let Some(path) = out else {
        let mut stdout = io::stdout().lock();
        stdout.write_all(bytes)?;
        return Ok(stdout.flush()?);
    };
    fs::write(path, bytes)?;
    let mut outputs = vec![path.display().to_string()];
    outputs.extend(extra_outputs);
    let meta = Sidecar {
        tool: "cascade",
        version: env!("CARGO_PKG_VERSION"),
        seed,
        rng: RNG_ALGORITHM,
        config: cmd,
        config_sha256: config_hash(seed, cmd)?,
        outputs,
        summary,
    };
    let mut text = serde_json::to_string_pretty(&meta)?;
    text.push('\n');
    fs::write(sidecar_path(path), text)?;
    Ok(())
}

pub fn csv_bytes<R: Serialize>(rows: impl IntoIterator<Item = R>) -> Outcome<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| Failure::Io(e.into_error()))
}
