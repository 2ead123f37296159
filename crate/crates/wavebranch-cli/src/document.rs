//! Result persistence: the self-describing JSON document and the
//! reproducible CSV dialect.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

pub const DOCUMENT_SCHEMA: &str = "wavebranch.result/1";

/// Envelope written as `<command>.json`. The timestamp lives only here, so
/// the `payload` field is byte-reproducible for a fixed config.
#[derive(Debug, Serialize)]
pub struct ResultDocument<P: Serialize> {
    pub schema: &'static str,
    pub version: String,
    pub command: &'static str,
    /// Seconds since the Unix epoch; excluded from reproducibility checks.
    pub timestamp: u64,
    pub config: RunConfig,
    pub payload: P,
}

impl<P: Serialize> ResultDocument<P> {
    pub fn new(command: &'static str, config: RunConfig, payload: P) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        ResultDocument {
            schema: DOCUMENT_SCHEMA,
            version: env!("CARGO_PKG_VERSION").to_string(),
            command,
            timestamp,
            config,
            payload,
        }
    }

    pub fn write_json(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(format!("{}.json", self.command));
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Config(format!("serialization failed: {e}")))?;
        text.push('\n');
        write_bytes(&path, text.as_bytes())?;
        Ok(path)
    }
}

/// 17 significant digits: round-trips every f64 exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// One CSV table: comma separator, '.' decimal, header row, LF endings.
pub fn write_csv(
    dir: &Path,
    name: &str,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<PathBuf, CliError> {
    let path = dir.join(format!("{name}.csv"));
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_bytes(&path, out.as_bytes())?;
    Ok(path)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut f = std::fs::File::create(path)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
    f.write_all(bytes)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}
