//! Report envelope, schema versioning, and artifact writers.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const REPORT_SCHEMA_VERSION: &str = "1.0.0";

pub fn report_schema_version() -> &'static str {
    REPORT_SCHEMA_VERSION
}

/// Top-level object of every `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<T> {
    pub schema_version: String,
    pub task: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub result: T,
}

impl<T: Serialize> Report<T> {
    pub fn new(task: impl Into<String>, seed: Option<u64>, warnings: Vec<String>, result: T) -> Self {
        Report {
            schema_version: REPORT_SCHEMA_VERSION.to_string(),
            task: task.into(),
            seed,
            warnings,
            result,
        }
    }

    /// Pretty JSON with a trailing newline. Field order is fixed by the types,
    /// so equal reports give equal bytes.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = serde_json::to_vec_pretty(self)?;
        out.push(b'\n');
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }
}

/// Warning for a schema version other than the current one, if any.
pub fn version_warning(found: Option<&str>) -> Option<String> {
    match found {
        Some(v) if v != REPORT_SCHEMA_VERSION => Some(format!(
            "schema version {v} differs from {REPORT_SCHEMA_VERSION}; fields may have changed"
        )),
        _ => None,
    }
}

/// Loads a report as untyped JSON, with a warning when it was written under
/// another schema version.
pub fn read_report(text: &str) -> Result<(Report<serde_json::Value>, Option<String>)> {
    let report: Report<serde_json::Value> = serde_json::from_str(text)?;
    let warning = version_warning(Some(&report.schema_version));
    Ok((report, warning))
}

/// One JSON object per line.
pub fn write_jsonl<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for row in rows {
        serde_json::to_writer(&mut out, &row)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn version_is_stamped_and_checked() {
        assert_eq!(report_schema_version(), "1.0.0");
        let r = Report::new("check", Some(3), vec![], serde_json::json!({"ok": true}));
        let text = String::from_utf8(r.to_bytes().unwrap()).unwrap();
        assert!(text.contains("\"schema_version\": \"1.0.0\""));
        let (back, warning) = read_report(&text).unwrap();
        assert_eq!(back, r);
        assert!(warning.is_none());

        let old = text.replace("1.0.0", "0.9.0");
        let (_, warning) = read_report(&old).unwrap();
        assert!(warning.unwrap().contains("0.9.0"));
    }
}
