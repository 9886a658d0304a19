use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::args::Cli;

/// Result of one run (one radius) of a command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<usize>,
    pub vertices: usize,
    pub violation: bool,
    pub payload: Value,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub config: Cli,
    /// `pass` or `violation`.
    pub verdict: String,
    pub results: Vec<RunResult>,
    pub diagnostics: Vec<String>,
    pub wall_time_ms: u64,
}

impl Report {
    pub fn violation(&self) -> bool {
        self.verdict == "violation"
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Header plus rows of the CSV written next to the report.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }
}

/// Writes via a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).with_context(|| format!("cannot create {}", tmp.display()))?;
    f.write_all(text.as_bytes())?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// Report to `out` (stdout when absent) plus the CSV alongside.
pub fn emit(report: &Report, table: &Table, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            write_atomic(path, &report.to_json())?;
            if !table.rows.is_empty() {
                write_atomic(&path.with_extension("csv"), &table.to_csv()?)?;
            }
        }
        None => print!("{}", report.to_json()),
    }
    Ok(())
}

/// Report text without the wall-time line, for replay comparison.
pub fn strip_wall_time(text: &str) -> String {
    text.lines()
        .filter(|l| !l.trim_start().starts_with("\"wall_time_ms\""))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Artifact path for one radius when a command runs several.
pub fn artifact_path(path: &Path, radius: Option<usize>, many: bool) -> PathBuf {
    match (radius, many) {
        (Some(r), true) => {
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let name = match path.extension() {
                Some(ext) => format!("{stem}.r{r}.{}", ext.to_string_lossy()),
                None => format!("{stem}.r{r}"),
            };
            path.with_file_name(name)
        }
        _ => path.to_path_buf(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn artifacts_get_a_radius_suffix_only_for_many_radii() {
        let p = Path::new("/tmp/g.txt");
        assert_eq!(artifact_path(p, Some(4), false), PathBuf::from("/tmp/g.txt"));
        assert_eq!(artifact_path(p, Some(4), true), PathBuf::from("/tmp/g.r4.txt"));
        assert_eq!(artifact_path(p, None, true), PathBuf::from("/tmp/g.txt"));
    }

    #[test]
    fn wall_time_is_ignored_in_comparison() {
        let a = "{\n  \"x\": 1,\n  \"wall_time_ms\": 3\n}";
        let b = "{\n  \"x\": 1,\n  \"wall_time_ms\": 90\n}";
        assert_eq!(strip_wall_time(a), strip_wall_time(b));
    }

    #[test]
    fn table_quotes_fields_with_commas() {
        let mut t = Table::new(&["check", "value"]);
        t.rows.push(vec!["a,b".into(), "1".into()]);
        assert_eq!(t.to_csv().unwrap(), "check,value\n\"a,b\",1\n");
    }
}
