//! Report directory layout: one subdirectory per task plus `index.json`.

use super::spec::Scenario;
use crate::error::{CalcError, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct TaskArtifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskOutput {
    /// file name of the main JSON report
    pub report: String,
    pub json: serde_json::Value,
    /// plot-data CSV files
    pub artifacts: Vec<TaskArtifact>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub index: usize,
    pub task: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportIndex {
    pub schema_version: u32,
    pub seed: u64,
    pub tasks: Vec<IndexEntry>,
}

impl ReportIndex {
    pub fn failures(&self) -> usize {
        self.tasks.iter().filter(|t| t.status != "ok").count()
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| CalcError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn pretty<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CalcError::Serialization(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes every task's reports under `out` and returns the index (also written as `index.json`).
pub fn emit_reports(out: &Path, scenario: &Scenario, results: &[Result<TaskOutput>]) -> Result<ReportIndex> {
    std::fs::create_dir_all(out).map_err(|e| CalcError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", out.display()))))?;
    let mut tasks = Vec::with_capacity(results.len());
    for (i, (task, res)) in scenario.tasks.iter().zip(results).enumerate() {
        let dir_name = format!("{i:02}_{}", task.name());
        let mut entry = IndexEntry { index: i, task: task.name().to_string(), status: "ok".into(), error: None, artifacts: vec![] };
        match res {
            Ok(o) => {
                let dir = out.join(&dir_name);
                std::fs::create_dir_all(&dir)?;
                write(&dir.join(&o.report), &pretty(&o.json)?)?;
                entry.artifacts.push(format!("{dir_name}/{}", o.report));
                for a in &o.artifacts {
                    write(&dir.join(&a.name), &a.contents)?;
                    entry.artifacts.push(format!("{dir_name}/{}", a.name));
                }
            }
            Err(e) => {
                entry.status = "failed".into();
                entry.error = Some(e.to_string());
            }
        }
        tasks.push(entry);
    }
    let index = ReportIndex { schema_version: scenario.schema_version, seed: scenario.seed, tasks };
    write(&out.join("index.json"), &pretty(&index)?)?;
    Ok(index)
}
