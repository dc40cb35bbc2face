//! Batch scenarios: a versioned JSON description of a model, an operator,
//! numeric settings and a task list, with static validation, execution over
//! a bounded worker pool and deterministic report emission.

mod emit;
mod spec;
mod tasks;

pub use emit::{emit_reports, IndexEntry, ReportIndex, TaskArtifact, TaskOutput};
pub use spec::{
    GridSettings, KernelSpec, NumericSettings, OperatorSpec, OracleFunction, Scenario, SymbolSource, Task, WeightSpec,
    SCHEMA_VERSION,
};
pub use tasks::{run_task, Context};

use crate::error::{CalcError, Result};
use rayon::prelude::*;
use std::path::Path;

/// Parses a scenario, reporting the field path of schema violations.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let s: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CalcError::Serialization(format!("{path}: {}", e.into_inner()))
    })?;
    Ok(s)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text)
}

/// Runs every task (at most `threads` at a time) and returns the outputs in
/// task order.
pub fn run_scenario(scenario: &Scenario, base_dir: &Path, threads: usize) -> Result<Vec<Result<TaskOutput>>> {
    let ctx = Context::new(scenario, base_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| CalcError::Precondition(format!("worker pool: {e}")))?;
    let out = pool.install(|| {
        scenario
            .tasks
            .par_iter()
            .enumerate()
            .map(|(i, t)| {
                log::info!("task {i}: {}", t.name());
                let r = run_task(&ctx, t);
                if let Err(e) = &r {
                    log::warn!("task {i} ({}) failed: {e}", t.name());
                }
                r
            })
            .collect()
    });
    Ok(out)
}
