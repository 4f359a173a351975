//! Directory suites: every `*.json` scenario in a directory, run in
//! parallel and merged in scenario-id order.

use crate::report::{render, Report, Status, TOOL_VERSION};
use crate::run::execute;
use crate::scenario::{Kind, Outcome, Scenario};
use anyhow::{Context, Result};
use mhsets::par::Exec;
use serde::Serialize;
use serde_json::json;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Clone, Serialize)]
pub struct Entry {
    pub id: String,
    pub file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<Kind>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub report: Option<Report>,
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct Suite {
    pub entries: Vec<Entry>,
}

impl Suite {
    pub fn exit_code(&self) -> i32 {
        if self.entries.iter().any(|e| e.status == Status::Error) {
            1
        } else if self.entries.iter().any(|e| e.status == Status::Unexpected) {
            2
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        let mut counts = BTreeMap::new();
        for s in [Status::Ok, Status::Unexpected, Status::Error] {
            let key = serde_json::to_value(s).expect("status").as_str().unwrap_or_default().to_string();
            counts.insert(key, self.entries.iter().filter(|e| e.status == s).count());
        }
        render(&json!({
            "tool_version": TOOL_VERSION,
            "scenarios": self.entries,
            "counts": counts,
            "exit_code": self.exit_code(),
        }))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,file,kind,status,outcome\n");
        for e in &self.entries {
            let name = |v: serde_json::Value| v.as_str().unwrap_or_default().to_string();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.id,
                e.file,
                e.kind.map(|k| k.name()).unwrap_or(""),
                name(serde_json::to_value(e.status).expect("status")),
                e.outcome.map(|o| name(serde_json::to_value(o).expect("outcome"))).unwrap_or_default(),
            ));
        }
        out
    }
}

pub fn scenario_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

fn error_entry(id: String, file: String, kind: Option<Kind>, err: &anyhow::Error) -> Entry {
    Entry {
        id,
        file,
        kind,
        status: Status::Error,
        outcome: None,
        error: Some(format!("{err:#}")),
        report: None,
        seconds: 0.0,
    }
}

/// Loads and runs every scenario; failures are recorded per entry and never
/// abort the others.
pub fn run_suite(dir: &Path, seed: Option<u64>) -> Result<Suite> {
    let files = scenario_files(dir)?;
    let loaded: Vec<(String, Result<Scenario>)> = files
        .iter()
        .map(|f| (f.file_name().unwrap_or_default().to_string_lossy().into_owned(), Scenario::load(f)))
        .collect();
    let mut seen = BTreeMap::new();
    for (file, s) in &loaded {
        if let Ok(s) = s {
            seen.entry(s.id.clone()).or_insert_with(Vec::new).push(file.clone());
        }
    }
    let entries = Exec::default().map(loaded.len(), |i| {
        let (file, s) = &loaded[i];
        let s = match s {
            Ok(s) => s,
            Err(e) => {
                let stem = Path::new(file).file_stem().unwrap_or_default().to_string_lossy().into_owned();
                return error_entry(stem, file.clone(), None, e);
            }
        };
        if seen[&s.id].len() > 1 {
            let e = anyhow::anyhow!("scenario id {} is used by {}", s.id, seen[&s.id].join(", "));
            return error_entry(s.id.clone(), file.clone(), Some(s.kind), &e);
        }
        let t0 = Instant::now();
        match execute(s, seed) {
            Ok(r) => Entry {
                id: s.id.clone(),
                file: file.clone(),
                kind: Some(s.kind),
                status: r.status,
                outcome: Some(r.outcome),
                error: None,
                report: Some(r),
                seconds: t0.elapsed().as_secs_f64(),
            },
            Err(e) => error_entry(s.id.clone(), file.clone(), Some(s.kind), &e),
        }
    });
    let mut entries = entries;
    entries.sort_by(|a, b| a.id.cmp(&b.id).then_with(|| a.file.cmp(&b.file)));
    Ok(Suite { entries })
}
