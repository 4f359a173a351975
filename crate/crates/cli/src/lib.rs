//! Scenario runner for `mhsets`: declarative JSON scenarios in, deterministic
//! JSON reports and plot-ready CSV tables out.

pub mod fixtures;
pub mod report;
pub mod run;
pub mod scenario;
pub mod suite;

pub use report::{Report, Status, Table};
pub use run::execute;
pub use scenario::{Kind, Outcome, Scenario};
pub use suite::{run_suite, Suite};

use anyhow::{Context, Result};
use std::path::Path;

/// Wall-clock data kept out of the report so reports stay byte-stable.
pub fn metadata(id: &str, seconds: f64, workers: Option<usize>) -> String {
    let unix = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let v = serde_json::json!({
        "scenario": id,
        "elapsed_seconds": seconds,
        "finished_unix": unix,
        "workers": workers,
        "available_parallelism": std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        "parallel": cfg!(feature = "parallel"),
    });
    serde_json::to_string_pretty(&v).expect("metadata") + "\n"
}

/// `<id>.json`, `<id>.meta.json` and one `<id>.<table>.csv` per table.
pub fn write_report(dir: &Path, r: &Report, seconds: f64, workers: Option<usize>) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    std::fs::write(dir.join(format!("{}.json", r.scenario)), r.to_json())?;
    std::fs::write(dir.join(format!("{}.meta.json", r.scenario)), metadata(&r.scenario, seconds, workers))?;
    for (name, t) in &r.tables {
        std::fs::write(dir.join(format!("{}.{name}.csv", r.scenario)), t.to_csv())?;
    }
    Ok(())
}

/// All tables of a report, each preceded by a `# <name>` line.
pub fn tables_csv(r: &Report) -> String {
    let mut out = String::new();
    for (name, t) in &r.tables {
        out.push_str(&format!("# {name}\n"));
        out.push_str(&t.to_csv());
    }
    out
}
