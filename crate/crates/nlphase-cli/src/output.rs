//! Artifact files: result JSON, CSV tables, summary and manifest.

use std::fs;
use std::io;
use std::path::Path;

use serde_json::json;

use crate::commands::Outcome;
use crate::config::ExperimentConfig;
use crate::tolerances::Tolerances;

pub fn status(o: &Outcome) -> &'static str {
    if o.error.is_some() {
        "error"
    } else if o.checks.iter().all(|c| c.pass) {
        "pass"
    } else {
        "fail"
    }
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values serialize") + "\n"
}

/// Write every artifact into `dir`; returns the file names written.
pub fn write_all(dir: &Path, cfg: &ExperimentConfig, tol: &Tolerances, o: &Outcome, source: Option<&Path>) -> io::Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut files = vec!["manifest.json".to_string(), "config.txt".into(), "result.json".into(), "summary.json".into()];
    fs::write(dir.join("config.txt"), &cfg.resolved)?;
    fs::write(dir.join("result.json"), pretty(&o.result))?;
    for (name, csv) in &o.tables {
        fs::write(dir.join(name), csv)?;
        files.push(name.clone());
    }
    let summary = json!({
        "command": cfg.command.name(),
        "status": status(o),
        "checks": o.checks,
        "error": o.error,
        "seed": cfg.seed,
    });
    fs::write(dir.join("summary.json"), pretty(&summary))?;
    let manifest = json!({
        "toolkit": "nlphase",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cfg.command.name(),
        "seed": cfg.seed,
        "threads": cfg.threads,
        "config_source": source.map(|p| p.display().to_string()),
        "config": cfg.resolved,
        "tolerances": tol,
        "files": files,
    });
    fs::write(dir.join("manifest.json"), pretty(&manifest))?;
    Ok(files)
}
