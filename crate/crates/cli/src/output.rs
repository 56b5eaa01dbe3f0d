//! Artifact collection and the single writer for an output directory.

use serde::Serialize;
use serde_json::{json, Value};
use stablab::{Error, Result};
use std::path::Path;

/// Everything a command produces. Nothing touches the disk until
/// [`Report::write`].
#[derive(Debug, Default)]
pub struct Report {
    /// Printed to stdout and written as `summary.json`.
    pub summary: Value,
    /// `summary.txt`.
    pub text: String,
    pub files: Vec<(String, Vec<u8>)>,
}

impl Report {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.add(name, s.into_bytes());
        Ok(())
    }

    pub fn line(&mut self, s: impl AsRef<str>) {
        self.text.push_str(s.as_ref());
        self.text.push('\n');
    }

    /// Writes config copies, results, summaries and finally the manifest.
    pub fn write(mut self, dir: &Path, command: &str, seed: u64, config_text: &str, resolved: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut files = vec![
            ("config.toml".to_string(), config_text.as_bytes().to_vec()),
            ("resolved.toml".to_string(), resolved.as_bytes().to_vec()),
        ];
        files.append(&mut self.files);
        let mut summary = serde_json::to_string_pretty(&self.summary)?;
        summary.push('\n');
        files.push(("summary.json".into(), summary.into_bytes()));
        files.push(("summary.txt".into(), std::mem::take(&mut self.text).into_bytes()));
        for (name, bytes) in &files {
            std::fs::write(dir.join(name), bytes)?;
        }
        let manifest = json!({
            "tool": "stablab",
            "version": env!("CARGO_PKG_VERSION"),
            "core_version": stablab::VERSION,
            "command": command,
            "seed": seed,
            "seed_derivation": "per-task streams are ChaCha8 keyed by splitmix64 mixing of (seed, task coordinates); see docs/config.md",
            "files": files.iter().map(|(n, b)| json!({ "name": n, "bytes": b.len() })).collect::<Vec<_>>(),
        });
        let mut m = serde_json::to_string_pretty(&manifest)?;
        m.push('\n');
        std::fs::write(dir.join("manifest.json"), m)?;
        Ok(())
    }
}

/// Machine-readable failure record.
pub fn failure(e: &Error, code: u8) -> Value {
    json!({
        "status": "error",
        "reason": e.reason(),
        "budget_failure": e.is_budget_failure(),
        "message": e.to_string(),
        "exit_code": code,
    })
}

/// Two whitespace-separated columns with a `#` header.
pub fn dat(header: &str, rows: impl IntoIterator<Item = (f64, f64)>) -> Vec<u8> {
    let mut s = format!("# {header}\n");
    for (x, y) in rows {
        s.push_str(&format!("{x} {y}\n"));
    }
    s.into_bytes()
}
