//! Report bundles: files held in memory until the command finishes, then
//! written with write-then-rename so no partial file is ever visible.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;

/// One asserted invariant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// `<=`, `>=`, `<` or `>`; `==` for boolean checks encoded as 0/1.
    pub relation: String,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            relation: "<=".into(),
            passed: value <= threshold,
        }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            relation: ">=".into(),
            passed: value >= threshold,
        }
    }

    pub fn below(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            relation: "<".into(),
            passed: value < threshold,
        }
    }

    pub fn above(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            relation: ">".into(),
            passed: value > threshold,
        }
    }

    pub fn holds(name: &str, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            threshold: 1.0,
            relation: "==".into(),
            passed: ok,
        }
    }
}

/// Machine-readable record of one invocation. Field order is the key order
/// of the emitted JSON.
#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub failures: Vec<String>,
    pub outputs: Vec<String>,
    pub results: serde_json::Value,
    pub config: Option<RunConfig>,
}

#[derive(Clone, Debug)]
pub struct ReportBundle {
    pub command: String,
    pub seed: u64,
    pub config: Option<RunConfig>,
    pub checks: Vec<Check>,
    pub failures: Vec<String>,
    pub results: serde_json::Map<String, serde_json::Value>,
    files: Vec<(String, Vec<u8>)>,
}

pub const SUMMARY_FILE: &str = "summary.json";

impl ReportBundle {
    pub fn new(command: &str, config: Option<RunConfig>) -> Self {
        Self {
            command: command.into(),
            seed: config.as_ref().map_or(0, |c| c.seed),
            config,
            checks: Vec::new(),
            failures: Vec::new(),
            results: serde_json::Map::new(),
            files: Vec::new(),
        }
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn fail(&mut self, message: impl Into<String>) {
        self.failures.push(message.into());
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.results.insert(key.into(), v);
    }

    pub fn file(&mut self, name: impl Into<String>, contents: impl Into<Vec<u8>>) {
        let name = name.into();
        self.files.retain(|(n, _)| *n != name);
        self.files.push((name, contents.into()));
    }

    pub fn files(&self) -> &[(String, Vec<u8>)] {
        &self.files
    }

    pub fn contents(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_slice())
    }

    /// True when every check passed and nothing failed.
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn summary(&self) -> Summary {
        let mut failures = self.failures.clone();
        for c in self.checks.iter().filter(|c| !c.passed) {
            failures.push(format!("check {}: {} {} {} is false", c.name, c.value, c.relation, c.threshold));
        }
        let mut outputs: Vec<String> = self.files.iter().map(|(n, _)| n.clone()).collect();
        outputs.push(SUMMARY_FILE.into());
        Summary {
            command: self.command.clone(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: self.seed,
            passed: self.passed(),
            checks: self.checks.clone(),
            failures,
            outputs,
            results: serde_json::Value::Object(self.results.clone()),
            config: self.config.clone(),
        }
    }

    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary()).expect("summary serializes");
        s.push('\n');
        s
    }

    /// Writes every file and then the summary into `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut paths = Vec::with_capacity(self.files.len() + 1);
        for (name, data) in &self.files {
            paths.push(write_atomic(dir, name, data)?);
        }
        paths.push(write_atomic(dir, SUMMARY_FILE, self.summary_json().as_bytes())?);
        Ok(paths)
    }
}

/// Writes `data` to `dir/name` through a sibling temporary file.
pub fn write_atomic(dir: &Path, name: &str, data: &[u8]) -> std::io::Result<PathBuf> {
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.partial"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(data)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, &target)?;
    Ok(target)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failed_checks_are_listed() {
        let mut b = ReportBundle::new("run", None);
        b.check(Check::at_most("a", 1.0, 2.0));
        b.check(Check::at_most("b", 3.0, 2.0));
        assert!(!b.passed());
        let s = b.summary();
        assert_eq!(s.failures.len(), 1);
        assert!(s.failures[0].starts_with("check b"));
    }

    #[test]
    fn write_leaves_no_partial_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut b = ReportBundle::new("norms", None);
        b.file("x.csv", "a\n1\n");
        b.write(dir.path()).unwrap();
        let mut names: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert_eq!(names, vec!["summary.json", "x.csv"]);
    }
}
