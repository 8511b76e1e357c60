//! Result records and their on-disk form: CSV tables plus a key-value
//! summary, each headed by `#` lines naming the tool version, experiment,
//! config hash and master seed.

use crate::config::{ExperimentConfig, ExperimentKind};
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "CAPSULE_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "capsule-out";

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem suffix: `""` gives `<kind>.csv`, `"levels"` gives `<kind>.levels.csv`.
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width in table '{}'", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// Shortest text that parses back to the same float.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Observed value against the limit, in words.
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.to_string(), passed, detail }
    }

    /// Passes when `value <= limit`.
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self::new(name, value <= limit, format!("{} <= {}", num(value), num(limit)))
    }

    /// Passes when `value >= limit`.
    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self::new(name, value >= limit, format!("{} >= {}", num(value), num(limit)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub kind: ExperimentKind,
    pub config_hash: String,
    pub master_seed: u64,
    pub tables: Vec<Table>,
    /// Ordered summary statistics.
    pub summary: Vec<(String, String)>,
    pub checks: Vec<Check>,
}

impl ResultRecord {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            kind: config.kind,
            config_hash: config.hash(),
            master_seed: config.master_seed,
            tables: Vec::new(),
            summary: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn stat(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.to_string(), value.to_string()));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn summary_value(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn header(&self) -> String {
        format!(
            "# tool = capsule {TOOL_VERSION}\n# experiment = {}\n# config_hash = {}\n# master_seed = {}\n",
            self.kind, self.config_hash, self.master_seed
        )
    }

    /// Summary sidecar: statistics, then one `check.<name>` line per check.
    pub fn summary_text(&self) -> String {
        let mut s = self.header();
        for (k, v) in &self.summary {
            let _ = writeln!(s, "{k} = {v}");
        }
        for c in &self.checks {
            let _ = writeln!(s, "check.{} = {} ({})", c.name, if c.passed { "pass" } else { "fail" }, c.detail);
        }
        let _ = writeln!(s, "result = {}", if self.passed() { "pass" } else { "fail" });
        s
    }

    /// Writes every table, the summary and the emitted config into `dir`,
    /// returning the paths in write order.
    pub fn write(&self, config: &ExperimentConfig, dir: &Path) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let kind = self.kind.name();
        let mut paths = Vec::new();
        let mut put = |file: String, body: String| -> io::Result<()> {
            let path = dir.join(file);
            fs::write(&path, body)?;
            paths.push(path);
            Ok(())
        };
        for t in &self.tables {
            let file = if t.name.is_empty() { format!("{kind}.csv") } else { format!("{kind}.{}.csv", t.name) };
            put(file, self.header() + &t.to_csv())?;
        }
        put(format!("{kind}.summary.txt"), self.summary_text())?;
        put(format!("{kind}.config.ini"), self.header() + &config.emit())?;
        Ok(paths)
    }
}

/// `--out`, else the environment variable, else `capsule-out`.
pub fn resolve_out_dir(flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(DEFAULT_OUT_DIR),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn files_carry_provenance_header() {
        let config = ExperimentConfig::defaults(ExperimentKind::PagePurity);
        let mut rec = ResultRecord::new(&config);
        let mut t = Table::new("", &["a", "b"]);
        t.push(vec!["1".into(), num(0.5)]);
        rec.tables.push(t);
        rec.stat("mean", num(0.25));
        rec.checks.push(Check::at_most("x", 1.0, 2.0));
        let dir = tempfile::tempdir().unwrap();
        let paths = rec.write(&config, dir.path()).unwrap();
        assert_eq!(paths.len(), 3);
        for p in &paths {
            let text = fs::read_to_string(p).unwrap();
            assert!(text.contains(&format!("# config_hash = {}", config.hash())), "{}", p.display());
            assert!(text.contains("# master_seed = 1"));
            assert!(text.contains(TOOL_VERSION));
        }
        let csv = fs::read_to_string(dir.path().join("page-purity.csv")).unwrap();
        assert!(csv.ends_with("a,b\n1,0.5\n"));
        let summary = fs::read_to_string(dir.path().join("page-purity.summary.txt")).unwrap();
        assert!(summary.contains("check.x = pass (1.0 <= 2.0)"));
        assert!(summary.ends_with("result = pass\n"));
    }

    #[test]
    fn emitted_config_parses_after_header() {
        let config = ExperimentConfig::defaults(ExperimentKind::Fisher);
        let rec = ResultRecord::new(&config);
        let dir = tempfile::tempdir().unwrap();
        rec.write(&config, dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join("fisher.config.ini")).unwrap();
        let back = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(back.hash(), config.hash());
    }

    #[test]
    fn failing_check_fails_record() {
        let config = ExperimentConfig::defaults(ExperimentKind::Fisher);
        let mut rec = ResultRecord::new(&config);
        rec.checks.push(Check::at_least("y", 0.1, 0.5));
        assert!(!rec.passed());
        assert!(rec.summary_text().ends_with("result = fail\n"));
    }
}
