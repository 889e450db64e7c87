//! Result records and their CSV / gnuplot / JSON renderings.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub description: String,
}

/// Numeric result grid; `NaN` marks a cell that does not apply.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[(&str, &str)]) -> Self {
        Self {
            columns: columns.iter().map(|(n, d)| Column { name: n.to_string(), description: d.to_string() }).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the schema");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c.name == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

/// Pass/fail of one check. Hard checks decide the exit code; soft ones only
/// downgrade it to "diagnostic deviation".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub hard: bool,
    pub detail: String,
}

impl Check {
    pub fn hard(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, hard: true, detail: detail.into() }
    }

    pub fn soft(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, hard: false, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment: String,
    /// Effective configuration, defaults included.
    pub config: serde_json::Value,
    /// SHA-256 over experiment, config and results. Worker count and output
    /// paths are excluded, so equal configs and seeds give equal hashes.
    pub hash: String,
    pub table: Table,
    pub summary: serde_json::Value,
    pub checks: Vec<Check>,
}

#[derive(Serialize)]
struct Hashed<'a> {
    experiment: &'a str,
    config: &'a serde_json::Value,
    table: &'a Table,
    summary: &'a serde_json::Value,
    checks: &'a [Check],
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl ResultRecord {
    pub fn new(
        experiment: &str,
        config: serde_json::Value,
        table: Table,
        summary: serde_json::Value,
        checks: Vec<Check>,
    ) -> Self {
        // serde_json maps are ordered, so this serialization is canonical.
        let body = serde_json::to_vec(&Hashed {
            experiment,
            config: &config,
            table: &table,
            summary: &summary,
            checks: &checks,
        })
        .expect("records serialize");
        let hash = hex(&Sha256::digest(&body));
        Self { experiment: experiment.to_string(), config, hash, table, summary, checks }
    }

    /// 0 if every check passed, 2 if only soft checks failed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.checks.iter().any(|c| c.hard && !c.passed) {
            1
        } else if self.checks.iter().any(|c| !c.passed) {
            2
        } else {
            0
        }
    }

    fn schema_header(&self, prefix: &str) -> String {
        let mut s = format!("{prefix} hwq {} record {}\n", self.experiment, self.hash);
        for c in &self.table.columns {
            let _ = writeln!(s, "{prefix} column {}: {}", c.name, c.description);
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.schema_header("#");
        let names: Vec<&str> = self.table.columns.iter().map(|c| c.name.as_str()).collect();
        s.push_str(&names.join(","));
        s.push('\n');
        for r in &self.table.rows {
            let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    /// Whitespace-separated data for gnuplot; `NaN` cells become `?`
    /// (gnuplot's missing-data marker).
    pub fn to_dat(&self) -> String {
        let mut s = self.schema_header("#");
        let names: Vec<&str> = self.table.columns.iter().map(|c| c.name.as_str()).collect();
        let _ = writeln!(s, "# {}", names.join(" "));
        for r in &self.table.rows {
            let cells: Vec<String> = r.iter().map(|v| if v.is_nan() { "?".into() } else { format!("{v:e}") }).collect();
            s.push_str(&cells.join(" "));
            s.push('\n');
        }
        s
    }

    /// Writes `path` as CSV and the same grid next to it with a `.dat` extension.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).with_context(|| format!("writing {}", path.display()))?;
        let dat = path.with_extension("dat");
        std::fs::write(&dat, self.to_dat()).with_context(|| format!("writing {}", dat.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("records serialize")
    }

    /// Short human-readable rendering for the terminal.
    pub fn render(&self) -> String {
        let mut s = format!("{} ({})\n", self.experiment, &self.hash[..12]);
        let names: Vec<String> = self.table.columns.iter().map(|c| format!("{:>12}", c.name)).collect();
        s.push_str(&names.join(" "));
        s.push('\n');
        for r in &self.table.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{:>12.6}", v)).collect();
            s.push_str(&cells.join(" "));
            s.push('\n');
        }
        for c in &self.checks {
            let tag = match (c.passed, c.hard) {
                (true, _) => "PASS",
                (false, true) => "FAIL",
                (false, false) => "WARN",
            };
            let _ = writeln!(s, "{tag} {}: {}", c.name, c.detail);
        }
        s
    }
}
