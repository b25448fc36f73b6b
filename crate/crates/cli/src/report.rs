//! Structured JSON reports and tabular plot output.

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

/// Outcome of one check, ordered by severity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Inconclusive,
    Refuted,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Refuted => 1,
            Outcome::Inconclusive => 2,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub verdict: String,
    pub outcome: Outcome,
    pub details: serde_json::Value,
}

impl Check {
    pub fn new(name: &str, verdict: impl Into<String>, outcome: Outcome, details: impl Serialize) -> Check {
        Check {
            name: name.to_string(),
            verdict: verdict.into(),
            outcome,
            details: serde_json::to_value(details).unwrap_or(serde_json::Value::Null),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Settings {
    pub degree_bound: u32,
    pub tol: f64,
    pub samples: usize,
    pub seed: u64,
    pub grid: usize,
    pub point: Option<Vec<String>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub job: Option<String>,
    /// SHA-256 of the configuration file bytes.
    pub config_sha256: String,
    pub settings: Settings,
    pub checks: Vec<Check>,
    pub outcome: Outcome,
    pub exit_code: i32,
}

pub fn config_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Report {
    pub fn new(command: &str, job: Option<String>, config: &[u8], settings: Settings, checks: Vec<Check>) -> Report {
        let outcome = checks.iter().map(|c| c.outcome).max().unwrap_or(Outcome::Pass);
        Report {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            job,
            config_sha256: config_hash(config),
            settings,
            checks,
            outcome,
            exit_code: outcome.exit_code(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

/// Whitespace-separated columns with a `#` header line, as read by gnuplot.
pub fn gnuplot_columns(header: &[String], rows: &[Vec<f64>]) -> String {
    let mut out = format!("# {}\n", header.join(" "));
    for r in rows {
        out.push_str(&r.iter().map(|v| format!("{v:.12e}")).collect::<Vec<_>>().join(" "));
        out.push('\n');
    }
    out
}

pub fn csv(header: &[String], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worst_outcome_wins() {
        let s = Settings {
            degree_bound: 8,
            tol: 1e-6,
            samples: 1,
            seed: 0,
            grid: 8,
            point: None,
        };
        let checks = vec![
            Check::new("a", "Exists", Outcome::Pass, ()),
            Check::new("b", "Inconclusive", Outcome::Inconclusive, ()),
        ];
        let r = Report::new("x", None, b"{}", s, checks);
        assert_eq!(r.exit_code, 2);
    }

    #[test]
    fn hash_is_hex_sha256() {
        assert_eq!(
            config_hash(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
