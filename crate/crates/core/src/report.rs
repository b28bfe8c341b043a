//! Command reports: a JSON document (`"schema": 1`) or a plain table.
//!
//! Runtimes are only included on request so that the same command and seed
//! always produce byte-identical JSON.

use serde::Serialize;
use serde_json::Value;

use crate::checks::CheckResult;
use crate::engine::CheckStatus;

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: u32,
    /// Arguments after the program name.
    pub command: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub status: CheckStatus,
    pub checks: Vec<CheckResult>,
    /// Command-specific result.
    #[serde(skip_serializing_if = "Value::is_null")]
    pub output: Value,
}

impl Report {
    pub fn new(command: Vec<String>) -> Self {
        Report {
            schema: REPORT_SCHEMA,
            command,
            seed: None,
            status: CheckStatus::Pass,
            checks: Vec::new(),
            output: Value::Null,
        }
    }

    pub fn push(&mut self, check: CheckResult) {
        if !check.passed() {
            self.status = CheckStatus::Fail;
        }
        self.checks.push(check);
    }

    pub fn passed(&self) -> bool {
        self.status != CheckStatus::Fail
    }

    /// 0 when every check passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self, timings: bool) -> String {
        let mut r = self.clone();
        if !timings {
            for c in &mut r.checks {
                c.runtime_ms = None;
            }
        }
        serde_json::to_string_pretty(&r).expect("reports serialize")
    }

    /// One row per check: name, status, tolerance and measurements.
    pub fn to_table(&self, timings: bool) -> String {
        let rows: Vec<[String; 4]> = self
            .checks
            .iter()
            .map(|c| {
                let mut measured: Vec<String> = c
                    .measured
                    .iter()
                    .map(|(k, v)| format!("{k}={}", compact(v)))
                    .collect();
                if timings {
                    if let Some(ms) = c.runtime_ms {
                        measured.push(format!("time={ms:.0}ms"));
                    }
                }
                if !c.detail.is_empty() {
                    measured.push(format!("({})", c.detail));
                }
                [
                    c.name.clone(),
                    c.status.to_string(),
                    c.tolerance.map_or("exact".to_string(), |t| format!("{t:e}")),
                    measured.join(" "),
                ]
            })
            .collect();
        let header = ["check", "status", "tolerance", "measured"].map(String::from);
        let mut widths = [0; 3];
        for r in std::iter::once(&header).chain(&rows) {
            for i in 0..3 {
                widths[i] = widths[i].max(r[i].len());
            }
        }
        let mut out = String::new();
        for r in std::iter::once(&header).chain(&rows) {
            let line = format!(
                "{:w0$}  {:w1$}  {:w2$}  {}",
                r[0],
                r[1],
                r[2],
                r[3],
                w0 = widths[0],
                w1 = widths[1],
                w2 = widths[2]
            );
            out.push_str(line.trim_end());
            out.push('\n');
        }
        let failed = self.checks.iter().filter(|c| !c.passed()).count();
        out.push_str(&format!(
            "{} checks, {} failed{}\n",
            self.checks.len(),
            failed,
            self.seed.map_or(String::new(), |s| format!(", seed {s}"))
        ));
        out
    }
}

fn compact(v: &Value) -> String {
    match v {
        Value::Number(n) if n.is_f64() => format!("{:.3e}", n.as_f64().unwrap_or(f64::NAN)),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// A probability for humans: at most 12 decimals, trailing zeros removed.
pub fn format_probability(p: f64) -> String {
    let s = format!("{p:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_follows_checks() {
        let mut r = Report::new(vec!["check".into()]);
        assert_eq!(r.exit_code(), 0);
        let mut c = CheckResult::new("a");
        c.measure("x", 1.5);
        c.runtime_ms = Some(3.0);
        r.push(c.clone());
        assert!(!r.to_json(false).contains("runtime_ms"));
        assert!(r.to_json(true).contains("runtime_ms"));
        assert!(r.to_json(false).contains("\"schema\": 1"));
        c.fail("broken");
        r.push(c);
        assert_eq!(r.exit_code(), 1);
        let table = r.to_table(false);
        assert!(table.contains("fail"));
        assert!(table.ends_with("2 checks, 1 failed\n"));
    }

    #[test]
    fn probabilities_print_short() {
        assert_eq!(format_probability(0.5000000000000001), "0.5");
        assert_eq!(format_probability(1.0), "1");
        assert_eq!(format_probability(-1e-17), "0");
        assert_eq!(format_probability(0.125), "0.125");
    }
}
