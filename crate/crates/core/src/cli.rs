//! The `gptc` command line.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 for usage
//! errors and documents that cannot be read (diagnostics go to stderr).

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::checks::{run_suite, CheckResult, Suite, DEFAULT_SIZE};
use crate::circuit::{complete_foliation, enumerate_complete_foliations, layer_decomposition, Foliation};
use crate::dsl::{compile, from_json, parse_bytes, render_diagnostics, CircuitDocument, CompiledCircuit, Diagnostic};
use crate::engine::{evaluate_circuit, OutcomeAssignment};
use crate::random::DEFAULT_SEED;
use crate::report::{format_probability, Report};
use crate::theory::{composite_counting_check, CountingModel};

/// Complete foliations listed by `foliate --all` unless `--limit` says
/// otherwise.
pub const DEFAULT_FOLIATION_LIMIT: usize = 1000;

#[derive(Debug, Parser)]
#[command(name = "gptc", version, about = "Foliate and evaluate operational circuits")]
struct Cli {
    /// Print a JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a circuit and check that it is a valid closed circuit.
    Validate { file: PathBuf },
    /// Print the canonical complete foliation, or all of them.
    Foliate {
        file: PathBuf,
        #[arg(long)]
        all: bool,
        #[arg(long, default_value_t = DEFAULT_FOLIATION_LIMIT)]
        limit: usize,
    },
    /// Probability of a joint outcome.
    Eval {
        file: PathBuf,
        /// Outcome tokens, `op=token,...`; overrides the file's `assign`.
        #[arg(long)]
        outcomes: Option<String>,
        /// Evaluate along the k-th enumerated complete foliation.
        #[arg(long)]
        foliation: Option<usize>,
    },
    /// Compare K_ab with K_a K_b for a counting model.
    Counting {
        #[arg(long)]
        model: String,
        #[arg(long = "n-a", value_parser = clap::value_parser!(u64).range(1..=4096))]
        n_a: u64,
        #[arg(long = "n-b", value_parser = clap::value_parser!(u64).range(1..=4096))]
        n_b: u64,
    },
    /// Run a check suite.
    Check {
        #[arg(long, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Random circuits per check.
        #[arg(long, default_value_t = DEFAULT_SIZE)]
        size: usize,
        /// Include runtimes in the report.
        #[arg(long)]
        timings: bool,
    },
}

/// What a command printed and its exit code.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn usage(msg: impl Into<String>) -> Self {
        let mut stderr = msg.into();
        if !stderr.ends_with('\n') {
            stderr.push('\n');
        }
        Outcome {
            code: 2,
            stdout: String::new(),
            stderr,
        }
    }
}

fn located(path: &Path, diags: &[Diagnostic]) -> String {
    render_diagnostics(diags)
        .lines()
        .map(|l| format!("{}:{l}\n", path.display()))
        .collect()
}

/// Read a `.gptc` file or its JSON form.
pub fn load_document(path: &Path) -> Result<CircuitDocument, String> {
    let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}\n", path.display()))?;
    let first = bytes.iter().find(|b| !b.is_ascii_whitespace());
    let parsed = if first == Some(&b'{') {
        match std::str::from_utf8(&bytes) {
            Ok(text) => from_json(text),
            Err(_) => parse_bytes(&bytes),
        }
    } else {
        parse_bytes(&bytes)
    };
    parsed.map_err(|d| located(path, &d))
}

fn load_compiled(path: &Path) -> Result<CompiledCircuit, String> {
    let doc = load_document(path)?;
    compile(&doc).map_err(|d| located(path, &d))
}

fn foliation_json(f: &Foliation) -> serde_json::Value {
    json!(f
        .hypersurfaces
        .iter()
        .map(|h| h.ordered().iter().map(|w| w.as_str().to_string()).collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

fn foliation_line(f: &Foliation) -> String {
    f.hypersurfaces
        .iter()
        .map(|h| h.to_string())
        .collect::<Vec<_>>()
        .join(" -> ")
}

/// Run `gptc` on `argv` (program name first).
pub fn run_command<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome::usage(text)
            } else {
                Outcome {
                    code: 0,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    let echo: Vec<String> = argv
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let mut report = Report::new(echo);
    let json = cli.json;
    let mut text = String::new();
    let mut stderr = String::new();
    let mut timings = false;

    match cli.command {
        Command::Validate { file } => {
            let doc = match load_document(&file) {
                Ok(d) => d,
                Err(e) => return Outcome::usage(e),
            };
            let mut check = CheckResult::new("validate");
            match compile(&doc) {
                Ok(c) => {
                    check.measure("operations", c.circuit.operation_count());
                    check.measure("wires", c.circuit.wire_count());
                    check.measure("joint_outcomes", c.model.assignment_count().to_string());
                    text = format!(
                        "valid {} circuit: {} operations, {} wires\n",
                        doc.theory,
                        c.circuit.operation_count(),
                        c.circuit.wire_count()
                    );
                }
                Err(d) => {
                    stderr = located(&file, &d);
                    check.fail(format!("{} problem(s)", d.len()));
                    check.measure("diagnostics", serde_json::to_value(&d).unwrap_or_default());
                    text = "invalid\n".to_string();
                }
            }
            report.push(check);
        }
        Command::Foliate { file, all, limit } => {
            let c = match load_compiled(&file) {
                Ok(c) => c,
                Err(e) => return Outcome::usage(e),
            };
            let fs = if all {
                enumerate_complete_foliations(&c.circuit, limit)
            } else {
                complete_foliation(&c.circuit).map(|f| vec![f])
            };
            let fs = match fs {
                Ok(fs) => fs,
                Err(e) => return Outcome::usage(format!("{}: {e}", file.display())),
            };
            for (i, f) in fs.iter().enumerate() {
                text.push_str(&format!("{i}: {}\n", foliation_line(f)));
            }
            if all {
                let more = if fs.len() == limit { " (limit reached)" } else { "" };
                text.push_str(&format!("{} complete foliations{more}\n", fs.len()));
            } else if let Some(f) = fs.first() {
                if let Ok(layers) = layer_decomposition(&c.circuit, f) {
                    for (i, l) in layers.iter().enumerate() {
                        let ops: Vec<&str> = l.operations.iter().map(|o| o.as_str()).collect();
                        text.push_str(&format!("  layer {i}: {}\n", ops.join(" ")));
                    }
                }
            }
            report.output = json!({
                "count": fs.len(),
                "foliations": fs.iter().map(foliation_json).collect::<Vec<_>>(),
            });
        }
        Command::Eval {
            file,
            outcomes,
            foliation,
        } => {
            let c = match load_compiled(&file) {
                Ok(c) => c,
                Err(e) => return Outcome::usage(e),
            };
            let mut assignment = c.assignment.clone();
            if let Some(s) = outcomes {
                match OutcomeAssignment::parse(&s) {
                    Ok(a) => {
                        for (op, tok) in a.0 {
                            assignment.set(op, tok);
                        }
                    }
                    Err(e) => return Outcome::usage(format!("--outcomes: {e}")),
                }
            }
            let chosen = match foliation {
                None => None,
                Some(k) => match enumerate_complete_foliations(&c.circuit, k.saturating_add(1)) {
                    Ok(mut fs) if k < fs.len() => Some(fs.swap_remove(k)),
                    Ok(fs) => {
                        return Outcome::usage(format!(
                            "--foliation {k}: the circuit has {} complete foliation(s)",
                            fs.len()
                        ))
                    }
                    Err(e) => return Outcome::usage(e.to_string()),
                },
            };
            let p = match evaluate_circuit(&c.model, &assignment, &c.theory, chosen.as_ref()) {
                Ok(p) => p,
                Err(e) => return Outcome::usage(format!("{}: {e}", file.display())),
            };
            text = format!("{}\n", format_probability(p));
            report.output = json!({
                "assignment": assignment,
                "probability": p,
            });
        }
        Command::Counting { model, n_a, n_b } => {
            let model: CountingModel = match model.parse() {
                Ok(m) => m,
                Err(e) => return Outcome::usage(format!("--model: {e}")),
            };
            let rep = composite_counting_check(model, n_a, n_b);
            let mut check = CheckResult::new("counting");
            if let Ok(serde_json::Value::Object(m)) = serde_json::to_value(&rep) {
                check.measured = m;
            }
            if !rep.bound_satisfied {
                check.fail("K_ab < K_aK_b");
            }
            report.push(check);
            text = format!("{rep}\n");
        }
        Command::Check {
            suite,
            seed,
            size,
            timings: t,
        } => {
            timings = t;
            report.seed = Some(seed);
            for r in run_suite(suite, seed, size) {
                report.push(r);
            }
            text = report.to_table(timings);
        }
    }

    Outcome {
        code: report.exit_code(),
        stdout: if json {
            let mut s = report.to_json(timings);
            s.push('\n');
            s
        } else {
            text
        },
        stderr,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_command(["gptc"]).code, 2);
        assert_eq!(run_command(["gptc", "frobnicate"]).code, 2);
        assert_eq!(run_command(["gptc", "counting", "--model", "x", "--n-a", "2", "--n-b", "2"]).code, 2);
        assert_eq!(run_command(["gptc", "counting", "--model", "quantum", "--n-a", "0", "--n-b", "2"]).code, 2);
        assert_eq!(run_command(["gptc", "validate", "/nonexistent/file.gptc"]).code, 2);
        assert_eq!(run_command(["gptc", "--help"]).code, 0);
    }

    #[test]
    fn counting_verdicts() {
        let q = run_command(["gptc", "counting", "--model", "quaternionic", "--n-a", "2", "--n-b", "2"]);
        assert_eq!(q.code, 1);
        assert!(q.stdout.contains("K_ab=28 < K_aK_b=36, VIOLATES"), "{}", q.stdout);
        let r = run_command(["gptc", "--json", "counting", "--model", "real", "--n-a", "2", "--n-b", "2"]);
        assert_eq!(r.code, 0);
        assert!(r.stdout.contains("\"k_ab\": 10"));
    }
}
