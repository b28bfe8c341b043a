//! The `.gptc` circuit text format and its JSON twin.
//!
//! ```text
//! theory quantum
//! type q N=2
//! op P : - -> q gate=prep_ket([1, 0])
//! op M : q -> - gate=measure_z
//! wire a P.out0 -> M.in0
//! ```
//!
//! One declaration per line; `#` starts a comment. Gate arguments are JSON
//! values. Hybrid theories mark classical types with `kind=classical`, and
//! `assign op=token ...` records a default outcome assignment.

mod compile;
mod parse;
mod write;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::circuit::Direction;
use crate::theory::{TheoryKind, TypeSpec};

pub use compile::{compile, CompiledCircuit};
pub use parse::{parse_bytes, parse_circuit};
pub use write::{format_args, serialize_circuit};

/// Version of the JSON interchange schema.
pub const JSON_SCHEMA: u32 = 1;

/// A problem in a document, 1-based line and column (in characters).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl Diagnostic {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic {
            line: pos.line,
            column: pos.column,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

/// Diagnostics joined one per line.
pub fn render_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl Pos {
    pub fn new(line: usize, column: usize) -> Self {
        Pos { line, column }
    }

    /// Position used for document-level problems.
    pub fn start() -> Self {
        Pos::new(1, 1)
    }
}

/// Where declarations came from. Ignored by equality.
#[derive(Debug, Clone, Default)]
pub struct SourceMap {
    pub theory: Option<Pos>,
    pub types: BTreeMap<String, Pos>,
    pub operations: BTreeMap<String, Pos>,
    /// Position of each operation's `gate=` token.
    pub gates: BTreeMap<String, Pos>,
    pub wires: BTreeMap<String, Pos>,
    pub closures: BTreeMap<PortAddr, Pos>,
    pub assign: Option<Pos>,
}

impl PartialEq for SourceMap {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PortAddr {
    pub op: String,
    pub direction: Direction,
    pub port: usize,
}

impl fmt::Display for PortAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}{}", self.op, self.direction, self.port)
    }
}

/// A gate name with JSON arguments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateCall {
    pub name: String,
    #[serde(default)]
    pub args: Vec<serde_json::Value>,
}

impl fmt::Display for GateCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            f.write_str(&self.name)
        } else {
            write!(f, "{}({})", self.name, format_args(&self.args))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpDecl {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub gate: GateCall,
    /// Requested outcome count; `1` merges all outcomes of the gate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireDecl {
    /// Output port of the upstream operation.
    pub from: (String, usize),
    /// Input port of the downstream operation.
    pub to: (String, usize),
}

/// A parsed circuit file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitDocument {
    pub theory: TheoryKind,
    pub types: BTreeMap<String, TypeSpec>,
    pub operations: BTreeMap<String, OpDecl>,
    pub wires: BTreeMap<String, WireDecl>,
    #[serde(default)]
    pub closures: BTreeSet<PortAddr>,
    /// Default outcome per operation.
    #[serde(default)]
    pub assign: BTreeMap<String, String>,
    #[serde(skip)]
    pub source: SourceMap,
}

impl CircuitDocument {
    pub fn new(theory: TheoryKind) -> Self {
        CircuitDocument {
            theory,
            types: BTreeMap::new(),
            operations: BTreeMap::new(),
            wires: BTreeMap::new(),
            closures: BTreeSet::new(),
            assign: BTreeMap::new(),
            source: SourceMap::default(),
        }
    }
}

#[derive(Serialize)]
struct JsonOut<'a> {
    schema: u32,
    #[serde(flatten)]
    doc: &'a CircuitDocument,
}

#[derive(Deserialize)]
struct JsonIn {
    schema: u32,
    #[serde(flatten)]
    doc: CircuitDocument,
}

/// Pretty JSON with a `schema` field.
pub fn to_json(doc: &CircuitDocument) -> String {
    serde_json::to_string_pretty(&JsonOut {
        schema: JSON_SCHEMA,
        doc,
    })
    .expect("documents serialize")
}

/// Read the JSON form. The result is checked like parsed text.
pub fn from_json(text: &str) -> Result<CircuitDocument, Vec<Diagnostic>> {
    let parsed: JsonIn = serde_json::from_str(text).map_err(|e| {
        vec![Diagnostic::new(
            Pos::new(e.line().max(1), e.column().max(1)),
            format!("invalid circuit JSON: {e}"),
        )]
    })?;
    if parsed.schema != JSON_SCHEMA {
        return Err(vec![Diagnostic::new(
            Pos::start(),
            format!("unsupported schema {} (expected {JSON_SCHEMA})", parsed.schema),
        )]);
    }
    let diags = parse::check_document(&parsed.doc);
    if diags.is_empty() {
        Ok(parsed.doc)
    } else {
        Err(diags)
    }
}

/// Parse either format: JSON when the first non-blank character is `{`.
pub fn parse_any(text: &str) -> Result<CircuitDocument, Vec<Diagnostic>> {
    if text.trim_start().starts_with('{') {
        from_json(text)
    } else {
        parse_circuit(text)
    }
}

#[cfg(test)]
mod tests;
