use std::fmt::Write;

use serde_json::Value;

use super::CircuitDocument;

fn write_value(out: &mut String, v: &Value) {
    match v {
        Value::Number(n) if n.is_i64() || n.is_u64() => out.push_str(&n.to_string()),
        Value::Number(n) => {
            let x = n.as_f64().expect("finite");
            // 17 significant digits round-trip every double.
            let _ = write!(out, "{x:.16e}");
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(out, item);
            }
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            for (i, (k, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(out, item);
            }
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

/// Gate arguments in canonical form, comma separated.
pub fn format_args(args: &[Value]) -> String {
    let mut out = String::new();
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_value(&mut out, a);
    }
    out
}

fn type_list(ts: &[String]) -> String {
    if ts.is_empty() {
        "-".to_string()
    } else {
        ts.join(" ")
    }
}

/// Canonical text: theory, types, operations, wires, closures, assignment,
/// each sorted by id. Comments and layout are not preserved.
pub fn serialize_circuit(doc: &CircuitDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "theory {}", doc.theory);
    let default_kind = doc.theory.default_system_kind();
    for (label, spec) in &doc.types {
        let _ = write!(out, "type {label} N={}", spec.n);
        if spec.kind != default_kind {
            let _ = write!(out, " kind={}", spec.kind);
        }
        out.push('\n');
    }
    for (id, op) in &doc.operations {
        let _ = write!(
            out,
            "op {id} : {} -> {} gate={}",
            type_list(&op.inputs),
            type_list(&op.outputs),
            op.gate
        );
        if let Some(k) = op.outcomes {
            let _ = write!(out, " outcomes={k}");
        }
        out.push('\n');
    }
    for (id, w) in &doc.wires {
        let _ = writeln!(out, "wire {id} {}.out{} -> {}.in{}", w.from.0, w.from.1, w.to.0, w.to.1);
    }
    for addr in &doc.closures {
        let _ = writeln!(out, "close {addr}");
    }
    if !doc.assign.is_empty() {
        let parts: Vec<String> = doc.assign.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(out, "assign {}", parts.join(" "));
    }
    out
}
