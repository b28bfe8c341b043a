use std::collections::BTreeMap;
use std::str::FromStr;

use super::{CircuitDocument, Diagnostic, GateCall, OpDecl, PortAddr, Pos, SourceMap, WireDecl};
use crate::circuit::Direction;
use crate::theory::gates::{self, Family};
use crate::theory::{SystemKind, TheoryKind, TypeSpec, MAX_TYPE_N};

#[derive(Debug, Clone)]
struct Token<'a> {
    text: &'a str,
    pos: Pos,
}

/// Split a line into whitespace-separated tokens, keeping bracketed and
/// quoted runs together and dropping a trailing `#` comment.
fn tokenize(line: &str, line_no: usize) -> Result<Vec<Token<'_>>, Diagnostic> {
    let mut tokens = Vec::new();
    let mut stack: Vec<(char, Pos)> = Vec::new();
    let mut in_string: Option<Pos> = None;
    let mut escaped = false;
    let mut start: Option<(usize, Pos)> = None;
    let mut end = line.len();
    for (col, (byte, ch)) in line.char_indices().enumerate() {
        let pos = Pos::new(line_no, col + 1);
        if in_string.is_some() {
            if escaped {
                escaped = false;
            } else if ch == '\\' {
                escaped = true;
            } else if ch == '"' {
                in_string = None;
            }
            continue;
        }
        if ch == '#' && stack.is_empty() {
            end = byte;
            break;
        }
        if ch.is_whitespace() && stack.is_empty() {
            if let Some((s, p)) = start.take() {
                tokens.push(Token {
                    text: &line[s..byte],
                    pos: p,
                });
            }
            continue;
        }
        if start.is_none() {
            start = Some((byte, pos));
        }
        match ch {
            '"' => in_string = Some(pos),
            '(' | '[' | '{' => stack.push((ch, pos)),
            ')' | ']' | '}' => {
                let want = match ch {
                    ')' => '(',
                    ']' => '[',
                    _ => '{',
                };
                match stack.pop() {
                    Some((open, _)) if open == want => {}
                    _ => return Err(Diagnostic::new(pos, format!("unbalanced `{ch}`"))),
                }
            }
            _ => {}
        }
    }
    if let Some(p) = in_string {
        return Err(Diagnostic::new(p, "unterminated string"));
    }
    if let Some((open, p)) = stack.pop() {
        return Err(Diagnostic::new(p, format!("unclosed `{open}`")));
    }
    if let Some((s, p)) = start {
        tokens.push(Token {
            text: &line[s..end],
            pos: p,
        });
    }
    Ok(tokens)
}

pub(super) fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '\'')
}

fn at(pos: Pos, offset: usize) -> Pos {
    Pos::new(pos.line, pos.column + offset)
}

fn identifier(tok: &Token<'_>, what: &str) -> Result<String, Diagnostic> {
    if is_identifier(tok.text) {
        Ok(tok.text.to_string())
    } else {
        Err(Diagnostic::new(
            tok.pos,
            format!("`{}` is not a valid {what} (letters, digits, `_` and `'` only)", tok.text),
        ))
    }
}

fn key_value<'a>(tok: &Token<'a>) -> Option<(&'a str, &'a str)> {
    tok.text.split_once('=')
}

fn parse_count(text: &str, pos: Pos, what: &str) -> Result<usize, Diagnostic> {
    text.parse::<usize>()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| Diagnostic::new(pos, format!("{what} must be a positive integer, got `{text}`")))
}

/// `A.out0` or `A.in3`.
fn port_addr(tok: &Token<'_>) -> Result<PortAddr, Diagnostic> {
    let bad = || Diagnostic::new(tok.pos, format!("`{}` is not a port like `A.out0`", tok.text));
    let (op, port) = tok.text.rsplit_once('.').ok_or_else(bad)?;
    if !is_identifier(op) {
        return Err(bad());
    }
    let (direction, digits) = if let Some(d) = port.strip_prefix("out") {
        (Direction::Output, d)
    } else if let Some(d) = port.strip_prefix("in") {
        (Direction::Input, d)
    } else {
        return Err(bad());
    };
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let port = digits.parse::<usize>().map_err(|_| bad())?;
    Ok(PortAddr {
        op: op.to_string(),
        direction,
        port,
    })
}

fn gate_call(text: &str, pos: Pos) -> Result<GateCall, Diagnostic> {
    let name_len = text
        .char_indices()
        .find(|(_, c)| !(c.is_ascii_alphanumeric() || *c == '_'))
        .map_or(text.len(), |(i, _)| i);
    let name = &text[..name_len];
    if name.is_empty() {
        return Err(Diagnostic::new(pos, "missing gate name"));
    }
    let rest = &text[name_len..];
    if rest.is_empty() {
        return Ok(GateCall {
            name: name.to_string(),
            args: Vec::new(),
        });
    }
    let inner_pos = at(pos, name.chars().count() + 1);
    let inner = rest
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| {
            Diagnostic::new(at(pos, name.chars().count()), "expected `(arguments)` after the gate name")
        })?;
    let args: Vec<serde_json::Value> = serde_json::from_str(&format!("[{inner}]")).map_err(|e| {
        let col = e.column().saturating_sub(2);
        Diagnostic::new(at(inner_pos, col), format!("bad gate arguments: {e}"))
    })?;
    Ok(GateCall {
        name: name.to_string(),
        args,
    })
}

struct Parser {
    theory: Option<TheoryKind>,
    doc: CircuitDocument,
    diags: Vec<Diagnostic>,
    /// Type labels with whether `kind=` was given.
    pending_default: Vec<(String, bool)>,
}

impl Parser {
    fn statement(&mut self, tokens: &[Token<'_>]) -> Result<(), Diagnostic> {
        let head = &tokens[0];
        match head.text {
            "theory" => self.theory_line(tokens),
            "type" => self.type_line(tokens),
            "op" => self.op_line(tokens),
            "wire" => self.wire_line(tokens),
            "close" => self.close_line(tokens),
            "assign" => self.assign_line(tokens),
            other => Err(Diagnostic::new(
                head.pos,
                format!("unknown declaration `{other}` (expected theory, type, op, wire, close or assign)"),
            )),
        }
    }

    fn theory_line(&mut self, t: &[Token<'_>]) -> Result<(), Diagnostic> {
        if t.len() != 2 {
            return Err(Diagnostic::new(t[0].pos, "expected `theory <classical|quantum|hybrid>`"));
        }
        if self.theory.is_some() {
            return Err(Diagnostic::new(t[0].pos, "theory declared twice"));
        }
        let kind = TheoryKind::from_str(t[1].text).map_err(|e| Diagnostic::new(t[1].pos, e.to_string()))?;
        self.theory = Some(kind);
        self.doc.theory = kind;
        self.doc.source.theory = Some(t[0].pos);
        Ok(())
    }

    fn type_line(&mut self, t: &[Token<'_>]) -> Result<(), Diagnostic> {
        if t.len() < 3 {
            return Err(Diagnostic::new(t[0].pos, "expected `type <label> N=<int>`"));
        }
        let label = identifier(&t[1], "type label")?;
        let mut n = None;
        let mut kind = None;
        for tok in &t[2..] {
            match key_value(tok) {
                Some(("N", v)) if n.is_none() => n = Some(parse_count(v, at(tok.pos, 2), "N")?),
                Some(("kind", v)) if kind.is_none() => {
                    kind = Some(SystemKind::from_str(v).map_err(|e| Diagnostic::new(at(tok.pos, 5), e.to_string()))?)
                }
                _ => return Err(Diagnostic::new(tok.pos, format!("unexpected `{}` in type declaration", tok.text))),
            }
        }
        let n = n.ok_or_else(|| Diagnostic::new(t[1].pos, "type declaration needs N=<int>"))?;
        if self.doc.types.contains_key(&label) {
            return Err(Diagnostic::new(t[1].pos, format!("type `{label}` declared twice")));
        }
        // The kind defaults from the theory, which may be declared later.
        let kind = kind.unwrap_or(SystemKind::Quantum);
        self.pending_default.push((label.clone(), kind_given(t)));
        self.doc.types.insert(label.clone(), TypeSpec { kind, n });
        self.doc.source.types.insert(label, t[1].pos);
        Ok(())
    }

    fn op_line(&mut self, t: &[Token<'_>]) -> Result<(), Diagnostic> {
        const SHAPE: &str = "expected `op <id> : <types|-> -> <types|-> gate=<name(args)> [outcomes=<k>]`";
        if t.len() < 6 {
            return Err(Diagnostic::new(t[0].pos, SHAPE));
        }
        let id = identifier(&t[1], "operation id")?;
        if t[2].text != ":" {
            return Err(Diagnostic::new(t[2].pos, format!("expected `:`, found `{}`", t[2].text)));
        }
        let arrow = t[3..]
            .iter()
            .position(|x| x.text == "->")
            .map(|i| i + 3)
            .ok_or_else(|| Diagnostic::new(t[2].pos, SHAPE))?;
        let inputs = type_list(&t[3..arrow], t[arrow].pos)?;
        let gate_at = t[arrow + 1..]
            .iter()
            .position(|x| x.text.starts_with("gate="))
            .map(|i| i + arrow + 1)
            .ok_or_else(|| Diagnostic::new(t[arrow].pos, "missing `gate=`"))?;
        let outputs = type_list(&t[arrow + 1..gate_at], t[gate_at].pos)?;
        let gate_tok = &t[gate_at];
        let gate = gate_call(&gate_tok.text[5..], at(gate_tok.pos, 5))?;
        let mut outcomes = None;
        for tok in &t[gate_at + 1..] {
            match key_value(tok) {
                Some(("outcomes", v)) if outcomes.is_none() => {
                    outcomes = Some(parse_count(v, at(tok.pos, 9), "outcomes")?)
                }
                _ => return Err(Diagnostic::new(tok.pos, format!("unexpected `{}` after the gate", tok.text))),
            }
        }
        if self.doc.operations.contains_key(&id) {
            return Err(Diagnostic::new(t[1].pos, format!("operation `{id}` declared twice")));
        }
        self.doc.operations.insert(
            id.clone(),
            OpDecl {
                inputs,
                outputs,
                gate,
                outcomes,
            },
        );
        self.doc.source.operations.insert(id.clone(), t[1].pos);
        self.doc.source.gates.insert(id, gate_tok.pos);
        Ok(())
    }

    fn wire_line(&mut self, t: &[Token<'_>]) -> Result<(), Diagnostic> {
        if t.len() != 5 || t[3].text != "->" {
            return Err(Diagnostic::new(t[0].pos, "expected `wire <id> <op>.out<k> -> <op>.in<k>`"));
        }
        let id = identifier(&t[1], "wire id")?;
        let from = port_addr(&t[2])?;
        let to = port_addr(&t[4])?;
        if from.direction != Direction::Output {
            return Err(Diagnostic::new(t[2].pos, "a wire starts at an output port (`.out<k>`)"));
        }
        if to.direction != Direction::Input {
            return Err(Diagnostic::new(t[4].pos, "a wire ends at an input port (`.in<k>`)"));
        }
        if self.doc.wires.contains_key(&id) {
            return Err(Diagnostic::new(t[1].pos, format!("wire `{id}` declared twice")));
        }
        self.doc.wires.insert(
            id.clone(),
            WireDecl {
                from: (from.op, from.port),
                to: (to.op, to.port),
            },
        );
        self.doc.source.wires.insert(id, t[1].pos);
        Ok(())
    }

    fn close_line(&mut self, t: &[Token<'_>]) -> Result<(), Diagnostic> {
        if t.len() != 2 {
            return Err(Diagnostic::new(t[0].pos, "expected `close <op>.out<k>` or `close <op>.in<k>`"));
        }
        let addr = port_addr(&t[1])?;
        if !self.doc.closures.insert(addr.clone()) {
            return Err(Diagnostic::new(t[1].pos, format!("{addr} closed twice")));
        }
        self.doc.source.closures.insert(addr, t[1].pos);
        Ok(())
    }

    fn assign_line(&mut self, t: &[Token<'_>]) -> Result<(), Diagnostic> {
        if self.doc.source.assign.is_some() {
            return Err(Diagnostic::new(t[0].pos, "only one `assign` line is allowed"));
        }
        for tok in &t[1..] {
            let (op, token) = key_value(tok)
                .ok_or_else(|| Diagnostic::new(tok.pos, format!("`{}` is not op=outcome", tok.text)))?;
            if !is_identifier(op) || !is_identifier(token) {
                return Err(Diagnostic::new(tok.pos, format!("`{}` is not op=outcome", tok.text)));
            }
            if self.doc.assign.insert(op.to_string(), token.to_string()).is_some() {
                return Err(Diagnostic::new(tok.pos, format!("`{op}` assigned twice")));
            }
        }
        self.doc.source.assign = Some(t[0].pos);
        Ok(())
    }
}

fn kind_given(t: &[Token<'_>]) -> bool {
    t[2..].iter().any(|x| x.text.starts_with("kind="))
}

fn type_list(t: &[Token<'_>], at_pos: Pos) -> Result<Vec<String>, Diagnostic> {
    match t {
        [] => Err(Diagnostic::new(at_pos, "expected a type list or `-`")),
        [one] if one.text == "-" => Ok(Vec::new()),
        many => many.iter().map(|x| identifier(x, "type label")).collect(),
    }
}

/// Parse `.gptc` text.
pub fn parse_circuit(text: &str) -> Result<CircuitDocument, Vec<Diagnostic>> {
    let mut p = Parser {
        theory: None,
        doc: CircuitDocument::new(TheoryKind::Quantum),
        diags: Vec::new(),
        pending_default: Vec::new(),
    };
    for (i, line) in text.split('\n').enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        match tokenize(line, i + 1) {
            Ok(tokens) if tokens.is_empty() => {}
            Ok(tokens) => {
                if let Err(d) = p.statement(&tokens) {
                    p.diags.push(d);
                }
            }
            Err(d) => p.diags.push(d),
        }
    }
    match p.theory {
        None => p.diags.insert(0, Diagnostic::new(Pos::start(), "missing `theory` declaration")),
        Some(kind) => {
            for (label, given) in &p.pending_default {
                if !given {
                    if let Some(spec) = p.doc.types.get_mut(label) {
                        spec.kind = kind.default_system_kind();
                    }
                }
            }
        }
    }
    if p.diags.is_empty() {
        p.diags = check_document(&p.doc);
    }
    if p.diags.is_empty() {
        Ok(p.doc)
    } else {
        p.diags.sort_by_key(|d| (d.line, d.column));
        Err(p.diags)
    }
}

/// Parse raw bytes; invalid UTF-8 is reported at its position.
pub fn parse_bytes(bytes: &[u8]) -> Result<CircuitDocument, Vec<Diagnostic>> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_circuit(text),
        Err(e) => {
            let valid = std::str::from_utf8(&bytes[..e.valid_up_to()]).expect("valid prefix");
            let line = valid.matches('\n').count() + 1;
            let column = valid.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
            Err(vec![Diagnostic::new(Pos::new(line, column), "invalid UTF-8")])
        }
    }
}

fn pos_or_start(map: &BTreeMap<String, Pos>, key: &str) -> Pos {
    map.get(key).copied().unwrap_or_else(Pos::start)
}

/// Checks that need the whole document: references, gate names and
/// argument counts, port ranges.
pub(super) fn check_document(doc: &CircuitDocument) -> Vec<Diagnostic> {
    let src: &SourceMap = &doc.source;
    let mut diags = Vec::new();
    for (label, spec) in &doc.types {
        let pos = pos_or_start(&src.types, label);
        if !is_identifier(label) {
            diags.push(Diagnostic::new(pos, format!("`{label}` is not a valid type label")));
        }
        if spec.n == 0 || spec.n > MAX_TYPE_N {
            diags.push(Diagnostic::new(pos, format!("N={} is outside 1..={MAX_TYPE_N}", spec.n)));
        }
        if !doc.theory.allows(spec.kind) {
            diags.push(Diagnostic::new(
                pos,
                format!("{} types are not allowed in the {} theory", spec.kind, doc.theory),
            ));
        }
    }
    for (id, op) in &doc.operations {
        let pos = pos_or_start(&src.operations, id);
        if !is_identifier(id) {
            diags.push(Diagnostic::new(pos, format!("`{id}` is not a valid operation id")));
        }
        for t in op.inputs.iter().chain(&op.outputs) {
            if !doc.types.contains_key(t) {
                diags.push(Diagnostic::new(pos, format!("undeclared type `{t}` in operation `{id}`")));
            }
        }
        let gpos = pos_or_start(&src.gates, id);
        match gates::lookup(&op.gate.name) {
            None => diags.push(Diagnostic::new(gpos, format!("unknown gate `{}`", op.gate.name))),
            Some(spec) => {
                let family_ok = !matches!(
                    (spec.family, doc.theory),
                    (Family::Classical, TheoryKind::Quantum) | (Family::Quantum, TheoryKind::Classical)
                );
                if !family_ok {
                    diags.push(Diagnostic::new(
                        gpos,
                        format!("gate `{}` is not available in the {} theory", spec.name, doc.theory),
                    ));
                } else if !spec.accepts_arg_count(op.gate.args.len()) {
                    let expected = match spec.max_args {
                        Some(m) if m == spec.min_args => format!("{m}"),
                        Some(m) => format!("{}..={m}", spec.min_args),
                        None => format!("at least {}", spec.min_args),
                    };
                    diags.push(Diagnostic::new(
                        gpos,
                        format!(
                            "gate `{}` takes {expected} argument(s), got {}",
                            spec.name,
                            op.gate.args.len()
                        ),
                    ));
                }
            }
        }
        if op.outcomes == Some(0) {
            diags.push(Diagnostic::new(gpos, "outcomes must be positive"));
        }
    }
    let port_ok = |op: &str, direction: Direction, port: usize| -> Result<(), String> {
        let decl = doc
            .operations
            .get(op)
            .ok_or_else(|| format!("unknown operation `{op}`"))?;
        let n = match direction {
            Direction::Input => decl.inputs.len(),
            Direction::Output => decl.outputs.len(),
        };
        if port >= n {
            return Err(format!("`{op}` has no port {direction}{port} ({n} {direction}put port(s))"));
        }
        Ok(())
    };
    for (id, w) in &doc.wires {
        let pos = pos_or_start(&src.wires, id);
        if !is_identifier(id) {
            diags.push(Diagnostic::new(pos, format!("`{id}` is not a valid wire id")));
        }
        for (end, direction) in [(&w.from, Direction::Output), (&w.to, Direction::Input)] {
            if let Err(m) = port_ok(&end.0, direction, end.1) {
                diags.push(Diagnostic::new(pos, format!("wire `{id}`: {m}")));
            }
        }
    }
    for addr in &doc.closures {
        let pos = src.closures.get(addr).copied().unwrap_or_else(Pos::start);
        if let Err(m) = port_ok(&addr.op, addr.direction, addr.port) {
            diags.push(Diagnostic::new(pos, format!("close: {m}")));
        }
    }
    let apos = src.assign.unwrap_or_else(Pos::start);
    for op in doc.assign.keys() {
        if !doc.operations.contains_key(op) {
            diags.push(Diagnostic::new(apos, format!("assign: unknown operation `{op}`")));
        }
    }
    diags
}
