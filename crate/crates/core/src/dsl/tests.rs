use super::*;
use crate::circuit::{complete_foliation, layer_decomposition, OpId};
use crate::engine::{evaluate_circuit, OutcomeAssignment};

const TWO_LINES: &str = "theory classical
type bit N=2
op P : - -> bit gate=set(0)
op E : bit -> - gate=trace
wire w P.out0 -> E.in0
";

#[test]
fn small_document() {
    let doc = parse_circuit(TWO_LINES).unwrap();
    assert_eq!(doc.operations.len(), 2);
    let c = compile(&doc).unwrap();
    let p = evaluate_circuit(&c.model, &OutcomeAssignment::new(), &c.theory, None).unwrap();
    assert!((p - 1.0).abs() < 1e-15);
}

#[test]
fn self_loop_is_reported_with_position() {
    let text = "theory classical\ntype bit N=2\nop A : bit -> bit gate=id\nwire w1 A.out0 -> A.in0\n";
    let doc = parse_circuit(text).unwrap();
    let diags = compile(&doc).unwrap_err();
    assert!(diags.iter().any(|d| d.message.contains("loop") && d.line == 3), "{diags:?}");
}

#[test]
fn six_operation_example() {
    let text = "theory classical
type t N=2
op alpha : - -> t t gate=matrix([[0.25], [0.25], [0.25], [0.25]])
op beta : - -> t t gate=matrix([[1], [0], [0], [0]])
op delta : t -> t gate=flip(0.5)
op gamma : t t -> t gate=matrix([[1, 0, 0, 1], [0, 1, 1, 0]])
op epsilon : t t -> t gate=matrix([[1, 0, 0, 1], [0, 1, 1, 0]])
op zeta : t t -> - gate=trace
wire a alpha.out0 -> delta.in0
wire b alpha.out1 -> gamma.in0
wire c beta.out0 -> gamma.in1
wire d beta.out1 -> epsilon.in1
wire e gamma.out0 -> epsilon.in0
wire f delta.out0 -> zeta.in0
wire g epsilon.out0 -> zeta.in1
";
    let c = compile(&parse_circuit(text).unwrap()).unwrap();
    let f = complete_foliation(&c.circuit).unwrap();
    let layers = layer_decomposition(&c.circuit, &f).unwrap();
    let ops: Vec<Vec<&str>> = layers
        .iter()
        .map(|l| l.operations.iter().map(OpId::as_str).collect())
        .collect();
    assert_eq!(
        ops,
        vec![
            vec!["alpha", "beta"],
            vec!["delta"],
            vec!["gamma"],
            vec!["epsilon"],
            vec!["zeta"]
        ]
    );
    let p = evaluate_circuit(&c.model, &OutcomeAssignment::new(), &c.theory, None).unwrap();
    assert!((p - 1.0).abs() < 1e-12);
}

#[test]
fn canonical_round_trip() {
    let text = "# a comment
theory quantum
type q N=2   # trailing comment
op M : q -> - gate=measure_z()
op P : - -> q gate=prep_ket([0.1, [0.3, -0.7]])
wire a P.out0 -> M.in0
assign M=1
";
    let doc = parse_circuit(text).unwrap();
    let canon = serialize_circuit(&doc);
    assert!(!canon.contains('#'));
    let again = parse_circuit(&canon).unwrap();
    assert_eq!(again, doc);
    assert_eq!(serialize_circuit(&again), canon);
    assert!(canon.starts_with("theory quantum\ntype q N=2\nop M : q -> - gate=measure_z\n"));
}

#[test]
fn floats_survive_bit_for_bit() {
    let xs = [0.1, 1.0 / 3.0, 2.0_f64.sqrt() / 7.0, 1e-300, -0.0, 5e-324];
    let args: Vec<String> = xs.iter().map(|x| format!("{x:e}")).collect();
    let text = format!(
        "theory classical\ntype bit N=2\nop P : - -> bit gate=dist([{}])\n",
        args[..2].join(", ")
    );
    let doc = parse_circuit(&text).unwrap();
    let back = parse_circuit(&serialize_circuit(&doc)).unwrap();
    assert_eq!(doc, back);
    for x in xs {
        let v = vec![serde_json::json!(x)];
        let s = format_args(&v);
        let parsed: f64 = serde_json::from_str(&s).unwrap();
        assert_eq!(parsed.to_bits(), x.to_bits(), "{s}");
    }
}

#[test]
fn hybrid_types_keep_their_kind() {
    let text = "theory hybrid\ntype q N=2\ntype c N=2 kind=classical\nop M : q -> c gate=measure_z outcomes=1\nop P : - -> q gate=prep_ket([1, 0])\nop R : c -> - gate=readout\nwire a P.out0 -> M.in0\nwire b M.out0 -> R.in0\n";
    let doc = parse_circuit(text).unwrap();
    assert_eq!(doc.types["c"].kind, crate::theory::SystemKind::Classical);
    let canon = serialize_circuit(&doc);
    assert!(canon.contains("type c N=2 kind=classical\ntype q N=2\n"));
    let c = compile(&doc).unwrap();
    let p = evaluate_circuit(&c.model, &OutcomeAssignment::parse("R=0").unwrap(), &c.theory, None)
        .unwrap();
    assert!((p - 1.0).abs() < 1e-12);
}

#[test]
fn diagnostics_carry_positions() {
    let cases: &[(&str, usize, usize)] = &[
        ("type q N=2\n", 1, 1),
        ("theory quantum\ntype q N=0\n", 2, 10),
        ("theory quantum\ntype q N=2\nop A : q -> q gate=nope\n", 3, 15),
        ("theory quantum\ntype q N=2\nop A : q -> q gate=depolarize\n", 3, 15),
        ("theory quantum\ntype q N=2\ntype q N=3\n", 3, 6),
        ("theory quantum\nfoo bar\n", 2, 1),
        ("theory quantum\ntype q N=2\nop A : q -> q gate=unitary([[1, 0], [0, 1]\n", 3, 28),
        ("theory quantum\ntype q N=2\nop A : - -> q gate=prep_ket([1, 0,])\n", 3, 35),
        ("theory classical\ntype q N=2\nop A : q -> q gate=h\n", 3, 15),
        ("theory quantum\ntype q N=2\nwire w A.out0 -> B.in0\n", 3, 6),
    ];
    for (text, line, column) in cases {
        let diags = parse_circuit(text).unwrap_err();
        assert!(!diags.is_empty());
        assert_eq!((diags[0].line, diags[0].column), (*line, *column), "{text:?}: {diags:?}");
    }
}

#[test]
fn invalid_utf8_is_positioned() {
    let diags = parse_bytes(b"theory quantum\nty\xffpe").unwrap_err();
    assert_eq!((diags[0].line, diags[0].column), (2, 3));
}

#[test]
fn json_round_trip() {
    let doc = parse_circuit(TWO_LINES).unwrap();
    let json = to_json(&doc);
    assert!(json.contains("\"schema\": 1"));
    assert_eq!(from_json(&json).unwrap(), doc);
    assert_eq!(parse_any(&json).unwrap(), doc);
    assert!(from_json("{\"schema\": 2}").is_err());
    assert!(from_json("{").is_err());
}

#[test]
fn invalid_inline_matrix_is_rejected() {
    let text = "theory quantum\ntype q N=2\nop A : q -> q gate=matrix([[2,0,0,0],[0,2,0,0],[0,0,2,0],[0,0,0,2]])\nop P : - -> q gate=prep_ket([1,0])\nop M : q -> - gate=trace\nwire a P.out0 -> A.in0\nwire b A.out0 -> M.in0\n";
    let diags = compile(&parse_circuit(text).unwrap()).unwrap_err();
    assert_eq!(diags[0].line, 3);
    assert!(diags[0].message.contains("not a valid"), "{diags:?}");
}
