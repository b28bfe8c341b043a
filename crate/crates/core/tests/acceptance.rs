//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
//! fails. Built with `harness = false`, so `cargo test --test acceptance`
//! prints the lines without `--nocapture`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use gptc_core::checks::{self, check_rng, CheckResult};
use gptc_core::dsl::{compile, parse_any, parse_bytes, parse_circuit, serialize_circuit, to_json, Diagnostic};
use gptc_core::gen::{mixed_theory, random_document, GenConfig};
use gptc_core::random::{SeededRng, DEFAULT_SEED};
use gptc_core::theory::{composite_counting_check, CountingModel, TheoryKind};
use rand::Rng;

type Criterion = (&'static str, Option<Duration>, Box<dyn Fn() -> Verdict>);

struct Verdict {
    ok: bool,
    summary: String,
}

fn from_check(r: CheckResult, keys: &[&str]) -> Verdict {
    let mut parts: Vec<String> = keys
        .iter()
        .filter_map(|k| r.measured.get(*k).map(|v| format!("{k}={v}")))
        .collect();
    if !r.passed() {
        parts.push(r.detail.clone());
    }
    Verdict {
        ok: r.passed(),
        summary: parts.join(" "),
    }
}

fn all(vs: Vec<Verdict>) -> Verdict {
    Verdict {
        ok: vs.iter().all(|v| v.ok),
        summary: vs.into_iter().map(|v| v.summary).collect::<Vec<_>>().join("; "),
    }
}

fn counting() -> Verdict {
    let table = from_check(checks::counting_table(), &[]);
    let flagged = [
        (CountingModel::Classical, true),
        (CountingModel::Quantum, true),
        (CountingModel::RealQuantum, true),
        (CountingModel::QuaternionicQuantum, false),
    ]
    .iter()
    .all(|&(m, ok)| composite_counting_check(m, 2, 2).bound_satisfied == ok);
    let q = composite_counting_check(CountingModel::QuaternionicQuantum, 2, 2);
    Verdict {
        ok: table.ok && flagged,
        summary: format!("{q}{}", if flagged { "" } else { "; violation not flagged" }),
    }
}

fn foliations(rng: &mut SeededRng) -> Verdict {
    let r = checks::foliation_independence(rng, 200);
    let multi = r.measured["circuits_with_several_foliations"].as_u64().unwrap_or(0);
    let mut v = from_check(r, &["circuits", "circuits_with_several_foliations", "foliations", "max_spread"]);
    if multi == 0 {
        v.ok = false;
        v.summary.push_str(" no circuit had more than one foliation");
    }
    v
}

fn oracles(seed: u64) -> Verdict {
    let mut a = check_rng(seed, 3);
    let mut b = check_rng(seed, 4);
    all(vec![
        from_check(checks::classical_oracle(&mut a, 200), &["circuits", "evaluations", "max_deviation"]),
        from_check(
            checks::quantum_oracle(&mut b, 100, TheoryKind::Quantum),
            &["circuits", "evaluations", "max_deviation"],
        ),
    ])
}

fn round_trips(rng: &mut SeededRng, count: usize) -> Result<usize, String> {
    for i in 0..count {
        let mut cfg = GenConfig::new(mixed_theory(i));
        cfg.max_ops = rng.random_range(2..=8);
        let doc = random_document(rng, &cfg);
        let text = serialize_circuit(&doc);
        let back = parse_circuit(&text).map_err(|d| format!("document {i} did not reparse: {d:?}"))?;
        if back != doc || serialize_circuit(&back) != text {
            return Err(format!("document {i} changed on round trip:\n{text}"));
        }
        if parse_any(&to_json(&doc)).as_ref() != Ok(&doc) {
            return Err(format!("document {i} changed on JSON round trip"));
        }
    }
    Ok(count)
}

fn mutate(rng: &mut SeededRng, mut bytes: Vec<u8>) -> Vec<u8> {
    const ALPHABET: &[u8] = b" \n\t#=:,.-()[]{}\"'>01239eE+abcoptwqN\xff\xc3";
    for _ in 0..rng.random_range(1..=4) {
        let at = rng.random_range(0..=bytes.len());
        match rng.random_range(0..4) {
            0 if at < bytes.len() => {
                bytes.remove(at);
            }
            1 if at < bytes.len() => bytes[at] = ALPHABET[rng.random_range(0..ALPHABET.len())],
            2 => bytes.insert(at, rng.random()),
            _ => {
                let end = (at + rng.random_range(0..16)).min(bytes.len());
                bytes.drain(at..end);
            }
        }
    }
    bytes
}

fn positioned(diags: &[Diagnostic]) -> bool {
    !diags.is_empty() && diags.iter().all(|d| d.line >= 1 && d.column >= 1)
}

/// Feed one input through every entry point; `Err` describes a problem.
fn probe(bytes: &[u8]) -> Result<(), String> {
    let outcome = catch_unwind(AssertUnwindSafe(|| {
        let mut ok = match parse_bytes(bytes) {
            Ok(doc) => compile(&doc).err().is_none_or(|d| positioned(&d)),
            Err(d) => positioned(&d),
        };
        if let Ok(text) = std::str::from_utf8(bytes) {
            ok &= match parse_any(text) {
                Ok(doc) => compile(&doc).err().is_none_or(|d| positioned(&d)),
                Err(d) => positioned(&d),
            };
        }
        ok
    }));
    match outcome {
        Ok(true) => Ok(()),
        Ok(false) => Err(format!("unpositioned diagnostic for {:?}", String::from_utf8_lossy(bytes))),
        Err(_) => Err(format!("panic on {:?}", String::from_utf8_lossy(bytes))),
    }
}

fn dsl(rng: &mut SeededRng) -> Verdict {
    let docs = match round_trips(rng, 500) {
        Ok(n) => n,
        Err(e) => {
            return Verdict {
                ok: false,
                summary: e,
            }
        }
    };
    let seeds: Vec<Vec<u8>> = (0..50)
        .map(|i| {
            let doc = random_document(rng, &GenConfig::new(mixed_theory(i)));
            if i % 5 == 0 {
                to_json(&doc).into_bytes()
            } else {
                serialize_circuit(&doc).into_bytes()
            }
        })
        .collect();
    let prev = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    let mut problems = Vec::new();
    let total = 100_000;
    for i in 0..total {
        let input = if i % 2 == 0 {
            let len = rng.random_range(0..256);
            (0..len).map(|_| rng.random()).collect()
        } else {
            let base = seeds[rng.random_range(0..seeds.len())].clone();
            mutate(rng, base)
        };
        if let Err(e) = probe(&input) {
            problems.push(e);
        }
    }
    std::panic::set_hook(prev);
    Verdict {
        ok: problems.is_empty(),
        summary: match problems.first() {
            None => format!("{docs} documents round-tripped, {total} fuzz inputs, 0 problems"),
            Some(p) => format!("{} problem(s) in {total} fuzz inputs, first: {p}", problems.len()),
        },
    }
}

fn main() {
    let seed = DEFAULT_SEED;
    let criteria: Vec<Criterion> = vec![
        ("counting table", Some(Duration::from_secs(1)), Box::new(counting)),
        (
            "foliation independence",
            Some(Duration::from_secs(60)),
            Box::new(move || foliations(&mut check_rng(seed, 0))),
        ),
        ("oracle equivalence", Some(Duration::from_secs(180)), Box::new(move || oracles(seed))),
        (
            "quantum embedding",
            None,
            Box::new(move || {
                from_check(
                    checks::quantum_embedding(&mut check_rng(seed, 6), 100),
                    &["max_round_trip_error", "max_composition_error"],
                )
            }),
        ),
        (
            "normalization",
            None,
            Box::new(move || {
                from_check(checks::normalization(&mut check_rng(seed, 1), 100), &["circuits", "max_deviation"])
            }),
        ),
        (
            "factorization",
            None,
            Box::new(move || {
                from_check(
                    checks::factorization(&mut check_rng(seed, 9)),
                    &["max_product_violation", "entangled_violation"],
                )
            }),
        ),
        (
            "disjoint independence",
            None,
            Box::new(move || {
                from_check(
                    checks::disjoint_independence(&mut check_rng(seed, 10), 100),
                    &["pairs", "joint_outcomes", "max_deviation"],
                )
            }),
        ),
        (
            "compression",
            None,
            Box::new(move || {
                from_check(
                    checks::compression(&mut check_rng(seed, 11)),
                    &["classical-2-k", "classical-3-k", "quantum-2-k", "quantum-3-k", "max_held_out_error"],
                )
            }),
        ),
        (
            "span ranks",
            None,
            Box::new(move || {
                from_check(
                    checks::span_ranks(&mut check_rng(seed, 8)),
                    &["classical", "quantum", "real-quantum", "real-quantum-k_ab"],
                )
            }),
        ),
        ("dsl round trip and fuzz", None, Box::new(move || dsl(&mut check_rng(seed, 13)))),
    ];

    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut v = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Verdict {
            ok: false,
            summary: "panicked".into(),
        });
        let elapsed = start.elapsed();
        if let Some(limit) = limit {
            if elapsed > *limit {
                v.ok = false;
                v.summary.push_str(&format!("; exceeded {}s", limit.as_secs()));
            }
        }
        failed += usize::from(!v.ok);
        println!(
            "{} {:>2} {name} ({:.2}s): {}",
            if v.ok { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64(),
            v.summary
        );
    }
    println!("{} criteria, {failed} failed, seed {seed}", criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
