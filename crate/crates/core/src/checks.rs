//! The checks run by `gptc check`: randomized property checks against
//! independent references plus a few fixed reproductions.
//!
//! Each check owns a random stream derived from the seed and its position in
//! [`CHECKS`], so results do not depend on which other checks run or in what
//! order.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::circuit::{enumerate_complete_foliations, SystemType};
use crate::dsl::{compile, CompiledCircuit};
use crate::engine::{
    check_disjoint_independence, check_factorization, check_uncorrelatability,
    compress_to_fiducials, evaluate_circuit, theorems::fiducial_effects, CheckStatus,
    CircuitModel, OutcomeAssignment,
};
use crate::gen::{mixed_theory, random_document, GenConfig};
use crate::linalg::{c, cmax_abs_diff, max_abs_diff, CMatrix, RMatrix, PROB_TOL};
use crate::oracle::reference_probability;
use crate::random::{self, SeededRng};
use crate::theory::{
    composite_counting_check, product_state_span_rank, quantum::projector, CountingModel,
    OperatorBasis, Relation, StandardTheory, TheoryKind,
};

/// Circuits per randomized check at the default budget.
pub const DEFAULT_SIZE: usize = 100;

/// Complete foliations compared per circuit.
pub const FOLIATION_LIMIT: usize = 64;

/// Joint outcomes summed per circuit in the normalization checks.
const MAX_SUMMED_ASSIGNMENTS: u128 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Foliation,
    Theorems,
    Oracles,
    All,
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Foliation => "foliation",
            Suite::Theorems => "theorems",
            Suite::Oracles => "oracles",
            Suite::All => "all",
        })
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "foliation" => Ok(Suite::Foliation),
            "theorems" => Ok(Suite::Theorems),
            "oracles" => Ok(Suite::Oracles),
            "all" => Ok(Suite::All),
            _ => Err(format!(
                "unknown suite `{s}` (expected foliation, theorems, oracles or all)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub suite: Suite,
    pub name: String,
    pub status: CheckStatus,
    /// Measured quantities, keyed by name.
    pub measured: Map<String, Value>,
    /// Tolerance the main measurement is held to; `None` for exact checks.
    pub tolerance: Option<f64>,
    pub detail: String,
    /// Wall-clock time; left out of reports unless asked for.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<f64>,
}

impl CheckResult {
    pub fn new(name: &str) -> Self {
        CheckResult {
            suite: Suite::All,
            name: name.to_string(),
            status: CheckStatus::Pass,
            measured: Map::new(),
            tolerance: None,
            detail: String::new(),
            runtime_ms: None,
        }
    }

    pub fn measure(&mut self, key: &str, v: impl Into<Value>) {
        self.measured.insert(key.to_string(), v.into());
    }

    pub fn fail(&mut self, detail: impl Into<String>) {
        self.status = CheckStatus::Fail;
        if self.detail.is_empty() {
            self.detail = detail.into();
        }
    }

    /// Fail unless `value <= tol`.
    pub fn bound(&mut self, what: &str, value: f64, tol: f64) {
        self.tolerance = Some(tol);
        if value.is_nan() || value > tol {
            self.fail(format!("{what} {value:e} exceeds {tol:e}"));
        }
    }

    pub fn passed(&self) -> bool {
        self.status != CheckStatus::Fail
    }
}

type CheckFn = fn(&mut SeededRng, usize) -> CheckResult;

pub struct CheckSpec {
    pub suite: Suite,
    pub name: &'static str,
    run: CheckFn,
}

pub const CHECKS: &[CheckSpec] = &[
    CheckSpec { suite: Suite::Foliation, name: "foliation-independence", run: |r, s| foliation_independence(r, 2 * s) },
    CheckSpec { suite: Suite::Foliation, name: "normalization", run: |r, s| normalization(r, s) },
    CheckSpec { suite: Suite::Foliation, name: "coarse-graining", run: |r, s| coarse_graining(r, s) },
    CheckSpec { suite: Suite::Oracles, name: "classical-enumeration", run: |r, s| classical_oracle(r, 2 * s) },
    CheckSpec { suite: Suite::Oracles, name: "density-matrix", run: |r, s| quantum_oracle(r, s, TheoryKind::Quantum) },
    CheckSpec { suite: Suite::Oracles, name: "hybrid-density-matrix", run: |r, s| quantum_oracle(r, s.div_ceil(2), TheoryKind::Hybrid) },
    CheckSpec { suite: Suite::Oracles, name: "quantum-embedding", run: |r, s| quantum_embedding(r, s) },
    CheckSpec { suite: Suite::Theorems, name: "counting-table", run: |_, _| counting_table() },
    CheckSpec { suite: Suite::Theorems, name: "span-ranks", run: |r, _| span_ranks(r) },
    CheckSpec { suite: Suite::Theorems, name: "factorization", run: |r, _| factorization(r) },
    CheckSpec { suite: Suite::Theorems, name: "disjoint-independence", run: |r, s| disjoint_independence(r, s) },
    CheckSpec { suite: Suite::Theorems, name: "compression", run: |r, _| compression(r) },
    CheckSpec { suite: Suite::Theorems, name: "uncorrelatability", run: |r, s| uncorrelatability(r, s.min(20)) },
];

/// The random stream of check number `index`.
pub fn check_rng(seed: u64, index: usize) -> SeededRng {
    let mut rng = random::seeded(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

pub fn selected(suite: Suite) -> Vec<(usize, &'static CheckSpec)> {
    CHECKS
        .iter()
        .enumerate()
        .filter(|(_, c)| suite == Suite::All || c.suite == suite)
        .collect()
}

/// Run the checks of `suite` in parallel; results come back in table order.
pub fn run_suite(suite: Suite, seed: u64, size: usize) -> Vec<CheckResult> {
    let specs = selected(suite);
    std::thread::scope(|scope| {
        let handles: Vec<_> = specs
            .iter()
            .map(|&(i, spec)| {
                scope.spawn(move || {
                    let mut rng = check_rng(seed, i);
                    let start = Instant::now();
                    let mut r = (spec.run)(&mut rng, size);
                    r.runtime_ms = Some(start.elapsed().as_secs_f64() * 1e3);
                    r.suite = spec.suite;
                    r.name = spec.name.to_string();
                    r
                })
            })
            .collect();
        handles
            .into_iter()
            .zip(&specs)
            .map(|(h, (_, spec))| {
                h.join().unwrap_or_else(|_| {
                    let mut r = CheckResult::new(spec.name);
                    r.suite = spec.suite;
                    r.fail("check panicked");
                    r
                })
            })
            .collect()
    })
}

/// Generate and compile `count` documents.
pub fn random_circuits(
    rng: &mut SeededRng,
    count: usize,
    config: impl Fn(usize) -> GenConfig,
) -> Result<Vec<CompiledCircuit>, String> {
    (0..count)
        .map(|i| {
            let doc = random_document(rng, &config(i));
            compile(&doc).map_err(|d| {
                format!(
                    "generated circuit failed to compile: {}\n{}",
                    crate::dsl::render_diagnostics(&d),
                    crate::dsl::serialize_circuit(&doc)
                )
            })
        })
        .collect()
}

/// A uniformly random joint outcome.
pub fn random_assignment<R: Rng + ?Sized>(rng: &mut R, model: &CircuitModel) -> OutcomeAssignment {
    let mut a = OutcomeAssignment::new();
    for op in model.circuit().operations() {
        let i = rng.random_range(0..op.outcomes.len());
        a.set(op.id.clone(), op.outcomes[i].clone());
    }
    a
}

/// Every joint outcome when there are at most `limit`, else `limit` random
/// ones.
fn some_assignments(rng: &mut SeededRng, model: &CircuitModel, limit: usize) -> Vec<OutcomeAssignment> {
    if model.assignment_count() <= limit as u128 {
        model.assignments().collect()
    } else {
        (0..limit).map(|_| random_assignment(rng, model)).collect()
    }
}

/// Largest spread of probabilities across all complete foliations.
pub fn foliation_independence(rng: &mut SeededRng, count: usize) -> CheckResult {
    let mut r = CheckResult::new("foliation-independence");
    let circuits = match random_circuits(rng, count, |i| GenConfig {
        max_ops: 8,
        ..GenConfig::new(mixed_theory(i))
    }) {
        Ok(c) => c,
        Err(e) => {
            r.fail(e);
            return r;
        }
    };
    let (mut foliations, mut evaluations, mut multi) = (0usize, 0usize, 0usize);
    let mut spread: f64 = 0.0;
    for c in &circuits {
        let fs = match enumerate_complete_foliations(&c.circuit, FOLIATION_LIMIT) {
            Ok(fs) => fs,
            Err(e) => {
                r.fail(e.to_string());
                return r;
            }
        };
        foliations += fs.len();
        multi += usize::from(fs.len() > 1);
        for a in some_assignments(rng, &c.model, 4) {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for f in &fs {
                match evaluate_circuit(&c.model, &a, &c.theory, Some(f)) {
                    Ok(p) => {
                        lo = lo.min(p);
                        hi = hi.max(p);
                        evaluations += 1;
                    }
                    Err(e) => {
                        r.fail(format!("{a}: {e}"));
                        return r;
                    }
                }
            }
            spread = spread.max(hi - lo);
        }
    }
    r.measure("circuits", circuits.len());
    r.measure("circuits_with_several_foliations", multi);
    r.measure("foliations", foliations);
    r.measure("evaluations", evaluations);
    r.measure("max_spread", spread);
    r.bound("spread", spread, PROB_TOL);
    r
}

fn outcome_sum(c: &CompiledCircuit) -> Result<Option<f64>, String> {
    if c.model.assignment_count() > MAX_SUMMED_ASSIGNMENTS {
        return Ok(None);
    }
    let f = crate::circuit::complete_foliation(&c.circuit).map_err(|e| e.to_string())?;
    let mut total = 0.0;
    for a in c.model.assignments() {
        total += evaluate_circuit(&c.model, &a, &c.theory, Some(&f)).map_err(|e| e.to_string())?;
    }
    Ok(Some(total))
}

/// Outcome sums of circuits made only of normalized parts equal one.
pub fn normalization(rng: &mut SeededRng, count: usize) -> CheckResult {
    let mut r = CheckResult::new("normalization");
    let circuits = match random_circuits(rng, count, |i| GenConfig {
        normalized: true,
        ..GenConfig::new(mixed_theory(i))
    }) {
        Ok(c) => c,
        Err(e) => {
            r.fail(e);
            return r;
        }
    };
    let (mut summed, mut worst) = (0usize, 0.0f64);
    for c in &circuits {
        match outcome_sum(c) {
            Ok(Some(total)) => {
                summed += 1;
                worst = worst.max((total - 1.0).abs());
            }
            Ok(None) => {}
            Err(e) => {
                r.fail(e);
                return r;
            }
        }
    }
    r.measure("circuits", summed);
    r.measure("max_deviation", worst);
    r.bound("|sum - 1|", worst, PROB_TOL);
    r
}

/// Outcome sums equal the probability of the coarse-grained circuit.
pub fn coarse_graining(rng: &mut SeededRng, count: usize) -> CheckResult {
    let mut r = CheckResult::new("coarse-graining");
    let circuits = match random_circuits(rng, count, |i| GenConfig::new(mixed_theory(i))) {
        Ok(c) => c,
        Err(e) => {
            r.fail(e);
            return r;
        }
    };
    let (mut summed, mut worst) = (0usize, 0.0f64);
    for c in &circuits {
        let merged = c
            .model
            .coarse_grained()
            .and_then(|m| evaluate_circuit(&m, &OutcomeAssignment::new(), &c.theory, None));
        match (outcome_sum(c), merged) {
            (Ok(Some(total)), Ok(p)) => {
                summed += 1;
                worst = worst.max((total - p).abs());
            }
            (Ok(None), _) => {}
            (Err(e), _) => {
                r.fail(e);
                return r;
            }
            (_, Err(e)) => {
                r.fail(e.to_string());
                return r;
            }
        }
    }
    r.measure("circuits", summed);
    r.measure("max_deviation", worst);
    r.bound("|sum - coarse|", worst, PROB_TOL);
    r
}

fn oracle_comparison(
    r: &mut CheckResult,
    rng: &mut SeededRng,
    circuits: &[CompiledCircuit],
    tol: f64,
) {
    let (mut evaluations, mut worst) = (0usize, 0.0f64);
    let mut worst_at = String::new();
    for c in circuits {
        for a in some_assignments(rng, &c.model, 8) {
            let engine = evaluate_circuit(&c.model, &a, &c.theory, None);
            let reference = reference_probability(&c.circuit, &c.theory, &c.processes, &a);
            match (engine, reference) {
                (Ok(p), Ok(q)) => {
                    evaluations += 1;
                    if (p - q).abs() > worst {
                        worst = (p - q).abs();
                        worst_at = format!("{a}: engine {p:e}, reference {q:e}");
                    }
                }
                (Err(e), _) | (_, Err(e)) => {
                    r.fail(format!("{a}: {e}"));
                    return;
                }
            }
        }
    }
    r.measure("circuits", circuits.len());
    r.measure("evaluations", evaluations);
    r.measure("max_deviation", worst);
    r.bound("deviation", worst, tol);
    if r.status == CheckStatus::Fail {
        r.detail = format!("{}; worst at {worst_at}", r.detail);
    }
}

/// Engine against exhaustive enumeration of classical wire values.
pub fn classical_oracle(rng: &mut SeededRng, count: usize) -> CheckResult {
    let mut r = CheckResult::new("classical-enumeration");
    match random_circuits(rng, count, |_| GenConfig::new(TheoryKind::Classical)) {
        Ok(cs) => oracle_comparison(&mut r, rng, &cs, 1e-12),
        Err(e) => r.fail(e),
    }
    r
}

/// Engine against direct density-matrix simulation (qubits, at most four
/// open at a time).
pub fn quantum_oracle(rng: &mut SeededRng, count: usize, kind: TheoryKind) -> CheckResult {
    let mut r = CheckResult::new("density-matrix");
    match random_circuits(rng, count, |_| GenConfig::new(kind)) {
        Ok(cs) => oracle_comparison(&mut r, rng, &cs, PROB_TOL),
        Err(e) => r.fail(e),
    }
    r
}

/// rho -> p -> rho round trips, and Z of a composite map is the product of
/// the parts' Z.
pub fn quantum_embedding(rng: &mut SeededRng, count: usize) -> CheckResult {
    let mut r = CheckResult::new("quantum-embedding");
    let mut round_trip: f64 = 0.0;
    let mut functor: f64 = 0.0;
    for n in 2..=4 {
        let b = OperatorBasis::quantum(n);
        for _ in 0..count {
            let rho = random::density(rng, n);
            round_trip = round_trip.max(cmax_abs_diff(&b.reconstruct(&b.embed(&rho)), &rho));
        }
        for _ in 0..count.div_ceil(10) {
            let m = rng.random_range(2..=4);
            let bm = OperatorBasis::quantum(m);
            let first = crate::theory::CpMap::from_kraus(n, m, &random::kraus(rng, n, m, 2));
            let second = crate::theory::CpMap::from_kraus(m, n, &random::kraus(rng, m, n, 3));
            let z1 = b.transfer_matrix(&bm, |x| first.apply(x));
            let z2 = bm.transfer_matrix(&b, |x| second.apply(x));
            let composed = first.then(&second);
            let z = b.transfer_matrix(&b, |x| composed.apply(x));
            functor = functor.max(max_abs_diff(&z, &(&z2 * &z1)));
        }
    }
    r.measure("densities", 3 * count);
    r.measure("max_round_trip_error", round_trip);
    r.measure("max_composition_error", functor);
    r.bound("round trip error", round_trip, PROB_TOL);
    r.bound("composition error", functor, PROB_TOL);
    r
}

/// The 2x2 counting table: classical and quantum equal, real above,
/// quaternionic below the product.
pub fn counting_table() -> CheckResult {
    let mut r = CheckResult::new("counting-table");
    let expected = [
        (CountingModel::Classical, 4, 4, Relation::Equal),
        (CountingModel::Quantum, 16, 16, Relation::Equal),
        (CountingModel::RealQuantum, 10, 9, Relation::Greater),
        (CountingModel::QuaternionicQuantum, 28, 36, Relation::Less),
    ];
    let mut rows = Vec::new();
    for (model, k_ab, product, relation) in expected {
        let rep = composite_counting_check(model, 2, 2);
        if (rep.k_ab, rep.product, rep.relation) != (k_ab, product, relation) {
            r.fail(format!("{rep}"));
        }
        rows.push(json!({
            "model": model.to_string(),
            "k_ab": rep.k_ab,
            "k_a_k_b": rep.product,
            "relation": rep.relation.symbol(),
            "bound_satisfied": rep.bound_satisfied,
        }));
    }
    r.measure("table", rows);
    r
}

/// Rank of the span of product states in the composite state space.
pub fn span_ranks(rng: &mut SeededRng) -> CheckResult {
    let mut r = CheckResult::new("span-ranks");
    for (model, samples, expected) in [
        (CountingModel::Classical, 20, 4),
        (CountingModel::Quantum, 40, 16),
        (CountingModel::RealQuantum, 40, 9),
    ] {
        match product_state_span_rank(model, 2, 2, samples, rng) {
            Ok(k) => {
                r.measure(&model.to_string(), k);
                if k != expected {
                    r.fail(format!("{model}: rank {k}, expected {expected}"));
                }
            }
            Err(e) => r.fail(e.to_string()),
        }
    }
    r.measure("real-quantum-k_ab", 10);
    r
}

fn pair(label: &str) -> SystemType {
    SystemType::from_labels(&[label, label])
}

/// Product states with a pure first factor factorize over complete local
/// effect sets; a maximally entangled state does not.
pub fn factorization(rng: &mut SeededRng) -> CheckResult {
    let mut r = CheckResult::new("factorization");
    let run = |r: &mut CheckResult, rng: &mut SeededRng| -> crate::engine::Result<()> {
        let mut product_worst: f64 = 0.0;
        for n in 2..=3 {
            let q = StandardTheory::quantum(&[("q", n)])?;
            let one = SystemType::from_labels(&["q"]);
            let both = pair("q");
            let effects = fiducial_effects(&q, &one)?;
            for _ in 0..10 {
                let psi = projector(&random::pure_state(rng, n));
                let rho = random::density(rng, n);
                let joint = q.embed_state(&both, &psi.kronecker(&rho))?;
                let rep = check_factorization(&joint, &effects, &effects, &q)?;
                if rep.status != CheckStatus::Pass {
                    r.fail(format!("quantum N={n} product state: {:?}", rep.status));
                }
                product_worst = product_worst.max(rep.max_violation);
            }
            let cl = StandardTheory::classical(&[("c", n)])?;
            let c1 = SystemType::from_labels(&["c"]);
            let effects = fiducial_effects(&cl, &c1)?;
            for _ in 0..10 {
                let k = rng.random_range(0..n);
                let q = random::distribution(rng, n);
                let entries: Vec<f64> = (0..n)
                    .flat_map(|i| q.iter().map(move |y| if i == k { *y } else { 0.0 }))
                    .collect();
                let joint = crate::engine::StateVector::new(pair("c"), entries);
                let rep = check_factorization(&joint, &effects, &effects, &cl)?;
                if rep.status != CheckStatus::Pass {
                    r.fail(format!("classical N={n} product state: {:?}", rep.status));
                }
                product_worst = product_worst.max(rep.max_violation);
            }
        }
        let q = StandardTheory::quantum(&[("q", 2)])?;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = crate::linalg::CVector::from_vec(vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]);
        let joint = q.embed_state(&pair("q"), &projector(&bell))?;
        let effects = fiducial_effects(&q, &SystemType::from_labels(&["q"]))?;
        let rep = check_factorization(&joint, &effects, &effects, &q)?;
        r.measure("max_product_violation", product_worst);
        r.measure("entangled_violation", rep.max_violation);
        r.bound("product state violation", product_worst, PROB_TOL);
        if rep.max_violation <= 0.1 {
            r.fail(format!(
                "entangled state violation {:e} not above 0.1",
                rep.max_violation
            ));
        }
        Ok(())
    };
    if let Err(e) = run(&mut r, rng) {
        r.fail(e.to_string());
    }
    r
}

/// p(c1 with c2) = p(c1) p(c2) over every joint outcome.
pub fn disjoint_independence(rng: &mut SeededRng, count: usize) -> CheckResult {
    let mut r = CheckResult::new("disjoint-independence");
    let (mut checked, mut worst) = (0usize, 0.0f64);
    for i in 0..count {
        let cfg = GenConfig {
            max_ops: 4,
            ..GenConfig::new(mixed_theory(i))
        };
        let mut pick = || -> Result<CompiledCircuit, String> {
            loop {
                let c = random_circuits(rng, 1, |_| cfg.clone())?.pop().expect("one");
                if c.model.assignment_count() <= 24 {
                    return Ok(c);
                }
            }
        };
        let outcome = pick().and_then(|a| Ok((a, pick()?))).and_then(|(a, b)| {
            let theory = a.theory.merge(&b.theory).map_err(|e| e.to_string())?;
            check_disjoint_independence(&a.model, &b.model, &theory).map_err(|e| e.to_string())
        });
        match outcome {
            Ok(rep) => {
                checked += rep.assignments_checked;
                worst = worst.max(rep.max_deviation);
            }
            Err(e) => {
                r.fail(e);
                return r;
            }
        }
    }
    r.measure("pairs", count);
    r.measure("joint_outcomes", checked);
    r.measure("max_deviation", worst);
    r.bound("deviation", worst, PROB_TOL);
    r
}

/// Random effect-by-state probability tables, their fiducial rank and the
/// prediction of held-out states.
pub fn compression(rng: &mut SeededRng) -> CheckResult {
    let mut r = CheckResult::new("compression");
    let mut worst: f64 = 0.0;
    for quantum in [false, true] {
        for n in 2..=3 {
            let k = if quantum { n * n } else { n };
            let (effects, states, held) = (3 * k, 3 * k, 10);
            let table = |es: &[CMatrix], rhos: &[CMatrix]| {
                RMatrix::from_fn(es.len(), rhos.len(), |i, j| {
                    crate::linalg::trace(&(&es[i] * &rhos[j])).re
                })
            };
            let draw_state = |rng: &mut SeededRng| {
                if quantum {
                    random::density(rng, n)
                } else {
                    let p = random::distribution(rng, n);
                    CMatrix::from_diagonal(&crate::linalg::CVector::from_fn(n, |i, _| c(p[i], 0.0)))
                }
            };
            let es: Vec<CMatrix> = (0..effects)
                .map(|_| {
                    if quantum {
                        random::effect(rng, n)
                    } else {
                        CMatrix::from_diagonal(&crate::linalg::CVector::from_fn(n, |_, _| {
                            c(rng.random::<f64>(), 0.0)
                        }))
                    }
                })
                .collect();
            let train: Vec<CMatrix> = (0..states).map(|_| draw_state(rng)).collect();
            let test: Vec<CMatrix> = (0..held).map(|_| draw_state(rng)).collect();
            let name = format!("{}-{n}", if quantum { "quantum" } else { "classical" });
            let comp = match compress_to_fiducials(&table(&es, &train)) {
                Ok(comp) => comp,
                Err(e) => {
                    r.fail(format!("{name}: {e}"));
                    continue;
                }
            };
            r.measure(&format!("{name}-k"), comp.rank());
            if comp.rank() != k {
                r.fail(format!("{name}: K = {}, expected {k}", comp.rank()));
            }
            let full = table(&es, &test);
            let sel = full.select_rows(comp.selected.iter());
            match comp.predict(&sel) {
                Ok(pred) => worst = worst.max(max_abs_diff(&pred, &full)),
                Err(e) => r.fail(e.to_string()),
            }
        }
    }
    r.measure("max_held_out_error", worst);
    r.bound("held-out error", worst, 1e-8);
    r
}

/// Homogeneous states admit only uncorrelated extensions; heterogeneous
/// ones have a correlated one.
pub fn uncorrelatability(rng: &mut SeededRng, count: usize) -> CheckResult {
    let mut r = CheckResult::new("uncorrelatability");
    let run = |r: &mut CheckResult, rng: &mut SeededRng| -> crate::engine::Result<()> {
        let q = StandardTheory::quantum(&[("q", 2)])?;
        let cl = StandardTheory::classical(&[("c", 3)])?;
        let qs = SystemType::from_labels(&["q"]);
        let cs = SystemType::from_labels(&["c"]);
        let mut cases = 0;
        for i in 0..count {
            let pure = i % 2 == 0;
            let rho = if pure {
                projector(&random::pure_state(rng, 2))
            } else {
                random::density(rng, 2)
            };
            let state = q.embed_state(&qs, &rho)?;
            let rep = check_uncorrelatability(&state, &q, 3, rng)?;
            if rep.status != CheckStatus::Pass {
                r.fail(format!("quantum state {i}: homogeneous={}", rep.homogeneous));
            }
            let mut p = vec![0.0; 3];
            if pure {
                p[rng.random_range(0..3)] = 1.0;
            } else {
                p = random::distribution(rng, 3);
            }
            let state = crate::engine::StateVector::new(cs.clone(), p);
            let rep = check_uncorrelatability(&state, &cl, 3, rng)?;
            if rep.status != CheckStatus::Pass {
                r.fail(format!("classical state {i}: homogeneous={}", rep.homogeneous));
            }
            cases += 2;
        }
        r.measure("states", cases);
        Ok(())
    };
    if let Err(e) = run(&mut r, rng) {
        r.fail(e.to_string());
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_parse() {
        assert_eq!("all".parse::<Suite>().unwrap(), Suite::All);
        assert!("everything".parse::<Suite>().is_err());
        assert_eq!(selected(Suite::All).len(), CHECKS.len());
        assert!(selected(Suite::Oracles).iter().all(|(_, c)| c.suite == Suite::Oracles));
    }

    #[test]
    fn small_suite_passes_and_is_deterministic() {
        let a = run_suite(Suite::All, 7, 6);
        for r in &a {
            assert!(r.passed(), "{}: {}", r.name, r.detail);
        }
        let b = run_suite(Suite::All, 7, 6);
        let strip = |rs: &[CheckResult]| {
            rs.iter()
                .map(|r| CheckResult {
                    runtime_ms: None,
                    ..r.clone()
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a), strip(&b));
    }

    #[test]
    fn failing_bound_is_reported() {
        let mut r = CheckResult::new("x");
        r.bound("error", 1.0, 0.5);
        assert_eq!(r.status, CheckStatus::Fail);
        let mut r = CheckResult::new("x");
        r.bound("error", f64::NAN, 0.5);
        assert!(!r.passed());
    }
}
