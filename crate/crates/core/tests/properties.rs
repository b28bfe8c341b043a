use gptc_core::checks::random_assignment;
use gptc_core::circuit::{enumerate_complete_foliations, SystemType};
use gptc_core::dsl::{compile, from_json, parse_circuit, serialize_circuit, to_json};
use gptc_core::engine::{
    evaluate_circuit, marginal, tensor_compose, wire_permutation_matrix, StateVector, TransferMatrix,
};
use gptc_core::gen::{random_document, GenConfig};
use gptc_core::linalg::RMatrix;
use gptc_core::random::{self, SeededRng};
use gptc_core::theory::{quantum::kron_ops, CpMap, Process, StandardTheory, Theory, TheoryKind};
use proptest::prelude::*;

const TOL: f64 = 1e-10;

fn rng(seed: u64) -> SeededRng {
    random::seeded(seed)
}

fn max_diff(a: &RMatrix, b: &RMatrix) -> f64 {
    (a - b).amax()
}

fn qubits(n: usize) -> SystemType {
    SystemType::from_labels(&vec!["q"; n])
}

fn theory() -> StandardTheory {
    StandardTheory::quantum(&[("q", 2)]).unwrap()
}

fn channel(t: &StandardTheory, r: &mut SeededRng) -> TransferMatrix {
    let map = CpMap::from_kraus(2, 2, &random::kraus(r, 2, 2, 2));
    let s = qubits(1);
    let z = t.transfer_of(&s, &s, &Process::Channel(map)).unwrap();
    TransferMatrix::synthetic(s.clone(), s, z, "random channel")
}

fn kind(i: u8) -> TheoryKind {
    [TheoryKind::Classical, TheoryKind::Quantum, TheoryKind::Hybrid][i as usize % 3]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn interchange_law(seed in any::<u64>()) {
        let t = theory();
        let r = &mut rng(seed);
        let (a, b, c, d) = (channel(&t, r), channel(&t, r), channel(&t, r), channel(&t, r));
        let lhs = tensor_compose(&a, &b, &t).unwrap().then(&tensor_compose(&c, &d, &t).unwrap()).unwrap();
        let rhs = tensor_compose(&a.then(&c).unwrap(), &b.then(&d).unwrap(), &t).unwrap();
        prop_assert!(max_diff(&lhs.entries, &rhs.entries) < TOL);
    }

    #[test]
    fn identity_is_neutral(seed in any::<u64>()) {
        let t = theory();
        let z = channel(&t, &mut rng(seed));
        let id = t.identity(&qubits(1)).unwrap();
        prop_assert!(max_diff(&id.then(&z).unwrap().entries, &z.entries) < TOL);
        prop_assert!(max_diff(&z.then(&id).unwrap().entries, &z.entries) < TOL);
        let padded = tensor_compose(&z, &id, &t).unwrap();
        let state = t.embed_state(&qubits(2), &kron_ops(&[random::density(&mut rng(seed ^ 1), 2), random::density(&mut rng(seed ^ 2), 2)])).unwrap();
        let out = &padded.entries * &state.entries;
        let kept = marginal(&StateVector::new(qubits(2), out.iter().copied().collect()), &[1], &t).unwrap();
        let before = marginal(&state, &[1], &t).unwrap();
        prop_assert!((&kept.entries - &before.entries).amax() < TOL);
    }

    #[test]
    fn swap_permutes_factors(seed in any::<u64>()) {
        let t = theory();
        let r = &mut rng(seed);
        let (x, y) = (random::density(r, 2), random::density(r, 2));
        let swap = wire_permutation_matrix(&t, &qubits(2), &[1, 0]).unwrap();
        let xy = t.embed_state(&qubits(2), &kron_ops(&[x.clone(), y.clone()])).unwrap();
        let yx = t.embed_state(&qubits(2), &kron_ops(&[y, x])).unwrap();
        prop_assert!((&swap.entries * &xy.entries - &yx.entries).amax() < TOL);
        prop_assert!(max_diff(&(&swap.entries * &swap.entries), &RMatrix::identity(16, 16)) < TOL);
    }

    #[test]
    fn reduced_states_of_products(seed in any::<u64>()) {
        let t = StandardTheory::quantum(&[("q", 2), ("t", 3)]).unwrap();
        let r = &mut rng(seed);
        let (x, y) = (random::density(r, 2), random::density(r, 3));
        let both = SystemType::from_labels(&["q", "t"]);
        let joint = t.embed_state(&both, &kron_ops(&[x.clone(), y.clone()])).unwrap();
        let a = marginal(&joint, &[0], &t).unwrap();
        let b = marginal(&joint, &[1], &t).unwrap();
        prop_assert!((&a.entries - &t.embed_state(&qubits(1), &x).unwrap().entries).amax() < TOL);
        let ts = SystemType::from_labels(&["t"]);
        prop_assert!((&b.entries - &t.embed_state(&ts, &y).unwrap().entries).amax() < TOL);
    }

    #[test]
    fn probabilities_lie_in_unit_interval(seed in any::<u64>(), k in 0u8..3) {
        let r = &mut rng(seed);
        let c = compile(&random_document(r, &GenConfig::new(kind(k)))).unwrap();
        for _ in 0..4 {
            let a = random_assignment(r, &c.model);
            let p = evaluate_circuit(&c.model, &a, &c.theory, None).unwrap();
            prop_assert!((-TOL..=1.0 + TOL).contains(&p), "{a}: {p}");
        }
    }

    #[test]
    fn foliations_agree(seed in any::<u64>(), k in 0u8..3) {
        let r = &mut rng(seed);
        let c = compile(&random_document(r, &GenConfig { max_ops: 8, ..GenConfig::new(kind(k)) })).unwrap();
        let a = random_assignment(r, &c.model);
        let fs = enumerate_complete_foliations(&c.circuit, 16).unwrap();
        let ps: Vec<f64> = fs.iter().map(|f| evaluate_circuit(&c.model, &a, &c.theory, Some(f)).unwrap()).collect();
        let spread = ps.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - ps.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!(spread <= TOL);
    }

    #[test]
    fn coarse_graining_sums_outcomes(seed in any::<u64>(), k in 0u8..3) {
        let r = &mut rng(seed);
        let c = compile(&random_document(r, &GenConfig { max_ops: 4, ..GenConfig::new(kind(k)) })).unwrap();
        prop_assume!(c.model.assignment_count() <= 256);
        let total: f64 = c.model.assignments().map(|a| evaluate_circuit(&c.model, &a, &c.theory, None).unwrap()).sum();
        let merged = c.model.coarse_grained().unwrap();
        let p = evaluate_circuit(&merged, &Default::default(), &c.theory, None).unwrap();
        prop_assert!((total - p).abs() < TOL);
    }

    #[test]
    fn documents_round_trip(seed in any::<u64>(), k in 0u8..3) {
        let doc = random_document(&mut rng(seed), &GenConfig::new(kind(k)));
        let text = serialize_circuit(&doc);
        prop_assert_eq!(parse_circuit(&text).unwrap(), doc.clone());
        prop_assert_eq!(from_json(&to_json(&doc)).unwrap(), doc);
    }
}
