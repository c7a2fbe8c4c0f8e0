mod common;

use causalfuse::identify::{search, verify, SearchOptions, SearchStatus};
use causalfuse::symexpr::{all_assignments, evaluate, DistOracle};
use causalfuse::{DistTerm, VarSet};
use common::{problem, set, small_budget, Edges, ExactModel};

#[test]
fn derivations_are_sound_on_random_models() {
    let mut found = 0;
    let mut tried = 0;
    for seed in 0..2000u64 {
        if found >= 120 {
            break;
        }
        tried += 1;
        let (e, inputs, query) = problem(seed);
        let g = e.admg();
        let out = search(&g, &inputs, &query, &small_budget()).unwrap();
        let Some(d) = out.derivation else {
            assert_ne!(out.status, SearchStatus::Found);
            continue;
        };
        found += 1;
        assert!(verify(&g, &d).unwrap(), "seed {seed}: derivation fails verification");
        let model = ExactModel::random(&e, seed);
        let vars: Vec<(String, usize)> = query.variables().iter().map(|v| (v.name.clone(), 2)).collect();
        for a in all_assignments(&vars) {
            let truth = model.prob(&query, &a).unwrap();
            let got = evaluate(&d.result, &model, &a).unwrap();
            assert!(
                (got - truth).abs() <= 1e-9,
                "seed {seed}: {} gives {got}, truth {truth} at {a}",
                causalfuse::symexpr::render::text(&d.result)
            );
        }
    }
    assert!(found >= 100, "only {found} of {tried} random problems were identified");
}

#[test]
fn bow_graph_is_not_identified() {
    let e = Edges {
        n: 2,
        directed: vec![(0, 1)],
        bidirected: vec![(0, 1)],
    };
    let q = DistTerm::new(set(&[1]), set(&[0]), VarSet::new()).unwrap();
    let out = search(
        &e.admg(),
        &[DistTerm::joint(set(&[0, 1])).unwrap()],
        &q,
        &small_budget(),
    )
    .unwrap();
    assert_eq!(out.status, SearchStatus::SearchSpaceExhausted);
    assert!(out.derivation.is_none());
}

#[test]
fn search_is_deterministic_across_thread_counts() {
    for seed in 0..40u64 {
        let (e, inputs, query) = problem(seed);
        let g = e.admg();
        let one = SearchOptions {
            threads: Some(1),
            ..small_budget()
        };
        let many = SearchOptions {
            threads: Some(4),
            ..small_budget()
        };
        let a = search(&g, &inputs, &query, &one).unwrap();
        let b = search(&g, &inputs, &query, &many).unwrap();
        assert_eq!(a.status, b.status, "seed {seed}");
        assert_eq!(a.derivation, b.derivation, "seed {seed}");
    }
}

#[test]
fn tampered_side_conditions_fail_verification() {
    let mut checked = 0;
    for seed in 0..300u64 {
        let (e, inputs, query) = problem(seed);
        let g = e.admg();
        let Some(d) = search(&g, &inputs, &query, &small_budget()).unwrap().derivation else {
            continue;
        };
        for (i, step) in d.steps.iter().enumerate() {
            let Some(sc) = &step.side_condition else { continue };
            // Drop the mutilation: the recorded certificate no longer
            // matches what the rule requires.
            if sc.mutilation.is_empty() {
                continue;
            }
            let mut bad = d.clone();
            let c = bad.steps[i].side_condition.as_mut().unwrap();
            c.mutilation = causalfuse::Mutilation::default();
            assert!(!verify(&g, &bad).unwrap(), "seed {seed} step {i}");
            // Wrong conclusion.
            let mut bad = d.clone();
            bad.steps[i].conclusion = causalfuse::Expr::Atom(query.clone());
            assert!(!verify(&g, &bad).unwrap() || bad.steps[i].conclusion == d.steps[i].conclusion);
            checked += 1;
        }
    }
    assert!(checked > 20, "only {checked} do-calculus steps were tampered");
}
