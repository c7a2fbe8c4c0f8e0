mod common;

use std::collections::BTreeSet;

use causalfuse::dsl::{parse_dist, parse_graph, render_graph};
use causalfuse::symexpr::{parse_json, parse_latex, render, Style};
use causalfuse::var::Kinds;
use causalfuse::{DistTerm, Expr, Var, VarSet, VertexKind};
use common::{name, project_bidirected, project_directed, Edges};
use proptest::prelude::*;

fn graph_strategy(max: usize) -> impl Strategy<Value = Edges> {
    (2..=max).prop_flat_map(|n| {
        proptest::collection::vec(0u8..4, n * (n - 1) / 2).prop_map(move |codes| Edges::from_codes(n, &codes))
    })
}

/// Disjoint A, B, C with A and B nonempty, as role codes per vertex:
/// 0 none, 1 A, 2 B, 3 C.
fn roles(n: usize) -> impl Strategy<Value = Vec<u8>> {
    proptest::collection::vec(0u8..4, n).prop_filter("A and B nonempty", |r| r.contains(&1) && r.contains(&2))
}

fn names_of(idx: &BTreeSet<usize>) -> VarSet {
    idx.iter().map(|&i| Var::new(name(i))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn d_separation_matches_path_enumeration(
        (e, r) in graph_strategy(8).prop_flat_map(|e| { let n = e.n; (Just(e), roles(n)) })
    ) {
        let pick = |k: u8| -> BTreeSet<usize> { (0..e.n).filter(|&i| r[i] == k).collect() };
        let (a, b, c) = (pick(1), pick(2), pick(3));
        let g = e.admg();
        let fast = g.d_separated(&names_of(&a), &names_of(&b), &names_of(&c)).unwrap();
        prop_assert_eq!(fast, e.d_separated(&a, &b, &c));
    }

    #[test]
    fn latent_projection_matches_path_definition(
        (e, keep) in graph_strategy(7).prop_flat_map(|e| { let n = e.n; (Just(e), proptest::collection::vec(any::<bool>(), n)) })
    ) {
        let keep: BTreeSet<usize> = (0..e.n).filter(|&i| keep[i]).collect();
        prop_assume!(!keep.is_empty());
        let p = e.admg().latent_project(&names_of(&keep)).unwrap();
        let got_dir: BTreeSet<(String, String)> =
            p.directed_edges().into_iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        let want_dir: BTreeSet<(String, String)> =
            project_directed(&e, &keep).into_iter().map(|(a, b)| (name(a), name(b))).collect();
        prop_assert_eq!(got_dir, want_dir);
        let norm = |(a, b): (String, String)| if a < b { (a, b) } else { (b, a) };
        let got_bi: BTreeSet<(String, String)> =
            p.bidirected_edges().into_iter().map(|(a, b)| norm((a.to_string(), b.to_string()))).collect();
        let want_bi: BTreeSet<(String, String)> =
            project_bidirected(&e, &keep).into_iter().map(|(a, b)| norm((name(a), name(b)))).collect();
        prop_assert_eq!(got_bi, want_bi);
    }

    #[test]
    fn latent_projection_composes(
        (e, k1, k2) in graph_strategy(8).prop_flat_map(|e| {
            let n = e.n;
            (Just(e), proptest::collection::vec(any::<bool>(), n), proptest::collection::vec(any::<bool>(), n))
        })
    ) {
        let outer: BTreeSet<usize> = (0..e.n).filter(|&i| k1[i]).collect();
        let inner: BTreeSet<usize> = outer.iter().copied().filter(|&i| k2[i]).collect();
        prop_assume!(!inner.is_empty());
        let g = e.admg();
        let twice = g.latent_project(&names_of(&outer)).unwrap().latent_project(&names_of(&inner)).unwrap();
        let once = g.latent_project(&names_of(&inner)).unwrap();
        prop_assert_eq!(twice, once);
    }

    #[test]
    fn graph_text_round_trips(e in graph_strategy(10)) {
        let g = e.admg();
        let text = render_graph(&g);
        prop_assert_eq!(parse_graph(&text, &Kinds::new()).unwrap(), g);
    }

    #[test]
    fn dist_text_round_trips(t in term_strategy()) {
        let kinds = regime_kinds();
        let text = t.text();
        prop_assert_eq!(parse_dist(&text, &kinds).unwrap(), t);
    }

    #[test]
    fn expression_renderings_round_trip(e in expr_strategy()) {
        let kinds = regime_kinds();
        let latex = render(&e, Style::Latex);
        prop_assert_eq!(parse_latex(&latex, &kinds).unwrap().canonicalize(), e.canonicalize());
        let json = render(&e, Style::Json);
        prop_assert_eq!(parse_json(&json).unwrap(), e.clone());
        let canon = e.canonicalize();
        prop_assert_eq!(canon.canonicalize(), canon);
    }
}

fn regime_kinds() -> Kinds {
    [
        ("T".to_string(), VertexKind::Transportability),
        ("S".to_string(), VertexKind::Selection),
    ]
    .into()
}

const POOL: [&str; 7] = ["A", "B", "C", "X1", "X2", "Y", "Z_3"];

/// Ordinary variables split into outcome / intervention / condition roles,
/// plus optional regime conditions.
fn term_strategy() -> impl Strategy<Value = DistTerm> {
    (
        proptest::collection::vec(0u8..4, POOL.len()),
        any::<bool>(),
        any::<bool>(),
    )
        .prop_filter_map("needs an outcome", |(roles, t, s)| {
            let pick = |k: u8| -> VarSet {
                POOL.iter()
                    .zip(&roles)
                    .filter(|(_, r)| **r == k)
                    .map(|(n, _)| Var::new(*n))
                    .collect()
            };
            let mut cond = pick(3);
            if t {
                cond.insert(Var::with_kind("T", VertexKind::Transportability));
            }
            if s {
                cond.insert(Var::with_kind("S", VertexKind::Selection));
            }
            DistTerm::new(pick(1), pick(2), cond).ok()
        })
}

fn expr_strategy() -> impl Strategy<Value = Expr> {
    let leaf = term_strategy().prop_map(Expr::Atom);
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            proptest::collection::vec(inner.clone(), 2..4).prop_map(Expr::Product),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::quotient(a, b)),
            (proptest::sample::subsequence(POOL.to_vec(), 1..3), inner).prop_filter_map(
                "bound variables must occur free in the body",
                |(bound, body)| {
                    let bound: VarSet = bound.into_iter().map(Var::new).collect();
                    let free = body.free_vars();
                    bound.is_subset(&free).then(|| Expr::sum(bound, body))
                }
            ),
        ]
    })
    .prop_filter("parsers accept only well-formed expressions", Expr::is_well_formed)
}
