mod common;

use bncut::ip_model::{build_model, signature_from_surplus, surplus, Digraph, LinearConstraint, Sense};
use bncut::oracle::all_dags;
use proptest::prelude::*;
use rand::Rng;

fn holds(row: &LinearConstraint, x: &[f64]) -> bool {
    let a = row.activity(x);
    match row.sense {
        Sense::Ge => a >= row.rhs - 1e-9,
        Sense::Le => a <= row.rhs + 1e-9,
        Sense::Eq => (a - row.rhs).abs() <= 1e-9,
    }
}

#[test]
fn every_cluster_row_holds_on_every_five_node_dag() {
    let model = build_model(&common::complete_table(5));
    let dags = all_dags(5).unwrap();
    let rows: Vec<(Vec<usize>, usize, LinearConstraint)> = common::clusters(5)
        .into_iter()
        .flat_map(|c| (1..=c.len()).map(move |k| (c.clone(), k)))
        .map(|(c, k)| {
            let r = model.cluster_row(&c, k).unwrap();
            (c, k, r)
        })
        .collect();
    for g in &dags {
        let x = model.incidence(g).unwrap();
        for (c, k, row) in &rows {
            assert!(holds(row, &x), "cluster {c:?} k={k} fails on {g:?}");
            // The row's slack is exactly the integer surplus.
            let slack = row.activity(&x) - row.rhs;
            let s = surplus(g, c, *k).unwrap() as f64;
            assert!((slack - s).abs() < 1e-9 || row.sense != Sense::Ge);
        }
    }
}

#[test]
fn cyclic_assignments_violate_some_one_cluster_row() {
    let model = build_model(&common::complete_table(4));
    let cs = common::clusters(4);
    let mut rng = common::rng(1);
    let mut seen = 0;
    while seen < 200 {
        let parents = (0..4)
            .map(|u| (0..4).filter(|&v| v != u && rng.gen_bool(0.4)).collect())
            .collect();
        let g = Digraph::new(parents);
        if g.is_acyclic() {
            continue;
        }
        seen += 1;
        let x = model.incidence(&g).unwrap();
        assert!(cs.iter().any(|c| !holds(&model.cluster_row(c, 1).unwrap(), &x)));
    }
}

#[test]
fn immorality_and_chain_tightness() {
    for (u, w, v) in [(0, 1, 2), (2, 0, 1), (1, 2, 0)] {
        let mut parents = vec![Vec::new(); 3];
        parents[w] = vec![u, v];
        let immorality = Digraph::new(parents);
        let c = [0, 1, 2];
        assert_eq!(surplus(&immorality, &c, 1).unwrap(), 1);
        assert_eq!(surplus(&immorality, &c, 2).unwrap(), 0);

        let mut parents = vec![Vec::new(); 3];
        parents[w] = vec![u];
        parents[v] = vec![w];
        let chain = Digraph::new(parents);
        assert_eq!(surplus(&chain, &c, 1).unwrap(), 0);
        assert_eq!(surplus(&chain, &c, 2).unwrap(), 1);
    }
}

#[test]
fn surplus_signature_matches_direct_computation() {
    let mut rng = common::rng(7);
    for _ in 0..100 {
        let g = common::random_dag(&mut rng, 5);
        assert_eq!(signature_from_surplus(&g).unwrap(), g.skeleton_and_immoralities());
    }
}

#[test]
fn markov_equivalent_dags_share_surplus_signature() {
    let dags = all_dags(4).unwrap();
    for a in &dags {
        for b in &dags {
            let same_class = a.skeleton_and_immoralities() == b.skeleton_and_immoralities();
            let same_sig = signature_from_surplus(a).unwrap() == signature_from_surplus(b).unwrap();
            assert_eq!(same_class, same_sig);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn incidence_round_trips(seed in any::<u64>(), n in 2usize..=6) {
        let mut rng = common::rng(seed);
        let model = build_model(&common::complete_table(n));
        let g = common::random_dag(&mut rng, n);
        let x = model.incidence(&g).unwrap();
        prop_assert_eq!(model.extract_digraph(&x).unwrap(), g.clone());
        prop_assert_eq!(model.objective_value(&x), model.score_of(&g).unwrap());
        for row in model.rows() {
            prop_assert!(holds(row, &x));
        }
    }

    #[test]
    fn lp_text_lists_every_column(seed in any::<u64>(), n in 2usize..=6) {
        let mut rng = common::rng(seed);
        let model = common::random_model(&mut rng, n, 2);
        let text = model.to_lp_format();
        prop_assert!(text.contains("\nMaximize\n"));
        prop_assert!(text.trim_end().ends_with("End"));
        let binaries = text.lines().filter(|l| l.contains("<= 1") && l.contains("0 <=")).count();
        prop_assert_eq!(binaries, model.n_columns());
    }
}
