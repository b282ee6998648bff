mod common;

use bncut::oracle::{all_dags, brute_force_optimal, dp_optimal, score_digraph};
use bncut::prune;
use bncut::solver::best_dag_for_order;
use proptest::prelude::*;

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn brute_force_and_dp_agree(seed in any::<u64>(), n in 1usize..=7, m in 0usize..=3) {
        let mut rng = common::rng(seed);
        let t = common::random_pruned_table(&mut rng, n, m);
        let b = brute_force_optimal(&t).unwrap();
        let d = dp_optimal(&t).unwrap();
        prop_assert!((b.score - d.score).abs() <= 1e-9 * (1.0 + b.score.abs()));
        prop_assert!(b.digraph.is_acyclic() && d.digraph.is_acyclic());
        prop_assert_eq!(score_digraph(&t, &d.digraph), Some(d.score));
    }

    #[test]
    fn pruning_keeps_dp_optimum(seed in any::<u64>(), n in 2usize..=10, m in 1usize..=3) {
        let mut rng = common::rng(seed);
        let t = common::random_table(&mut rng, n, m);
        prop_assert_eq!(dp_optimal(&t).unwrap().score, dp_optimal(&prune(&t)).unwrap().score);
    }

    #[test]
    fn best_order_equals_optimum(seed in any::<u64>(), n in 1usize..=6) {
        let mut rng = common::rng(seed);
        let t = common::random_pruned_table(&mut rng, n, 2);
        let opt = dp_optimal(&t).unwrap().score;
        let best = permutations(n)
            .iter()
            .filter_map(|o| best_dag_for_order(&t, o))
            .map(|i| i.score)
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((best - opt).abs() <= 1e-9 * (1.0 + opt.abs()));
    }
}

#[test]
fn brute_force_dominates_every_dag() {
    let mut rng = common::rng(11);
    let dags = all_dags(4).unwrap();
    for _ in 0..20 {
        let t = common::random_table(&mut rng, 4, 3);
        let opt = brute_force_optimal(&t).unwrap().score;
        let best = dags
            .iter()
            .filter_map(|g| score_digraph(&t, g))
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(opt, best);
    }
}
