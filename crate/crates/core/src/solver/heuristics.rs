use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Incumbent;
use crate::ip_model::{Digraph, IpModel, INTEGRALITY_TOL};
use crate::scores::LocalScoreTable;

/// Best DAG consistent with `order`: each variable takes its best candidate
/// among sets drawn from its predecessors. `None` if some variable has no
/// such candidate.
pub fn best_dag_for_order(table: &LocalScoreTable, order: &[usize]) -> Option<Incumbent> {
    let n = table.n_vars();
    assert_eq!(order.len(), n, "order must be a permutation");
    let mut before = vec![false; n];
    let mut parents = vec![Vec::new(); n];
    let mut score = 0.0;
    for &u in order {
        let best = table
            .entries(u)
            .iter()
            .filter(|e| e.parents.iter().all(|&p| before[p]))
            .fold(None, |acc: Option<&crate::scores::ScoreEntry>, e| match acc {
                Some(b) if b.score >= e.score => Some(b),
                _ => Some(e),
            })?;
        parents[u] = best.parents.clone();
        score += best.score;
        before[u] = true;
    }
    Some(Incumbent {
        digraph: Digraph::new(parents),
        score,
    })
}

/// Best of `count` seeded random orders.
pub fn random_order_search(table: &LocalScoreTable, count: usize, seed: u64) -> Option<Incumbent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..table.n_vars()).collect();
    let mut best: Option<Incumbent> = None;
    for _ in 0..count {
        order.shuffle(&mut rng);
        if let Some(cand) = best_dag_for_order(table, &order) {
            if best.as_ref().is_none_or(|b| cand.score > b.score) {
                best = Some(cand);
            }
        }
    }
    best
}

/// Accepts an integral acyclic `x`, otherwise rounds each variable to its
/// heaviest column; returns the result when acyclic and strictly better
/// than `incumbent`.
pub fn try_rounding_incumbent(x: &[f64], model: &IpModel, incumbent: Option<&Incumbent>) -> Option<Incumbent> {
    let integral = x
        .iter()
        .all(|&v| v.abs() <= INTEGRALITY_TOL || (v - 1.0).abs() <= INTEGRALITY_TOL);
    let g = if integral {
        model.extract_digraph(x).ok()?
    } else {
        let parents = (0..model.n_vars())
            .map(|u| {
                let cols = model.columns_of(u);
                let best = cols
                    .iter()
                    .copied()
                    .fold(cols[0], |b, c| if x[c] > x[b] { c } else { b });
                model.column(best).parents.clone()
            })
            .collect();
        Digraph::new(parents)
    };
    if !g.is_acyclic() {
        return None;
    }
    let score = model.score_of(&g)?;
    match incumbent {
        Some(inc) if score <= inc.score => None,
        _ => Some(Incumbent { digraph: g, score }),
    }
}
