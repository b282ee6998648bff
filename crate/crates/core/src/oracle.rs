//! Independent reference learners used to check the branch-and-cut solver.

use std::collections::HashMap;

use thiserror::Error;

use crate::ip_model::Digraph;
use crate::scores::{Dataset, LocalScoreTable};

/// Largest table accepted by [`brute_force_optimal`].
pub const BRUTE_FORCE_MAX_VARS: usize = 7;
/// Largest table accepted by [`dp_optimal`].
pub const DP_MAX_VARS: usize = 16;
/// Largest vertex count accepted by [`all_dags`].
pub const ALL_DAGS_MAX_VARS: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("{n} variables exceeds the oracle limit of {max}")]
    TooLarge { n: usize, max: usize },
    #[error("no acyclic choice of candidate parent sets exists")]
    NoFeasibleDag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub score: f64,
    pub digraph: Digraph,
}

/// Sum of local scores of `g`, or `None` if some family is not a candidate.
pub fn score_digraph(table: &LocalScoreTable, g: &Digraph) -> Option<f64> {
    (0..table.n_vars())
        .map(|u| table.score_of(u, g.parents(u)))
        .sum()
}

fn check_size(n: usize, max: usize) -> Result<(), OracleError> {
    if n > max {
        Err(OracleError::TooLarge { n, max })
    } else {
        Ok(())
    }
}

/// Exhaustive search over one candidate per variable, skipping partial
/// choices that already close a cycle.
pub fn brute_force_optimal(table: &LocalScoreTable) -> Result<OracleResult, OracleError> {
    let n = table.n_vars();
    check_size(n, BRUTE_FORCE_MAX_VARS)?;

    struct State<'a> {
        table: &'a LocalScoreTable,
        chosen: Vec<Option<usize>>,
        best: Option<(f64, Vec<usize>)>,
    }

    fn reaches(state: &State, from: usize, target: usize, seen: &mut Vec<bool>) -> bool {
        if from == target {
            return true;
        }
        if seen[from] {
            return false;
        }
        seen[from] = true;
        let Some(e) = state.chosen[from] else {
            return false;
        };
        state.table.entries(from)[e]
            .parents
            .iter()
            .any(|&p| reaches(state, p, target, seen))
    }

    fn rec(state: &mut State, u: usize, score: f64) {
        let n = state.table.n_vars();
        if u == n {
            if state.best.as_ref().is_none_or(|(b, _)| score > *b) {
                let picks = state.chosen.iter().map(|c| c.unwrap()).collect();
                state.best = Some((score, picks));
            }
            return;
        }
        for e in 0..state.table.entries(u).len() {
            // A new cycle must pass through u: some parent has u as ancestor.
            let entry = &state.table.entries(u)[e];
            let mut seen = vec![false; n];
            state.chosen[u] = Some(e);
            let cyclic = entry.parents.iter().any(|&p| reaches(state, p, u, &mut seen));
            if !cyclic {
                rec(state, u + 1, score + entry.score);
            }
            state.chosen[u] = None;
        }
    }

    let mut state = State {
        table,
        chosen: vec![None; n],
        best: None,
    };
    rec(&mut state, 0, 0.0);
    let (score, picks) = state.best.ok_or(OracleError::NoFeasibleDag)?;
    let parents = picks
        .iter()
        .enumerate()
        .map(|(u, &e)| table.entries(u)[e].parents.clone())
        .collect();
    Ok(OracleResult {
        score,
        digraph: Digraph::new(parents),
    })
}

/// Dynamic programming over variable subsets: the best parent set of each
/// variable within every subset, then the best sink of every subset.
pub fn dp_optimal(table: &LocalScoreTable) -> Result<OracleResult, OracleError> {
    let n = table.n_vars();
    check_size(n, DP_MAX_VARS)?;
    let full = 1usize << n;
    let mask_of = |ps: &[usize]| ps.iter().fold(0usize, |m, &p| m | 1 << p);

    // best[u][S]: best candidate of u with parents inside S.
    let mut best: Vec<Vec<(f64, u32)>> = Vec::with_capacity(n);
    for u in 0..n {
        let mut b = vec![(f64::NEG_INFINITY, u32::MAX); full];
        for (e, entry) in table.entries(u).iter().enumerate() {
            let m = mask_of(&entry.parents);
            if entry.score > b[m].0 {
                b[m] = (entry.score, e as u32);
            }
        }
        for bit in 0..n {
            for m in 0..full {
                if m >> bit & 1 == 1 {
                    let sub = b[m ^ 1 << bit];
                    if sub.0 > b[m].0 {
                        b[m] = sub;
                    }
                }
            }
        }
        best.push(b);
    }

    let mut total = vec![f64::NEG_INFINITY; full];
    let mut sink = vec![u8::MAX; full];
    total[0] = 0.0;
    for s in 1..full {
        for u in 0..n {
            if s >> u & 1 == 0 {
                continue;
            }
            let rest = s ^ 1 << u;
            let v = total[rest] + best[u][rest].0;
            if v > total[s] {
                total[s] = v;
                sink[s] = u as u8;
            }
        }
    }
    if total[full - 1] == f64::NEG_INFINITY {
        return Err(OracleError::NoFeasibleDag);
    }
    let mut parents = vec![Vec::new(); n];
    let mut s = full - 1;
    while s != 0 {
        let u = sink[s] as usize;
        let rest = s ^ 1 << u;
        let e = best[u][rest].1 as usize;
        parents[u] = table.entries(u)[e].parents.clone();
        s = rest;
    }
    let digraph = Digraph::new(parents);
    let score = score_digraph(table, &digraph).expect("chosen families are candidates");
    Ok(OracleResult { score, digraph })
}

/// BDeu as a product of Dirichlet posterior predictives, visiting rows in
/// `row_order`.
pub fn sequential_bdeu(data: &Dataset, child: usize, parents: &[usize], ess: f64, row_order: &[usize]) -> f64 {
    let q: f64 = parents.iter().map(|&p| data.arity(p) as f64).product();
    let r = data.arity(child);
    let alpha_j = ess / q;
    let alpha_jk = alpha_j / r as f64;
    let mut counts: HashMap<Vec<usize>, (Vec<u64>, u64)> = HashMap::new();
    let mut total = 0.0;
    for &i in row_order {
        let row = &data.rows()[i];
        let cfg: Vec<usize> = parents.iter().map(|&p| row[p]).collect();
        let (cell, n_j) = counts.entry(cfg).or_insert_with(|| (vec![0; r], 0));
        let k = row[child];
        total += ((alpha_jk + cell[k] as f64) / (alpha_j + *n_j as f64)).ln();
        cell[k] += 1;
        *n_j += 1;
    }
    total
}

/// Every DAG on `n` labelled vertices.
pub fn all_dags(n: usize) -> Result<Vec<Digraph>, OracleError> {
    check_size(n, ALL_DAGS_MAX_VARS)?;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let total = 3usize.pow(pairs.len() as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let mut parents = vec![Vec::new(); n];
        let mut c = code;
        for &(a, b) in &pairs {
            match c % 3 {
                1 => parents[b].push(a),
                2 => parents[a].push(b),
                _ => {}
            }
            c /= 3;
        }
        let g = Digraph::new(parents);
        if g.is_acyclic() {
            out.push(g);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scores::ScoreEntry;

    fn entry(parents: &[usize], score: f64) -> ScoreEntry {
        ScoreEntry {
            parents: parents.to_vec(),
            score,
        }
    }

    #[test]
    fn dag_counts() {
        let counts: Vec<usize> = (0..=5).map(|n| all_dags(n).unwrap().len()).collect();
        assert_eq!(counts, vec![1, 1, 3, 25, 543, 29281]);
        assert!(all_dags(6).is_err());
    }

    #[test]
    fn single_variable() {
        let t = LocalScoreTable::unnamed(vec![vec![entry(&[], -3.5)]]).unwrap();
        for r in [brute_force_optimal(&t).unwrap(), dp_optimal(&t).unwrap()] {
            assert_eq!(r.score, -3.5);
            assert_eq!(r.digraph, Digraph::empty(1));
        }
    }

    #[test]
    fn two_cycle_excluded() {
        let t = LocalScoreTable::unnamed(vec![
            vec![entry(&[], -10.0), entry(&[1], -1.0)],
            vec![entry(&[], -10.0), entry(&[0], -2.0)],
        ])
        .unwrap();
        for r in [brute_force_optimal(&t).unwrap(), dp_optimal(&t).unwrap()] {
            assert_eq!(r.score, -11.0);
            assert!(r.digraph.has_edge(1, 0));
            assert!(r.digraph.is_acyclic());
        }
    }

    #[test]
    fn size_guards() {
        let big = LocalScoreTable::unnamed(vec![vec![entry(&[], -1.0)]; 8]).unwrap();
        assert!(matches!(brute_force_optimal(&big), Err(OracleError::TooLarge { n: 8, max: 7 })));
        assert!(dp_optimal(&big).is_ok());
    }

    #[test]
    fn infeasible_tables_reported() {
        let t = LocalScoreTable::unnamed(vec![vec![entry(&[1], -1.0)], vec![entry(&[0], -1.0)]]).unwrap();
        assert_eq!(brute_force_optimal(&t), Err(OracleError::NoFeasibleDag));
        assert_eq!(dp_optimal(&t), Err(OracleError::NoFeasibleDag));
    }

    #[test]
    fn sequential_empty_data() {
        let d = Dataset::new(vec!["a".into()], vec![2], vec![]).unwrap();
        assert_eq!(sequential_bdeu(&d, 0, &[], 1.0, &[]), 0.0);
    }
}
