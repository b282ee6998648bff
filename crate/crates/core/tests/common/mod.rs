#![allow(dead_code)]

use bncut::ip_model::{build_model, Digraph, IpModel};
use bncut::scores::{prune, Dataset, LocalScoreTable, ScoreEntry};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// All subsets of `pool` with at most `m` elements, smallest first.
pub fn subsets_up_to(pool: &[usize], m: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for size in 1..=m.min(pool.len()) {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            out.push(idx.iter().map(|&i| pool[i]).collect());
            let mut k = size;
            while k > 0 && idx[k - 1] == pool.len() - size + k - 1 {
                k -= 1;
            }
            if k == 0 {
                break;
            }
            idx[k - 1] += 1;
            for t in k..size {
                idx[t] = idx[t - 1] + 1;
            }
        }
    }
    out
}

/// Every parent set of size at most `m` with an i.i.d. negative score.
pub fn random_table(rng: &mut impl Rng, n: usize, m: usize) -> LocalScoreTable {
    let entries = (0..n)
        .map(|u| {
            let others: Vec<usize> = (0..n).filter(|&v| v != u).collect();
            subsets_up_to(&others, m)
                .into_iter()
                .map(|parents| ScoreEntry {
                    score: -rng.gen_range(1.0..100.0f64),
                    parents,
                })
                .collect()
        })
        .collect();
    LocalScoreTable::unnamed(entries).unwrap()
}

/// A table holding every parent set of every variable, so every DAG is a
/// feasible point of the model.
pub fn complete_table(n: usize) -> LocalScoreTable {
    let entries = (0..n)
        .map(|u| {
            let others: Vec<usize> = (0..n).filter(|&v| v != u).collect();
            subsets_up_to(&others, n - 1)
                .into_iter()
                .enumerate()
                .map(|(i, parents)| ScoreEntry {
                    parents,
                    score: -1.0 - i as f64,
                })
                .collect()
        })
        .collect();
    LocalScoreTable::unnamed(entries).unwrap()
}

/// Every vertex subset with at least two members.
pub fn clusters(n: usize) -> Vec<Vec<usize>> {
    let all: Vec<usize> = (0..n).collect();
    subsets_up_to(&all, n)
        .into_iter()
        .filter(|c| c.len() >= 2)
        .collect()
}

/// Random DAG: a shuffled order with each forward arc present at a random density.
pub fn random_dag(rng: &mut impl Rng, n: usize) -> Digraph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let p = rng.gen_range(0.0..1.0);
    let mut parents = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                parents[order[j]].push(order[i]);
            }
        }
    }
    Digraph::new(parents)
}

/// `table` plus every missing parent set at a heavily penalized score, so
/// every DAG is a feasible point while the optimum is unchanged.
pub fn padded(table: &LocalScoreTable) -> LocalScoreTable {
    let n = table.n_vars();
    let entries = (0..n)
        .map(|u| {
            let others: Vec<usize> = (0..n).filter(|&v| v != u).collect();
            subsets_up_to(&others, n - 1)
                .into_iter()
                .map(|parents| ScoreEntry {
                    score: table.score_of(u, &parents).unwrap_or(-1000.0),
                    parents,
                })
                .collect()
        })
        .collect();
    LocalScoreTable::new(table.names().to_vec(), entries).unwrap()
}

pub fn random_pruned_table(rng: &mut impl Rng, n: usize, m: usize) -> LocalScoreTable {
    prune(&random_table(rng, n, m))
}

pub fn random_model(rng: &mut impl Rng, n: usize, m: usize) -> IpModel {
    build_model(&random_pruned_table(rng, n, m))
}

/// A point satisfying every convexity row: random weights on a random
/// subset of each variable's columns.
pub fn random_convex_point(rng: &mut impl Rng, model: &IpModel) -> Vec<f64> {
    let mut x = vec![0.0; model.n_columns()];
    for u in 0..model.n_vars() {
        let cols = model.columns_of(u);
        let mut w: Vec<f64> = cols
            .iter()
            .map(|_| if rng.gen_bool(0.5) { rng.gen_range(0.05..1.0) } else { 0.0 })
            .collect();
        if w.iter().all(|&v| v == 0.0) {
            let k = rng.gen_range(0..w.len());
            w[k] = 1.0;
        }
        let s: f64 = w.iter().sum();
        for (c, v) in cols.iter().zip(w) {
            x[*c] = v / s;
        }
    }
    x
}

/// A discrete Bayesian network given by parent lists and conditional
/// tables indexed by parent configuration (mixed radix, first parent most
/// significant).
pub struct Network {
    pub names: Vec<String>,
    pub arities: Vec<usize>,
    pub parents: Vec<Vec<usize>>,
    pub cpts: Vec<Vec<Vec<f64>>>,
}

impl Network {
    /// Forward sampling in a topological order.
    pub fn sample(&self, rng: &mut impl Rng, rows: usize) -> Dataset {
        let n = self.names.len();
        let order = topological(&self.parents);
        let data = (0..rows)
            .map(|_| {
                let mut row = vec![0usize; n];
                for &u in &order {
                    let cfg = self.parents[u]
                        .iter()
                        .fold(0, |acc, &p| acc * self.arities[p] + row[p]);
                    let dist = &self.cpts[u][cfg];
                    let mut r: f64 = rng.gen();
                    let mut k = 0;
                    while k + 1 < dist.len() && r >= dist[k] {
                        r -= dist[k];
                        k += 1;
                    }
                    row[u] = k;
                }
                row
            })
            .collect();
        Dataset::new(self.names.clone(), self.arities.clone(), data).unwrap()
    }
}

fn topological(parents: &[Vec<usize>]) -> Vec<usize> {
    let n = parents.len();
    let mut done = vec![false; n];
    let mut order = Vec::new();
    while order.len() < n {
        for u in 0..n {
            if !done[u] && parents[u].iter().all(|&p| done[p]) {
                done[u] = true;
                order.push(u);
            }
        }
    }
    order
}

/// The classic eight-variable chest clinic network, all variables binary
/// with state 1 meaning "yes".
pub fn asia() -> Network {
    let names = ["asia", "smoke", "tub", "lung", "bronc", "either", "xray", "dysp"];
    let yes = |p: f64| vec![1.0 - p, p];
    Network {
        names: names.iter().map(|s| s.to_string()).collect(),
        arities: vec![2; 8],
        parents: vec![vec![], vec![], vec![0], vec![1], vec![1], vec![2, 3], vec![5], vec![5, 4]],
        cpts: vec![
            vec![yes(0.01)],
            vec![yes(0.5)],
            vec![yes(0.01), yes(0.05)],
            vec![yes(0.01), yes(0.1)],
            vec![yes(0.3), yes(0.6)],
            // either = tub OR lung
            vec![yes(0.0), yes(1.0), yes(1.0), yes(1.0)],
            vec![yes(0.05), yes(0.98)],
            // (either, bronc)
            vec![yes(0.1), yes(0.8), yes(0.7), yes(0.9)],
        ],
    }
}

/// Random network: variables in index order, each with up to `max_in`
/// earlier parents, arities 2 or 3 and skewed random conditionals.
pub fn random_network(rng: &mut impl Rng, n: usize, max_in: usize) -> Network {
    let mut arities = Vec::with_capacity(n);
    let mut parents = Vec::with_capacity(n);
    let mut cpts = Vec::with_capacity(n);
    for u in 0..n {
        let r = rng.gen_range(2..=3);
        arities.push(r);
        let k = rng.gen_range(0..=max_in.min(u));
        let mut ps: Vec<usize> = (0..u).collect::<Vec<_>>().choose_multiple(rng, k).copied().collect();
        ps.sort_unstable();
        let q: usize = ps.iter().map(|&p| arities[p]).product();
        let table = (0..q)
            .map(|_| {
                let w: Vec<f64> = (0..r).map(|_| rng.gen::<f64>().powi(3) + 0.02).collect();
                let s: f64 = w.iter().sum();
                w.into_iter().map(|v| v / s).collect()
            })
            .collect();
        parents.push(ps);
        cpts.push(table);
    }
    Network {
        names: (0..n).map(|u| format!("x{u}")).collect(),
        arities,
        parents,
        cpts,
    }
}
