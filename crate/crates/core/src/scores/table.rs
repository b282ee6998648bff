use std::collections::{HashMap, HashSet};

use super::{bdeu_local_score, Dataset, ScoreError};

/// Default cap on the number of (child, parent set) pairs `enumerate_scores`
/// is willing to evaluate.
pub const DEFAULT_ENTRY_BUDGET: usize = 10_000_000;

/// One candidate family: a sorted parent set and its local score.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreEntry {
    pub parents: Vec<usize>,
    pub score: f64,
}

/// Candidate parent sets with local scores, per child variable.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalScoreTable {
    names: Vec<String>,
    entries: Vec<Vec<ScoreEntry>>,
}

impl LocalScoreTable {
    /// Validates and builds a table. Parent sets are sorted on the way in.
    pub fn new(names: Vec<String>, entries: Vec<Vec<ScoreEntry>>) -> Result<Self, ScoreError> {
        let n = names.len();
        if entries.len() != n {
            return Err(ScoreError::Table(format!(
                "{} names but {} entry lists",
                n,
                entries.len()
            )));
        }
        let mut entries = entries;
        for (u, list) in entries.iter_mut().enumerate() {
            let mut seen = HashSet::new();
            for e in list.iter_mut() {
                e.parents.sort_unstable();
                if e.parents.windows(2).any(|w| w[0] == w[1]) {
                    return Err(ScoreError::Table(format!(
                        "repeated parent in a parent set of {}",
                        names[u]
                    )));
                }
                if e.parents.iter().any(|&p| p >= n || p == u) {
                    return Err(ScoreError::Table(format!(
                        "invalid parent set {:?} for {}",
                        e.parents, names[u]
                    )));
                }
                if !e.score.is_finite() {
                    return Err(ScoreError::Table(format!(
                        "non-finite score for {}",
                        names[u]
                    )));
                }
                if !seen.insert(e.parents.clone()) {
                    return Err(ScoreError::DuplicateParentSet {
                        child: names[u].clone(),
                        parents: e.parents.iter().map(|&p| names[p].clone()).collect(),
                    });
                }
            }
        }
        Ok(LocalScoreTable { names, entries })
    }

    /// Table with generated names `0`, `1`, ...
    pub fn unnamed(entries: Vec<Vec<ScoreEntry>>) -> Result<Self, ScoreError> {
        let names = (0..entries.len()).map(|i| i.to_string()).collect();
        Self::new(names, entries)
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn entries(&self, u: usize) -> &[ScoreEntry] {
        &self.entries[u]
    }

    pub fn all_entries(&self) -> &[Vec<ScoreEntry>] {
        &self.entries
    }

    /// Total number of candidate families.
    pub fn len(&self) -> usize {
        self.entries.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn max_parents(&self) -> usize {
        self.entries
            .iter()
            .flatten()
            .map(|e| e.parents.len())
            .max()
            .unwrap_or(0)
    }

    /// Score of `parents` for `child`, if it is a candidate.
    pub fn score_of(&self, child: usize, parents: &[usize]) -> Option<f64> {
        self.entries[child]
            .iter()
            .find(|e| e.parents == parents)
            .map(|e| e.score)
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Calls `f` on every subset of `pool` with exactly `size` elements, in
/// lexicographic order.
fn for_each_subset(pool: &[usize], size: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(pool: &[usize], size: usize, start: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == size {
            f(cur);
            return;
        }
        let need = size - cur.len();
        for i in start..pool.len() {
            if pool.len() - i < need {
                break;
            }
            cur.push(pool[i]);
            rec(pool, size, i + 1, cur, f);
            cur.pop();
        }
    }
    rec(pool, size, 0, &mut Vec::with_capacity(size), f);
}

/// Every parent set of size at most `max_parents` for every variable,
/// with its BDeu score. No pruning is applied.
pub fn enumerate_scores(
    data: &Dataset,
    max_parents: usize,
    ess: f64,
    budget: usize,
) -> Result<LocalScoreTable, ScoreError> {
    let n = data.n_vars();
    if n == 0 {
        return Err(ScoreError::EmptyDataset);
    }
    if max_parents > n - 1 {
        return Err(ScoreError::Table(format!(
            "parent limit {} exceeds n-1 = {}",
            max_parents,
            n - 1
        )));
    }
    if !(ess > 0.0 && ess.is_finite()) {
        return Err(ScoreError::Table(format!("ess must be positive, got {ess}")));
    }
    let per_var: usize = (0..=max_parents)
        .map(|k| binomial(n - 1, k))
        .fold(0usize, usize::saturating_add);
    let total = per_var.saturating_mul(n);
    if total > budget {
        return Err(ScoreError::Budget { entries: total, budget });
    }

    let mut entries = Vec::with_capacity(n);
    for u in 0..n {
        let others: Vec<usize> = (0..n).filter(|&v| v != u).collect();
        let mut list = Vec::with_capacity(per_var);
        for size in 0..=max_parents {
            for_each_subset(&others, size, &mut |w| {
                list.push(ScoreEntry {
                    parents: w.to_vec(),
                    score: bdeu_local_score(data, u, w, ess),
                });
            });
        }
        entries.push(list);
    }
    LocalScoreTable::new(data.names().to_vec(), entries)
}

/// Removes every parent set that some listed proper subset scores at least
/// as well as. The empty set always survives.
pub fn prune(table: &LocalScoreTable) -> LocalScoreTable {
    let entries = table
        .all_entries()
        .iter()
        .map(|list| {
            let lookup: HashMap<&[usize], f64> =
                list.iter().map(|e| (e.parents.as_slice(), e.score)).collect();
            list.iter()
                .filter(|e| !dominated(&e.parents, e.score, &lookup))
                .cloned()
                .collect()
        })
        .collect();
    LocalScoreTable {
        names: table.names.clone(),
        entries,
    }
}

fn dominated(parents: &[usize], score: f64, lookup: &HashMap<&[usize], f64>) -> bool {
    let k = parents.len();
    if k == 0 {
        return false;
    }
    let mut sub = Vec::with_capacity(k);
    // Every proper subset, by bitmask over positions.
    for mask in 0..(1u64 << k) - 1 {
        sub.clear();
        sub.extend((0..k).filter(|&i| mask >> i & 1 == 1).map(|i| parents[i]));
        if let Some(&s) = lookup.get(sub.as_slice()) {
            if s >= score {
                return true;
            }
        }
    }
    false
}
