//! Separation of violated 1-cluster constraints.
//!
//! For a vertex set `C` the 1-cluster row is violated by `x` exactly when
//! `sum over u in C, W disjoint from C of x(W -> u)` is below one. The search
//! below minimises that sum by depth-first search over cluster memberships,
//! pruning any subtree whose already-forced terms reach the threshold, and
//! returns every violated cluster met at a leaf.

use std::time::{Duration, Instant};

use crate::ip_model::{IpModel, LinearConstraint};

/// A cut must be violated by more than this to be reported.
pub const VIOLATION_TOL: f64 = 1e-4;

/// Column values at or below this never contribute to the search objective.
const ACTIVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct FoundCut {
    /// Sorted vertex set, at least two members.
    pub cluster: Vec<usize>,
    /// `1 - subip_objective`.
    pub violation: f64,
    pub efficacy: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SeparationOutcome {
    pub cuts: Vec<FoundCut>,
    /// Search nodes visited.
    pub nodes: u64,
    /// The search stopped early on the time or cut limit.
    pub truncated: bool,
}

/// Limits for one separation call; the default is an exhaustive search.
#[derive(Debug, Clone, Copy, Default)]
pub struct SeparationLimits {
    pub time_limit: Option<Duration>,
    /// Stop after this many cuts have been collected.
    pub max_cuts: Option<usize>,
}

/// `sum over u in C, W disjoint from C of x(W -> u)`.
pub fn subip_objective(x: &[f64], cluster: &[usize], model: &IpModel) -> f64 {
    let mut inside = vec![false; model.n_vars()];
    for &v in cluster {
        inside[v] = true;
    }
    cluster
        .iter()
        .flat_map(|&u| model.columns_of(u))
        .filter(|&&c| model.column(c).parents.iter().all(|&p| !inside[p]))
        .map(|&c| x[c])
        .sum()
}

/// Number of columns in the direct form of the 1-cluster row for `cluster`.
fn direct_support(cluster: &[usize], model: &IpModel) -> usize {
    let mut inside = vec![false; model.n_vars()];
    for &v in cluster {
        inside[v] = true;
    }
    cluster
        .iter()
        .flat_map(|&u| model.columns_of(u))
        .filter(|&&c| model.column(c).parents.iter().all(|&p| !inside[p]))
        .count()
}

/// Violation over the Euclidean norm of the direct-form 0/1 row.
pub fn efficacy(cut: &FoundCut, model: &IpModel) -> f64 {
    cut.violation / (direct_support(&cut.cluster, model) as f64).sqrt()
}

/// Exhaustive search for violated 1-cluster constraints.
pub fn find_cluster_cuts(x: &[f64], model: &IpModel) -> SeparationOutcome {
    find_cluster_cuts_with(x, model, SeparationLimits::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Member {
    Undecided,
    In,
    Out,
}

struct Term {
    child: usize,
    size: usize,
    weight: f64,
    parents_out: usize,
}

struct Search<'a> {
    model: &'a IpModel,
    x: &'a [f64],
    order: Vec<usize>,
    state: Vec<Member>,
    terms: Vec<Term>,
    as_child: Vec<Vec<usize>>,
    as_parent: Vec<Vec<usize>>,
    locked: f64,
    n_in: usize,
    threshold: f64,
    limits: SeparationLimits,
    start: Instant,
    out: SeparationOutcome,
}

impl Search<'_> {
    fn locks(&self, t: usize) -> bool {
        let term = &self.terms[t];
        self.state[term.child] == Member::In && term.parents_out == term.size
    }

    fn assign(&mut self, v: usize, m: Member) {
        self.state[v] = m;
        match m {
            Member::In => {
                self.n_in += 1;
                for i in 0..self.as_child[v].len() {
                    let t = self.as_child[v][i];
                    if self.locks(t) {
                        self.locked += self.terms[t].weight;
                    }
                }
            }
            Member::Out => {
                for i in 0..self.as_parent[v].len() {
                    let t = self.as_parent[v][i];
                    self.terms[t].parents_out += 1;
                    if self.locks(t) {
                        self.locked += self.terms[t].weight;
                    }
                }
            }
            Member::Undecided => unreachable!(),
        }
    }

    fn unassign(&mut self, v: usize) {
        match self.state[v] {
            Member::In => {
                for i in 0..self.as_child[v].len() {
                    let t = self.as_child[v][i];
                    if self.locks(t) {
                        self.locked -= self.terms[t].weight;
                    }
                }
                self.n_in -= 1;
            }
            Member::Out => {
                for i in 0..self.as_parent[v].len() {
                    let t = self.as_parent[v][i];
                    if self.locks(t) {
                        self.locked -= self.terms[t].weight;
                    }
                    self.terms[t].parents_out -= 1;
                }
            }
            Member::Undecided => unreachable!(),
        }
        self.state[v] = Member::Undecided;
    }

    fn stop(&mut self) -> bool {
        if self.out.truncated {
            return true;
        }
        if let Some(max) = self.limits.max_cuts {
            if self.out.cuts.len() >= max {
                self.out.truncated = true;
            }
        }
        if let Some(limit) = self.limits.time_limit {
            if self.out.nodes.is_multiple_of(256) && self.start.elapsed() >= limit {
                self.out.truncated = true;
            }
        }
        self.out.truncated
    }

    fn dfs(&mut self, depth: usize) {
        self.out.nodes += 1;
        if self.stop() {
            return;
        }
        if self.locked >= self.threshold || self.n_in + (self.order.len() - depth) < 2 {
            return;
        }
        if depth == self.order.len() {
            self.leaf();
            return;
        }
        let v = self.order[depth];
        for m in [Member::In, Member::Out] {
            self.assign(v, m);
            self.dfs(depth + 1);
            self.unassign(v);
        }
    }

    fn leaf(&mut self) {
        let cluster: Vec<usize> = (0..self.state.len())
            .filter(|&v| self.state[v] == Member::In)
            .collect();
        // The running sum skips tiny columns; report the exact value.
        let objective = subip_objective(self.x, &cluster, self.model);
        let violation = 1.0 - objective;
        if violation > VIOLATION_TOL {
            let mut cut = FoundCut {
                cluster,
                violation,
                efficacy: 0.0,
            };
            cut.efficacy = efficacy(&cut, self.model);
            self.out.cuts.push(cut);
        }
    }
}

/// As [`find_cluster_cuts`], stopping early at the given limits.
pub fn find_cluster_cuts_with(x: &[f64], model: &IpModel, limits: SeparationLimits) -> SeparationOutcome {
    let n = model.n_vars();
    let mut terms = Vec::new();
    let mut as_child = vec![Vec::new(); n];
    let mut as_parent = vec![Vec::new(); n];
    let mut entangled = vec![0.0; n];
    for col in model.columns() {
        let w = x[col.index];
        if w <= ACTIVE_TOL {
            continue;
        }
        let t = terms.len();
        as_child[col.child].push(t);
        entangled[col.child] += w;
        for &p in &col.parents {
            as_parent[p].push(t);
            entangled[p] += w;
        }
        terms.push(Term {
            child: col.child,
            size: col.parents.len(),
            weight: w,
            parents_out: 0,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| entangled[b].total_cmp(&entangled[a]).then(a.cmp(&b)));

    let mut search = Search {
        model,
        x,
        order,
        state: vec![Member::Undecided; n],
        terms,
        as_child,
        as_parent,
        locked: 0.0,
        n_in: 0,
        threshold: 1.0 - VIOLATION_TOL,
        limits,
        start: Instant::now(),
        out: SeparationOutcome::default(),
    };
    search.dfs(0);
    search.out
}

/// The 2-cluster row for every found cluster with at least three members.
pub fn paired_k2_cuts(cuts: &[FoundCut], model: &IpModel) -> Vec<LinearConstraint> {
    cuts.iter()
        .filter(|c| c.cluster.len() >= 3)
        .map(|c| {
            model
                .cluster_row(&c.cluster, 2)
                .expect("found clusters are valid for k = 2")
        })
        .collect()
}
