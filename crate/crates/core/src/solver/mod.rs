//! Branch-and-cut over the family-variable model.
//!
//! Each node re-solves the LP under its fixings and runs a cut loop: cluster
//! cuts first, Gomory cuts only when no cluster cut is found, branching when
//! neither helps. Every cut is globally valid and is stored in the shared
//! model. Open nodes are processed best bound first.

mod heuristics;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::gomory::{gomory_cuts, DEFAULT_MAX_GOMORY_CUTS};
use crate::ip_model::{Digraph, IpModel, RowOrigin, INTEGRALITY_TOL};
use crate::lp::{LpError, LpRelaxation};
use crate::separation::{find_cluster_cuts_with, SeparationLimits};

pub use heuristics::{best_dag_for_order, random_order_search, try_rounding_incumbent};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("no acyclic choice of candidate parent sets exists")]
    Infeasible,
    #[error("branching needs a fractional solution")]
    NothingToBranchOn,
}

#[derive(Debug, Clone)]
pub struct SolverParams {
    pub time_limit: Option<Duration>,
    pub node_limit: Option<u64>,
    /// Limit on each cluster-cut search.
    pub subip_time_limit: Option<Duration>,
    /// Cap on clusters collected by one search.
    pub max_cluster_cuts: Option<usize>,
    /// Most efficacious cluster cuts added per round.
    pub cluster_cuts_per_round: Option<usize>,
    pub gomory: bool,
    pub max_gomory_cuts: usize,
    /// Add the 2-cluster row alongside each 1-cluster cut.
    pub k2_cuts: bool,
    /// Random-order and rounding heuristics.
    pub heuristics: bool,
    pub random_orders: usize,
    pub seed: u64,
    /// Rounds of negligible bound change after which a node branches.
    pub stall_rounds: usize,
    /// Record a [`TraceEvent`] log in the stats.
    pub trace: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            time_limit: None,
            node_limit: None,
            subip_time_limit: None,
            max_cluster_cuts: Some(2000),
            cluster_cuts_per_round: Some(500),
            gomory: true,
            max_gomory_cuts: DEFAULT_MAX_GOMORY_CUTS,
            k2_cuts: true,
            heuristics: true,
            random_orders: 100,
            seed: 0,
            stall_rounds: 50,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Incumbent {
    pub digraph: Digraph,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Lp { node: u64, bound: f64 },
    ClusterCuts { node: u64, added: usize },
    GomoryCuts { node: u64, added: usize },
    Branch { node: u64, column: usize },
    Incumbent { node: u64, score: f64 },
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SolveStats {
    pub nodes: u64,
    pub cluster_cuts: u64,
    pub k2_cuts: u64,
    pub gomory_cuts: u64,
    pub lp_solves: u64,
    pub lp_iterations: u64,
    pub separation_nodes: u64,
    pub rows: usize,
    pub columns: usize,
    pub wall_time_secs: f64,
    pub truncated_time: bool,
    pub truncated_nodes: bool,
    pub separation_truncated: bool,
    /// LP bound after every root solve, in order.
    pub root_bounds: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceEvent>,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub optimal: Incumbent,
    /// Upper bound on the score of every DAG in the model.
    pub proof_bound: f64,
    pub stats: SolveStats,
}

impl SolveResult {
    pub fn truncated(&self) -> bool {
        self.stats.truncated_time || self.stats.truncated_nodes
    }

    /// Whether `proof_bound` certifies the incumbent within the gap.
    pub fn proved_optimal(&self) -> bool {
        self.proof_bound - self.optimal.score <= gap_tol(self.optimal.score)
    }
}

/// Absolute optimality gap allowed at `score`.
pub fn gap_tol(score: f64) -> f64 {
    1e-6 * (1.0 + score.abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchNode {
    pub id: u64,
    pub fixings: Vec<(usize, bool)>,
    pub parent_bound: f64,
    pub depth: usize,
}

struct Open(SearchNode);

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Open {}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .parent_bound
            .total_cmp(&other.0.parent_bound)
            .then(other.0.id.cmp(&self.0.id))
    }
}

/// Most fractional column, ties to the larger |objective| then lower id.
pub fn branching_column(x: &[f64], model: &IpModel) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, &v) in x.iter().enumerate() {
        let f = v.min(1.0 - v);
        if f <= INTEGRALITY_TOL {
            continue;
        }
        let better = match best {
            None => true,
            Some((b, bf)) => {
                if (f - bf).abs() > 1e-12 {
                    f > bf
                } else {
                    model.column(j).objective.abs() > model.column(b).objective.abs()
                }
            }
        };
        if better {
            best = Some((j, f));
        }
    }
    best.map(|(j, _)| j)
}

/// Children fixing the chosen column to 0 and to 1; the second also fixes
/// the column's siblings to 0.
pub fn branch(node: &SearchNode, x: &[f64], model: &IpModel, bound: f64, next_id: &mut u64) -> Result<(SearchNode, SearchNode, usize), SolveError> {
    let j = branching_column(x, model).ok_or(SolveError::NothingToBranchOn)?;
    let mut zero = node.fixings.clone();
    zero.push((j, false));
    let mut one = node.fixings.clone();
    let child = model.column(j).child;
    for &c in model.columns_of(child) {
        one.push((c, c == j));
    }
    one.sort_unstable();
    one.dedup();
    let mut make = |fixings| {
        *next_id += 1;
        SearchNode {
            id: *next_id,
            fixings,
            parent_bound: bound,
            depth: node.depth + 1,
        }
    };
    let z = make(zero);
    let o = make(one);
    Ok((z, o, j))
}

/// Vertices of some directed cycle in `g`, if any.
fn find_cycle(g: &Digraph) -> Option<Vec<usize>> {
    let n = g.n();
    // Walk parent links from every vertex; a revisit within one walk is a cycle.
    let mut state = vec![0u8; n];
    for start in 0..n {
        if state[start] != 0 {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        state[start] = 1;
        while let Some(top) = stack.last_mut() {
            let (u, i) = *top;
            if let Some(&p) = g.parents(u).get(i) {
                top.1 += 1;
                if state[p] == 1 {
                    let pos = stack.iter().position(|&(v, _)| v == p).unwrap();
                    let mut c: Vec<usize> = stack[pos..].iter().map(|&(v, _)| v).collect();
                    c.sort_unstable();
                    return Some(c);
                }
                if state[p] == 0 {
                    state[p] = 1;
                    stack.push((p, 0));
                }
            } else {
                state[u] = 2;
                stack.pop();
            }
        }
    }
    None
}

struct Run<'a> {
    model: &'a mut IpModel,
    lp: LpRelaxation,
    params: &'a SolverParams,
    start: Instant,
    incumbent: Option<Incumbent>,
    stats: SolveStats,
    /// Largest LP bound among subtrees closed by bound.
    closed_bound: f64,
}

enum NodeOutcome {
    Closed,
    Branched(SearchNode, SearchNode),
    OutOfTime(f64),
}

impl Run<'_> {
    fn gap_reached(&self, bound: f64) -> bool {
        self.incumbent
            .as_ref()
            .is_some_and(|inc| bound <= inc.score + gap_tol(inc.score))
    }

    fn out_of_time(&self) -> bool {
        self.params
            .time_limit
            .is_some_and(|t| self.start.elapsed() >= t)
    }

    fn trace(&mut self, e: TraceEvent) {
        if self.params.trace {
            self.stats.trace.push(e);
        }
    }

    fn offer(&mut self, cand: Incumbent, node: u64) {
        if self.incumbent.as_ref().is_none_or(|inc| cand.score > inc.score) {
            log::info!("node {node}: new incumbent {:.6}", cand.score);
            self.trace(TraceEvent::Incumbent { node, score: cand.score });
            self.incumbent = Some(cand);
        }
    }

    fn add_row(&mut self, row: crate::ip_model::LinearConstraint) -> bool {
        if self.model.add_row(row.clone()) {
            self.lp.add_row(&row);
            true
        } else {
            false
        }
    }

    fn process(&mut self, node: &SearchNode, next_id: &mut u64) -> Result<NodeOutcome, SolveError> {
        self.lp.set_fixings(&node.fixings)?;
        let root = node.id == 0;
        let mut last_bound = f64::INFINITY;
        let mut stall = 0usize;
        loop {
            let iterations_before = self.lp.total_iterations();
            let sol = self.lp.solve()?;
            self.stats.lp_solves += 1;
            self.stats.lp_iterations += self.lp.total_iterations() - iterations_before;
            if !sol.is_optimal() {
                return Ok(NodeOutcome::Closed);
            }
            let bound = sol.objective;
            if root {
                self.stats.root_bounds.push(bound);
            }
            self.trace(TraceEvent::Lp { node: node.id, bound });
            if self.gap_reached(bound) {
                self.closed_bound = self.closed_bound.max(bound);
                return Ok(NodeOutcome::Closed);
            }
            if self.params.heuristics {
                if let Some(c) = try_rounding_incumbent(&sol.values, self.model, self.incumbent.as_ref()) {
                    self.offer(c, node.id);
                    if self.gap_reached(bound) {
                        self.closed_bound = self.closed_bound.max(bound);
                        return Ok(NodeOutcome::Closed);
                    }
                }
            }
            let x = &sol.values;
            let integral = x
                .iter()
                .all(|&v| v.abs() <= INTEGRALITY_TOL || (v - 1.0).abs() <= INTEGRALITY_TOL);
            if integral {
                let g = self
                    .model
                    .extract_digraph(x)
                    .expect("an integral LP point satisfies convexity");
                match find_cycle(&g) {
                    None => {
                        let score = self.model.score_of(&g).expect("extracted families are columns");
                        self.offer(Incumbent { digraph: g, score }, node.id);
                        self.closed_bound = self.closed_bound.max(bound);
                        return Ok(NodeOutcome::Closed);
                    }
                    Some(cycle) => {
                        // The cycle's own cluster is violated by one.
                        let row = self.model.cluster_row(&cycle, 1).expect("cycles have two or more vertices");
                        if self.add_row(row) {
                            self.stats.cluster_cuts += 1;
                            self.trace(TraceEvent::ClusterCuts { node: node.id, added: 1 });
                            continue;
                        }
                    }
                }
            }
            if self.out_of_time() {
                return Ok(NodeOutcome::OutOfTime(bound));
            }

            if bound < last_bound - 1e-9 * (1.0 + bound.abs()) {
                stall = 0;
            } else {
                stall += 1;
            }
            last_bound = bound;

            if stall < self.params.stall_rounds || integral {
                let limits = SeparationLimits {
                    time_limit: self.params.subip_time_limit,
                    max_cuts: self.params.max_cluster_cuts,
                };
                let mut found = find_cluster_cuts_with(x, self.model, limits);
                self.stats.separation_nodes += found.nodes;
                self.stats.separation_truncated |= found.truncated;
                found.cuts.retain(|c| !self.model.has_cluster(&c.cluster, 1));
                found
                    .cuts
                    .sort_by(|a, b| b.efficacy.total_cmp(&a.efficacy).then_with(|| a.cluster.cmp(&b.cluster)));
                if let Some(k) = self.params.cluster_cuts_per_round {
                    found.cuts.truncate(k);
                }
                let mut added = 0;
                for cut in &found.cuts {
                    let row = self.model.cluster_row(&cut.cluster, 1).expect("found clusters are valid");
                    if self.add_row(row) {
                        added += 1;
                        self.stats.cluster_cuts += 1;
                        if self.params.k2_cuts && cut.cluster.len() >= 3 {
                            let row2 = self.model.cluster_row(&cut.cluster, 2).expect("size at least three");
                            if self.add_row(row2) {
                                self.stats.k2_cuts += 1;
                            }
                        }
                    }
                }
                if added > 0 {
                    self.trace(TraceEvent::ClusterCuts { node: node.id, added });
                    if root {
                        log::info!(
                            "root: bound {bound:.6}, {added} cluster cuts, {} rows",
                            self.model.rows().len()
                        );
                    }
                    continue;
                }
                if self.params.gomory {
                    let cuts = gomory_cuts(&mut self.lp, &sol, self.model, self.params.max_gomory_cuts);
                    let mut added = 0;
                    for cut in cuts {
                        if self.add_row(cut.row) {
                            added += 1;
                        }
                    }
                    if added > 0 {
                        self.stats.gomory_cuts += added as u64;
                        self.trace(TraceEvent::GomoryCuts { node: node.id, added });
                        log::debug!("node {}: {added} Gomory cuts", node.id);
                        continue;
                    }
                }
            }

            let (zero, one, column) = branch(node, x, self.model, bound, next_id)?;
            self.trace(TraceEvent::Branch { node: node.id, column });
            return Ok(NodeOutcome::Branched(zero, one));
        }
    }
}

/// Solves `model` to proven optimality, or to the best point reached within
/// the limits. Cuts found along the way are left in `model`.
pub fn solve(model: &mut IpModel, params: &SolverParams) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    if (0..model.n_vars()).any(|u| model.columns_of(u).is_empty()) {
        return Err(SolveError::Infeasible);
    }
    let lp = LpRelaxation::new(model)?;
    let mut run = Run {
        lp,
        params,
        start,
        incumbent: None,
        stats: SolveStats::default(),
        closed_bound: f64::NEG_INFINITY,
        model,
    };
    if params.heuristics && params.random_orders > 0 {
        let table = run.model.candidate_table();
        if let Some(c) = random_order_search(&table, params.random_orders, params.seed) {
            run.offer(c, 0);
        }
    }

    let mut heap = BinaryHeap::new();
    heap.push(Open(SearchNode {
        id: 0,
        fixings: Vec::new(),
        parent_bound: f64::INFINITY,
        depth: 0,
    }));
    let mut next_id = 0u64;
    let mut open_bound = f64::NEG_INFINITY;
    while let Some(Open(node)) = heap.pop() {
        if run.gap_reached(node.parent_bound) {
            run.closed_bound = run.closed_bound.max(node.parent_bound);
            continue;
        }
        if run.out_of_time() {
            run.stats.truncated_time = true;
            open_bound = open_bound.max(node.parent_bound);
            break;
        }
        if params.node_limit.is_some_and(|l| run.stats.nodes >= l) {
            run.stats.truncated_nodes = true;
            open_bound = open_bound.max(node.parent_bound);
            break;
        }
        run.stats.nodes += 1;
        match run.process(&node, &mut next_id)? {
            NodeOutcome::Closed => {}
            NodeOutcome::Branched(a, b) => {
                heap.push(Open(a));
                heap.push(Open(b));
            }
            NodeOutcome::OutOfTime(bound) => {
                run.stats.truncated_time = true;
                open_bound = open_bound.max(bound);
                break;
            }
        }
        if run.stats.nodes.is_multiple_of(100) {
            log::info!(
                "{} nodes, {} open, incumbent {:?}",
                run.stats.nodes,
                heap.len(),
                run.incumbent.as_ref().map(|i| i.score)
            );
        }
    }
    for Open(node) in heap.iter() {
        if !run.gap_reached(node.parent_bound) {
            open_bound = open_bound.max(node.parent_bound);
        }
    }

    let incumbent = match run.incumbent.take() {
        Some(inc) => inc,
        None => {
            let empty = Digraph::empty(run.model.n_vars());
            match run.model.score_of(&empty) {
                Some(score) if open_bound > f64::NEG_INFINITY => Incumbent { digraph: empty, score },
                _ => return Err(SolveError::Infeasible),
            }
        }
    };
    let proof_bound = incumbent.score.max(run.closed_bound).max(open_bound);
    run.stats.rows = run.model.rows().len();
    run.stats.columns = run.model.n_columns();
    run.stats.wall_time_secs = start.elapsed().as_secs_f64();
    log::info!(
        "done: score {:.6}, bound {:.6}, {} nodes, {} cluster cuts, {} Gomory cuts",
        incumbent.score,
        proof_bound,
        run.stats.nodes,
        run.stats.cluster_cuts,
        run.stats.gomory_cuts
    );
    Ok(SolveResult {
        optimal: incumbent,
        proof_bound,
        stats: run.stats,
    })
}

/// Number of cluster rows of each level currently in `model`.
pub fn cluster_row_counts(model: &IpModel) -> (usize, usize) {
    model.rows().iter().fold((0, 0), |(k1, k2), r| match r.origin {
        RowOrigin::Cluster { k: 1, .. } => (k1 + 1, k2),
        RowOrigin::Cluster { .. } => (k1, k2 + 1),
        _ => (k1, k2),
    })
}
