use std::collections::HashSet;
use std::fmt::Write as _;

use super::{Digraph, Immoralities, ModelError, Skeleton};
use crate::scores::{LocalScoreTable, ScoreEntry};

/// Tolerance for treating a column value as 0 or 1.
pub const INTEGRALITY_TOL: f64 = 1e-6;

/// Binary column `I(W -> u)`: child `u` takes parent set `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyVar {
    pub index: usize,
    pub child: usize,
    pub parents: Vec<usize>,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Ge,
    Le,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowOrigin {
    /// Exactly one parent set for this child.
    Convexity(usize),
    /// `k`-cluster row over a sorted vertex set.
    Cluster { cluster: Vec<usize>, k: usize },
    Gomory,
    Branching,
}

/// Sparse row `sum(coef * x) sense rhs` over family columns.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub origin: RowOrigin,
}

impl LinearConstraint {
    /// Merges repeated columns, drops zero coefficients and sorts by column.
    pub fn new(terms: Vec<(usize, f64)>, sense: Sense, rhs: f64, origin: RowOrigin) -> Self {
        let mut terms = terms;
        terms.sort_by_key(|&(c, _)| c);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (c, a) in terms {
            match merged.last_mut() {
                Some((lc, la)) if *lc == c => *la += a,
                _ => merged.push((c, a)),
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        LinearConstraint {
            terms: merged,
            sense,
            rhs,
            origin,
        }
    }

    pub fn terms(&self) -> &[(usize, f64)] {
        &self.terms
    }

    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(c, a)| a * values[c]).sum()
    }

    /// How far `values` is from satisfying the row; zero or negative when
    /// satisfied.
    pub fn violation(&self, values: &[f64]) -> f64 {
        let act = self.activity(values);
        match self.sense {
            Sense::Ge => self.rhs - act,
            Sense::Le => act - self.rhs,
            Sense::Eq => (act - self.rhs).abs(),
        }
    }

    pub fn is_satisfied(&self, values: &[f64], tol: f64) -> bool {
        self.violation(values) <= tol
    }

    /// Integer coefficients and right-hand side.
    pub fn is_integral(&self) -> bool {
        let int = |x: f64| (x - x.round()).abs() < 1e-12;
        int(self.rhs) && self.terms.iter().all(|&(_, a)| int(a))
    }
}

/// Family columns plus convexity rows and any cuts added so far.
#[derive(Debug, Clone)]
pub struct IpModel {
    n: usize,
    names: Vec<String>,
    columns: Vec<FamilyVar>,
    by_child: Vec<Vec<usize>>,
    rows: Vec<LinearConstraint>,
    clusters: HashSet<(Vec<usize>, usize)>,
}

/// One column per candidate family and one convexity equality per variable.
pub fn build_model(table: &LocalScoreTable) -> IpModel {
    let n = table.n_vars();
    let mut columns = Vec::with_capacity(table.len());
    let mut by_child = vec![Vec::new(); n];
    for (u, list) in table.all_entries().iter().enumerate() {
        for e in list {
            let index = columns.len();
            by_child[u].push(index);
            columns.push(FamilyVar {
                index,
                child: u,
                parents: e.parents.clone(),
                objective: e.score,
            });
        }
    }
    let rows = by_child
        .iter()
        .enumerate()
        .map(|(u, cols)| {
            LinearConstraint::new(
                cols.iter().map(|&c| (c, 1.0)).collect(),
                Sense::Eq,
                1.0,
                RowOrigin::Convexity(u),
            )
        })
        .collect();
    IpModel {
        n,
        names: table.names().to_vec(),
        columns,
        by_child,
        rows,
        clusters: HashSet::new(),
    }
}

fn normalized_cluster(n: usize, cluster: &[usize]) -> Result<Vec<usize>, ModelError> {
    let mut c = cluster.to_vec();
    c.sort_unstable();
    c.dedup();
    if c.len() < 2 {
        return Err(ModelError::ClusterTooSmall(c.len()));
    }
    if let Some(&v) = c.iter().find(|&&v| v >= n) {
        return Err(ModelError::VertexOutOfRange(v));
    }
    Ok(c)
}

impl IpModel {
    pub fn n_vars(&self) -> usize {
        self.n
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[FamilyVar] {
        &self.columns
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, index: usize) -> &FamilyVar {
        &self.columns[index]
    }

    /// Column ids whose child is `u`.
    pub fn columns_of(&self, u: usize) -> &[usize] {
        &self.by_child[u]
    }

    pub fn rows(&self) -> &[LinearConstraint] {
        &self.rows
    }

    pub fn objective(&self) -> Vec<f64> {
        self.columns.iter().map(|c| c.objective).collect()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.columns.iter().map(|c| c.objective * values[c.index]).sum()
    }

    /// Whether a `(C, k)` cluster row is already present.
    pub fn has_cluster(&self, cluster: &[usize], k: usize) -> bool {
        let mut c = cluster.to_vec();
        c.sort_unstable();
        self.clusters.contains(&(c, k))
    }

    /// Appends a row. Cluster rows already present are ignored; returns
    /// whether the row was added.
    pub fn add_row(&mut self, row: LinearConstraint) -> bool {
        if let RowOrigin::Cluster { cluster, k } = &row.origin {
            if !self.clusters.insert((cluster.clone(), *k)) {
                return false;
            }
        }
        self.rows.push(row);
        true
    }

    /// The `k`-cluster row for `cluster`: at least `k` members have fewer
    /// than `k` parents inside the cluster.
    ///
    /// For `k = 1` each child's block is written in whichever of the two
    /// equivalent forms has fewer terms: the direct sum over parent sets
    /// missing the cluster, or one minus the sum over parent sets that meet it.
    pub fn cluster_row(&self, cluster: &[usize], k: usize) -> Result<LinearConstraint, ModelError> {
        let c = normalized_cluster(self.n, cluster)?;
        if k == 0 || k > c.len() {
            return Err(ModelError::BadClusterLevel { k, size: c.len() });
        }
        let mut inside = vec![false; self.n];
        for &v in &c {
            inside[v] = true;
        }
        let mut terms = Vec::new();
        let mut rhs = k as f64;
        for &u in &c {
            let (direct, other): (Vec<usize>, Vec<usize>) = self.by_child[u]
                .iter()
                .partition(|&&col| self.parents_in(col, &inside) < k);
            if k == 1 && other.len() < direct.len() {
                terms.extend(other.iter().map(|&col| (col, -1.0)));
                rhs -= 1.0;
            } else {
                terms.extend(direct.iter().map(|&col| (col, 1.0)));
            }
        }
        Ok(LinearConstraint::new(
            terms,
            Sense::Ge,
            rhs,
            RowOrigin::Cluster { cluster: c, k },
        ))
    }

    fn parents_in(&self, col: usize, inside: &[bool]) -> usize {
        self.columns[col].parents.iter().filter(|&&p| inside[p]).count()
    }

    /// Reads the digraph named by an integral, convexity-feasible assignment.
    pub fn extract_digraph(&self, values: &[f64]) -> Result<Digraph, ModelError> {
        if values.len() != self.columns.len() {
            return Err(ModelError::Assignment(format!(
                "{} values for {} columns",
                values.len(),
                self.columns.len()
            )));
        }
        if let Some(col) = values
            .iter()
            .position(|&x| x.abs() > INTEGRALITY_TOL && (x - 1.0).abs() > INTEGRALITY_TOL)
        {
            return Err(ModelError::Fractional {
                column: col,
                value: values[col],
            });
        }
        let mut parents = Vec::with_capacity(self.n);
        for u in 0..self.n {
            let sum: f64 = self.by_child[u].iter().map(|&c| values[c]).sum();
            if (sum - 1.0).abs() > INTEGRALITY_TOL {
                return Err(ModelError::Convexity { child: u, sum });
            }
            let chosen = self.by_child[u]
                .iter()
                .find(|&&c| values[c] > 0.5)
                .expect("a column at one exists when the sum is one");
            parents.push(self.columns[*chosen].parents.clone());
        }
        Ok(Digraph::new(parents))
    }

    /// Column vector selecting the families of `g`, or `None` when some
    /// parent set of `g` is not a candidate.
    pub fn incidence(&self, g: &Digraph) -> Option<Vec<f64>> {
        let mut x = vec![0.0; self.columns.len()];
        for u in 0..self.n {
            let col = self.by_child[u]
                .iter()
                .find(|&&c| self.columns[c].parents == g.parents(u))?;
            x[*col] = 1.0;
        }
        Some(x)
    }

    /// Objective value of `g` under this model's scores.
    pub fn score_of(&self, g: &Digraph) -> Option<f64> {
        self.incidence(g).map(|x| self.objective_value(&x))
    }

    /// Candidate parent sets and scores as a table.
    pub fn candidate_table(&self) -> LocalScoreTable {
        let entries = self
            .by_child
            .iter()
            .map(|cols| {
                cols.iter()
                    .map(|&c| ScoreEntry {
                        parents: self.columns[c].parents.clone(),
                        score: self.columns[c].objective,
                    })
                    .collect()
            })
            .collect();
        LocalScoreTable::new(self.names.clone(), entries)
            .expect("model columns form a valid table")
    }

    /// The current relaxation in the plain-text LP file format.
    pub fn to_lp_format(&self) -> String {
        let var = |c: usize| format!("x{}", c);
        let mut out = String::from("\\ family-variable relaxation\nMaximize\n obj:");
        for col in &self.columns {
            let _ = write!(out, " {:+} {}", col.objective, var(col.index));
        }
        out.push_str("\nSubject To\n");
        for (i, row) in self.rows.iter().enumerate() {
            let _ = write!(out, " r{}:", i);
            for &(c, a) in row.terms() {
                let _ = write!(out, " {:+} {}", a, var(c));
            }
            let op = match row.sense {
                Sense::Ge => ">=",
                Sense::Le => "<=",
                Sense::Eq => "=",
            };
            if row.terms().is_empty() {
                out.push_str(" 0 x0");
            }
            let _ = writeln!(out, " {} {}", op, row.rhs);
        }
        out.push_str("Bounds\n");
        for col in &self.columns {
            let _ = writeln!(out, " 0 <= {} <= 1", var(col.index));
        }
        out.push_str("End\n");
        out
    }
}

/// Surplus of the `k`-cluster constraint for `cluster` at the DAG `g`:
/// the number of members with fewer than `k` parents in the cluster, minus `k`.
pub fn surplus(g: &Digraph, cluster: &[usize], k: usize) -> Result<usize, ModelError> {
    if !g.is_acyclic() {
        return Err(ModelError::Cyclic);
    }
    let c = normalized_cluster(g.n(), cluster)?;
    if k == 0 || k > c.len() {
        return Err(ModelError::BadClusterLevel { k, size: c.len() });
    }
    let lhs = c
        .iter()
        .filter(|&&u| g.parents(u).iter().filter(|p| c.binary_search(p).is_ok()).count() < k)
        .count();
    Ok(lhs
        .checked_sub(k)
        .expect("cluster constraints hold for every DAG"))
}

/// Skeleton and immoralities recovered purely from 1-cluster surplus values
/// of all clusters of size two and three.
pub fn signature_from_surplus(g: &Digraph) -> Result<(Skeleton, Immoralities), ModelError> {
    let n = g.n();
    let mut pair = vec![vec![0usize; n]; n];
    let mut skeleton = Skeleton::new();
    for u in 0..n {
        for v in u + 1..n {
            let s = surplus(g, &[u, v], 1)?;
            pair[u][v] = s;
            pair[v][u] = s;
            if s == 0 {
                skeleton.insert((u, v));
            }
        }
    }
    let mut immoralities = Immoralities::new();
    for w in 0..n {
        for u in 0..n {
            for v in u + 1..n {
                if u == w || v == w {
                    continue;
                }
                if pair[u][w] == 0
                    && pair[v][w] == 0
                    && pair[u][v] == 1
                    && surplus(g, &[u, v, w], 1)? == 1
                {
                    immoralities.insert((u, w, v));
                }
            }
        }
    }
    Ok((skeleton, immoralities))
}
