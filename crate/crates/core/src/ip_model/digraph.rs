use std::collections::BTreeSet;
use std::fmt::Write as _;

/// A directed graph given by one parent set per vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Digraph {
    parents: Vec<Vec<usize>>,
}

/// Undirected skeleton edges `(a, b)` with `a < b`.
pub type Skeleton = BTreeSet<(usize, usize)>;

/// Immoralities `(u, w, v)` meaning `u -> w <- v`, with `u < v` and `u`, `v`
/// non-adjacent.
pub type Immoralities = BTreeSet<(usize, usize, usize)>;

impl Digraph {
    /// Builds a digraph; parent sets are sorted and deduplicated.
    ///
    /// # Panics
    /// If a vertex lists itself or an out-of-range vertex as a parent.
    pub fn new(mut parents: Vec<Vec<usize>>) -> Self {
        let n = parents.len();
        for (u, p) in parents.iter_mut().enumerate() {
            p.sort_unstable();
            p.dedup();
            assert!(
                p.iter().all(|&w| w < n && w != u),
                "invalid parent set {:?} for vertex {}",
                p,
                u
            );
        }
        Digraph { parents }
    }

    pub fn empty(n: usize) -> Self {
        Digraph {
            parents: vec![Vec::new(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.parents.len()
    }

    pub fn parents(&self, u: usize) -> &[usize] {
        &self.parents[u]
    }

    pub fn parent_map(&self) -> &[Vec<usize>] {
        &self.parents
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.parents[to].binary_search(&from).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    /// Some topological order, or `None` when the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        // Iterative depth-first search over parent links: a vertex is emitted
        // once all of its parents have been emitted.
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let n = self.n();
        let mut mark = vec![Mark::New; n];
        let mut order = Vec::with_capacity(n);
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for root in 0..n {
            if mark[root] != Mark::New {
                continue;
            }
            mark[root] = Mark::Active;
            stack.push((root, 0));
            while let Some(top) = stack.last_mut() {
                let (u, next) = *top;
                if let Some(&w) = self.parents[u].get(next) {
                    top.1 += 1;
                    match mark[w] {
                        Mark::Active => return None,
                        Mark::New => {
                            mark[w] = Mark::Active;
                            stack.push((w, 0));
                        }
                        Mark::Done => {}
                    }
                } else {
                    mark[u] = Mark::Done;
                    order.push(u);
                    stack.pop();
                }
            }
        }
        Some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// Undirected skeleton and immoralities, read directly off the arcs.
    pub fn skeleton_and_immoralities(&self) -> (Skeleton, Immoralities) {
        let mut skeleton = Skeleton::new();
        for (w, ps) in self.parents.iter().enumerate() {
            for &u in ps {
                skeleton.insert((u.min(w), u.max(w)));
            }
        }
        let mut immoralities = Immoralities::new();
        for (w, ps) in self.parents.iter().enumerate() {
            for (i, &u) in ps.iter().enumerate() {
                for &v in &ps[i + 1..] {
                    if !skeleton.contains(&(u, v)) {
                        immoralities.insert((u, w, v));
                    }
                }
            }
        }
        (skeleton, immoralities)
    }

    /// One `child <- p1,p2` line per vertex.
    pub fn to_text(&self, names: &[String]) -> String {
        let mut out = String::new();
        for (u, ps) in self.parents.iter().enumerate() {
            let list: Vec<&str> = ps.iter().map(|&p| names[p].as_str()).collect();
            let _ = writeln!(out, "{} <- {}", names[u], list.join(","));
        }
        out
    }

    pub fn to_dot(&self, names: &[String]) -> String {
        let mut out = String::from("digraph bn {\n");
        for name in names {
            let _ = writeln!(out, "  \"{}\";", name);
        }
        for (u, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                let _ = writeln!(out, "  \"{}\" -> \"{}\";", names[p], names[u]);
            }
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_detection() {
        assert!(Digraph::empty(4).is_acyclic());
        assert!(!Digraph::new(vec![vec![1], vec![0]]).is_acyclic());
        assert!(!Digraph::new(vec![vec![2], vec![0], vec![1]]).is_acyclic());
        let chain = Digraph::new(vec![vec![], vec![0], vec![1], vec![1, 2]]);
        let order = chain.topological_order().unwrap();
        let pos: Vec<usize> = (0..4).map(|v| order.iter().position(|&x| x == v).unwrap()).collect();
        for u in 0..4 {
            for &p in chain.parents(u) {
                assert!(pos[p] < pos[u]);
            }
        }
    }

    #[test]
    fn random_order_dags_are_acyclic() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(1..9);
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let mut parents = vec![Vec::new(); n];
            for i in 0..n {
                for j in 0..i {
                    if rng.gen_bool(0.4) {
                        parents[order[i]].push(order[j]);
                    }
                }
            }
            assert!(Digraph::new(parents).is_acyclic());
        }
    }

    #[test]
    fn immorality_read_off() {
        // 0 -> 2 <- 1
        let g = Digraph::new(vec![vec![], vec![], vec![0, 1]]);
        let (sk, im) = g.skeleton_and_immoralities();
        assert_eq!(sk, [(0, 2), (1, 2)].into_iter().collect());
        assert_eq!(im, [(0, 2, 1)].into_iter().collect());
        let (sk, im) = Digraph::empty(3).skeleton_and_immoralities();
        assert!(sk.is_empty() && im.is_empty());
        // Shielded collider is not an immorality.
        let g = Digraph::new(vec![vec![], vec![0], vec![0, 1]]);
        assert!(g.skeleton_and_immoralities().1.is_empty());
    }

    #[test]
    fn text_and_dot() {
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let g = Digraph::new(vec![vec![], vec![0], vec![0, 1]]);
        assert_eq!(g.to_text(&names), "a <- \nb <- a\nc <- a,b\n");
        let dot = g.to_dot(&names);
        assert!(dot.contains("\"a\" -> \"c\";"));
        assert_eq!(dot.matches("->").count(), 3);
    }
}
