//! Simple undirected unweighted graphs with dense 0-indexed node ids,
//! random-graph generators, and edge-list ingestion.

mod generate;
mod io;

pub use generate::{gen_ba, gen_caveman, gen_er, gen_grid, gen_ws, GraphModel};
pub use io::{bundled_graph, bundled_manifest, parse_edge_list, DatasetInfo, LoadedGraph, BUNDLED_NAMES};

use crate::error::{Error, Result};

/// An undirected graph without self-loops or duplicate edges.
///
/// Nodes are `0..n`. The edge list is kept in canonical form (`u < v`,
/// sorted) and each adjacency list is sorted ascending, so iteration order
/// is deterministic everywhere downstream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(u32, u32)>,
    adj: Vec<Vec<u32>>,
}

impl Graph {
    /// Builds a graph on `n` nodes from an edge iterator. Self-loops are
    /// rejected; duplicate edges (in either orientation) collapse to one.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Graph>
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        if n == 0 {
            return Err(Error::InvalidParameter("graph needs at least 1 node".into()));
        }
        let mut canon: Vec<(u32, u32)> = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidParameter(format!("self-loop at node {a}")));
            }
            if a as usize >= n || b as usize >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({a}, {b}) out of range for n={n}"
                )));
            }
            canon.push((a.min(b), a.max(b)));
        }
        canon.sort_unstable();
        canon.dedup();

        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &canon {
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Graph { n, edges: canon, adj })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Canonical edge list: `u < v`, sorted lexicographically.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Neighbors of `v` in ascending id order.
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&(v as u32)).is_ok()
    }

    /// Connected components as sorted node-id lists, ordered by smallest
    /// member id.
    pub fn components(&self) -> Vec<Vec<u32>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start as u32];
            seen[start] = true;
            let mut queue = std::collections::VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &w in self.neighbors(v) {
                    if !seen[w as usize] {
                        seen[w as usize] = true;
                        comp.push(w);
                        queue.push_back(w as usize);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() == 1
    }

    /// Subgraph induced by the largest connected component, nodes relabeled
    /// densely in ascending original-id order. Ties between equal-sized
    /// components go to the one containing the smallest original id.
    pub fn giant_component(&self) -> Graph {
        let comps = self.components();
        // components() yields them ordered by smallest member, so max_by_key
        // with a later-is-greater tiebreak keeps the earliest largest one.
        let mut best = 0;
        for (i, c) in comps.iter().enumerate() {
            if c.len() > comps[best].len() {
                best = i;
            }
        }
        let keep = &comps[best];
        let mut remap = vec![u32::MAX; self.n];
        for (new_id, &old) in keep.iter().enumerate() {
            remap[old as usize] = new_id as u32;
        }
        let edges = self
            .edges
            .iter()
            .filter(|(u, v)| remap[*u as usize] != u32::MAX && remap[*v as usize] != u32::MAX)
            .map(|&(u, v)| (remap[u as usize], remap[v as usize]));
        Graph::from_edges(keep.len(), edges).expect("component relabeling preserves validity")
    }

    /// Relabels nodes: edge `(u, v)` becomes `(perm[u], perm[v])`.
    pub fn permute(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: perm.len(),
            });
        }
        let mut seen = vec![false; self.n];
        for &p in perm {
            if p >= self.n || seen[p] {
                return Err(Error::InvalidParameter(
                    "perm is not a bijection on 0..n".into(),
                ));
            }
            seen[p] = true;
        }
        let edges = self
            .edges
            .iter()
            .map(|&(u, v)| (perm[u as usize] as u32, perm[v as usize] as u32));
        Graph::from_edges(self.n, edges)
    }

    /// One `u v` line per canonical edge.
    pub fn to_edge_list_string(&self) -> String {
        let mut s = String::new();
        for &(u, v) in &self.edges {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn rejects_self_loops() {
        assert!(Graph::from_edges(3, [(1, 1)]).is_err());
    }

    #[test]
    fn collapses_duplicates_and_orientation() {
        let g = Graph::from_edges(2, [(0, 1), (1, 0), (0, 1)]).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.degrees(), vec![1, 1]);
    }

    #[test]
    fn degree_counts_incident_edges() {
        let g = path3();
        assert_eq!(g.degrees(), vec![1, 2, 1]);
        assert!(g.has_edge(0, 1) && g.has_edge(1, 0) && !g.has_edge(0, 2));
    }

    #[test]
    fn giant_component_picks_largest() {
        // components of sizes 3 and 2
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (3, 4)]).unwrap();
        let gc = g.giant_component();
        assert_eq!(gc.node_count(), 3);
        assert_eq!(gc.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn giant_component_connected_input_is_identity() {
        let g = path3();
        assert_eq!(g.giant_component(), g);
    }

    #[test]
    fn giant_component_tie_breaks_smallest_id() {
        // empty graph on 4 nodes: all components are singletons
        let g = Graph::from_edges(4, []).unwrap();
        let gc = g.giant_component();
        assert_eq!(gc.node_count(), 1);
        assert_eq!(gc.edge_count(), 0);
    }

    #[test]
    fn permute_identity_and_reversal() {
        let g = path3();
        assert_eq!(g.permute(&[0, 1, 2]).unwrap(), g);
        // reversing ids maps the path onto itself
        assert_eq!(g.permute(&[2, 1, 0]).unwrap(), g);
    }

    #[test]
    fn permute_moves_star_center() {
        let star = Graph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let p = star.permute(&[3, 1, 2, 0]).unwrap();
        assert_eq!(p.degree(3), 3);
        assert_eq!(p.degree(0), 1);
    }

    #[test]
    fn permute_rejects_non_bijection() {
        assert!(path3().permute(&[0, 0, 1]).is_err());
        assert!(path3().permute(&[0, 1]).is_err());
    }
}
