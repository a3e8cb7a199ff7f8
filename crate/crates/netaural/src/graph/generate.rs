//! Random-graph generators. Every generator is a pure function of its
//! parameters and seed; identical seeds give byte-identical edge sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};

/// A generator family together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphModel {
    Er { n: usize, p: f64 },
    Ba { n: usize, k: usize },
    Ws { n: usize, k: usize, p: f64 },
    Caveman { cliques: usize, size: usize },
    Grid { rows: usize, cols: usize },
}

impl GraphModel {
    pub fn generate(&self, seed: u64) -> Result<Graph> {
        match *self {
            GraphModel::Er { n, p } => gen_er(n, p, seed),
            GraphModel::Ba { n, k } => gen_ba(n, k, seed),
            GraphModel::Ws { n, k, p } => gen_ws(n, k, p, seed),
            GraphModel::Caveman { cliques, size } => gen_caveman(cliques, size, seed),
            GraphModel::Grid { rows, cols } => gen_grid(rows, cols),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            GraphModel::Er { .. } => "er",
            GraphModel::Ba { .. } => "ba",
            GraphModel::Ws { .. } => "ws",
            GraphModel::Caveman { .. } => "caveman",
            GraphModel::Grid { .. } => "grid",
        }
    }
}

impl std::fmt::Display for GraphModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            GraphModel::Er { n, p } => write!(f, "er(n={n}, p={p})"),
            GraphModel::Ba { n, k } => write!(f, "ba(n={n}, k={k})"),
            GraphModel::Ws { n, k, p } => write!(f, "ws(n={n}, k={k}, p={p})"),
            GraphModel::Caveman { cliques, size } => write!(f, "caveman(cliques={cliques}, size={size})"),
            GraphModel::Grid { rows, cols } => write!(f, "grid(rows={rows}, cols={cols})"),
        }
    }
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdos-Renyi G(n, p): each of the C(n,2) edges present independently
/// with probability `p`.
pub fn gen_er(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if n < 1 {
        return Err(Error::InvalidParameter("er: n must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("er: p={p} outside [0,1]")));
    }
    let mut rng = rng_for(seed);
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in (u + 1)..n as u32 {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges)
}

/// Barabasi-Albert preferential attachment. Starts from a star on `k + 1`
/// nodes (center 0); every later node attaches to `k` distinct existing
/// nodes drawn proportionally to degree. Edge count is `k * (n - k)`.
pub fn gen_ba(n: usize, k: usize, seed: u64) -> Result<Graph> {
    if k < 1 || k >= n {
        return Err(Error::InvalidParameter(format!(
            "ba: need 1 <= k < n, got k={k}, n={n}"
        )));
    }
    let mut rng = rng_for(seed);
    let mut edges: Vec<(u32, u32)> = Vec::with_capacity(k * (n - k));
    // One entry per edge endpoint, so sampling uniformly from it is
    // degree-proportional sampling.
    let mut repeated: Vec<u32> = Vec::with_capacity(2 * k * (n - k));
    for leaf in 1..=k as u32 {
        edges.push((0, leaf));
        repeated.push(0);
        repeated.push(leaf);
    }
    let mut targets: Vec<u32> = Vec::with_capacity(k);
    for source in (k + 1..n).map(|s| s as u32) {
        targets.clear();
        while targets.len() < k {
            let pick = repeated[rng.gen_range(0..repeated.len())];
            if !targets.contains(&pick) {
                targets.push(pick);
            }
        }
        for &t in &targets {
            edges.push((t, source));
            repeated.push(t);
            repeated.push(source);
        }
    }
    Graph::from_edges(n, edges)
}

/// Watts-Strogatz small world: ring lattice where each node links to its
/// `k/2` nearest neighbors on each side, then each lattice edge is rewired
/// with probability `p`. Edge count stays `n * k / 2`.
pub fn gen_ws(n: usize, k: usize, p: f64, seed: u64) -> Result<Graph> {
    if k % 2 != 0 {
        return Err(Error::InvalidParameter(format!("ws: k={k} must be even")));
    }
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!(
            "ws: need 0 < k < n, got k={k}, n={n}"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("ws: p={p} outside [0,1]")));
    }
    let mut rng = rng_for(seed);
    let mut adj: Vec<std::collections::BTreeSet<u32>> = vec![Default::default(); n];
    let connect = |adj: &mut Vec<std::collections::BTreeSet<u32>>, a: usize, b: usize| {
        adj[a].insert(b as u32);
        adj[b].insert(a as u32);
    };
    for j in 1..=k / 2 {
        for u in 0..n {
            connect(&mut adj, u, (u + j) % n);
        }
    }
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = ((u + j) % n) as u32;
            if !rng.gen_bool(p) {
                continue;
            }
            // A fully connected node has nowhere left to rewire to.
            if adj[u].len() >= n - 1 {
                continue;
            }
            let w = loop {
                let cand = rng.gen_range(0..n) as u32;
                if cand as usize != u && !adj[u].contains(&cand) {
                    break cand;
                }
            };
            adj[u].remove(&v);
            adj[v as usize].remove(&(u as u32));
            connect(&mut adj, u, w as usize);
        }
    }
    let edges = adj
        .iter()
        .enumerate()
        .flat_map(|(u, set)| set.iter().filter(move |&&v| v as usize > u).map(move |&v| (u as u32, v)));
    Graph::from_edges(n, edges.collect::<Vec<_>>())
}

/// Connected caveman graph: `cliques` cliques of `size` nodes; in each
/// clique the edge between its first two nodes is rewired to the last node
/// of the previous clique, chaining the cliques into a ring. Total edges:
/// `cliques * size * (size - 1) / 2`.
///
/// The construction is deterministic; `_seed` is accepted for interface
/// uniformity with the other generators.
pub fn gen_caveman(cliques: usize, size: usize, _seed: u64) -> Result<Graph> {
    if cliques < 2 || size < 2 {
        return Err(Error::InvalidParameter(format!(
            "caveman: need cliques >= 2 and size >= 2, got cliques={cliques}, size={size}"
        )));
    }
    let n = cliques * size;
    let mut edges = Vec::with_capacity(cliques * size * (size - 1) / 2);
    for c in 0..cliques {
        let start = (c * size) as u32;
        for a in 0..size as u32 {
            for b in (a + 1)..size as u32 {
                edges.push((start + a, start + b));
            }
        }
    }
    for c in 0..cliques {
        let start = (c * size) as u32;
        // replace the clique's (start, start+1) edge with a link to the
        // previous clique
        edges.retain(|&e| e != (start, start + 1));
        let prev = if start == 0 { (n - 1) as u32 } else { start - 1 };
        edges.push((prev.min(start), prev.max(start)));
    }
    Graph::from_edges(n, edges)
}

/// rows x cols lattice; node (r, c) is `r * cols + c`.
pub fn gen_grid(rows: usize, cols: usize) -> Result<Graph> {
    if rows < 1 || cols < 1 {
        return Err(Error::InvalidParameter("grid: rows and cols must be >= 1".into()));
    }
    let n = rows * cols;
    let mut edges = Vec::with_capacity(rows * (cols - 1) + cols * (rows - 1));
    let id = |r: usize, c: usize| (r * cols + c) as u32;
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    Graph::from_edges(n, edges)
}
