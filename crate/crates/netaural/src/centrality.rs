//! Ground-truth centrality measures used as regression targets and
//! evaluation references.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

pub const EIGEN_TOL: f64 = 1e-10;
pub const EIGEN_MAX_ITER: usize = 1000;

/// Node-count guard for the brute-force betweenness oracle.
pub const NAIVE_BETWEENNESS_MAX_NODES: usize = 12;

/// The computable centrality measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Degree,
    Closeness,
    Betweenness,
    Eigenvector,
}

impl Measure {
    pub const ALL: [Measure; 4] = [
        Measure::Degree,
        Measure::Closeness,
        Measure::Betweenness,
        Measure::Eigenvector,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Measure::Degree => "degree",
            Measure::Closeness => "closeness",
            Measure::Betweenness => "betweenness",
            Measure::Eigenvector => "eigenvector",
        }
    }

    /// Short column label used in result tables.
    pub fn abbrev(&self) -> &'static str {
        match self {
            Measure::Degree => "Deg",
            Measure::Closeness => "CC",
            Measure::Betweenness => "BC",
            Measure::Eigenvector => "EC",
        }
    }

    pub fn compute(&self, g: &Graph) -> Result<CentralityVector> {
        match self {
            Measure::Degree => Ok(degree_centrality(g)),
            Measure::Closeness => Ok(closeness_centrality(g)),
            Measure::Betweenness => Ok(betweenness_centrality(g)),
            Measure::Eigenvector => eigenvector_centrality(g, EIGEN_TOL, EIGEN_MAX_ITER),
        }
    }
}

impl std::fmt::Display for Measure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Measure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Measure> {
        match s {
            "degree" | "deg" => Ok(Measure::Degree),
            "closeness" | "cc" => Ok(Measure::Closeness),
            "betweenness" | "bc" => Ok(Measure::Betweenness),
            "eigenvector" | "ec" => Ok(Measure::Eigenvector),
            _ => Err(Error::InvalidParameter(format!(
                "unknown measure {s:?}; valid: degree, closeness, betweenness, eigenvector"
            ))),
        }
    }
}

/// What a [`CentralityVector`] holds: a ground-truth measure or a model
/// prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    Measure(Measure),
    Predicted,
}

/// One real score per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralityVector {
    pub kind: MeasureKind,
    pub values: Vec<f64>,
}

impl CentralityVector {
    pub fn predicted(values: Vec<f64>) -> CentralityVector {
        CentralityVector { kind: MeasureKind::Predicted, values }
    }
}

/// Raw integer degree of every node, as reals.
pub fn degree_centrality(g: &Graph) -> CentralityVector {
    CentralityVector {
        kind: MeasureKind::Measure(Measure::Degree),
        values: g.degrees().iter().map(|&d| d as f64).collect(),
    }
}

fn bfs_distances(g: &Graph, source: usize) -> Vec<i64> {
    let mut dist = vec![-1i64; g.node_count()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        for &w in g.neighbors(v) {
            if dist[w as usize] < 0 {
                dist[w as usize] = dist[v] + 1;
                queue.push_back(w as usize);
            }
        }
    }
    dist
}

/// Component-normalized closeness (Wasserman-Faust): with `r` the size of
/// the node's component and `d` the sum of distances within it,
/// `(r - 1) / d * (r - 1) / (n - 1)`. Isolated nodes score 0.
pub fn closeness_centrality(g: &Graph) -> CentralityVector {
    let n = g.node_count();
    let mut values = vec![0.0; n];
    if n > 1 {
        for v in 0..n {
            let dist = bfs_distances(g, v);
            let reachable: Vec<i64> = dist.iter().copied().filter(|&d| d >= 0).collect();
            let r = reachable.len() as f64;
            let total: i64 = reachable.iter().sum();
            if total > 0 {
                values[v] = (r - 1.0) / total as f64 * ((r - 1.0) / (n as f64 - 1.0));
            }
        }
    }
    CentralityVector {
        kind: MeasureKind::Measure(Measure::Closeness),
        values,
    }
}

/// Betweenness by Brandes' dependency accumulation, endpoints excluded,
/// normalized to `[0, 1]` by the number of possible unordered pairs
/// `(n - 1)(n - 2) / 2`.
pub fn betweenness_centrality(g: &Graph) -> CentralityVector {
    let n = g.node_count();
    let mut raw = vec![0.0; n];
    if n > 2 {
        let mut sigma = vec![0.0f64; n];
        let mut dist = vec![-1i64; n];
        let mut preds: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut delta = vec![0.0f64; n];
        for s in 0..n {
            sigma.fill(0.0);
            dist.fill(-1);
            delta.fill(0.0);
            for p in &mut preds {
                p.clear();
            }
            sigma[s] = 1.0;
            dist[s] = 0;
            let mut order: Vec<usize> = Vec::with_capacity(n);
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                order.push(v);
                for &w in g.neighbors(v) {
                    let w = w as usize;
                    if dist[w] < 0 {
                        dist[w] = dist[v] + 1;
                        queue.push_back(w);
                    }
                    if dist[w] == dist[v] + 1 {
                        sigma[w] += sigma[v];
                        preds[w].push(v as u32);
                    }
                }
            }
            for &w in order.iter().rev() {
                let coeff = (1.0 + delta[w]) / sigma[w];
                for &v in &preds[w] {
                    delta[v as usize] += sigma[v as usize] * coeff;
                }
                if w != s {
                    raw[w] += delta[w];
                }
            }
        }
        // all-sources accumulation counts each unordered pair twice
        let scale = 1.0 / ((n - 1) as f64 * (n - 2) as f64);
        for x in &mut raw {
            *x *= scale;
        }
    }
    CentralityVector {
        kind: MeasureKind::Measure(Measure::Betweenness),
        values: raw,
    }
}

fn enumerate_paths(
    g: &Graph,
    dist: &[i64],
    source: usize,
    current: usize,
    path: &mut Vec<usize>,
    through: &mut [f64],
    count: &mut f64,
) {
    if current == source {
        *count += 1.0;
        // path runs target..source; endpoints are excluded
        for &v in &path[1..path.len() - 1] {
            through[v] += 1.0;
        }
        return;
    }
    for &w in g.neighbors(current) {
        let w = w as usize;
        if dist[w] + 1 == dist[current] {
            path.push(w);
            enumerate_paths(g, dist, source, w, path, through, count);
            path.pop();
        }
    }
}

/// Brute-force betweenness: explicitly enumerates every shortest path of
/// every pair and counts interior visits. Independent of the Brandes
/// implementation; guarded to tiny graphs.
pub fn naive_betweenness_oracle(g: &Graph) -> Result<CentralityVector> {
    let n = g.node_count();
    if n > NAIVE_BETWEENNESS_MAX_NODES {
        return Err(Error::InvalidParameter(format!(
            "naive betweenness limited to n <= {NAIVE_BETWEENNESS_MAX_NODES}, got {n}"
        )));
    }
    let mut raw = vec![0.0; n];
    if n > 2 {
        for s in 0..n {
            let dist = bfs_distances(g, s);
            for t in (s + 1)..n {
                if dist[t] <= 0 {
                    continue; // unreachable or equal
                }
                let mut through = vec![0.0; n];
                let mut count = 0.0;
                let mut path = vec![t];
                enumerate_paths(g, &dist, s, t, &mut path, &mut through, &mut count);
                if count > 0.0 {
                    for v in 0..n {
                        if v != s && v != t {
                            raw[v] += through[v] / count;
                        }
                    }
                }
            }
        }
        let scale = 1.0 / ((n - 1) as f64 * (n - 2) as f64 / 2.0);
        for x in &mut raw {
            *x *= scale;
        }
    }
    Ok(CentralityVector {
        kind: MeasureKind::Measure(Measure::Betweenness),
        values: raw,
    })
}

/// Principal eigenvector of the adjacency matrix by power iteration,
/// L2-normalized with non-negative orientation.
///
/// Iterates on `A + I`, which shares eigenvectors with `A` but shifts the
/// spectrum so bipartite graphs cannot oscillate. Converged when the
/// successive-iterate L2 distance drops below `tol`.
pub fn eigenvector_centrality(g: &Graph, tol: f64, max_iter: usize) -> Result<CentralityVector> {
    let n = g.node_count();
    if g.edge_count() == 0 {
        return Err(Error::InvalidParameter(
            "eigenvector centrality needs at least one edge".into(),
        ));
    }
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..max_iter {
        let mut y = x.clone();
        for v in 0..n {
            for &u in g.neighbors(v) {
                y[v] += x[u as usize];
            }
        }
        let norm = y.iter().map(|a| a * a).sum::<f64>().sqrt();
        for a in &mut y {
            *a /= norm;
        }
        let diff = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        x = y;
        if diff < tol {
            return Ok(CentralityVector {
                kind: MeasureKind::Measure(Measure::Eigenvector),
                values: x,
            });
        }
    }
    Err(Error::NoConvergence { iterations: max_iter })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_er, Graph};

    fn star4() -> Graph {
        Graph::from_edges(4, [(0, 1), (0, 2), (0, 3)]).unwrap()
    }

    fn path3() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap()
    }

    fn complete(n: usize) -> Graph {
        let mut edges = Vec::new();
        for u in 0..n as u32 {
            for v in (u + 1)..n as u32 {
                edges.push((u, v));
            }
        }
        Graph::from_edges(n, edges).unwrap()
    }

    fn cycle(n: usize) -> Graph {
        Graph::from_edges(n, (0..n as u32).map(|u| (u, (u + 1) % n as u32))).unwrap()
    }

    #[test]
    fn degree_closed_forms() {
        assert_eq!(degree_centrality(&star4()).values, vec![3.0, 1.0, 1.0, 1.0]);
        assert!(degree_centrality(&cycle(10)).values.iter().all(|&d| d == 2.0));
        let empty = Graph::from_edges(3, []).unwrap();
        assert_eq!(degree_centrality(&empty).values, vec![0.0; 3]);
    }

    #[test]
    fn degree_sums_to_twice_edges() {
        let g = gen_er(50, 0.1, 3).unwrap();
        let total: f64 = degree_centrality(&g).values.iter().sum();
        assert_eq!(total, 2.0 * g.edge_count() as f64);
    }

    #[test]
    fn closeness_closed_forms() {
        let c = closeness_centrality(&star4()).values;
        assert!((c[0] - 1.0).abs() < 1e-12);
        for leaf in 1..4 {
            assert!((c[leaf] - 0.6).abs() < 1e-12);
        }
        let k5 = closeness_centrality(&complete(5)).values;
        assert!(k5.iter().all(|&x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn closeness_isolated_and_components() {
        let g = Graph::from_edges(5, [(0, 1), (2, 3), (3, 4)]).unwrap();
        let c = closeness_centrality(&g).values;
        // pair component: r=2, total distance 1 -> 1/1 * 1/4
        assert!((c[0] - 0.25).abs() < 1e-12);
        // single isolated node scores zero
        let iso = Graph::from_edges(2, [(0, 1)]).unwrap();
        assert!(closeness_centrality(&iso).values.iter().all(|&x| x > 0.0));
        let lone = Graph::from_edges(1, []).unwrap();
        assert_eq!(closeness_centrality(&lone).values, vec![0.0]);
    }

    #[test]
    fn betweenness_closed_forms() {
        assert_eq!(betweenness_centrality(&path3()).values, vec![0.0, 1.0, 0.0]);
        let star = betweenness_centrality(&star4()).values;
        assert!((star[0] - 1.0).abs() < 1e-12);
        assert!(star[1..].iter().all(|&x| x == 0.0));
        let c4 = betweenness_centrality(&cycle(4)).values;
        for x in c4 {
            assert!((x - 1.0 / 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn naive_oracle_closed_forms() {
        assert_eq!(
            naive_betweenness_oracle(&path3()).unwrap().values,
            vec![0.0, 1.0, 0.0]
        );
        let k4 = naive_betweenness_oracle(&complete(4)).unwrap().values;
        assert!(k4.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn naive_oracle_matches_brandes() {
        for seed in 0..20 {
            let g = gen_er(9, 0.35, seed).unwrap();
            let brandes = betweenness_centrality(&g).values;
            let naive = naive_betweenness_oracle(&g).unwrap().values;
            for (a, b) in brandes.iter().zip(&naive) {
                assert!((a - b).abs() <= 1e-12, "seed {seed}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn naive_oracle_guards_size() {
        let g = gen_er(13, 0.3, 0).unwrap();
        assert!(naive_betweenness_oracle(&g).is_err());
    }

    #[test]
    fn eigenvector_closed_forms() {
        for n in [3, 5, 8] {
            let v = eigenvector_centrality(&complete(n), EIGEN_TOL, EIGEN_MAX_ITER)
                .unwrap()
                .values;
            let expected = 1.0 / (n as f64).sqrt();
            assert!(v.iter().all(|&x| (x - expected).abs() < 1e-9));

            let c = eigenvector_centrality(&cycle(n), EIGEN_TOL, EIGEN_MAX_ITER)
                .unwrap()
                .values;
            assert!(c.iter().all(|&x| (x - expected).abs() < 1e-9));
        }
        let p = eigenvector_centrality(&path3(), EIGEN_TOL, EIGEN_MAX_ITER)
            .unwrap()
            .values;
        assert!((p[0] - 0.5).abs() < 1e-9);
        assert!((p[1] - 0.5f64.sqrt()).abs() < 1e-9);
        assert!((p[2] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn eigenvector_residual_small() {
        let g = gen_er(25, 0.2, 7).unwrap().giant_component();
        let x = eigenvector_centrality(&g, EIGEN_TOL, EIGEN_MAX_ITER)
            .unwrap()
            .values;
        let n = g.node_count();
        let mut ax = vec![0.0; n];
        for v in 0..n {
            for &u in g.neighbors(v) {
                ax[v] += x[u as usize];
            }
        }
        let lambda: f64 = x.iter().zip(&ax).map(|(a, b)| a * b).sum();
        let resid: f64 = ax
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - lambda * b) * (a - lambda * b))
            .sum::<f64>()
            .sqrt();
        assert!(resid <= 1e-8, "residual {resid}");
    }

    #[test]
    fn eigenvector_rejects_empty_graph() {
        let g = Graph::from_edges(3, []).unwrap();
        assert!(eigenvector_centrality(&g, EIGEN_TOL, EIGEN_MAX_ITER).is_err());
    }

    #[test]
    fn measure_parsing() {
        assert_eq!("degree".parse::<Measure>().unwrap(), Measure::Degree);
        assert_eq!("ec".parse::<Measure>().unwrap(), Measure::Eigenvector);
        assert!("pagerank".parse::<Measure>().is_err());
    }
}
