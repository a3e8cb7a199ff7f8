//! Waveform generation: every node gets an "impulse response" by running
//! a momentum-carrying energy exchange over the edges and recording the
//! node potentials at every step.
//!
//! The recurrence, per directed edge `(u, v)` of an existing undirected
//! edge:
//!
//! ```text
//! flow_t(u, v) = s_{t-1}[u] * P[u][v] + m * flow_{t-1}(u, v)
//! s_t[v]       = s_{t-1}[v] + sum_u flow_t(u, v) - sum_u flow_t(v, u)
//! ```
//!
//! where `P[u][v] = A[u][v] / (deg(u) + eps)` is row-stochastic on
//! non-isolated nodes. Total potential is conserved at every step. All
//! arithmetic is 64-bit; incoming/outgoing sums run in ascending neighbor
//! order so a run is bit-reproducible on one platform.

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Stabilizer added to the degree denominator; only isolated nodes (whose
/// power row is all zero anyway) are affected.
pub const DEGREE_EPS: f64 = 1e-32;

/// Default momentum: the setting that prolongs stabilization the most
/// while still converging, and the richest audible signal.
pub const DEFAULT_MOMENTUM: f64 = 0.99;

/// Default number of recorded samples per node.
pub const DEFAULT_SAMPLES: usize = 10_000;

/// Node-count guard for the dense reference implementation.
pub const DENSE_ORACLE_MAX_NODES: usize = 64;

const WAVEFORM_MAGIC: &[u8; 4] = b"AURL";
const WAVEFORM_VERSION: u32 = 1;

/// Dense power matrix `P[u][v] = A[u][v] / (deg(u) + eps)`. Rows of
/// non-isolated nodes sum to 1; isolated rows are all zero. Quadratic in
/// `n`, intended for inspection and test-scale use.
pub fn power_matrix(g: &Graph) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let mut p = vec![vec![0.0; n]; n];
    for u in 0..n {
        let share = 1.0 / (g.degree(u) as f64 + DEGREE_EPS);
        for &v in g.neighbors(u) {
            p[u][v as usize] = share;
        }
    }
    p
}

/// Per-directed-edge flow state of the energy exchange.
///
/// Storage is CSR-style grouped by source node with targets ascending, so
/// one step costs `O(|E|)` rather than `O(n^2)`.
#[derive(Debug, Clone)]
pub struct FlowState {
    nodes: usize,
    momentum: f64,
    /// target node of directed edge `e`
    dst: Vec<u32>,
    /// `P[src(e)][dst(e)]`
    power: Vec<f64>,
    /// current flow along directed edge `e`
    flow: Vec<f64>,
    /// edge range of source `u`: `out_start[u]..out_start[u+1]`
    out_start: Vec<usize>,
    /// incoming edge ids of each node, ordered by source ascending
    in_edges: Vec<u32>,
    in_start: Vec<usize>,
}

impl FlowState {
    /// Zero-flow state for `g` with the given momentum in `[0, 1]`.
    pub fn new(g: &Graph, momentum: f64) -> Result<FlowState> {
        if !(0.0..=1.0).contains(&momentum) {
            return Err(Error::InvalidParameter(format!(
                "momentum {momentum} outside [0,1]"
            )));
        }
        let n = g.node_count();
        let mut dst = Vec::with_capacity(2 * g.edge_count());
        let mut power = Vec::with_capacity(2 * g.edge_count());
        let mut out_start = Vec::with_capacity(n + 1);
        out_start.push(0);
        for u in 0..n {
            let share = 1.0 / (g.degree(u) as f64 + DEGREE_EPS);
            for &v in g.neighbors(u) {
                dst.push(v);
                power.push(share);
            }
            out_start.push(dst.len());
        }
        // Incoming lists: iterating sources ascending yields each node's
        // in-edges ordered by source, matching the fixed summation order.
        let mut in_lists: Vec<Vec<u32>> = vec![Vec::new(); n];
        for u in 0..n {
            for e in out_start[u]..out_start[u + 1] {
                in_lists[dst[e] as usize].push(e as u32);
            }
        }
        let mut in_edges = Vec::with_capacity(dst.len());
        let mut in_start = Vec::with_capacity(n + 1);
        in_start.push(0);
        for list in &in_lists {
            in_edges.extend_from_slice(list);
            in_start.push(in_edges.len());
        }
        Ok(FlowState {
            nodes: n,
            momentum,
            flow: vec![0.0; dst.len()],
            dst,
            power,
            out_start,
            in_edges,
            in_start,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn momentum(&self) -> f64 {
        self.momentum
    }

    /// `P[u][v]`, zero when `(u, v)` is not an edge.
    pub fn power_entry(&self, u: usize, v: usize) -> f64 {
        for e in self.out_start[u]..self.out_start[u + 1] {
            if self.dst[e] as usize == v {
                return self.power[e];
            }
        }
        0.0
    }

    /// Current flow along the directed edge `(u, v)`, if it exists.
    pub fn flow_between(&self, u: usize, v: usize) -> Option<f64> {
        for e in self.out_start[u]..self.out_start[u + 1] {
            if self.dst[e] as usize == v {
                return Some(self.flow[e]);
            }
        }
        None
    }

    /// One step of the recurrence: updates flows in place and returns the
    /// next potential vector.
    pub fn step(&mut self, potentials: &[f64]) -> Result<Vec<f64>> {
        if potentials.len() != self.nodes {
            return Err(Error::DimensionMismatch {
                expected: self.nodes,
                got: potentials.len(),
            });
        }
        let mut s = potentials.to_vec();
        let mut net = vec![0.0; self.nodes];
        self.step_in_place(&mut s, &mut net);
        Ok(s)
    }

    /// Allocation-free step used by the recording loop; `net` is scratch.
    fn step_in_place(&mut self, s: &mut [f64], net: &mut [f64]) {
        let m = self.momentum;
        for u in 0..self.nodes {
            let su = s[u];
            for e in self.out_start[u]..self.out_start[u + 1] {
                self.flow[e] = su * self.power[e] + m * self.flow[e];
            }
        }
        for v in 0..self.nodes {
            let mut incoming = 0.0;
            for &e in &self.in_edges[self.in_start[v]..self.in_start[v + 1]] {
                incoming += self.flow[e as usize];
            }
            let mut outgoing = 0.0;
            for e in self.out_start[v]..self.out_start[v + 1] {
                outgoing += self.flow[e];
            }
            net[v] = incoming - outgoing;
        }
        for v in 0..self.nodes {
            s[v] += net[v];
        }
    }
}

/// `l x n` record of node potentials; row `t` holds step `t + 1` of the
/// process, one column per node.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformMatrix {
    samples: Vec<f64>,
    steps: usize,
    nodes: usize,
}

impl WaveformMatrix {
    pub fn from_rows(steps: usize, nodes: usize, samples: Vec<f64>) -> Result<WaveformMatrix> {
        if samples.len() != steps * nodes {
            return Err(Error::DimensionMismatch {
                expected: steps * nodes,
                got: samples.len(),
            });
        }
        Ok(WaveformMatrix { samples, steps, nodes })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn get(&self, t: usize, v: usize) -> f64 {
        self.samples[t * self.nodes + v]
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.samples[t * self.nodes..(t + 1) * self.nodes]
    }

    /// One node's full time series.
    pub fn column(&self, v: usize) -> Vec<f64> {
        (0..self.steps).map(|t| self.get(t, v)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.steps).map(|t| self.row(t).iter().sum()).collect()
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.nodes];
        for t in 0..self.steps {
            for (m, &x) in means.iter_mut().zip(self.row(t)) {
                *m += x;
            }
        }
        for m in &mut means {
            *m /= self.steps as f64;
        }
        means
    }

    /// Subtracts the per-column time mean (the DC component).
    pub fn remove_dc(&mut self) {
        let means = self.column_means();
        for t in 0..self.steps {
            let row = &mut self.samples[t * self.nodes..(t + 1) * self.nodes];
            for (x, m) in row.iter_mut().zip(&means) {
                *x -= m;
            }
        }
    }

    /// Binary serialization: `AURL` magic, version, dimensions, then the
    /// row-major matrix as little-endian 64-bit floats.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.samples.len() * 8);
        out.extend_from_slice(WAVEFORM_MAGIC);
        out.extend_from_slice(&WAVEFORM_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.steps as u32).to_le_bytes());
        out.extend_from_slice(&(self.nodes as u32).to_le_bytes());
        for x in &self.samples {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<WaveformMatrix> {
        if bytes.len() < 16 {
            return Err(Error::Truncated { needed: 16, had: bytes.len() });
        }
        if &bytes[0..4] != WAVEFORM_MAGIC {
            return Err(Error::BadMagic { expected: "AURL" });
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != WAVEFORM_VERSION {
            return Err(Error::Version { found: version, supported: WAVEFORM_VERSION });
        }
        let steps = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let nodes = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let needed = 16 + steps * nodes * 8;
        if bytes.len() < needed {
            return Err(Error::Truncated { needed, had: bytes.len() });
        }
        let samples = bytes[16..needed]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        WaveformMatrix::from_rows(steps, nodes, samples)
    }

    /// CSV trace with header `t,node_0,...,node_{n-1}`; `t` is the step
    /// index of the recorded row (starting at 1).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for v in 0..self.nodes {
            out.push_str(&format!(",node_{v}"));
        }
        out.push('\n');
        for t in 0..self.steps {
            out.push_str(&format!("{}", t + 1));
            for &x in self.row(t) {
                out.push_str(&format!(",{x}"));
            }
            out.push('\n');
        }
        out
    }
}

fn run_recurrence(g: &Graph, momentum: f64, samples: usize) -> Result<WaveformMatrix> {
    if samples == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    let n = g.node_count();
    let mut state = FlowState::new(g, momentum)?;
    let mut s = vec![1.0; n]; // impulse: every node starts at potential 1
    let mut net = vec![0.0; n];
    let mut out = Vec::with_capacity(samples * n);
    for _ in 0..samples {
        state.step_in_place(&mut s, &mut net);
        out.extend_from_slice(&s);
    }
    WaveformMatrix::from_rows(samples, n, out)
}

/// The waveform process without DC removal: rows are the raw potentials
/// `S_1..S_l` (each row sums to `n` up to rounding).
pub fn auralize_raw(g: &Graph, momentum: f64, samples: usize) -> Result<WaveformMatrix> {
    run_recurrence(g, momentum, samples)
}

/// Full waveform generation: impulse, `samples` recurrence steps, then
/// per-column DC removal.
pub fn auralize(g: &Graph, momentum: f64, samples: usize) -> Result<WaveformMatrix> {
    let mut w = run_recurrence(g, momentum, samples)?;
    w.remove_dc();
    Ok(w)
}

/// Dense reference implementation of [`auralize`]: keeps the full `n x n`
/// flow matrix and iterates it literally. Kept structurally independent
/// of the sparse path for differential testing; guarded to small graphs.
pub fn auralize_dense_oracle(g: &Graph, momentum: f64, samples: usize) -> Result<WaveformMatrix> {
    let n = g.node_count();
    if n > DENSE_ORACLE_MAX_NODES {
        return Err(Error::InvalidParameter(format!(
            "dense oracle limited to n <= {DENSE_ORACLE_MAX_NODES}, got {n}"
        )));
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("sample count must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&momentum) {
        return Err(Error::InvalidParameter(format!(
            "momentum {momentum} outside [0,1]"
        )));
    }
    let p = power_matrix(g);
    let mut s = vec![1.0; n];
    let mut delta = vec![vec![0.0; n]; n];
    let mut out = Vec::with_capacity(samples * n);
    for _ in 0..samples {
        for u in 0..n {
            for v in 0..n {
                delta[u][v] = s[u] * p[u][v] + momentum * delta[u][v];
            }
        }
        for v in 0..n {
            let mut incoming = 0.0;
            for row in delta.iter() {
                incoming += row[v];
            }
            let mut outgoing = 0.0;
            for x in delta[v].iter() {
                outgoing += x;
            }
            s[v] += incoming - outgoing;
        }
        out.extend_from_slice(&s);
    }
    let mut w = WaveformMatrix::from_rows(samples, n, out)?;
    w.remove_dc();
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_er, Graph};

    fn k2() -> Graph {
        Graph::from_edges(2, [(0, 1)]).unwrap()
    }

    fn path3() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn power_matrix_k2() {
        assert_eq!(power_matrix(&k2()), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn power_matrix_path() {
        let p = power_matrix(&path3());
        assert_eq!(p[0], vec![0.0, 1.0, 0.0]);
        assert_eq!(p[1], vec![0.5, 0.0, 0.5]);
        assert_eq!(p[2], vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn power_matrix_isolated_node_is_finite() {
        let g = Graph::from_edges(1, []).unwrap();
        let p = power_matrix(&g);
        assert_eq!(p, vec![vec![0.0]]);
        let g2 = Graph::from_edges(3, [(0, 1)]).unwrap();
        let p2 = power_matrix(&g2);
        assert!(p2[2].iter().all(|x| x.is_finite() && *x == 0.0));
    }

    #[test]
    fn power_rows_sum_to_one() {
        let g = gen_er(30, 0.2, 4).unwrap();
        let p = power_matrix(&g);
        for (u, row) in p.iter().enumerate() {
            if g.degree(u) > 0 {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn flow_step_path3_hand_values() {
        let g = path3();
        let mut st = FlowState::new(&g, 0.0).unwrap();
        let s1 = st.step(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(st.flow_between(0, 1), Some(1.0));
        assert_eq!(st.flow_between(1, 0), Some(0.5));
        assert_eq!(st.flow_between(1, 2), Some(0.5));
        assert_eq!(st.flow_between(2, 1), Some(1.0));
        assert_eq!(s1, vec![0.5, 2.0, 0.5]);
        // the path is bipartite: with m = 0 the impulse oscillates with
        // period 2
        let s2 = st.step(&s1).unwrap();
        assert_eq!(s2, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn flow_step_symmetric_pair_is_fixed() {
        for m in [0.0, 0.5, 0.99] {
            let mut st = FlowState::new(&k2(), m).unwrap();
            let mut s = vec![1.0, 1.0];
            for _ in 0..16 {
                s = st.step(&s).unwrap();
                assert_eq!(s, vec![1.0, 1.0]);
            }
        }
    }

    #[test]
    fn flow_step_rejects_dimension_mismatch() {
        let mut st = FlowState::new(&k2(), 0.0).unwrap();
        assert!(st.step(&[1.0]).is_err());
    }

    #[test]
    fn momentum_out_of_range_rejected() {
        assert!(FlowState::new(&k2(), -0.1).is_err());
        assert!(FlowState::new(&k2(), 1.1).is_err());
        assert!(auralize(&k2(), 2.0, 4).is_err());
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(auralize(&k2(), 0.5, 0).is_err());
    }

    #[test]
    fn symmetric_pair_auralizes_to_silence() {
        let w = auralize(&k2(), 0.9, 8).unwrap();
        assert!(w.column(0).iter().all(|&x| x == 0.0));
        assert!(w.column(1).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn path3_hand_computed_trace() {
        let raw = auralize_raw(&path3(), 0.0, 4).unwrap();
        assert_eq!(raw.row(0), &[0.5, 2.0, 0.5]);
        assert_eq!(raw.row(1), &[1.0, 1.0, 1.0]);
        assert_eq!(raw.row(2), &[0.5, 2.0, 0.5]);
        assert_eq!(raw.row(3), &[1.0, 1.0, 1.0]);

        let w = auralize(&path3(), 0.0, 4).unwrap();
        assert_eq!(w.column(1), vec![0.5, -0.5, 0.5, -0.5]);
        for mean in w.column_means() {
            assert!(mean.abs() <= 1e-15);
        }
    }

    #[test]
    fn raw_rows_conserve_total_potential() {
        let g = gen_er(40, 0.15, 9).unwrap();
        for m in [0.0, 0.9, 0.99] {
            let raw = auralize_raw(&g, m, 500).unwrap();
            for sum in raw.row_sums() {
                assert!((sum - 40.0).abs() <= 1e-6, "m={m}: row sum {sum}");
            }
        }
    }

    #[test]
    fn isolated_node_column_is_exactly_zero() {
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        let w = auralize(&g, 0.99, 50).unwrap();
        assert!(w.column(2).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn sparse_matches_dense_oracle() {
        for seed in 0..5 {
            let g = gen_er(12, 0.3, seed).unwrap();
            for m in [0.0, 0.9, 0.99] {
                let a = auralize(&g, m, 100).unwrap();
                let b = auralize_dense_oracle(&g, m, 100).unwrap();
                for t in 0..100 {
                    for v in 0..12 {
                        assert!(
                            (a.get(t, v) - b.get(t, v)).abs() <= 1e-12,
                            "seed {seed} m {m} t {t} v {v}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn dense_oracle_rejects_large_graphs() {
        let g = gen_er(65, 0.1, 0).unwrap();
        assert!(auralize_dense_oracle(&g, 0.0, 10).is_err());
    }

    #[test]
    fn cycle_columns_identical() {
        let g = crate::graph::gen_ws(10, 2, 0.0, 0).unwrap();
        let w = auralize(&g, 0.99, 200).unwrap();
        let first = w.column(0);
        for v in 1..10 {
            let col = w.column(v);
            for (a, b) in first.iter().zip(&col) {
                assert!((a - b).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn waveform_bytes_round_trip() {
        let w = auralize(&path3(), 0.9, 16).unwrap();
        let bytes = w.to_bytes();
        let back = WaveformMatrix::from_bytes(&bytes).unwrap();
        assert_eq!(w, back);
    }

    #[test]
    fn waveform_bytes_reject_corruption() {
        let w = auralize(&path3(), 0.9, 4).unwrap();
        let mut bytes = w.to_bytes();
        bytes[0] = b'X';
        assert!(matches!(
            WaveformMatrix::from_bytes(&bytes),
            Err(Error::BadMagic { .. })
        ));
        let bytes = w.to_bytes();
        assert!(matches!(
            WaveformMatrix::from_bytes(&bytes[..bytes.len() - 1]),
            Err(Error::Truncated { .. })
        ));
    }

    #[test]
    fn csv_trace_shape() {
        let w = auralize_raw(&path3(), 0.0, 2).unwrap();
        let csv = w.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,node_0,node_1,node_2");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1,"));
    }
}
