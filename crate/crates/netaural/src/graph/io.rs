//! Edge-list text ingestion and the bundled reference datasets.
//!
//! Format: one `u v` pair per line, whitespace separated, `#` starts a
//! comment line, UTF-8, LF or CRLF. Labels are arbitrary tokens and are
//! mapped to dense `0..n` ids in first-appearance order; the mapping is
//! returned alongside the graph.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};

/// A graph plus the original node labels, indexed by dense node id.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: Graph,
    pub labels: Vec<String>,
}

impl LoadedGraph {
    /// The edge set expressed in original labels.
    pub fn labeled_edges(&self) -> Vec<(String, String)> {
        self.graph
            .edges()
            .iter()
            .map(|&(u, v)| (self.labels[u as usize].clone(), self.labels[v as usize].clone()))
            .collect()
    }
}

fn intern<'t>(ids: &mut HashMap<&'t str, u32>, labels: &mut Vec<String>, tok: &'t str) -> u32 {
    if let Some(&id) = ids.get(tok) {
        return id;
    }
    let id = labels.len() as u32;
    labels.push(tok.to_string());
    ids.insert(tok, id);
    id
}

/// Parses edge-list text. Duplicate edges collapse; self-loops and
/// malformed lines are rejected with their 1-based line number.
pub fn parse_edge_list(text: &str) -> Result<LoadedGraph> {
    let mut ids: HashMap<&str, u32> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut edges: Vec<(u32, u32)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let (a, b) = match (tokens.next(), tokens.next(), tokens.next()) {
            (Some(a), Some(b), None) => (a, b),
            (_, _, Some(extra)) => {
                return Err(Error::EdgeList {
                    line,
                    reason: format!("expected two tokens, found extra token {extra:?}"),
                })
            }
            _ => {
                return Err(Error::EdgeList {
                    line,
                    reason: "expected two tokens".into(),
                })
            }
        };
        if a == b {
            return Err(Error::EdgeList {
                line,
                reason: format!("self-loop on {a:?}"),
            });
        }
        let u = intern(&mut ids, &mut labels, a);
        let v = intern(&mut ids, &mut labels, b);
        edges.push((u, v));
    }
    if labels.is_empty() {
        return Err(Error::InvalidParameter("edge list has no edges".into()));
    }
    let graph = Graph::from_edges(labels.len(), edges)?;
    Ok(LoadedGraph { graph, labels })
}

/// Entry of the bundled-dataset manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub nodes: usize,
    pub edges: usize,
    pub source: String,
}

const KARATE: &str = include_str!("../../assets/karate.edges");
const FLORENTINE: &str = include_str!("../../assets/florentine.edges");
const DAVIS: &str = include_str!("../../assets/davis.edges");
const LESMIS: &str = include_str!("../../assets/lesmis.edges");
const MANIFEST: &str = include_str!("../../assets/manifest.json");

pub const BUNDLED_NAMES: [&str; 4] = ["karate", "florentine", "davis", "lesmis"];

/// The manifest describing every bundled dataset (name, sizes, citation).
pub fn bundled_manifest() -> Vec<DatasetInfo> {
    serde_json::from_str(MANIFEST).expect("bundled manifest is valid JSON")
}

/// Loads one of the bundled reference networks by name.
pub fn bundled_graph(name: &str) -> Result<LoadedGraph> {
    let text = match name {
        "karate" => KARATE,
        "florentine" => FLORENTINE,
        "davis" => DAVIS,
        "lesmis" => LESMIS,
        _ => {
            return Err(Error::UnknownDataset {
                name: name.to_string(),
                known: BUNDLED_NAMES.join(", "),
            })
        }
    };
    parse_edge_list(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_small_path() {
        let lg = parse_edge_list("0 1\n1 2").unwrap();
        assert_eq!(lg.graph.node_count(), 3);
        assert_eq!(lg.graph.edges(), &[(0, 1), (1, 2)]);
        assert_eq!(lg.labels, vec!["0", "1", "2"]);
    }

    #[test]
    fn collapses_duplicate_orientations() {
        let lg = parse_edge_list("a b\nb a").unwrap();
        assert_eq!(lg.graph.node_count(), 2);
        assert_eq!(lg.graph.edge_count(), 1);
    }

    #[test]
    fn rejects_self_loop_with_line_number() {
        let err = parse_edge_list("0 0").unwrap_err();
        match err {
            Error::EdgeList { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_malformed_line_with_line_number() {
        let err = parse_edge_list("0 1\nbroken").unwrap_err();
        match err {
            Error::EdgeList { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn accepts_comments_and_crlf() {
        let lg = parse_edge_list("# header\r\n0 1\r\n\r\n1 2\r\n").unwrap();
        assert_eq!(lg.graph.edge_count(), 2);
    }

    #[test]
    fn bundled_sizes_match_manifest() {
        for info in bundled_manifest() {
            let lg = bundled_graph(&info.name).unwrap();
            assert_eq!(lg.graph.node_count(), info.nodes, "{} nodes", info.name);
            assert_eq!(lg.graph.edge_count(), info.edges, "{} edges", info.name);
            assert!(lg.graph.is_connected(), "{} should be connected", info.name);
        }
    }

    #[test]
    fn bundled_expected_counts() {
        let karate = bundled_graph("karate").unwrap().graph;
        assert_eq!((karate.node_count(), karate.edge_count()), (34, 78));
        let flor = bundled_graph("florentine").unwrap().graph;
        assert_eq!((flor.node_count(), flor.edge_count()), (15, 20));
        let lesmis = bundled_graph("lesmis").unwrap().graph;
        assert_eq!((lesmis.node_count(), lesmis.edge_count()), (77, 254));
        let davis = bundled_graph("davis").unwrap().graph;
        assert_eq!((davis.node_count(), davis.edge_count()), (32, 89));
    }

    #[test]
    fn unknown_name_lists_known() {
        let err = bundled_graph("petersen").unwrap_err();
        assert!(err.to_string().contains("karate"));
    }
}
